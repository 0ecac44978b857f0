import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import pandas as pd

from dto.config_dto import FalsificationMode, MinerConfig, MiningOrder
from dto.corpus_dto import (
    DatasetManifest,
    DatasetStats,
    ImageAnnotation,
    Label,
    LabeledPair,
    PairOrder,
    PremiseOrder,
    QuestionRecord,
)
from dto.premise_dto import AntonymLexicon, ObjectVocabulary, Premise
from model.Classifier import make_rng
from repository.feature_store_repository import FeatureStore
from service.premise_extractor import (
    extract_first_order,
    extract_second_order,
    falsified_first_order,
    falsified_second_order,
)
from service.similarity_service import SimilarityService
from utils.exceptions import ConfigException, DanglingReferenceException

QuestionFilter = Callable[[QuestionRecord], bool]

POSITIVE_ORDER_NOTE = (
    "relevant pair는 질문이 해당 차수의 전제를 1개 이상 가질 때 그 차수 행에 집계됩니다"
)


class DatasetMiner:
    """
    관련성 데이터셋 구축.

    positive: VQA의 (질문, 이미지) 쌍 전부
    negative: positive 이미지와 가장 비슷한 k개 이미지 중 질문 전제가 거짓인 이미지
    """

    def __init__(
        self,
        store: FeatureStore,
        annotations: Dict[str, ImageAnnotation],
        vocab: ObjectVocabulary,
        antonyms: AntonymLexicon,
        config: MinerConfig = None,
        workers: int = 1,
        question_filter: Optional[QuestionFilter] = None,
    ):
        self.logger = logging.getLogger(__name__)
        self.store = store
        self.annotations = annotations
        self.vocab = vocab
        self.antonyms = antonyms
        self.config = config or MinerConfig()
        self.workers = max(1, workers)
        self.question_filter = question_filter
        self.similarity = SimilarityService(store, workers=1)

    @property
    def _uses_first(self) -> bool:
        return self.config.order in (MiningOrder.FIRST, MiningOrder.BOTH)

    @property
    def _uses_second(self) -> bool:
        return self.config.order in (MiningOrder.SECOND, MiningOrder.BOTH)

    def premise_orders(self, question: QuestionRecord) -> List[PremiseOrder]:
        orders = []
        if extract_first_order(question, self.vocab):
            orders.append(PremiseOrder.FIRST)
        if question.pos_tags is not None and extract_second_order(question, self.vocab):
            orders.append(PremiseOrder.SECOND)
        return orders

    def emit_positives(
        self,
        questions: Iterable[QuestionRecord],
        image_map: Optional[Dict[str, str]] = None,
    ) -> List[LabeledPair]:
        """
        질문마다 relevant pair 하나를 만듭니다. image_map이 없으면 질문의 iid 필드를 사용합니다.

        Raises:
            DanglingReferenceException: 이미지가 없거나 알 수 없는 이미지를 참조하는 질문
        """
        pairs, dangling = [], []
        for question in questions:
            iid = image_map.get(question.qid) if image_map is not None else question.iid
            if iid is None or iid not in self.annotations:
                dangling.append(question.qid)
                continue
            pairs.append(
                LabeledPair(
                    qid=question.qid,
                    iid=iid,
                    label=Label.RELEVANT,
                    order=PairOrder.POSITIVE,
                    premise_orders=self.premise_orders(question),
                )
            )
        if dangling:
            self.logger.error(f"이미지 참조 오류 질문 {len(dangling)}개")
            raise DanglingReferenceException(dangling)
        return pairs

    def _falsifications(
        self,
        first: List[Premise],
        second: List[Premise],
        annotation: ImageAnnotation,
    ) -> Tuple[List[Premise], List[Premise]]:
        false_first = falsified_first_order(first, annotation) if self._uses_first else []
        false_second = (
            [p for p in second if falsified_second_order(p, annotation, self.antonyms)]
            if self._uses_second
            else []
        )
        return false_first, false_second

    def _passes(self, falsified_count: int) -> bool:
        if self.config.falsification_mode == FalsificationMode.EXACTLY_ONE:
            return falsified_count == 1
        return falsified_count >= 1

    def mine_negative_images(
        self, question: QuestionRecord, positive_iid: str
    ) -> List[LabeledPair]:
        """positive 이미지의 top-k 유사 이미지 중 전제가 거짓인 이미지를 유사도 순으로 cap까지 고릅니다."""
        if self.config.max_negatives_per_question == 0:
            return []
        first = extract_first_order(question, self.vocab) if self._uses_first else []
        # 태그가 없는 질문은 1차 전제만 사용
        second = (
            extract_second_order(question, self.vocab)
            if self._uses_second and question.pos_tags is not None
            else []
        )
        if not first and not second:
            return []

        negatives: List[LabeledPair] = []
        for candidate, _ in self.similarity.top_k_similar(positive_iid, self.config.k_similar):
            annotation = self.annotations.get(candidate)
            if annotation is None:
                self.logger.warning(f"⚠️ 주석이 없는 후보 이미지를 건너뜁니다: {candidate}")
                continue
            false_first, false_second = self._falsifications(first, second, annotation)
            if not self._passes(len(false_first) + len(false_second)):
                continue
            negatives.append(
                LabeledPair(
                    qid=question.qid,
                    iid=candidate,
                    label=Label.IRRELEVANT,
                    order=PairOrder.FIRST if false_first else PairOrder.SECOND,
                    falsified=[p.describe() for p in false_first + false_second],
                )
            )
            if len(negatives) >= self.config.max_negatives_per_question:
                break
        return negatives

    def build_dataset(
        self,
        questions: Iterable[QuestionRecord],
        image_map: Optional[Dict[str, str]] = None,
    ) -> DatasetManifest:
        """positive ∪ mined negative, (qid, iid) 중복 제거 후 (qid, iid) 순 정렬"""
        unique: Dict[str, QuestionRecord] = {}
        for question in questions:
            if question.qid in unique:
                self.logger.warning(f"⚠️ 중복 qid는 첫 번째 레코드만 사용합니다: {question.qid}")
                continue
            unique[question.qid] = question
        records = list(unique.values())

        positives = self.emit_positives(records, image_map)
        positive_iid = {pair.qid: pair.iid for pair in positives}
        targets = [
            q for q in records if self.question_filter is None or self.question_filter(q)
        ]
        self.logger.info(
            f"🔍 부정 이미지 마이닝 시작: 질문 {len(targets)}개, k={self.config.k_similar}, "
            f"order={self.config.order.value}, mode={self.config.falsification_mode.value}"
        )

        def mine(question: QuestionRecord) -> List[LabeledPair]:
            return self.mine_negative_images(question, positive_iid[question.qid])

        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                mined = list(executor.map(mine, targets))
        else:
            mined = [mine(q) for q in targets]

        by_key: Dict[tuple, LabeledPair] = {pair.key: pair for pair in positives}
        for negatives in mined:
            for pair in negatives:
                by_key.setdefault(pair.key, pair)
        pairs = [by_key[key] for key in sorted(by_key)]

        manifest = DatasetManifest.from_pairs(pairs)
        self.logger.info(
            f"✅ 데이터셋 구축 완료: 전체 {manifest.stats.total}, "
            f"relevant {manifest.stats.relevant}, non-relevant {manifest.stats.non_relevant}"
        )
        return manifest


def stats_table(stats: DatasetStats) -> pd.DataFrame:
    """Total / First order / Second order 행 × Total / Relevant / Non-relevant 열"""
    rows = {
        "Total": (stats.total, stats.relevant, stats.non_relevant),
        "First order": (
            stats.first_order_total,
            stats.first_order_relevant,
            stats.first_order_non_relevant,
        ),
        "Second order": (
            stats.second_order_total,
            stats.second_order_relevant,
            stats.second_order_non_relevant,
        ),
    }
    return pd.DataFrame.from_dict(
        rows, orient="index", columns=["Total", "Relevant", "Non-relevant"]
    )


def render_stats(stats: DatasetStats) -> str:
    return f"{stats_table(stats).to_string()}\n* {POSITIVE_ORDER_NOTE}\n"


def split_manifest(
    manifest: DatasetManifest, test_fraction: float, seed: int = 42
) -> Tuple[DatasetManifest, DatasetManifest]:
    """이미지 단위 분할. 같은 이미지의 pair는 모두 같은 쪽으로 간다."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigException(
            f"test_fraction은 (0, 1) 범위여야 합니다: {test_fraction}", error_code="INVALID_CONFIG"
        )
    iids = sorted({pair.iid for pair in manifest.pairs})
    order = make_rng(seed).permutation(len(iids))
    n_test = int(round(test_fraction * len(iids)))
    test_iids = {iids[i] for i in order[:n_test]}

    train = [pair for pair in manifest.pairs if pair.iid not in test_iids]
    test = [pair for pair in manifest.pairs if pair.iid in test_iids]
    return DatasetManifest.from_pairs(train), DatasetManifest.from_pairs(test)
