import logging
import math
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np

from dto.config_dto import ModelDims, ModelKind, TrainConfig
from dto.corpus_dto import Label, LabeledPair, QuestionRecord
from dto.evaluation_dto import EvaluationResult
from dto.text_dto import EmbeddingTable, SparseFeatures
from model.Classifier import Classifier, Example, make_rng
from model.LogisticRegression import LRModel
from model.MLP import MLPModel
from model.PCA import PCAModel
from model.PosLSTM import PosLstmModel
from model.RelNet import RelNetModel
from repository.feature_store_repository import FeatureStore
from service.evaluation_service import evaluate_scores
from service.pos_feature_service import PosFeatureService, average_embedding
from utils.exceptions import DataException, NumericException
from utils.prefetch import prefetch

logger = logging.getLogger(__name__)

T = TypeVar("T")
LabeledStream = Iterable[Tuple[Union[SparseFeatures, np.ndarray], float]]
EpochHistory = List[float]


def _check_label(label: float) -> float:
    if label not in (0, 1):
        raise DataException(f"라벨은 0/1 이어야 합니다: {label}", error_code="NON_BINARY_LABEL")
    return float(label)


def _check_loss(loss: float, epoch: int):
    if not math.isfinite(loss):
        raise NumericException(
            f"epoch {epoch}에서 loss가 유한하지 않습니다: {loss}",
            error_code="NAN_LOSS",
            details={"epoch": epoch},
        )


class ExampleBuilder:
    """
    pair / 질문 → 모델별 Example.

    배치 단위로 호출되며 이미지 벡터는 그때그때 memmap에서 읽는다.
    """

    def __init__(
        self,
        kind: ModelKind,
        questions: Dict[str, QuestionRecord],
        store: Optional[FeatureStore] = None,
        embeddings: Optional[EmbeddingTable] = None,
        pca: Optional[PCAModel] = None,
        features: Optional[PosFeatureService] = None,
    ):
        self.kind = kind
        self.questions = questions
        self.store = store
        self.embeddings = embeddings
        self.pca = pca
        self.features = features or PosFeatureService()

    def question(self, qid: str) -> QuestionRecord:
        try:
            return self.questions[qid]
        except KeyError:
            raise DataException(
                f"매니페스트가 참조하는 질문이 없습니다: {qid}",
                error_code="MISSING_QUESTION",
                details={"qid": qid},
            ) from None

    def visual_example(self, question: QuestionRecord, labeled: bool = True) -> Example:
        if labeled and question.visual is None:
            raise DataException(
                f"시각/비시각 라벨이 없는 질문입니다: {question.qid}", error_code="MISSING_LABEL"
            )
        label = float(bool(question.visual))
        if self.kind == ModelKind.LR_VISUAL:
            return Example(label=label, features=self.features.featurize(question))
        return Example(label=label, tags=self.features.tags_for(question))

    def pair_example(self, pair: LabeledPair) -> Example:
        question = self.question(pair.qid)
        label = 1.0 if pair.label == Label.RELEVANT else 0.0
        image = self.store.vector(pair.iid)
        if self.kind.relnet_variant is not None:
            return Example(label=label, tokens=list(question.tokens), image=image)

        text = average_embedding([t.lower() for t in question.tokens], self.embeddings)
        if self.kind == ModelKind.LR_PREMISE:
            visual = self.pca.project(image)
        else:
            visual = image
        return Example(label=label, features=np.concatenate([visual, text]))

    def __call__(self, item: Union[QuestionRecord, LabeledPair]) -> Example:
        if isinstance(item, QuestionRecord):
            return self.visual_example(item)
        return self.pair_example(item)


def build_model(
    kind: ModelKind,
    dims: ModelDims,
    seed: int,
    image_dim: Optional[int] = None,
    vocabulary: Sequence[str] = (),
    tag_vocabulary: Sequence[str] = (),
    pca: Optional[PCAModel] = None,
    embeddings: Optional[EmbeddingTable] = None,
) -> Classifier:
    """설정에서 초기화된 모델을 만든다."""
    text_dim = embeddings.dim if embeddings is not None else dims.embedding_dim
    if kind == ModelKind.LR_VISUAL:
        return LRModel(dims.hash_dim, input_kind="sparse")
    if kind == ModelKind.LSTM_VISUAL:
        return PosLstmModel(
            tag_vocabulary, dims.pos_embedding_dim, dims.pos_hidden_dim, seed=seed
        )
    if kind == ModelKind.LR_PREMISE:
        return LRModel(pca.k + text_dim, input_kind="dense")
    if kind == ModelKind.MLP:
        return MLPModel([image_dim + text_dim, *dims.mlp_hidden, 1], seed=seed)
    return RelNetModel(
        kind.relnet_variant,
        vocabulary,
        image_dim,
        embedding_dim=dims.embedding_dim,
        hidden_dim=dims.hidden_dim,
        image_embed_dim=dims.image_embed_dim,
        step1_mode=dims.step1_mode.value,
        seed=seed,
        pca=pca,
        embeddings=embeddings,
    )


def batch_generator(
    items: Sequence[T],
    build: Callable[[T], Example],
    batch_size: int,
    seed: int,
    epoch: int,
    shuffle: bool = True,
) -> Iterator[List[Example]]:
    """epoch마다 (seed, epoch) 기반 순열로 배치를 만든다. 한 번에 한 배치만 메모리에 올린다."""
    order = make_rng([seed, epoch]).permutation(len(items)) if shuffle else np.arange(len(items))
    for start in range(0, len(items), batch_size):
        yield [build(items[i]) for i in order[start : start + batch_size]]


def train(
    model: Classifier,
    items: Sequence[T],
    build: Callable[[T], Example],
    config: TrainConfig,
) -> Tuple[Classifier, EpochHistory]:
    """
    배치 평균 BCE에 대한 mini-batch SGD (선택적으로 momentum, L2).

    Returns:
        (학습된 모델, epoch별 평균 loss)
    """
    if len(items) == 0:
        raise DataException("학습 데이터가 비어 있습니다", error_code="EMPTY_DATASET")

    velocity = {name: np.zeros_like(p) for name, p in model.parameters.items()}
    history: EpochHistory = []
    for epoch in range(config.epochs):
        total, count = 0.0, 0
        batches = batch_generator(
            items, build, config.batch_size, config.seed, epoch, config.shuffle
        )
        for batch in prefetch(batches, config.prefetch):
            loss, grads = model.batch_loss_and_grads(batch)
            _check_loss(loss, epoch)
            for name, param in model.parameters.items():
                grad = grads[name]
                if config.l2 > 0:
                    grad = grad + config.l2 * param
                if config.momentum > 0:
                    velocity[name] *= config.momentum
                    velocity[name] -= config.learning_rate * grad
                    param += velocity[name]
                else:
                    param -= config.learning_rate * grad
            total += loss * len(batch)
            count += len(batch)
        history.append(total / count)
        logger.info(f"epoch {epoch + 1}/{config.epochs} loss={history[-1]:.6f}")
    return model, history


def lr_train_streaming(
    stream: Union[LabeledStream, Callable[[], LabeledStream]],
    config: TrainConfig,
    dim: int,
    input_kind: str = "sparse",
    ngram_max: Optional[int] = None,
) -> Tuple[LRModel, EpochHistory]:
    """
    예제 단위 SGD로 로지스틱 회귀를 학습합니다. epoch마다 스트림을 한 번 훑으며
    메모리는 가중치 크기(dim)에만 비례합니다.

    Args:
        stream: (특징, 라벨) 이터러블 또는 epoch마다 새 이터레이터를 돌려주는 함수
    """
    model = LRModel(dim, input_kind=input_kind, ngram_max=ngram_max)
    history: EpochHistory = []
    for epoch in range(config.epochs):
        total, count = 0.0, 0
        for features, label in (stream() if callable(stream) else stream):
            example = Example(label=_check_label(label), features=features)
            total += model.sgd_update(example, config.learning_rate, config.l2)
            count += 1
        if count == 0:
            raise DataException("학습 스트림이 비어 있습니다", error_code="EMPTY_DATASET")
        history.append(total / count)
        _check_loss(history[-1], epoch)
        logger.info(f"[streaming LR] epoch {epoch + 1}/{config.epochs} loss={history[-1]:.6f}")
    model._fold_scale()
    return model, history


def predict_all(model: Classifier, items: Sequence[T], build: Callable[[T], Example], batch_size: int = 256):
    """(점수 목록, 라벨 목록)"""
    scores, labels = [], []
    for start in range(0, len(items), batch_size):
        for example in (build(item) for item in items[start : start + batch_size]):
            scores.append(model.predict(example))
            labels.append(int(example.label))
    return scores, labels


def compare_ngram_orders(
    train_questions: Sequence[QuestionRecord],
    test_questions: Sequence[QuestionRecord],
    config: TrainConfig,
    hash_dim: int,
    features: Optional[PosFeatureService] = None,
    orders: Sequence[int] = (1, 2, 3),
) -> List[EvaluationResult]:
    """n_max별 streaming LR을 학습해 같은 테스트셋에서 비교 (Uni / Uni+Bi / Uni+Bi+Tri)"""
    features = features or PosFeatureService(dim=hash_dim)
    names = {1: "lr-visual uni", 2: "lr-visual uni+bi", 3: "lr-visual uni+bi+tri"}
    results = []
    for n_max in orders:

        def stream(n=n_max):
            for q in train_questions:
                yield features.featurize(q, n), float(q.visual)

        model, _ = lr_train_streaming(stream, config, hash_dim, ngram_max=n_max)
        scores = [model.lr_predict(features.featurize(q, n_max)) for q in test_questions]
        labels = [int(q.visual) for q in test_questions]
        results.append(
            evaluate_scores(names.get(n_max, f"n≤{n_max}"), "visual-test", scores, labels, config.threshold)
        )
    return results
