from typing import List

import numpy as np
import pytest

from dto.config_dto import FalsificationMode, MinerConfig, MiningOrder
from dto.corpus_dto import DatasetManifest, Label, LabeledPair, PairOrder, PremiseOrder
from service.dataset_miner import DatasetMiner, render_stats, split_manifest, stats_table
from tests.mini_corpus import ANTONYMS, OBJECTS, MiniCorpus
from utils.exceptions import ConfigException, DanglingReferenceException


def _oracle_pairs(corpus: MiniCorpus, k: int, mode: FalsificationMode, cap: int) -> List[LabeledPair]:
    """생성 시점의 전제 기록과 전수 코사인 순위만으로 만든 기대 pair 목록"""
    data = corpus.features.astype(np.float64)
    norms = np.linalg.norm(data, axis=1)
    antonym = {a: b for a, b in ANTONYMS}
    antonym.update({b: a for a, b in ANTONYMS})

    by_key = {}
    for mini in corpus.questions:
        record = mini.record
        orders = []
        if mini.objects:
            orders.append(PremiseOrder.FIRST)
        if mini.attributes:
            orders.append(PremiseOrder.SECOND)
        positive = LabeledPair(
            qid=record.qid,
            iid=record.iid,
            label=Label.RELEVANT,
            order=PairOrder.POSITIVE,
            premise_orders=orders,
        )
        by_key[positive.key] = positive
        if not mini.objects:
            continue

        row = corpus.iids.index(record.iid)
        scores = data @ data[row] / (norms * norms[row])
        ranked = sorted(
            ((corpus.iids[j], scores[j]) for j in range(len(data)) if j != row),
            key=lambda item: (-item[1], item[0]),
        )[:k]

        found = 0
        for candidate, _ in ranked:
            annotation = corpus.annotations[candidate]
            false_first = [obj for obj in mini.objects if obj not in annotation.objects]
            false_second = [
                f"{attribute} {obj}"
                for attribute, obj in mini.attributes
                if obj in annotation.objects and antonym[attribute] in annotation.scene_graph[obj]
            ]
            count = len(false_first) + len(false_second)
            if (count != 1) if mode == FalsificationMode.EXACTLY_ONE else (count < 1):
                continue
            negative = LabeledPair(
                qid=record.qid,
                iid=candidate,
                label=Label.IRRELEVANT,
                order=PairOrder.FIRST if false_first else PairOrder.SECOND,
                falsified=false_first + false_second,
            )
            by_key.setdefault(negative.key, negative)
            found += 1
            if found >= cap:
                break
    return [by_key[key] for key in sorted(by_key)]


def _miner(corpus, resource_repository, feature_store_repository, config, workers=1, **kwargs):
    return DatasetMiner(
        feature_store_repository.open_feature_store(corpus.paths["features"]),
        corpus.annotations,
        resource_repository.load_vocabulary(corpus.paths["vocab"]),
        resource_repository.load_antonyms(corpus.paths["antonyms"]),
        config,
        workers=workers,
        **kwargs,
    )


@pytest.mark.acceptance
class TestDatasetBuilderOracle:
    """미니 코퍼스에서 데이터셋 구축 결과를 독립 oracle과 비교"""

    @pytest.mark.parametrize(
        "mode", [FalsificationMode.AT_LEAST_ONE, FalsificationMode.EXACTLY_ONE]
    )
    def test_pairs_and_stats_match_oracle(
        self, mini_corpus, resource_repository, feature_store_repository, mode
    ):
        # Given
        config = MinerConfig(
            k_similar=3, order=MiningOrder.BOTH, falsification_mode=mode, max_negatives_per_question=3
        )
        miner = _miner(mini_corpus, resource_repository, feature_store_repository, config)

        # When
        manifest = miner.build_dataset([q.record for q in mini_corpus.questions])

        # Then
        expected = _oracle_pairs(mini_corpus, k=3, mode=mode, cap=3)
        assert manifest.pairs == expected
        assert manifest.stats == DatasetManifest.from_pairs(expected).stats

    def test_corpus_yields_both_orders(self, mini_corpus, resource_repository, feature_store_repository):
        config = MinerConfig(k_similar=3, max_negatives_per_question=3)
        manifest = _miner(mini_corpus, resource_repository, feature_store_repository, config).build_dataset(
            [q.record for q in mini_corpus.questions]
        )
        assert manifest.stats.relevant == 50
        assert manifest.stats.first_order_non_relevant > 0
        assert manifest.stats.second_order_non_relevant > 0

    def test_byte_identical_across_worker_counts(
        self, mini_corpus, resource_repository, feature_store_repository, manifest_repository, tmp_path
    ):
        # Given
        config = MinerConfig(k_similar=3, max_negatives_per_question=3)
        questions = [q.record for q in mini_corpus.questions]

        # When
        outputs = []
        for run, workers in enumerate([1, 4, 1, 8]):
            manifest = _miner(
                mini_corpus, resource_repository, feature_store_repository, config, workers
            ).build_dataset(questions)
            path = tmp_path / f"manifest_{run}.jsonl"
            manifest_repository.write_manifest(manifest, path)
            outputs.append(path.read_bytes())

        # Then
        assert all(output == outputs[0] for output in outputs)


@pytest.mark.unit
class TestDatasetMiner:
    """마이닝 세부 동작 테스트"""

    def test_first_order_only(self, mini_corpus, resource_repository, feature_store_repository):
        config = MinerConfig(k_similar=3, order=MiningOrder.FIRST, max_negatives_per_question=3)
        manifest = _miner(mini_corpus, resource_repository, feature_store_repository, config).build_dataset(
            [q.record for q in mini_corpus.questions]
        )
        negatives = [p for p in manifest.pairs if p.label == Label.IRRELEVANT]
        assert negatives
        assert all(p.order == PairOrder.FIRST for p in negatives)
        assert all(f in OBJECTS for p in negatives for f in p.falsified)

    def test_second_order_only(self, mini_corpus, resource_repository, feature_store_repository):
        config = MinerConfig(k_similar=3, order=MiningOrder.SECOND, max_negatives_per_question=3)
        manifest = _miner(mini_corpus, resource_repository, feature_store_repository, config).build_dataset(
            [q.record for q in mini_corpus.questions]
        )
        negatives = [p for p in manifest.pairs if p.label == Label.IRRELEVANT]
        assert all(p.order == PairOrder.SECOND for p in negatives)

    def test_cap_keeps_similarity_order(self, mini_corpus, resource_repository, feature_store_repository):
        # Given
        wide = MinerConfig(k_similar=10, max_negatives_per_question=10)
        capped = MinerConfig(k_similar=10, max_negatives_per_question=1)
        question = mini_corpus.questions[0].record

        # When
        all_negatives = _miner(mini_corpus, resource_repository, feature_store_repository, wide).mine_negative_images(
            question, question.iid
        )
        first_only = _miner(
            mini_corpus, resource_repository, feature_store_repository, capped
        ).mine_negative_images(question, question.iid)

        # Then
        assert first_only == all_negatives[:1]

    def test_zero_cap_mines_nothing(self, mini_corpus, resource_repository, feature_store_repository):
        config = MinerConfig(k_similar=3, max_negatives_per_question=0)
        question = mini_corpus.questions[0].record
        miner = _miner(mini_corpus, resource_repository, feature_store_repository, config)
        assert miner.mine_negative_images(question, question.iid) == []

    def test_question_filter(self, mini_corpus, resource_repository, feature_store_repository):
        config = MinerConfig(k_similar=3, max_negatives_per_question=3)
        miner = _miner(
            mini_corpus,
            resource_repository,
            feature_store_repository,
            config,
            question_filter=lambda q: q.qid == "q000",
        )
        manifest = miner.build_dataset([q.record for q in mini_corpus.questions])
        negatives = [p for p in manifest.pairs if p.label == Label.IRRELEVANT]
        assert {p.qid for p in negatives} <= {"q000"}
        assert manifest.stats.relevant == 50

    def test_image_map_overrides_question_iid(self, mini_corpus, resource_repository, feature_store_repository):
        miner = _miner(mini_corpus, resource_repository, feature_store_repository, MinerConfig())
        question = mini_corpus.questions[0].record
        positives = miner.emit_positives([question], image_map={question.qid: "img05"})
        assert positives[0].iid == "img05"

    def test_dangling_reference(self, mini_corpus, resource_repository, feature_store_repository):
        miner = _miner(mini_corpus, resource_repository, feature_store_repository, MinerConfig())
        question = mini_corpus.questions[0].record.model_copy(update={"iid": "nowhere"})
        with pytest.raises(DanglingReferenceException) as exc_info:
            miner.emit_positives([question])
        assert exc_info.value.qids == [question.qid]
        assert exc_info.value.exit_code == 3

    def test_invalid_cap_config(self):
        with pytest.raises(ValueError):
            MinerConfig(k_similar=2, max_negatives_per_question=3)

    def test_untagged_question_falls_back_to_first_order(
        self, mini_corpus, resource_repository, feature_store_repository
    ):
        # Given: 2차 전제가 있는 질문에서 POS 태그를 제거
        tagged = next(q for q in mini_corpus.questions if q.attributes).record
        untagged = tagged.model_copy(update={"pos_tags": None})
        both = _miner(mini_corpus, resource_repository, feature_store_repository, MinerConfig())
        first_only = _miner(
            mini_corpus, resource_repository, feature_store_repository, MinerConfig(order=MiningOrder.FIRST)
        )

        # When
        negatives = both.mine_negative_images(untagged, untagged.iid)
        manifest = both.build_dataset([untagged])

        # Then
        assert negatives == first_only.mine_negative_images(tagged, tagged.iid)
        assert all(p.order == PairOrder.FIRST for p in negatives)
        assert manifest.stats.relevant == 1

    def test_more_similar_images_never_lose_pairs(
        self, mini_corpus, resource_repository, feature_store_repository
    ):
        # Given: cap을 k와 같게 두면 k가 커질수록 후보 집합이 포함 관계를 이룬다
        questions = [q.record for q in mini_corpus.questions]

        # When
        manifests = [
            _miner(
                mini_corpus,
                resource_repository,
                feature_store_repository,
                MinerConfig(k_similar=k, max_negatives_per_question=k),
            ).build_dataset(questions)
            for k in (1, 2, 4, 8, 19)
        ]

        # Then
        for smaller, larger in zip(manifests, manifests[1:]):
            assert {p.key for p in smaller.pairs} <= {p.key for p in larger.pairs}
            assert smaller.stats.non_relevant <= larger.stats.non_relevant
            assert smaller.stats.relevant == larger.stats.relevant


@pytest.mark.unit
class TestStatsAndSplit:
    """통계 표와 이미지 단위 분할 테스트"""

    def _manifest(self):
        pairs = [
            LabeledPair(qid="q1", iid="i1", label=Label.RELEVANT, order=PairOrder.POSITIVE,
                        premise_orders=[PremiseOrder.FIRST, PremiseOrder.SECOND]),
            LabeledPair(qid="q1", iid="i2", label=Label.IRRELEVANT, order=PairOrder.FIRST, falsified=["dog"]),
            LabeledPair(qid="q1", iid="i3", label=Label.IRRELEVANT, order=PairOrder.SECOND,
                        falsified=["black dog"]),
            LabeledPair(qid="q2", iid="i2", label=Label.RELEVANT, order=PairOrder.POSITIVE),
        ]
        return DatasetManifest.from_pairs(pairs)

    def test_stats_table_layout(self):
        table = stats_table(self._manifest().stats)
        assert list(table.index) == ["Total", "First order", "Second order"]
        assert list(table.columns) == ["Total", "Relevant", "Non-relevant"]
        assert table.loc["Total"].tolist() == [4, 2, 2]
        assert table.loc["First order"].tolist() == [2, 1, 1]
        assert table.loc["Second order"].tolist() == [2, 1, 1]

    def test_render_stats_includes_note(self):
        text = render_stats(self._manifest().stats)
        assert "First order" in text
        assert text.rstrip().splitlines()[-1].startswith("*")

    def test_split_keeps_images_together(self):
        train, test = split_manifest(self._manifest(), 0.34, seed=1)
        train_iids = {p.iid for p in train.pairs}
        test_iids = {p.iid for p in test.pairs}
        assert not train_iids & test_iids
        assert len(train.pairs) + len(test.pairs) == 4
        assert len(test_iids) == 1

    def test_split_is_seeded(self):
        assert split_manifest(self._manifest(), 0.5, seed=7) == split_manifest(self._manifest(), 0.5, seed=7)

    @pytest.mark.parametrize("fraction", [0.0, 1.0])
    def test_split_fraction_range(self, fraction):
        with pytest.raises(ConfigException):
            split_manifest(self._manifest(), fraction)
