import numpy as np
import pytest

from dto.corpus_dto import QuestionRecord
from dto.text_dto import EmbeddingTable, TagLexicon
from service.pos_feature_service import (
    PosFeatureService,
    average_embedding,
    fnv1a_64,
    hash_index,
    lexicon_tag,
    pos_ngrams,
)
from utils.exceptions import DataException

# 빌드/플랫폼과 무관하게 절대 바뀌면 안 되는 값
PINNED_INDICES = [
    ("", 1000, 37),
    ("", 1, 0),
    ("", 2, 1),
    ("", 1024, 805),
    ("a", 1, 0),
    ("a", 256, 140),
    ("a", 1024, 140),
    ("a", 65536, 60556),
    ("b", 256, 165),
    ("b", 65536, 61861),
    ("c", 4096, 4082),
    ("foobar", 256, 232),
    ("foobar", 65536, 26600),
    ("foobar", 262144, 92136),
    ("NN", 256, 45),
    ("NN", 65536, 14381),
]


@pytest.mark.unit
class TestFeatureHashing:
    """FNV-1a-64 해싱 테스트"""

    def test_offset_basis_for_empty_input(self):
        assert fnv1a_64(b"") == 0xCBF29CE484222325

    def test_known_digests(self):
        assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C
        assert fnv1a_64(b"foobar") == 0x85944171F73967E8

    @pytest.mark.parametrize("name,dim,expected", PINNED_INDICES)
    def test_pinned_index_table(self, name, dim, expected):
        assert hash_index(name, dim) == expected

    def test_dim_one_always_zero(self):
        for name in ["", "NN", "DT_NN", "한국어"]:
            assert hash_index(name, 1) == 0

    def test_invalid_dim(self):
        with pytest.raises(ValueError):
            hash_index("NN", 0)


@pytest.mark.unit
class TestPosNgrams:
    """POS n-gram 특징 테스트"""

    def test_total_mass_without_padding(self):
        # Given
        tags = ["WP", "VBZ", "DT", "NN"]

        # When
        unigrams = pos_ngrams(tags, n_max=1, dim=2**18)
        bigrams = pos_ngrams(tags, n_max=2, dim=2**18)
        trigrams = pos_ngrams(tags, n_max=3, dim=2**18)

        # Then
        assert unigrams.total_mass == 4
        assert bigrams.total_mass == 4 + 3
        assert trigrams.total_mass == 4 + 3 + 2

    def test_single_tag_has_only_unigram(self):
        features = pos_ngrams(["NN"], n_max=3, dim=65536)
        assert features.entries == {14381: 1.0}

    def test_repeated_ngrams_are_counted(self):
        features = pos_ngrams(["NN", "NN", "NN"], n_max=2, dim=2**18)
        assert features.entries[hash_index("NN", 2**18)] == 3
        assert features.entries[hash_index("NN_NN", 2**18)] == 2

    def test_collisions_accumulate(self):
        # dim=1 이면 모든 n-gram이 같은 칸으로 간다
        features = pos_ngrams(["DT", "JJ", "NN"], n_max=2, dim=1)
        assert features.entries == {0: 5.0}

    def test_empty_sequence(self):
        with pytest.raises(DataException) as exc_info:
            pos_ngrams([], n_max=2)
        assert exc_info.value.error_code == "EMPTY_SEQUENCE"

    @pytest.mark.parametrize("n_max", [0, 4])
    def test_invalid_ngram_order(self, n_max):
        with pytest.raises(DataException) as exc_info:
            pos_ngrams(["NN"], n_max=n_max)
        assert exc_info.value.error_code == "INVALID_NGRAM"


@pytest.mark.unit
class TestPosFeatureService:
    """태깅/특징 추출 서비스 테스트"""

    def setup_method(self):
        self.lexicon = TagLexicon(tags={"What": "WP", "is": "VBZ", "the": "DT"}, default_tag="NN")
        self.service = PosFeatureService(self.lexicon, n_max=2, dim=1024)

    def test_lexicon_tagging_is_case_insensitive_with_default(self):
        assert lexicon_tag(["what", "IS", "the", "dog"], self.lexicon) == ["WP", "VBZ", "DT", "NN"]

    def test_existing_tags_are_preferred(self):
        question = QuestionRecord(qid="q1", text="run", tokens=["run"], pos_tags=["VB"])
        assert self.service.tags_for(question) == ["VB"]

    def test_tag_questions_fills_missing_tags_only(self):
        # Given
        untagged = QuestionRecord(qid="q1", text="what is the dog", tokens=["what", "is", "the", "dog"])
        tagged = QuestionRecord(qid="q2", text="run", tokens=["run"], pos_tags=["VB"])

        # When
        result = list(self.service.tag_questions([untagged, tagged]))

        # Then
        assert result[0].pos_tags == ["WP", "VBZ", "DT", "NN"]
        assert result[1].pos_tags == ["VB"]
        assert untagged.pos_tags is None

    def test_named_ngrams_match_featurize(self):
        question = QuestionRecord(qid="q1", text="what is", tokens=["what", "is"])
        names = self.service.named_ngrams(question)
        features = self.service.featurize(question)

        assert names == ["WP", "VBZ", "WP_VBZ"]
        assert sorted(features.entries) == sorted({hash_index(n, 1024) for n in names})

    def test_featurize_order_override(self):
        question = QuestionRecord(qid="q1", text="what is the", tokens=["what", "is", "the"])
        assert self.service.featurize(question, n_max=1).total_mass == 3
        assert self.service.featurize(question, n_max=3).total_mass == 6


@pytest.mark.unit
class TestAverageEmbedding:
    """평균 임베딩 테스트"""

    def test_skips_oov_tokens(self):
        table = EmbeddingTable(dim=2, vectors={"dog": np.array([1.0, 3.0]), "cat": np.array([3.0, 1.0])})
        np.testing.assert_allclose(average_embedding(["dog", "unknown", "cat"], table), [2.0, 2.0])

    def test_all_oov_is_zero_vector(self):
        table = EmbeddingTable(dim=3, vectors={"dog": np.ones(3)})
        np.testing.assert_array_equal(average_embedding(["zebra"], table), np.zeros(3))

    @pytest.mark.parametrize("seed", range(5))
    def test_token_order_does_not_matter(self, seed):
        # Given
        rng = np.random.default_rng(seed)
        table = EmbeddingTable(dim=5, vectors={f"w{i}": rng.normal(size=5) for i in range(6)})
        tokens = [f"w{int(i)}" for i in rng.integers(8, size=7)]  # w6, w7은 OOV

        # When
        shuffled = [tokens[int(i)] for i in rng.permutation(len(tokens))]

        # Then
        np.testing.assert_allclose(
            average_embedding(shuffled, table), average_embedding(tokens, table), atol=1e-12
        )
