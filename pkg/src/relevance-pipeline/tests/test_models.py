import numpy as np
import pytest

from dto.text_dto import EmbeddingTable, SparseFeatures
from model.Classifier import Example, binary_cross_entropy, glorot_uniform, make_rng, output_probability, sigmoid
from model.LogisticRegression import LRModel
from model.LSTMCell import LSTMCell, lstm_step
from model.MLP import MLPModel
from model.PCA import PCAModel
from model.PosLSTM import PosLstmModel
from model.RelNet import UNK_TOKEN, RelNetModel
from service.pca_calculator import fit_pca
from utils.exceptions import NumericException

VOCAB = ["is", "the", "dog", "black", "cat", "sleeping"]
TOKENS = ["is", "the", "black", "dog", "sleeping"]


def _relnet(variant, image_dim=6, seed=3, **kwargs):
    return RelNetModel(
        variant,
        VOCAB,
        image_dim,
        embedding_dim=4,
        hidden_dim=5,
        image_embed_dim=kwargs.pop("image_embed_dim", 3),
        seed=seed,
        **kwargs,
    )


@pytest.mark.unit
class TestNumericHelpers:
    """공통 수치 함수 테스트"""

    def test_sigmoid_is_stable_at_extremes(self):
        assert sigmoid(1000.0) == 1.0
        assert sigmoid(-1000.0) == pytest.approx(0.0)
        np.testing.assert_allclose(sigmoid(np.array([-800.0, 0.0, 800.0])), [0.0, 0.5, 1.0])

    def test_head_probability_stays_inside_open_interval(self):
        # Given: 포화 구간의 margin을 만드는 LR
        model = LRModel(2, input_kind="dense")
        model.parameters["weights"][:] = [500.0, -500.0]

        # When
        high = model.lr_predict(np.array([1.0, -1.0]))
        low = model.lr_predict(np.array([-1.0, 1.0]))

        # Then
        assert 0.0 < low < 0.5 < high < 1.0
        assert output_probability(1e6) < 1.0
        assert output_probability(-1e6) > 0.0

    def test_sigmoid_accepts_zero_dim_arrays(self):
        assert sigmoid(np.float64(0.0)) == 0.5
        assert sigmoid(np.array(2.0)) == pytest.approx(1 / (1 + np.exp(-2.0)))

    def test_cross_entropy_is_clamped(self):
        assert np.isfinite(binary_cross_entropy(0.0, 1.0))
        assert binary_cross_entropy(0.5, 1.0) == pytest.approx(np.log(2))

    def test_glorot_bounds(self):
        weights = glorot_uniform(make_rng(0), (20, 30))
        assert np.max(np.abs(weights)) <= np.sqrt(6.0 / 50)

    def test_rng_is_reproducible(self):
        assert make_rng(5).integers(1 << 30) == make_rng(5).integers(1 << 30)
        assert make_rng([5, 1]).integers(1 << 30) != make_rng([5, 2]).integers(1 << 30)


@pytest.mark.unit
class TestLstmCell:
    """LSTM 셀 테스트"""

    def test_single_step_against_formula(self):
        # Given
        cell = LSTMCell(3, 2, make_rng(1))
        x = np.array([0.5, -1.0, 2.0])
        h, c = np.array([0.1, -0.2]), np.array([0.3, 0.0])

        # When
        h_next, c_next = lstm_step(cell, x, (h, c))

        # Then
        z = cell.W @ x + cell.U @ h + cell.b
        i, f, g, o = sigmoid(z[:2]), sigmoid(z[2:4]), np.tanh(z[4:6]), sigmoid(z[6:])
        np.testing.assert_allclose(c_next, f * c + i * g)
        np.testing.assert_allclose(h_next, o * np.tanh(f * c + i * g))

    def test_dimension_mismatch(self):
        cell = LSTMCell(3, 2, make_rng(1))
        with pytest.raises(NumericException):
            lstm_step(cell, np.zeros(4), cell.initial_state())

    def test_forward_outputs_each_step(self):
        cell = LSTMCell(2, 3, make_rng(0))
        outputs, caches = cell.forward(np.ones((4, 2)))
        assert outputs.shape == (4, 3)
        assert len(caches) == 4


@pytest.mark.unit
class TestLogisticRegression:
    """로지스틱 회귀 테스트"""

    def test_sparse_and_dense_predictions_agree(self):
        # Given
        model = LRModel(4, input_kind="dense")
        model.parameters["weights"][:] = [0.5, -1.0, 0.0, 2.0]
        model.parameters["bias"][0] = 0.1
        sparse = SparseFeatures(dim=4, entries={0: 2.0, 3: 1.0})

        # When
        p_sparse = model.lr_predict(sparse)
        p_dense = model.lr_predict(np.array([2.0, 0.0, 0.0, 1.0]))

        # Then
        assert p_sparse == pytest.approx(sigmoid(0.1 + 1.0 + 2.0))
        assert p_sparse == pytest.approx(p_dense)

    def test_index_overflow(self):
        model = LRModel(4)
        with pytest.raises(NumericException) as exc_info:
            model.lr_predict(SparseFeatures(dim=8, entries={6: 1.0}))
        assert exc_info.value.error_code == "INDEX_OVERFLOW"

    def test_lazy_l2_matches_explicit_update(self):
        # Given
        rng = np.random.default_rng(0)
        lazy, explicit = LRModel(5, input_kind="dense"), LRModel(5, input_kind="dense")
        examples = [Example(label=float(i % 2), features=rng.normal(size=5)) for i in range(20)]
        lr, l2 = 0.1, 0.5

        # When
        for example in examples:
            lazy.sgd_update(example, lr, l2)
            w, b = explicit.parameters["weights"], explicit.parameters["bias"]
            error = explicit.lr_predict(example.features) - example.label
            w *= 1.0 - lr * l2
            w -= lr * error * example.features
            b[0] -= lr * error

        # Then
        np.testing.assert_allclose(lazy.weights, explicit.weights, atol=1e-12)
        assert lazy.bias == pytest.approx(explicit.bias)


@pytest.mark.unit
class TestMlpAndPosLstm:
    """MLP / POS-LSTM 구성 테스트"""

    def test_mlp_layer_shapes(self):
        model = MLPModel([6, 4, 3, 1], seed=0)
        assert [model.parameters[f"W{i}"].shape for i in range(3)] == [(4, 6), (3, 4), (1, 3)]
        assert 0.0 < model.mlp_forward(np.ones(6)) < 1.0

    def test_mlp_requires_single_output(self):
        with pytest.raises(NumericException):
            MLPModel([4, 2])

    def test_mlp_seeded_init(self):
        a, b = MLPModel([3, 2, 1], seed=9), MLPModel([3, 2, 1], seed=9)
        np.testing.assert_array_equal(a.parameters["W0"], b.parameters["W0"])

    def test_pos_lstm_unknown_tags_use_unk_row(self):
        model = PosLstmModel(["NN", "DT"], embedding_dim=3, hidden_dim=4, seed=0)
        assert model.tags[0] == "<UNK>"
        assert model.poslstm_forward(["XYZ"]) == model.poslstm_forward(["ABC"])

    def test_pos_lstm_empty_sequence(self):
        model = PosLstmModel(["NN"], embedding_dim=2, hidden_dim=2)
        with pytest.raises(NumericException) as exc_info:
            model.poslstm_forward([])
        assert exc_info.value.error_code == "EMPTY_SEQUENCE"


@pytest.mark.unit
class TestRelNetConstruction:
    """RelNet 변형별 구성 테스트"""

    def test_parameter_sets(self):
        pca = PCAModel(np.zeros(6), np.eye(6)[:3], np.ones(3))
        assert "image.W" not in _relnet(1, pca=pca).parameters
        assert "question.W" in _relnet(2).parameters
        assert "question.W" in _relnet(3).parameters
        assert "question.W" not in _relnet(4).parameters
        assert "project.W" in _relnet(4, step1_mode="project").parameters
        assert "project.W" not in _relnet(4).parameters

    @pytest.mark.parametrize(
        "variant,mode,expected",
        [(2, "pad", 5 + 3), (3, "pad", max(3, 5)), (3, "project", 5), (4, "pad", max(3, 4)), (4, "project", 4)],
    )
    def test_fusion_input_width(self, variant, mode, expected):
        assert _relnet(variant, step1_mode=mode).fusion.input_dim == expected

    def test_relnet1_requires_pca(self):
        with pytest.raises(NumericException):
            _relnet(1)

    def test_unknown_variant(self):
        with pytest.raises(NumericException):
            _relnet(5)

    def test_vocabulary_lowercased_with_unk(self):
        model = RelNetModel(4, ["Dog", "dog", "CAT"], 2, embedding_dim=2, hidden_dim=2, image_embed_dim=2)
        assert model.vocabulary == [UNK_TOKEN, "cat", "dog"]
        assert model.token_indices(["DOG", "zebra"]) == [2, 0]

    def test_pretrained_embeddings_loaded(self):
        table = EmbeddingTable(dim=4, vectors={"dog": np.arange(4.0), "zebra": np.ones(4)})
        model = _relnet(4, embeddings=table)
        assert model.pretrained_rows == 1
        np.testing.assert_array_equal(model.parameters["embedding"][model.token_index["dog"]], np.arange(4.0))

    def test_empty_tokens(self):
        with pytest.raises(NumericException) as exc_info:
            _relnet(4).relnet_forward(np.ones(6), [])
        assert exc_info.value.error_code == "EMPTY_SEQUENCE"

    def test_image_dimension_mismatch(self):
        with pytest.raises(NumericException) as exc_info:
            _relnet(2).relnet_forward(np.ones(7), TOKENS)
        assert exc_info.value.error_code == "DIMENSION_MISMATCH"


@pytest.mark.acceptance
class TestRelNetWiring:
    """RelNet 구조 연결 검증"""

    def test_relnet1_equals_relnet2_with_pca_as_image_embedding(self):
        # Given: V2의 이미지 임베딩을 PCA 사영과 같게 설정
        rng = np.random.default_rng(0)
        pca = fit_pca(rng.normal(size=(40, 6)), 3)
        v1 = _relnet(1, pca=pca)
        v2 = _relnet(2, image_embed_dim=pca.k)
        for name, value in v1.parameters.items():
            v2.parameters[name][...] = value
        v2.parameters["image.W"][...] = pca.components
        v2.parameters["image.b"][...] = -pca.components @ pca.mean

        # When / Then
        for _ in range(10):
            image = rng.normal(size=6)
            assert abs(v1.relnet_forward(image, TOKENS) - v2.relnet_forward(image, TOKENS)) < 1e-10

    @pytest.mark.parametrize("mode", ["pad", "project"])
    def test_relnet4_ignores_image_when_pathway_zeroed(self, mode):
        # Given
        model = _relnet(4, step1_mode=mode)
        model.parameters["image.W"][...] = 0.0
        model.parameters["image.b"][...] = 0.0
        rng = np.random.default_rng(1)

        # When
        outputs = {model.relnet_forward(rng.normal(size=6) * 100, TOKENS) for _ in range(5)}

        # Then
        assert len(outputs) == 1

    def test_relnet4_depends_on_image_normally(self):
        model = _relnet(4)
        assert model.relnet_forward(np.zeros(6), TOKENS) != model.relnet_forward(np.ones(6), TOKENS)

    def test_token_order_matters(self):
        model = _relnet(3)
        image = np.ones(6)
        assert model.relnet_forward(image, TOKENS) != model.relnet_forward(image, TOKENS[::-1])
