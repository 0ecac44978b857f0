import numpy as np
import pytest

from dto.text_dto import SparseFeatures
from model.Classifier import Example
from model.LogisticRegression import LRModel
from model.MLP import MLPModel
from model.PosLSTM import PosLstmModel
from model.RelNet import RelNetModel
from service.gradient_checker import grad_check
from service.pca_calculator import fit_pca
from utils.exceptions import NumericException

VOCAB = ["is", "the", "dog", "black", "near", "cat"]


def _relnet_batch(rng, image_dim):
    return [
        Example(label=1.0, tokens=["is", "the", "black", "dog"], image=rng.normal(size=image_dim)),
        Example(label=0.0, tokens=["the", "cat", "near", "zebra"], image=rng.normal(size=image_dim)),
        Example(label=1.0, tokens=["dog"], image=rng.normal(size=image_dim)),
    ]


@pytest.mark.acceptance
class TestGradientChecks:
    """해석적 그래디언트와 중앙 차분 비교 (double precision, ε=1e-5)"""

    def test_dense_logistic_regression(self):
        rng = np.random.default_rng(0)
        model = LRModel(6, input_kind="dense")
        model.parameters["weights"][:] = rng.normal(size=6) * 0.5
        batch = [Example(label=float(i % 2), features=rng.normal(size=6)) for i in range(4)]
        assert grad_check(model, batch, epsilon=1e-5) < 1e-6

    def test_sparse_logistic_regression(self):
        rng = np.random.default_rng(1)
        model = LRModel(16)
        model.parameters["weights"][:] = rng.normal(size=16) * 0.5
        batch = [
            Example(label=1.0, features=SparseFeatures(dim=16, entries={1: 2.0, 5: 1.0})),
            Example(label=0.0, features=SparseFeatures(dim=16, entries={5: 1.0, 9: 3.0})),
        ]
        assert grad_check(model, batch, epsilon=1e-5) < 1e-6

    def test_mlp(self):
        rng = np.random.default_rng(2)
        model = MLPModel([6, 4, 3, 1], seed=2)
        batch = [Example(label=float(i % 2), features=rng.normal(size=6)) for i in range(4)]
        assert grad_check(model, batch, epsilon=1e-5) < 1e-4

    def test_pos_lstm(self):
        model = PosLstmModel(["WP", "VBZ", "DT", "NN", "JJ"], embedding_dim=4, hidden_dim=5, seed=3)
        batch = [
            Example(label=1.0, tags=["VBZ", "DT", "JJ", "NN"]),
            Example(label=0.0, tags=["WP", "VBZ", "NN", "XX"]),
        ]
        assert grad_check(model, batch, epsilon=1e-5) < 1e-4

    @pytest.mark.parametrize(
        "variant,mode", [(1, "pad"), (2, "pad"), (3, "pad"), (3, "project"), (4, "pad"), (4, "project")]
    )
    def test_relnet_variants(self, variant, mode):
        # Given
        rng = np.random.default_rng(10 + variant)
        image_dim = 5
        pca = fit_pca(rng.normal(size=(30, image_dim)), 3) if variant == 1 else None
        model = RelNetModel(
            variant,
            VOCAB,
            image_dim,
            embedding_dim=3,
            hidden_dim=4,
            image_embed_dim=2,
            step1_mode=mode,
            seed=variant,
            pca=pca,
        )
        batch = _relnet_batch(rng, image_dim)

        # When
        error = grad_check(model, batch, epsilon=1e-5)

        # Then
        assert error < 1e-4

    def test_parameters_restored(self):
        model = MLPModel([3, 2, 1], seed=0)
        before = {name: value.copy() for name, value in model.parameters.items()}
        grad_check(model, [Example(label=1.0, features=np.ones(3))])
        for name, value in model.parameters.items():
            np.testing.assert_array_equal(value, before[name])

    def test_coordinate_sampling_is_capped(self):
        model = LRModel(1000, input_kind="dense")
        batch = [Example(label=1.0, features=np.linspace(-1, 1, 1000))]
        assert grad_check(model, batch, max_coordinates=50) < 1e-6

    def test_roundoff_level_coordinates_are_skipped(self):
        # Given: 세 번째 입력이 1e-9라 해당 가중치의 그래디언트가 반올림 오차 수준
        model = LRModel(3, input_kind="dense")
        model.parameters["weights"][:] = [0.4, -0.3, 0.2]
        batch = [
            Example(label=1.0, features=np.array([1.0, -0.5, 1e-9])),
            Example(label=0.0, features=np.array([0.5, 1.0, -1e-9])),
        ]

        # When / Then
        assert grad_check(model, batch, epsilon=1e-6) < 1e-6

    def test_wrong_gradient_is_detected(self, monkeypatch):
        # Given: 해석적 그래디언트를 10% 키운 MLP
        rng = np.random.default_rng(4)
        model = MLPModel([5, 4, 1], seed=4)
        batch = [Example(label=float(i % 2), features=rng.normal(size=5)) for i in range(4)]
        original = model.batch_loss_and_grads

        def scaled(examples):
            loss, grads = original(examples)
            return loss, {name: 1.1 * grad for name, grad in grads.items()}

        monkeypatch.setattr(model, "batch_loss_and_grads", scaled)

        # When / Then
        assert grad_check(model, batch) > 1e-2

    @pytest.mark.parametrize("epsilon", [1e-8, 1e-2])
    def test_epsilon_range(self, epsilon):
        with pytest.raises(NumericException):
            grad_check(LRModel(2, input_kind="dense"), [Example(label=1.0, features=np.ones(2))], epsilon=epsilon)
