from typing import Dict, Optional, Tuple, Union

import numpy as np

from dto.text_dto import SparseFeatures
from model.Classifier import Classifier, Example, binary_cross_entropy, check_dim, output_probability
from utils.exceptions import NumericException

# 가중치 스케일이 이 값보다 작아지면 실제 가중치로 접어 넣는다
_MIN_SCALE = 1e-9


class LRModel(Classifier):
    """
    로지스틱 회귀. 해시된 희소 특징(시각/비시각 판별)과 밀집 특징(전제 판별) 모두 지원.

    L2 감쇠는 w = scale · v 표현으로 처리해 예제당 갱신 비용을 nnz에 비례하게 유지한다.
    """

    KIND = "lr"

    def __init__(self, dim: int, input_kind: str = "sparse", ngram_max: Optional[int] = None):
        if dim <= 0:
            raise NumericException("LR 가중치 차원은 양수여야 합니다")
        self.dim = dim
        self.input_kind = input_kind
        self.ngram_max = ngram_max  # 희소 입력일 때 학습에 쓴 n-gram 최대 길이
        self.parameters = {"weights": np.zeros(dim), "bias": np.zeros(1)}
        self._scale = 1.0

    @property
    def weights(self) -> np.ndarray:
        self._fold_scale()
        return self.parameters["weights"]

    @property
    def bias(self) -> float:
        return float(self.parameters["bias"][0])

    def _fold_scale(self):
        if self._scale != 1.0:
            self.parameters["weights"] *= self._scale
            self._scale = 1.0

    def _check_sparse(self, x: SparseFeatures):
        if x.dim > self.dim or any(index >= self.dim for index in x.entries):
            raise NumericException(
                f"특징 인덱스가 가중치 차원({self.dim})을 벗어납니다",
                error_code="INDEX_OVERFLOW",
            )

    def _margin(self, x: Union[SparseFeatures, np.ndarray]) -> float:
        w = self.parameters["weights"]
        if isinstance(x, SparseFeatures):
            self._check_sparse(x)
            total = sum(w[index] * count for index, count in x.entries.items())
        else:
            x = np.asarray(x, dtype=np.float64)
            check_dim("LR 입력", x.shape[0], self.dim)
            total = float(w @ x)
        return self._scale * total + self.parameters["bias"][0]

    def lr_predict(self, x: Union[SparseFeatures, np.ndarray]) -> float:
        """σ(b + Σ w[i]·x[i])"""
        return output_probability(self._margin(x))

    def predict(self, example: Example) -> float:
        return self.lr_predict(example.features)

    def loss_and_grads(self, example: Example, grads: Dict[str, np.ndarray]) -> float:
        self._fold_scale()
        p = self.lr_predict(example.features)
        error = p - example.label
        x = example.features
        if isinstance(x, SparseFeatures):
            for index, count in x.entries.items():
                grads["weights"][index] += error * count
        else:
            grads["weights"] += error * np.asarray(x, dtype=np.float64)
        grads["bias"][0] += error
        return binary_cross_entropy(p, example.label)

    def sgd_update(self, example: Example, learning_rate: float, l2: float = 0.0) -> float:
        """
        예제 하나로 SGD 한 스텝: w ← (1 − η·l2)·w − η·(p − y)·x, b ← b − η·(p − y).
        반환값은 갱신 전 BCE loss.
        """
        p = self.lr_predict(example.features)
        error = p - example.label
        if l2 > 0:
            decay = 1.0 - learning_rate * l2
            if decay <= 0:
                raise NumericException("learning_rate · l2 는 1보다 작아야 합니다")
            self._scale *= decay
            if self._scale < _MIN_SCALE:
                self._fold_scale()

        w = self.parameters["weights"]
        step = learning_rate * error / self._scale
        x = example.features
        if isinstance(x, SparseFeatures):
            for index, count in x.entries.items():
                w[index] -= step * count
        else:
            w -= step * np.asarray(x, dtype=np.float64)
        self.parameters["bias"][0] -= learning_rate * error
        return binary_cross_entropy(p, example.label)

    def to_archive(self) -> Tuple[dict, Dict[str, np.ndarray]]:
        self._fold_scale()
        meta = {"dim": self.dim, "input_kind": self.input_kind, "ngram_max": self.ngram_max}
        return meta, dict(self.parameters)

    @classmethod
    def from_archive(cls, meta: dict, tensors: Dict[str, np.ndarray]) -> "LRModel":
        model = cls(
            int(meta["dim"]),
            input_kind=meta.get("input_kind", "sparse"),
            ngram_max=meta.get("ngram_max"),
        )
        model.parameters["weights"][:] = tensors["weights"]
        model.parameters["bias"][:] = tensors["bias"]
        return model
