from typing import Dict, Tuple

import numpy as np

from model.Classifier import check_dim
from utils.exceptions import NumericException

ORTHONORMAL_TOLERANCE = 1e-8


class PCAModel:
    """
    학습된 PCA 사영. components는 (k × d), 행이 주성분 방향.

    project(v) = components · (v − mean)
    """

    KIND = "pca"

    def __init__(self, mean: np.ndarray, components: np.ndarray, eigenvalues: np.ndarray):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.components = np.atleast_2d(np.asarray(components, dtype=np.float64))
        self.eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
        check_dim("PCA 주성분", self.components.shape[1], self.mean.shape[0])
        check_dim("PCA 고유값", self.eigenvalues.shape[0], self.components.shape[0])
        if not np.all(np.isfinite(self.components)) or not np.all(np.isfinite(self.mean)):
            raise NumericException("PCA 파라미터에 NaN/inf가 있습니다")

    @property
    def input_dim(self) -> int:
        return self.mean.shape[0]

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def pca_project(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        check_dim("PCA 입력", v.shape[-1], self.input_dim)
        return (v - self.mean) @ self.components.T

    def project(self, v: np.ndarray) -> np.ndarray:
        return self.pca_project(v)

    def reconstruct(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        check_dim("PCA 사영", z.shape[-1], self.k)
        return self.mean + z @ self.components

    def orthonormality_error(self) -> float:
        """max |⟨rᵢ,rⱼ⟩ − δᵢⱼ|"""
        gram = self.components @ self.components.T
        return float(np.max(np.abs(gram - np.eye(self.k))))

    def to_archive(self) -> Tuple[dict, Dict[str, np.ndarray]]:
        tensors = {
            "mean": self.mean,
            "components": self.components,
            "eigenvalues": self.eigenvalues,
        }
        return {"input_dim": self.input_dim, "k": self.k}, tensors

    @classmethod
    def from_archive(cls, meta: dict, tensors: Dict[str, np.ndarray]) -> "PCAModel":
        return cls(tensors["mean"], tensors["components"], tensors["eigenvalues"])
