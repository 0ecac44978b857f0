"""분류 모델 공통 부분: 학습 예제 타입, 수치 유틸, 파라미터/그래디언트 인터페이스."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from dto.text_dto import SparseFeatures
from utils.exceptions import NumericException

PROBABILITY_CLAMP = 1e-12


@dataclass
class Example:
    """학습/평가 예제 한 건. 모델마다 필요한 필드만 사용한다."""

    label: float = 0.0
    tokens: Optional[List[str]] = None  # RelNet: 질문 토큰
    tags: Optional[List[str]] = None  # POS-LSTM: 태그 시퀀스
    image: Optional[np.ndarray] = None  # RelNet: FC7 벡터
    features: Optional[Union[SparseFeatures, np.ndarray]] = None  # LR / MLP 입력


def sigmoid(z):
    """overflow 없는 로지스틱 함수 (스칼라/배열 모두 지원)"""
    if np.ndim(z) == 0:
        z = float(z)
        if z >= 0:
            return 1.0 / (1.0 + np.exp(-z))
        exp_z = np.exp(z)
        return exp_z / (1.0 + exp_z)
    z = np.asarray(z, dtype=np.float64)
    exp_neg_abs = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + exp_neg_abs), exp_neg_abs / (1.0 + exp_neg_abs))


def output_probability(z: float) -> float:
    """분류기 헤드 출력. 열린 구간 (0, 1) 안으로 자른다."""
    return min(max(float(sigmoid(z)), PROBABILITY_CLAMP), 1.0 - PROBABILITY_CLAMP)


def binary_cross_entropy(p: float, y: float) -> float:
    p = min(max(p, PROBABILITY_CLAMP), 1.0 - PROBABILITY_CLAMP)
    return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))


def make_rng(seed: Union[int, Sequence[int]]) -> np.random.Generator:
    """seed 기반 64비트 생성기 (PCG64)"""
    return np.random.Generator(np.random.PCG64(seed))


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    """uniform(-s, s), s = sqrt(6 / (fan_in + fan_out))"""
    if len(shape) == 1:
        fan_in, fan_out = 1, shape[0]
    else:
        fan_out, fan_in = shape[0], int(np.prod(shape[1:]))
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=shape)


def check_dim(name: str, actual: int, expected: int):
    if actual != expected:
        raise NumericException(
            f"{name} 차원 불일치: {actual} != {expected}",
            error_code="DIMENSION_MISMATCH",
            details={"name": name, "actual": actual, "expected": expected},
        )


class Classifier:
    """
    모든 분류기의 공통 인터페이스.

    parameters는 이름 → 배열이며 학습/그래디언트 체크는 배열을 제자리(in-place)에서 수정한다.
    loss_and_grads는 grads 누적기에 한 예제의 그래디언트를 더하고 BCE loss를 반환한다.
    """

    KIND = "classifier"

    parameters: Dict[str, np.ndarray]

    def predict(self, example: Example) -> float:
        raise NotImplementedError

    def loss_and_grads(self, example: Example, grads: Dict[str, np.ndarray]) -> float:
        raise NotImplementedError

    def zero_grads(self) -> Dict[str, np.ndarray]:
        return {name: np.zeros_like(value) for name, value in self.parameters.items()}

    def batch_loss_and_grads(
        self, batch: Sequence[Example]
    ) -> Tuple[float, Dict[str, np.ndarray]]:
        """배치 평균 BCE와 평균 그래디언트. 가변 길이 시퀀스는 예제별로 처리한 뒤 평균낸다."""
        grads = self.zero_grads()
        total = 0.0
        for example in batch:
            total += self.loss_and_grads(example, grads)
        n = max(len(batch), 1)
        for value in grads.values():
            value /= n
        return total / n, grads

    def batch_loss(self, batch: Sequence[Example]) -> float:
        total = sum(binary_cross_entropy(self.predict(e), e.label) for e in batch)
        return total / max(len(batch), 1)

    def to_archive(self) -> Tuple[dict, Dict[str, np.ndarray]]:
        raise NotImplementedError
