"""텍스트 특징 관련 타입. 학습 루프에서 대량으로 생성되므로 pydantic 대신 dataclass를 사용한다."""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np


@dataclass
class SparseFeatures:
    """해시된 인덱스 → 카운트"""

    dim: int
    entries: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim은 양수여야 합니다")
        for index, count in self.entries.items():
            if not 0 <= index < self.dim:
                raise ValueError(f"인덱스 범위 초과: {index} (dim={self.dim})")
            if count <= 0:
                raise ValueError(f"카운트는 양수여야 합니다: {index} → {count}")

    def add(self, index: int, count: float = 1.0):
        self.entries[index] = self.entries.get(index, 0.0) + count

    @property
    def total_mass(self) -> float:
        return float(sum(self.entries.values()))


@dataclass
class EmbeddingTable:
    """토큰 → 임베딩 벡터 (읽기 전용)"""

    dim: int
    vectors: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for token, vector in self.vectors.items():
            if vector.shape != (self.dim,):
                raise ValueError(f"임베딩 차원 불일치: {token} ({vector.shape[0]} != {self.dim})")

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def get(self, token: str):
        return self.vectors.get(token)


@dataclass
class TagLexicon:
    """토큰 → POS 태그 사전 (소문자 키)"""

    tags: Dict[str, str] = field(default_factory=dict)
    default_tag: str = "NN"

    def __post_init__(self):
        if not self.default_tag:
            raise ValueError("default_tag는 비어 있을 수 없습니다")
        self.tags = {token.lower(): tag for token, tag in self.tags.items()}
