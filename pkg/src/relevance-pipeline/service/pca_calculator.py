import logging
from typing import Optional, Sequence, Union

import numpy as np

from model.Classifier import make_rng
from model.PCA import PCAModel
from utils.exceptions import NumericException

logger = logging.getLogger(__name__)

EIGH_MAX_DIM = 1024
SUBSPACE_TOLERANCE = 1e-10
SUBSPACE_MAX_SWEEPS = 10_000
DEFAULT_CHUNK_ROWS = 4096

Samples = Union[np.ndarray, Sequence[np.ndarray]]


def _as_matrix(samples: Samples) -> np.ndarray:
    if isinstance(samples, np.ndarray) and samples.ndim == 2:
        return samples  # memmap은 그대로 두고 청크 단위로 읽는다
    return np.atleast_2d(np.asarray(samples, dtype=np.float64))


def _chunks(matrix: np.ndarray, rows: np.ndarray, chunk_rows: int):
    for start in range(0, len(rows), chunk_rows):
        yield np.asarray(matrix[rows[start : start + chunk_rows]], dtype=np.float64)


def sample_covariance(
    matrix: np.ndarray, rows: np.ndarray, chunk_rows: int = DEFAULT_CHUNK_ROWS
):
    """(평균, n−1 정규화 공분산). 두 번 훑으며 청크 단위로 누적한다."""
    n, d = len(rows), matrix.shape[1]
    total = np.zeros(d)
    for chunk in _chunks(matrix, rows, chunk_rows):
        total += chunk.sum(axis=0)
    mean = total / n

    scatter = np.zeros((d, d))
    for chunk in _chunks(matrix, rows, chunk_rows):
        centered = chunk - mean
        scatter += centered.T @ centered
    return mean, scatter / (n - 1)


def _top_k_eigh(cov: np.ndarray, k: int):
    values, vectors = np.linalg.eigh(cov)
    order = np.argsort(values)[::-1][:k]
    return values[order], vectors[:, order].T


def _top_k_subspace(cov: np.ndarray, k: int, seed: int):
    """블록 부분공간 반복 + Rayleigh-Ritz. 고유값 추정의 상대 변화가 tol 미만이면 수렴."""
    rng = make_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((cov.shape[0], k)))
    previous = np.full(k, np.inf)
    for sweep in range(1, SUBSPACE_MAX_SWEEPS + 1):
        q, _ = np.linalg.qr(cov @ q)
        ritz_values, ritz_vectors = np.linalg.eigh(q.T @ cov @ q)
        order = np.argsort(ritz_values)[::-1]
        values = ritz_values[order]
        q = q @ ritz_vectors[:, order]
        change = np.abs(values - previous) / np.maximum(np.abs(values), 1e-300)
        if np.all(change < SUBSPACE_TOLERANCE):
            logger.debug(f"부분공간 반복 수렴: {sweep} sweeps")
            return values, q.T
        previous = values
    logger.warning(f"부분공간 반복이 {SUBSPACE_MAX_SWEEPS} sweeps 안에 수렴하지 않았습니다")
    return values, q.T


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """각 주성분에서 절댓값이 가장 큰 원소를 음수가 아니게 맞춘다."""
    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.where(components[np.arange(len(components)), pivots] < 0, -1.0, 1.0)
    return components * signs[:, None]


def fit_pca(
    samples: Samples,
    k: int,
    sample_size: Optional[int] = None,
    seed: int = 42,
    chunk_rows: int = DEFAULT_CHUNK_ROWS,
) -> PCAModel:
    """
    표본 공분산의 상위 k개 고유벡터로 PCA를 적합합니다.

    Args:
        samples: (n × d) 행렬 또는 벡터 목록. features.bin memmap을 그대로 넘길 수 있습니다.
        k: 주성분 수 (1 ≤ k ≤ min(d, 사용 표본 수))
        sample_size: 지정하면 seed 기반 균등 비복원 추출한 행만 사용
    """
    matrix = _as_matrix(samples)
    n, d = matrix.shape
    rows = np.arange(n)
    if sample_size is not None and sample_size < n:
        rows = np.sort(make_rng(seed).choice(n, size=sample_size, replace=False))

    if len(rows) < 2:
        raise NumericException(
            f"PCA에는 2개 이상의 표본이 필요합니다 (현재 {len(rows)}개)",
            error_code="TOO_FEW_SAMPLES",
        )
    if not 1 <= k <= min(d, len(rows)):
        raise NumericException(
            f"k={k}가 범위를 벗어납니다 (1..{min(d, len(rows))})",
            error_code="K_OUT_OF_RANGE",
            details={"k": k, "d": d, "n": len(rows)},
        )

    mean, cov = sample_covariance(matrix, rows, chunk_rows)
    if not np.all(np.isfinite(cov)):
        raise NumericException("공분산에 NaN/inf가 있습니다")

    if d <= EIGH_MAX_DIM:
        eigenvalues, components = _top_k_eigh(cov, k)
    else:
        eigenvalues, components = _top_k_subspace(cov, k, seed)

    eigenvalues = np.clip(eigenvalues, 0.0, None)
    components = _fix_signs(components)
    explained = float(eigenvalues.sum() / max(np.trace(cov), 1e-300))
    logger.info(f"PCA 적합 완료: n={len(rows)}, d={d}, k={k}, 설명 분산 비율={explained:.4f}")
    return PCAModel(mean, components, eigenvalues)


def pca_project(model: PCAModel, v: np.ndarray) -> np.ndarray:
    return model.pca_project(v)
