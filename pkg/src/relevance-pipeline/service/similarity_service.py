import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Tuple

import numpy as np

from model.Classifier import check_dim
from repository.feature_store_repository import FeatureStore
from utils.exceptions import NumericException

# 행 블록 크기는 워커 수와 무관하게 고정 (점수 계산 경로가 같아야 결과가 같다)
BLOCK_ROWS = 8192

Ranked = List[Tuple[str, float]]


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    check_dim("cosine 입력", u.shape[0], v.shape[0])
    norm_u, norm_v = np.linalg.norm(u), np.linalg.norm(v)
    if norm_u == 0 or norm_v == 0:
        raise NumericException("cosine 입력의 norm이 0입니다", error_code="ZERO_NORM")
    return float(np.clip(u @ v / (norm_u * norm_v), -1.0, 1.0))


def _rank(candidates: Ranked, k: int) -> Ranked:
    return sorted(candidates, key=lambda item: (-item[1], item[0]))[:k]


class SimilarityService:
    """FeatureStore 위의 정확한 top-k 코사인 검색"""

    def __init__(self, store: FeatureStore, workers: int = 1):
        self.logger = logging.getLogger(__name__)
        self.store = store
        self.workers = max(1, workers)
        self._cache: Dict[Tuple[str, int], Ranked] = {}
        self._lock = threading.Lock()

    def _score_block(self, start: int, query: np.ndarray, query_row: int, k: int) -> Ranked:
        block = np.asarray(self.store.data[start : start + BLOCK_ROWS], dtype=np.float64)
        norms = np.linalg.norm(block, axis=1)
        dots = block @ query

        valid = norms > 0
        rows = np.arange(start, start + len(block))
        valid &= rows != query_row
        zero_rows = int(np.count_nonzero(norms == 0))
        if zero_rows:
            self.logger.warning(f"⚠️ norm이 0인 이미지 {zero_rows}개를 건너뜁니다 (행 {start}~)")

        scores = np.clip(dots[valid] / (norms[valid] * np.linalg.norm(query)), -1.0, 1.0)
        rows = rows[valid]
        if len(scores) > k:
            # k번째 점수와 동점인 행은 모두 남겨서 iid 순 tie-break를 병합 단계에서 처리
            threshold = np.partition(scores, len(scores) - k)[len(scores) - k]
            keep = scores >= threshold
            scores, rows = scores[keep], rows[keep]
        return [(self.store.iids[row], float(score)) for row, score in zip(rows, scores)]

    def top_k_similar(self, query_iid: str, k: int) -> Ranked:
        """
        query를 제외한 코사인 상위 k개 (iid, score). 점수 내림차순, 동점은 iid 오름차순.

        Raises:
            FeatureStoreException: query_iid가 저장소에 없을 때
            NumericException: k < 1 이거나 query 벡터의 norm이 0일 때
        """
        if k < 1:
            raise NumericException(f"k는 1 이상이어야 합니다: {k}", error_code="K_OUT_OF_RANGE")
        key = (query_iid, k)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return list(cached)

        query_row = self.store.row_of(query_iid)
        query = self.store.vector(query_iid)
        if np.linalg.norm(query) == 0:
            raise NumericException(
                f"query 이미지 벡터의 norm이 0입니다: {query_iid}", error_code="ZERO_NORM"
            )

        starts = range(0, len(self.store), BLOCK_ROWS)
        if self.workers > 1 and len(starts) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                parts = list(
                    executor.map(lambda s: self._score_block(s, query, query_row, k), starts)
                )
        else:
            parts = [self._score_block(s, query, query_row, k) for s in starts]

        ranked = _rank([item for part in parts for item in part], k)
        with self._lock:
            self._cache[key] = ranked
        return list(ranked)


def top_k_similar(query_iid: str, store: FeatureStore, k: int, workers: int = 1) -> Ranked:
    return SimilarityService(store, workers).top_k_similar(query_iid, k)
