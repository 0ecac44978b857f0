import logging
from typing import Iterable, List, Sequence

import numpy as np

from dto.corpus_dto import QuestionRecord
from dto.text_dto import EmbeddingTable, SparseFeatures, TagLexicon
from utils.exceptions import DataException

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK_64 = 0xFFFFFFFFFFFFFFFF

NGRAM_SEPARATOR = "_"
DEFAULT_HASH_DIM = 2**18


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK_64
    return h


def hash_index(feature_name: str, dim: int) -> int:
    """FNV-1a-64(UTF-8) mod dim. 실행/플랫폼과 무관하게 고정."""
    if dim <= 0:
        raise ValueError("dim은 양수여야 합니다")
    return fnv1a_64(feature_name.encode("utf-8")) % dim


def lexicon_tag(tokens: Sequence[str], lexicon: TagLexicon) -> List[str]:
    return [lexicon.tags.get(token.lower(), lexicon.default_tag) for token in tokens]


def pos_ngrams(tags: Sequence[str], n_max: int = 2, dim: int = DEFAULT_HASH_DIM) -> SparseFeatures:
    """
    1..n_max 길이의 연속 태그 n-gram을 "t1_t2" 형태 이름으로 해싱해 카운트합니다.
    경계 패딩은 없으며 total mass = Σₙ max(0, L−n+1).
    """
    if not tags:
        raise DataException("POS 태그 시퀀스가 비어 있습니다", error_code="EMPTY_SEQUENCE")
    if not 1 <= n_max <= 3:
        raise DataException(f"n_max는 1..3 범위여야 합니다: {n_max}", error_code="INVALID_NGRAM")

    features = SparseFeatures(dim=dim)
    for n in range(1, n_max + 1):
        for start in range(len(tags) - n + 1):
            name = NGRAM_SEPARATOR.join(tags[start : start + n])
            features.add(hash_index(name, dim))
    return features


def average_embedding(tokens: Iterable[str], table: EmbeddingTable) -> np.ndarray:
    """사전에 있는 토큰 벡터의 평균. OOV는 건너뛰고 전부 OOV면 0 벡터."""
    known = [table.get(token) for token in tokens]
    known = [vector for vector in known if vector is not None]
    if not known:
        return np.zeros(table.dim)
    return np.mean(np.stack(known), axis=0)


class PosFeatureService:
    """질문 → 태그/해시 특징/평균 임베딩 변환"""

    def __init__(self, lexicon: TagLexicon = None, n_max: int = 2, dim: int = DEFAULT_HASH_DIM):
        self.logger = logging.getLogger(__name__)
        self.lexicon = lexicon or TagLexicon()
        self.n_max = n_max
        self.dim = dim

    def tags_for(self, question: QuestionRecord) -> List[str]:
        """데이터에 있는 태그를 우선 사용하고 없으면 사전 태거로 대체"""
        if question.pos_tags:
            return list(question.pos_tags)
        return lexicon_tag(question.tokens, self.lexicon)

    def tag_questions(self, questions: Iterable[QuestionRecord]) -> Iterable[QuestionRecord]:
        tagged = 0
        for question in questions:
            if question.pos_tags is None:
                question = question.model_copy(
                    update={"pos_tags": lexicon_tag(question.tokens, self.lexicon)}
                )
                tagged += 1
            yield question
        self.logger.info(f"사전 기반 태깅 완료: {tagged}개 질문")

    def featurize(self, question: QuestionRecord, n_max: int = None) -> SparseFeatures:
        return pos_ngrams(self.tags_for(question), n_max or self.n_max, self.dim)

    def named_ngrams(self, question: QuestionRecord, n_max: int = None) -> List[str]:
        """해싱 전 n-gram 이름 목록 (featurize 결과 확인용)"""
        tags = self.tags_for(question)
        names = []
        for n in range(1, (n_max or self.n_max) + 1):
            for start in range(len(tags) - n + 1):
                names.append(NGRAM_SEPARATOR.join(tags[start : start + n]))
        return names
