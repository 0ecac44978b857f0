import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from dto.corpus_dto import QuestionRecord
from dto.text_dto import EmbeddingTable
from service.pos_feature_service import average_embedding
from utils.exceptions import DataException

logger = logging.getLogger(__name__)

KEYWORD_TAG_PREFIXES = ("NN", "VB", "JJ")
KEYWORD_UNIVERSAL_TAGS = {"NOUN", "PROPN", "VERB", "ADJ"}


def is_keyword_tag(tag: str) -> bool:
    tag = tag.upper()
    return tag.startswith(KEYWORD_TAG_PREFIXES) or tag in KEYWORD_UNIVERSAL_TAGS


def keyword_tokens(question: QuestionRecord) -> List[str]:
    """명사/동사/형용사 태그 토큰"""
    if question.pos_tags is None:
        raise DataException(
            f"질문 유사도 계산에는 POS 태그가 필요합니다: {question.qid}",
            error_code="MISSING_POS_TAGS",
        )
    return [t.lower() for t, tag in zip(question.tokens, question.pos_tags) if is_keyword_tag(tag)]


def _unit_keyword_vector(question: QuestionRecord, embeddings: EmbeddingTable) -> Optional[np.ndarray]:
    vector = average_embedding(keyword_tokens(question), embeddings)
    norm = np.linalg.norm(vector)
    return None if norm == 0 else vector / norm


def mine_dissimilar_questions(
    iid: str,
    question_pool: Sequence[QuestionRecord],
    embeddings: EmbeddingTable,
    k: int,
    image_questions: Optional[Sequence[QuestionRecord]] = None,
) -> List[Tuple[str, float]]:
    """
    이미지에 달린 질문들과 가장 덜 비슷한 pool 질문 k개를 (qid, 최대 유사도) 오름차순으로 반환합니다.

    키워드가 없거나 전부 OOV인 질문은 유사도 0으로 취급합니다. 동점은 qid 순.
    """
    if not question_pool:
        raise DataException("질문 pool이 비어 있습니다", error_code="EMPTY_POOL")
    if image_questions is None:
        image_questions = [q for q in question_pool if q.iid == iid]
    own_qids = {q.qid for q in image_questions}
    if not image_questions:
        logger.warning(f"⚠️ 이미지 {iid}에 달린 질문이 없어 모든 유사도가 0입니다")

    references = [_unit_keyword_vector(q, embeddings) for q in image_questions]
    references = [v for v in references if v is not None]
    reference_matrix = np.vstack(references) if references else np.zeros((0, embeddings.dim))

    scored = []
    for question in question_pool:
        if question.qid in own_qids:
            continue
        vector = _unit_keyword_vector(question, embeddings)
        if vector is None or len(reference_matrix) == 0:
            similarity = 0.0
        else:
            similarity = float(np.clip(np.max(reference_matrix @ vector), -1.0, 1.0))
        scored.append((question.qid, similarity))

    scored.sort(key=lambda item: (item[1], item[0]))
    return scored[:k]
