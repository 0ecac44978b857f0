import logging
from typing import List, Optional, Sequence, Tuple

from dto.corpus_dto import ImageAnnotation, PremiseOrder, QuestionRecord
from dto.premise_dto import AntonymLexicon, ObjectVocabulary, Premise
from utils.exceptions import DataException

logger = logging.getLogger(__name__)

ADJECTIVE_TAGS = {"JJ", "JJR", "JJS", "ADJ"}

# (시작 토큰, 끝 토큰(배타), 매칭된 lemma)
Span = Tuple[int, int, str]


def _singular_candidates(word: str, vocab: ObjectVocabulary) -> List[str]:
    candidates = []
    if word in vocab.plural_map:
        candidates.append(vocab.plural_map[word])
    if word.endswith("es") and len(word) > 2:
        candidates.append(word[:-2])
    if word.endswith("s") and len(word) > 1:
        candidates.append(word[:-1])
    return candidates


def _lemma_for(words: Sequence[str], vocab: ObjectVocabulary) -> Optional[str]:
    phrase = " ".join(words)
    if phrase in vocab.lemmas:
        return phrase
    head = " ".join(words[:-1])
    for singular in _singular_candidates(words[-1], vocab):
        candidate = f"{head} {singular}" if head else singular
        if candidate in vocab.lemmas:
            return candidate
    return None


def match_objects(tokens: Sequence[str], vocab: ObjectVocabulary) -> List[Span]:
    """왼쪽부터 가장 긴 다단어 매칭을 우선하며 한 번 쓴 토큰은 다시 쓰지 않는다."""
    words = [token.lower() for token in tokens]
    spans: List[Span] = []
    position = 0
    while position < len(words):
        longest = min(vocab.max_words, len(words) - position)
        for width in range(longest, 0, -1):
            lemma = _lemma_for(words[position : position + width], vocab)
            if lemma is not None:
                spans.append((position, position + width, lemma))
                position += width
                break
        else:
            position += 1
    return spans


def extract_first_order(question: QuestionRecord, vocab: ObjectVocabulary) -> List[Premise]:
    premises: List[Premise] = []
    for _, _, lemma in match_objects(question.tokens, vocab):
        premise = Premise(PremiseOrder.FIRST, lemma)
        if premise not in premises:
            premises.append(premise)
    return premises


def extract_second_order(question: QuestionRecord, vocab: ObjectVocabulary) -> List[Premise]:
    """매칭된 객체 바로 앞 토큰이 형용사 태그면 (형용사, 객체) 전제를 만든다."""
    if question.pos_tags is None:
        raise DataException(
            f"2차 전제 추출에는 POS 태그가 필요합니다: {question.qid}",
            error_code="MISSING_POS_TAGS",
            details={"qid": question.qid},
        )
    premises: List[Premise] = []
    for start, _, lemma in match_objects(question.tokens, vocab):
        if start == 0 or question.pos_tags[start - 1].upper() not in ADJECTIVE_TAGS:
            continue
        premise = Premise(PremiseOrder.SECOND, lemma, question.tokens[start - 1].lower())
        if premise not in premises:
            premises.append(premise)
    return premises


def falsified_first_order(premises: Sequence[Premise], annotation: ImageAnnotation) -> List[Premise]:
    return [premise for premise in premises if premise.object not in annotation.objects]


def falsified_second_order(
    premise: Premise, annotation: ImageAnnotation, antonyms: AntonymLexicon
) -> bool:
    """객체가 이미지에 있고(1차 전제 참) 그 속성 중 하나가 질문 속성의 반의어일 때만 거짓"""
    if premise.object not in annotation.objects:
        return False
    attributes = annotation.scene_graph.get(premise.object, set())
    return not antonyms.of(premise.attribute).isdisjoint(attributes)
