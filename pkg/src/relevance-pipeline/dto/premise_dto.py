from dataclasses import dataclass, field
from typing import Dict, Optional, Set

from dto.corpus_dto import PremiseOrder


@dataclass(frozen=True)
class Premise:
    """질문이 함의하는 전제: (object) 또는 (attribute, object)"""

    order: PremiseOrder
    object: str
    attribute: Optional[str] = None

    def __post_init__(self):
        if not self.object:
            raise ValueError("전제의 object는 비어 있을 수 없습니다")
        if self.order == PremiseOrder.FIRST and self.attribute is not None:
            raise ValueError("1차 전제에는 attribute가 없어야 합니다")
        if self.order == PremiseOrder.SECOND and not self.attribute:
            raise ValueError("2차 전제에는 attribute가 필요합니다")

    def describe(self) -> str:
        if self.order == PremiseOrder.FIRST:
            return self.object
        return f"{self.attribute} {self.object}"


@dataclass
class ObjectVocabulary:
    """객체 클래스 lemma 집합 (다단어 가능)과 복수형 예외 사전"""

    lemmas: Set[str] = field(default_factory=set)
    plural_map: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.lemmas = {lemma.strip().lower() for lemma in self.lemmas if lemma.strip()}
        self.plural_map = {k.lower(): v.lower() for k, v in self.plural_map.items()}

    @property
    def max_words(self) -> int:
        return max((len(lemma.split()) for lemma in self.lemmas), default=0)


@dataclass
class AntonymLexicon:
    """속성 → 반의어 집합 (로딩 시 대칭화)"""

    antonyms: Dict[str, Set[str]] = field(default_factory=dict)

    def __post_init__(self):
        symmetric: Dict[str, Set[str]] = {}
        for attribute, opposites in self.antonyms.items():
            for opposite in opposites:
                symmetric.setdefault(attribute, set()).add(opposite)
                symmetric.setdefault(opposite, set()).add(attribute)
        self.antonyms = symmetric

    def of(self, attribute: str) -> Set[str]:
        return self.antonyms.get(attribute, set())
