from enum import Enum
from typing import Dict, Iterable, List, Optional, Set

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Label(str, Enum):
    RELEVANT = "relevant"
    IRRELEVANT = "irrelevant"


class PairOrder(str, Enum):
    FIRST = "first"  # 객체 존재 전제가 거짓
    SECOND = "second"  # 객체-속성 전제가 거짓
    POSITIVE = "positive"  # 참 전제 (VQA 원본 pair)


class PremiseOrder(str, Enum):
    FIRST = "first"
    SECOND = "second"


class QuestionRecord(BaseModel):
    """질문 한 건 (questions.jsonl 한 줄)"""

    qid: str = Field(..., min_length=1, description="질문 고유 ID")
    text: str = Field(..., description="원문 질문")
    tokens: List[str] = Field(..., min_length=1, description="토큰 목록")
    pos_tags: Optional[List[str]] = Field(None, description="토큰별 POS 태그")
    iid: Optional[str] = Field(None, description="질문이 달린 이미지 ID (VQA)")
    visual: Optional[bool] = Field(None, description="시각적 질문 여부 라벨")

    @model_validator(mode="after")
    def validate_tag_length(self):
        if self.pos_tags is not None and len(self.pos_tags) != len(self.tokens):
            raise ValueError(
                f"tokens({len(self.tokens)})와 pos_tags({len(self.pos_tags)}) 길이가 다릅니다"
            )
        return self

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "qid": "q1",
                "text": "is the dog sleeping",
                "tokens": ["is", "the", "dog", "sleeping"],
                "pos_tags": ["VBZ", "DT", "NN", "VBG"],
                "iid": "img1",
            }
        }
    )


class ImageAnnotation(BaseModel):
    """이미지 한 장의 객체 클래스와 scene graph"""

    iid: str = Field(..., min_length=1)
    objects: Set[str] = Field(default_factory=set)
    scene_graph: Dict[str, Set[str]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_scene_graph(self):
        missing = sorted(set(self.scene_graph) - self.objects)
        if missing:
            raise ValueError(f"scene_graph 키가 objects에 없습니다: {missing}")
        return self


class LabeledPair(BaseModel):
    """(질문, 이미지, 라벨) 한 쌍. falsified에는 거짓이 된 전제가 기록된다."""

    qid: str = Field(..., min_length=1)
    iid: str = Field(..., min_length=1)
    label: Label
    order: PairOrder
    falsified: List[str] = Field(default_factory=list)
    premise_orders: List[PremiseOrder] = Field(
        default_factory=list, description="질문이 가진 전제 차수 (통계 귀속용)"
    )

    @model_validator(mode="after")
    def validate_label(self):
        if self.label == Label.IRRELEVANT:
            if not self.falsified:
                raise ValueError("irrelevant pair는 falsified 전제가 필요합니다")
            if self.order == PairOrder.POSITIVE:
                raise ValueError("irrelevant pair의 order는 first/second 여야 합니다")
        else:
            if self.order != PairOrder.POSITIVE or self.falsified:
                raise ValueError("relevant pair는 order=positive, falsified=[] 이어야 합니다")
        return self

    @property
    def key(self):
        return (self.qid, self.iid)


class DatasetStats(BaseModel):
    """데이터셋 통계 (Total / First order / Second order × Total / Relevant / Non-relevant)"""

    total: int = 0
    relevant: int = 0
    non_relevant: int = 0
    first_order_total: int = 0
    first_order_relevant: int = 0
    first_order_non_relevant: int = 0
    second_order_total: int = 0
    second_order_relevant: int = 0
    second_order_non_relevant: int = 0

    @field_validator("*")
    @classmethod
    def validate_non_negative(cls, v):
        if v < 0:
            raise ValueError("통계 값은 음수가 될 수 없습니다")
        return v

    @model_validator(mode="after")
    def validate_totals(self):
        if self.total != self.relevant + self.non_relevant:
            raise ValueError("total != relevant + non_relevant")
        if self.first_order_total != self.first_order_relevant + self.first_order_non_relevant:
            raise ValueError("first_order_total 불일치")
        if self.second_order_total != self.second_order_relevant + self.second_order_non_relevant:
            raise ValueError("second_order_total 불일치")
        return self

    @classmethod
    def from_pairs(cls, pairs: Iterable[LabeledPair]) -> "DatasetStats":
        """
        pair 목록에서 통계를 다시 계산합니다.

        positive pair는 질문이 해당 차수의 전제를 하나 이상 가질 때 그 차수 행에 귀속되므로
        first/second 행의 합이 total과 같다는 보장은 없습니다.
        """
        counts = dict.fromkeys(cls.model_fields, 0)
        for pair in pairs:
            counts["total"] += 1
            if pair.label == Label.RELEVANT:
                counts["relevant"] += 1
                for order in set(pair.premise_orders):
                    counts[f"{order.value}_order_total"] += 1
                    counts[f"{order.value}_order_relevant"] += 1
            else:
                counts["non_relevant"] += 1
                counts[f"{pair.order.value}_order_total"] += 1
                counts[f"{pair.order.value}_order_non_relevant"] += 1
        return cls(**counts)


class DatasetManifest(BaseModel):
    """manifest.jsonl 전체 (헤더의 stats + pair 목록)"""

    pairs: List[LabeledPair] = Field(default_factory=list)
    stats: DatasetStats = Field(default_factory=DatasetStats)

    @classmethod
    def from_pairs(cls, pairs: List[LabeledPair]) -> "DatasetManifest":
        return cls(pairs=pairs, stats=DatasetStats.from_pairs(pairs))

    def duplicate_keys(self) -> List[tuple]:
        seen = set()
        duplicates = []
        for pair in self.pairs:
            if pair.key in seen:
                duplicates.append(pair.key)
            seen.add(pair.key)
        return duplicates
