from typing import Optional

from pydantic import BaseModel, Field


class ConfusionMatrix(BaseModel):
    """이진 혼동 행렬 (positive = relevant / visual)"""

    tp: int = Field(0, ge=0)
    fp: int = Field(0, ge=0)
    tn: int = Field(0, ge=0)
    fn: int = Field(0, ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            tn=self.tn + other.tn,
            fn=self.fn + other.fn,
        )


class ClassMetrics(BaseModel):
    """클래스별 정밀도/재현율. 0/0은 None(부재)으로 표현"""

    precision_pos: Optional[float] = None
    recall_pos: Optional[float] = None
    precision_neg: Optional[float] = None
    recall_neg: Optional[float] = None
    normalized_accuracy: Optional[float] = None


class EvaluationResult(BaseModel):
    """리포트 한 행: (모델, 데이터셋) 조합의 평가 결과"""

    model_name: str
    dataset_name: str
    confusion: ConfusionMatrix
    metrics: ClassMetrics
    accuracy: Optional[float] = None
