import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import pandas as pd

from dto.evaluation_dto import ClassMetrics, ConfusionMatrix, EvaluationResult
from utils.exceptions import DataException

ABSENT = "—"
METRIC_COLUMNS = [
    "precision_pos",
    "recall_pos",
    "precision_neg",
    "recall_neg",
    "normalized_accuracy",
    "accuracy",
]


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return None if denominator == 0 else numerator / denominator


def confusion(scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5) -> ConfusionMatrix:
    """score ≥ threshold 이면 positive로 예측"""
    if len(scores) != len(labels):
        raise DataException(
            f"점수({len(scores)})와 라벨({len(labels)}) 개수가 다릅니다",
            error_code="LENGTH_MISMATCH",
        )
    counts = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    for score, label in zip(scores, labels):
        if label not in (0, 1):
            raise DataException(f"라벨은 0/1 이어야 합니다: {label}", error_code="NON_BINARY_LABEL")
        predicted = score >= threshold
        if predicted and label == 1:
            counts["tp"] += 1
        elif predicted:
            counts["fp"] += 1
        elif label == 1:
            counts["fn"] += 1
        else:
            counts["tn"] += 1
    return ConfusionMatrix(**counts)


def per_class_metrics(cm: ConfusionMatrix) -> ClassMetrics:
    recall_pos = _ratio(cm.tp, cm.tp + cm.fn)
    recall_neg = _ratio(cm.tn, cm.tn + cm.fp)
    normalized = None
    if recall_pos is not None and recall_neg is not None:
        normalized = (recall_pos + recall_neg) / 2
    return ClassMetrics(
        precision_pos=_ratio(cm.tp, cm.tp + cm.fp),
        recall_pos=recall_pos,
        precision_neg=_ratio(cm.tn, cm.tn + cm.fn),
        recall_neg=recall_neg,
        normalized_accuracy=normalized,
    )


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise DataException("평가할 pair가 없습니다", error_code="EMPTY_EVALUATION")
    return (cm.tp + cm.tn) / cm.total


def evaluate_scores(
    model_name: str,
    dataset_name: str,
    scores: Sequence[float],
    labels: Sequence[int],
    threshold: float = 0.5,
) -> EvaluationResult:
    cm = confusion(scores, labels, threshold)
    return EvaluationResult(
        model_name=model_name,
        dataset_name=dataset_name,
        confusion=cm,
        metrics=per_class_metrics(cm),
        accuracy=accuracy(cm) if cm.total else None,
    )


def _format(value: Optional[float]) -> str:
    return ABSENT if value is None else f"{value:.4f}"


def report_frame(results: Iterable[EvaluationResult]) -> pd.DataFrame:
    rows = []
    for result in sorted(results, key=lambda r: (r.model_name, r.dataset_name)):
        values = {**result.metrics.model_dump(), "accuracy": result.accuracy}
        rows.append(
            {
                "model": result.model_name,
                "dataset": result.dataset_name,
                **{column: _format(values[column]) for column in METRIC_COLUMNS},
            }
        )
    return pd.DataFrame(rows, columns=["model", "dataset", *METRIC_COLUMNS])


def report(results: Sequence[EvaluationResult]) -> str:
    """모델 이름(다음은 데이터셋 이름) 순으로 정렬한 고정폭 표. 소수 4자리, 0/0은 '—'."""
    if not results:
        raise DataException("리포트할 결과가 없습니다", error_code="EMPTY_REPORT")
    return report_frame(results).to_string(index=False) + "\n"


class EvaluationService:
    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def write_report(self, results: List[EvaluationResult], output_dir: Path) -> str:
        """report.txt 와 report.json 을 함께 저장하고 표 문자열을 반환"""
        text = report(results)
        output_dir.mkdir(parents=True, exist_ok=True)
        (output_dir / "report.txt").write_text(text, encoding="utf-8")
        payload = [
            r.model_dump(mode="json")
            for r in sorted(results, key=lambda r: (r.model_name, r.dataset_name))
        ]
        (output_dir / "report.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        self.logger.info(f"📊 평가 리포트 저장 완료: {output_dir} (행 {len(results)}개)")
        return text
