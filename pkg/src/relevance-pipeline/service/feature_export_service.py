import logging
from pathlib import Path
from typing import Dict, Sequence

import numpy as np
import pandas as pd

from dto.config_dto import ModelKind
from dto.corpus_dto import LabeledPair, QuestionRecord
from dto.text_dto import EmbeddingTable
from model.PCA import PCAModel
from repository.feature_store_repository import FeatureStore
from service.training_service import ExampleBuilder

CHUNK_PAIRS = 1024


class FeatureExportService:
    """외부 GBM 비교용 특징 CSV: 라벨 + PCA 이미지 특징 + 평균 임베딩 (헤더 없음)"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def export_features(
        self,
        pairs: Sequence[LabeledPair],
        questions: Dict[str, QuestionRecord],
        store: FeatureStore,
        embeddings: EmbeddingTable,
        pca: PCAModel,
        path: Path,
    ) -> int:
        builder = ExampleBuilder(
            ModelKind.LR_PREMISE, questions, store=store, embeddings=embeddings, pca=pca
        )
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        # 실패 시 기존 파일 유지
        partial = path.with_name(path.name + ".partial")
        partial.write_text("", encoding="utf-8")

        written = 0
        try:
            for start in range(0, len(pairs), CHUNK_PAIRS):
                examples = [builder(pair) for pair in pairs[start : start + CHUNK_PAIRS]]
                frame = pd.DataFrame(np.vstack([e.features for e in examples]))
                frame.insert(0, "label", [int(e.label) for e in examples])
                frame.to_csv(partial, mode="a", header=False, index=False)
                written += len(examples)
        except Exception:
            partial.unlink(missing_ok=True)
            raise
        partial.replace(path)

        self.logger.info(
            f"특징 CSV 저장 완료: {path} ({written}행 × {1 + pca.k + embeddings.dim}열)"
        )
        return written


def read_feature_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, header=None)
