from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from utils.exceptions import ConfigException, DataException


class MiningOrder(str, Enum):
    FIRST = "first"
    SECOND = "second"
    BOTH = "both"


class FalsificationMode(str, Enum):
    EXACTLY_ONE = "exactly-one"  # 전제 하나만 거짓
    AT_LEAST_ONE = "at-least-one"  # 하나 이상 거짓


class ModelKind(str, Enum):
    LR_VISUAL = "lr-visual"
    LSTM_VISUAL = "lstm-visual"
    LR_PREMISE = "lr-premise"
    MLP = "mlp"
    RELNET1 = "relnet1"
    RELNET2 = "relnet2"
    RELNET3 = "relnet3"
    RELNET4 = "relnet4"

    @property
    def is_visual_task(self) -> bool:
        return self in (ModelKind.LR_VISUAL, ModelKind.LSTM_VISUAL)

    @property
    def relnet_variant(self) -> Optional[int]:
        if self.value.startswith("relnet"):
            return int(self.value[-1])
        return None


class Step1Mode(str, Enum):
    PAD = "pad"
    PROJECT = "project"


class MinerConfig(BaseModel):
    """부정 이미지 마이닝 설정"""

    model_config = ConfigDict(extra="forbid")

    k_similar: int = Field(10, ge=1, description="후보로 볼 유사 이미지 수")
    order: MiningOrder = Field(MiningOrder.BOTH)
    falsification_mode: FalsificationMode = Field(FalsificationMode.AT_LEAST_ONE)
    seed: int = Field(42, ge=0, lt=2**64)
    max_negatives_per_question: int = Field(10, ge=0)

    @model_validator(mode="after")
    def validate_cap(self):
        if self.max_negatives_per_question > self.k_similar:
            raise ValueError("max_negatives_per_question는 k_similar 이하여야 합니다")
        return self


class TrainConfig(BaseModel):
    """학습 설정"""

    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(0.05, gt=0)
    epochs: int = Field(20, ge=0)
    batch_size: int = Field(32, ge=1)
    l2: float = Field(0.0, ge=0)
    seed: int = Field(42, ge=0, lt=2**64)
    threshold: float = Field(0.5, gt=0, lt=1)
    momentum: float = Field(0.0, ge=0, lt=1)
    shuffle: bool = Field(True, description="epoch마다 seed 기반으로 배치 순서를 섞을지")
    prefetch: int = Field(2, ge=0, description="배치 prefetch 큐 크기 (0이면 비활성)")


class ModelDims(BaseModel):
    """모델 차원 설정"""

    model_config = ConfigDict(extra="forbid")

    embedding_dim: int = Field(300, ge=1)
    hidden_dim: int = Field(256, ge=1)
    image_embed_dim: int = Field(300, ge=1)
    pos_embedding_dim: int = Field(50, ge=1)
    pos_hidden_dim: int = Field(100, ge=1)
    mlp_hidden: List[int] = Field(default_factory=lambda: [5000, 500])
    hash_dim: int = Field(2**18, ge=1)
    ngram_max: int = Field(2, ge=1, le=3)
    step1_mode: Step1Mode = Field(Step1Mode.PAD)


class CorpusPaths(BaseModel):
    """입력 파일 경로"""

    model_config = ConfigDict(extra="forbid")

    questions: Optional[Path] = None
    annotations: Optional[Path] = None
    features: Optional[Path] = None
    embeddings: Optional[Path] = None
    vocab: Optional[Path] = None
    plurals: Optional[Path] = None
    antonyms: Optional[Path] = None
    lexicon: Optional[Path] = None
    manifest: Optional[Path] = None
    pca: Optional[Path] = None
    model: Optional[Path] = None


class RunConfig(BaseModel):
    """CLI 실행 설정 (JSON 설정 파일 + 플래그 덮어쓰기)"""

    paths: CorpusPaths = Field(default_factory=CorpusPaths)
    miner: MinerConfig = Field(default_factory=MinerConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    dims: ModelDims = Field(default_factory=ModelDims)
    model_kind: Optional[ModelKind] = None
    output_dir: Optional[Path] = None
    workers: Optional[int] = Field(None, ge=1)
    seed: int = Field(42, ge=0, lt=2**64)

    model_config = ConfigDict(extra="forbid")

    def require_paths(self, *names: str) -> Dict[str, Path]:
        """필요한 경로가 설정되어 있고 존재하는지 확인합니다."""
        resolved = {}
        for name in names:
            path = getattr(self.paths, name)
            if path is None:
                raise ConfigException(
                    f"필수 입력 경로가 설정되지 않았습니다: {name}",
                    error_code="MISSING_PATH",
                    details={"name": name},
                )
            if not Path(path).exists():
                raise DataException(
                    f"입력 파일이 존재하지 않습니다: {path}",
                    error_code="MISSING_INPUT",
                    details={"name": name, "path": str(path)},
                )
            resolved[name] = Path(path)
        return resolved
