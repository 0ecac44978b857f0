"""모델 직렬화 (PCA 포함).

포맷 (little-endian, features.bin 스타일):
    magic "QRMD" | version u32 | header 길이 u32 | header JSON (UTF-8)
    header["tensors"] 순서대로 float64 텐서 데이터
header = {"kind": str, "meta": {...}, "tensors": [{"name": str, "shape": [...]}, ...]}
"""

import json
import logging
import struct
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from utils.exceptions import DataException

MAGIC = b"QRMD"
VERSION = 1
_PREFIX = struct.Struct("<4sII")

PathLike = Union[str, Path]


def _registry() -> Dict[str, type]:
    # 순환 import 방지를 위해 지연 import
    from model.LogisticRegression import LRModel
    from model.MLP import MLPModel
    from model.PCA import PCAModel
    from model.PosLSTM import PosLstmModel
    from model.RelNet import RelNetModel

    return {
        LRModel.KIND: LRModel,
        MLPModel.KIND: MLPModel,
        PCAModel.KIND: PCAModel,
        PosLstmModel.KIND: PosLstmModel,
        RelNetModel.KIND: RelNetModel,
    }


class ModelRepository:
    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def write_archive(
        self, path: PathLike, kind: str, meta: dict, tensors: Dict[str, np.ndarray]
    ) -> None:
        header = {
            "kind": kind,
            "meta": meta,
            "tensors": [
                {"name": name, "shape": list(np.shape(tensor))} for name, tensor in tensors.items()
            ],
        }
        encoded = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
        with open(path, "wb") as f:
            f.write(_PREFIX.pack(MAGIC, VERSION, len(encoded)))
            f.write(encoded)
            for tensor in tensors.values():
                f.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())

    def read_archive(self, path: PathLike) -> Tuple[str, dict, Dict[str, np.ndarray]]:
        path = Path(path)
        if not path.exists():
            raise DataException(
                f"모델 파일이 존재하지 않습니다: {path}",
                error_code="MISSING_INPUT",
                details={"path": str(path)},
            )
        raw = path.read_bytes()
        if len(raw) < _PREFIX.size or raw[:4] != MAGIC:
            raise DataException(f"모델 파일 형식이 아닙니다: {path}", error_code="BAD_MAGIC")
        _, version, header_length = _PREFIX.unpack_from(raw)
        if version != VERSION:
            raise DataException(f"지원하지 않는 모델 파일 버전: {version}", error_code="BAD_VERSION")
        offset = _PREFIX.size
        header = json.loads(raw[offset : offset + header_length].decode("utf-8"))
        offset += header_length

        tensors: Dict[str, np.ndarray] = {}
        for spec in header["tensors"]:
            shape = tuple(spec["shape"])
            size = int(np.prod(shape)) if shape else 1
            end = offset + size * 8
            if end > len(raw):
                raise DataException(f"모델 파일이 잘려 있습니다: {path}", error_code="TRUNCATED")
            tensors[spec["name"]] = (
                np.frombuffer(raw[offset:end], dtype="<f8").astype(np.float64).reshape(shape)
            )
            offset = end
        return header["kind"], header["meta"], tensors

    def save_model(self, model, path: PathLike) -> None:
        """모델의 to_archive() 결과를 저장"""
        meta, tensors = model.to_archive()
        self.write_archive(path, model.KIND, meta, tensors)
        self.logger.info(f"모델 저장 완료: {path} ({model.KIND})")

    def load_model(self, path: PathLike):
        kind, meta, tensors = self.read_archive(path)
        registry = _registry()
        if kind not in registry:
            raise DataException(f"알 수 없는 모델 종류: {kind}", error_code="UNKNOWN_MODEL_KIND")
        model = registry[kind].from_archive(meta, tensors)
        self.logger.info(f"모델 로드 완료: {path} ({kind})")
        return model
