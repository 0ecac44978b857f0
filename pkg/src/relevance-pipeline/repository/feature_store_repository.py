"""features.bin 입출력.

포맷 (little-endian):
    magic "QRFS" | version u32 | count u32 | dim u32
    count × (u16 iid 길이 + UTF-8 iid)
    count × dim float32 (row-major)
"""

import logging
from contextlib import closing
import struct
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from utils.exceptions import FeatureStoreException, MalformedRecordException
from utils.text_lines import read_utf8_lines

MAGIC = b"QRFS"
VERSION = 1
_HEADER = struct.Struct("<4sIII")
_IID_LENGTH = struct.Struct("<H")

PathLike = Union[str, Path]


class _VectorLine(BaseModel):
    iid: str = Field(..., min_length=1)
    vector: List[float] = Field(..., min_length=1)


class FeatureStore:
    """iid → 이미지 특징 벡터. 열린 뒤에는 읽기 전용이며 여러 스레드에서 동시에 읽어도 된다."""

    def __init__(self, iids: List[str], data: np.ndarray, path: str = "<memory>"):
        if data.ndim != 2 or data.shape[0] != len(iids):
            raise FeatureStoreException(
                f"행 수({data.shape[0] if data.ndim == 2 else '?'})와 iid 수({len(iids)})가 다릅니다",
                error_code="SHAPE_MISMATCH",
            )
        self.path = path
        self.iids = list(iids)
        self.data = data
        self.dim = int(data.shape[1])
        self.index: Dict[str, int] = {}
        for row, iid in enumerate(self.iids):
            if iid in self.index:
                raise FeatureStoreException(
                    f"중복된 iid: {iid} ({path})",
                    error_code="DUPLICATE_IID",
                    details={"iid": iid},
                )
            self.index[iid] = row

    def __len__(self) -> int:
        return len(self.iids)

    def __contains__(self, iid: str) -> bool:
        return iid in self.index

    def row_of(self, iid: str) -> int:
        try:
            return self.index[iid]
        except KeyError:
            raise FeatureStoreException(
                f"특징 저장소에 없는 이미지입니다: {iid}",
                error_code="NOT_FOUND",
                details={"iid": iid, "path": self.path},
            ) from None

    def vector(self, iid: str) -> np.ndarray:
        """float64 사본을 반환"""
        return np.asarray(self.data[self.row_of(iid)], dtype=np.float64)


class FeatureStoreRepository:
    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def write_feature_store(
        self, path: PathLike, iids: Sequence[str], matrix: np.ndarray
    ) -> None:
        matrix = np.asarray(matrix)
        if matrix.ndim != 2 or matrix.shape[0] != len(iids):
            raise FeatureStoreException(
                "행렬 모양이 iid 목록과 맞지 않습니다", error_code="SHAPE_MISMATCH"
            )
        if len(set(iids)) != len(iids):
            raise FeatureStoreException("중복된 iid가 있습니다", error_code="DUPLICATE_IID")

        count, dim = matrix.shape
        with open(path, "wb") as f:
            f.write(_HEADER.pack(MAGIC, VERSION, count, dim))
            for iid in iids:
                encoded = iid.encode("utf-8")
                f.write(_IID_LENGTH.pack(len(encoded)))
                f.write(encoded)
            f.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())
        self.logger.info(f"특징 저장소 저장 완료: {path} ({count}×{dim})")

    def write_rows(self, path: PathLike, rows: Iterable[tuple]) -> None:
        """(iid, vector) 순회 결과를 저장 (pack-features 용)"""
        iids, vectors = [], []
        for iid, vector in rows:
            iids.append(iid)
            vectors.append(np.asarray(vector, dtype=np.float32))
        dims = {v.shape[0] for v in vectors}
        if len(dims) > 1:
            raise FeatureStoreException(
                f"벡터 차원이 일정하지 않습니다: {sorted(dims)}", error_code="SHAPE_MISMATCH"
            )
        matrix = np.vstack(vectors) if vectors else np.zeros((0, 0), dtype=np.float32)
        self.write_feature_store(path, iids, matrix)

    def read_vector_lines(self, path: PathLike) -> Iterator[Tuple[str, np.ndarray]]:
        """JSONL {"iid": str, "vector": [float, ...]} 을 한 줄씩 읽는다."""
        if not Path(path).exists():
            raise FeatureStoreException(
                f"벡터 파일이 존재하지 않습니다: {path}",
                error_code="MISSING_INPUT",
                details={"path": str(path)},
            )
        with closing(read_utf8_lines(path)) as lines:
            for line_number, line in enumerate(lines, start=1):
                if not line.strip():
                    continue
                try:
                    record = _VectorLine.model_validate_json(line)
                except ValidationError as e:
                    raise MalformedRecordException(
                        str(path), line_number, e.errors()[0]["msg"]
                    ) from None
                yield record.iid, np.asarray(record.vector, dtype=np.float32)

    def open_feature_store(self, path: PathLike) -> FeatureStore:
        """
        features.bin을 열어 memory-map으로 접근합니다.

        Raises:
            FeatureStoreException: BAD_MAGIC, BAD_VERSION, TRUNCATED, DUPLICATE_IID
        """
        path = Path(path)
        if not path.exists():
            raise FeatureStoreException(
                f"특징 파일이 존재하지 않습니다: {path}",
                error_code="MISSING_INPUT",
                details={"path": str(path)},
            )
        file_size = path.stat().st_size
        with open(path, "rb") as f:
            header = f.read(_HEADER.size)
            if len(header) < _HEADER.size or header[:4] != MAGIC:
                raise FeatureStoreException(
                    f"features.bin 형식이 아닙니다 (magic 불일치): {path}",
                    error_code="BAD_MAGIC",
                )
            _, version, count, dim = _HEADER.unpack(header)
            if version != VERSION:
                raise FeatureStoreException(
                    f"지원하지 않는 버전: {version} ({path})", error_code="BAD_VERSION"
                )

            iids = []
            for _ in range(count):
                raw_length = f.read(_IID_LENGTH.size)
                if len(raw_length) < _IID_LENGTH.size:
                    raise self._truncated(path)
                (length,) = _IID_LENGTH.unpack(raw_length)
                raw_iid = f.read(length)
                if len(raw_iid) < length:
                    raise self._truncated(path)
                try:
                    iids.append(raw_iid.decode("utf-8"))
                except UnicodeDecodeError:
                    raise FeatureStoreException(
                        f"iid가 UTF-8이 아닙니다: {path} (행 {len(iids)})",
                        error_code="BAD_IID",
                        details={"path": str(path), "row": len(iids)},
                    ) from None
            offset = f.tell()

        expected = offset + count * dim * 4
        if file_size < expected:
            raise self._truncated(path, expected=expected, actual=file_size)
        if file_size > expected:
            self.logger.warning(f"⚠️ features.bin 끝에 여분의 바이트가 있습니다: {path}")

        if count == 0 or dim == 0:
            data = np.zeros((count, dim), dtype="<f4")
        else:
            data = np.memmap(path, dtype="<f4", mode="r", offset=offset, shape=(count, dim))
        store = FeatureStore(iids, data, path=str(path))
        self.logger.info(f"특징 저장소 열기 완료: {path} ({count}×{dim})")
        return store

    @staticmethod
    def _truncated(path: Path, expected: int = None, actual: int = None):
        return FeatureStoreException(
            f"features.bin이 잘려 있습니다: {path}",
            error_code="TRUNCATED",
            details={"expected_bytes": expected, "actual_bytes": actual},
        )
