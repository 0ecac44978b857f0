import json
import logging
from contextlib import closing
from pathlib import Path
from typing import Union

from pydantic import BaseModel, ValidationError

from dto.corpus_dto import DatasetManifest, DatasetStats, LabeledPair
from utils.exceptions import DataException, MalformedRecordException, ManifestCorruptionException
from utils.text_lines import read_utf8_lines

PathLike = Union[str, Path]


class _ManifestHeader(BaseModel):
    stats: DatasetStats


class ManifestRepository:
    """manifest.jsonl: 첫 줄은 {"stats": ...} 헤더, 이후 한 줄에 LabeledPair 하나"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def write_manifest(self, manifest: DatasetManifest, path: PathLike) -> None:
        duplicates = manifest.duplicate_keys()
        if duplicates:
            raise DataException(
                f"중복된 (qid, iid) pair가 있습니다: {duplicates[:5]}",
                error_code="DUPLICATE_PAIR",
                details={"duplicates": [list(key) for key in duplicates]},
            )
        recomputed = DatasetStats.from_pairs(manifest.pairs)
        if recomputed != manifest.stats:
            raise ManifestCorruptionException(
                "매니페스트 통계가 pair 목록과 일치하지 않습니다",
                details={"stored": manifest.stats.model_dump(), "recomputed": recomputed.model_dump()},
            )

        with open(path, "w", encoding="utf-8") as f:
            f.write(_ManifestHeader(stats=manifest.stats).model_dump_json() + "\n")
            for pair in manifest.pairs:
                f.write(pair.model_dump_json() + "\n")
        self.logger.info(f"매니페스트 저장 완료: {path} (pair {len(manifest.pairs)}개)")

    def read_manifest(self, path: PathLike) -> DatasetManifest:
        """
        매니페스트를 읽고 통계를 다시 계산해 검증합니다.

        Raises:
            MalformedRecordException: 헤더/pair 줄 파싱 실패
            ManifestCorruptionException: 저장된 통계와 재계산 통계가 다를 때
        """
        path = Path(path)
        if not path.exists():
            raise DataException(
                f"매니페스트 파일이 존재하지 않습니다: {path}",
                error_code="MISSING_INPUT",
                details={"path": str(path)},
            )

        header = None
        pairs = []
        with closing(read_utf8_lines(path)) as lines:
            for line_number, line in enumerate(lines, start=1):
                if not line.strip():
                    continue
                try:
                    if header is None:
                        header = _ManifestHeader.model_validate_json(line)
                    else:
                        pairs.append(LabeledPair.model_validate_json(line))
                except ValidationError as e:
                    if header is None:
                        raise ManifestCorruptionException(
                            f"매니페스트 통계 헤더가 손상되었습니다: {path}",
                            details={"line_number": line_number, "reason": e.errors()[0]["msg"]},
                        ) from e
                    raise MalformedRecordException(
                        str(path), line_number, e.errors()[0]["msg"]
                    ) from e

        if header is None:
            raise ManifestCorruptionException(f"매니페스트 헤더가 없습니다: {path}")

        manifest = DatasetManifest(pairs=pairs, stats=header.stats)
        recomputed = DatasetStats.from_pairs(pairs)
        if recomputed != header.stats:
            raise ManifestCorruptionException(
                f"매니페스트 통계가 손상되었습니다: {path}",
                details={
                    "stored": header.stats.model_dump(),
                    "recomputed": recomputed.model_dump(),
                },
            )
        if manifest.duplicate_keys():
            raise ManifestCorruptionException(f"매니페스트에 중복 pair가 있습니다: {path}")

        self.logger.info(f"매니페스트 읽기 완료: {path} (pair {len(pairs)}개)")
        return manifest

    def write_json(self, payload: dict, path: PathLike) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
