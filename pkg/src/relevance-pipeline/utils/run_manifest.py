import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, Optional

from dto.config_dto import RunConfig

logger = logging.getLogger(__name__)

RUN_MANIFEST_NAME = "run_manifest.json"
_READ_BLOCK = 1 << 20


def sha256_of(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(_READ_BLOCK), b""):
            digest.update(block)
    return digest.hexdigest()


def input_digests(config: RunConfig, extra: Optional[Dict[str, Path]] = None) -> Dict[str, str]:
    """설정된 입력 경로 중 실제로 존재하는 파일의 sha256"""
    paths = {name: path for name, path in config.paths.model_dump().items() if path is not None}
    paths.update(extra or {})
    return {
        name: sha256_of(Path(path))
        for name, path in sorted(paths.items())
        if Path(path).is_file()
    }


def write_run_manifest(
    output_dir: Path,
    command: str,
    config: RunConfig,
    extra_inputs: Optional[Dict[str, Path]] = None,
) -> Path:
    """
    실행 기록(run_manifest.json): 명령, 기본값까지 풀어 쓴 설정, seed, 입력 digest.
    시각 정보는 넣지 않는다 (같은 입력이면 같은 바이트).
    """
    output_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "command": command,
        "seed": config.seed,
        "config": config.model_dump(mode="json"),
        "inputs": input_digests(config, extra_inputs),
    }
    path = output_dir / RUN_MANIFEST_NAME
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    logger.info(f"실행 매니페스트 저장: {path}")
    return path
