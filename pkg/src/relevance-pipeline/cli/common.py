"""CLI 공통: 옵션 타입, 설정 병합, 예외 → 종료 코드 변환."""

import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated, Any, Dict, List, Optional

import typer
from pydantic import ValidationError
from rich.console import Console

from dto.config_dto import RunConfig
from utils.app_initializer import get_output_dir, initialize_app
from utils.exceptions import ConfigException, PipelineException

logger = logging.getLogger(__name__)

console = Console(soft_wrap=True)
error_console = Console(stderr=True, soft_wrap=True)

ConfigOpt = Annotated[Optional[Path], typer.Option("--config", help="JSON 설정 파일 (플래그가 우선)")]
OutputDirOpt = Annotated[Optional[Path], typer.Option("--output-dir", help="산출물 디렉터리 (기본: $QREL_OUTPUT_DIR 또는 output)")]
WorkersOpt = Annotated[Optional[int], typer.Option("--workers", min=1, help="워커 수 (기본: $QREL_WORKERS 또는 CPU 수)")]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", min=0, help="난수 seed (기본 42)")]
LogLevelOpt = Annotated[Optional[str], typer.Option("--log-level", help="로그 레벨 (기본: $QREL_LOG_LEVEL 또는 INFO)")]

QuestionsOpt = Annotated[Optional[Path], typer.Option("--questions", help="questions.jsonl")]
AnnotationsOpt = Annotated[Optional[Path], typer.Option("--annotations", help="annotations.jsonl")]
FeaturesOpt = Annotated[Optional[Path], typer.Option("--features", help="features.bin")]
EmbeddingsOpt = Annotated[Optional[Path], typer.Option("--embeddings", help="단어 임베딩 텍스트 파일")]
VocabOpt = Annotated[Optional[Path], typer.Option("--vocab", help="객체 클래스 목록 (한 줄에 하나)")]
PluralsOpt = Annotated[Optional[Path], typer.Option("--plurals", help="복수형 예외 TSV (plural<TAB>singular)")]
AntonymsOpt = Annotated[Optional[Path], typer.Option("--antonyms", help="반의어 TSV")]
LexiconOpt = Annotated[Optional[Path], typer.Option("--lexicon", help="token<TAB>tag 사전")]
ManifestOpt = Annotated[Optional[Path], typer.Option("--manifest", help="manifest.jsonl")]
PcaOpt = Annotated[Optional[Path], typer.Option("--pca", help="pca.bin")]


def _drop_none(values: Dict[str, Any]) -> Dict[str, Any]:
    return {key: value for key, value in values.items() if value is not None}


def _merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_run_config(
    config_file: Optional[Path] = None,
    *,
    paths: Optional[Dict[str, Any]] = None,
    miner: Optional[Dict[str, Any]] = None,
    train: Optional[Dict[str, Any]] = None,
    dims: Optional[Dict[str, Any]] = None,
    **top_level: Any,
) -> RunConfig:
    """
    JSON 설정 파일을 읽고 None이 아닌 플래그 값으로 덮어쓴 RunConfig를 만듭니다.
    --seed는 마이닝/학습 seed에도 함께 적용되고, 설정 파일의 최상위 seed는
    seed가 없는 섹션에만 적용됩니다.

    Raises:
        ConfigException: 설정 파일이 없거나 JSON이 아니거나 검증에 실패한 경우
    """
    base: Dict[str, Any] = {}
    if config_file is not None:
        if not config_file.exists():
            raise ConfigException(f"설정 파일이 존재하지 않습니다: {config_file}", error_code="CONFIG_NOT_FOUND")
        try:
            base = json.loads(config_file.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigException(f"설정 파일이 JSON이 아닙니다: {config_file} ({e})", error_code="CONFIG_PARSE_ERROR")
        if not isinstance(base, dict):
            raise ConfigException(f"설정 파일 최상위는 JSON 객체여야 합니다: {config_file}", error_code="CONFIG_PARSE_ERROR")

    overrides = _drop_none(top_level)
    seed = overrides.get("seed")
    sections = {
        "paths": _drop_none({key: (str(v) if isinstance(v, Path) else v) for key, v in (paths or {}).items()}),
        "miner": _drop_none({**(miner or {}), "seed": seed}),
        "train": _drop_none({**(train or {}), "seed": seed}),
        "dims": _drop_none(dims or {}),
    }
    overrides.update({name: values for name, values in sections.items() if values})
    if "output_dir" in overrides:
        overrides["output_dir"] = str(overrides["output_dir"])

    merged = _merge(base, overrides)
    if "seed" in merged:
        for name in ("miner", "train"):
            section = merged.get(name, {})
            if isinstance(section, dict):
                merged[name] = {"seed": merged["seed"], **section}

    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigException(
            f"설정 검증 실패: {location}: {first['msg']}",
            error_code="INVALID_CONFIG",
            details=[{"loc": list(err["loc"]), "msg": err["msg"]} for err in e.errors()],
        ) from None


def output_dir_of(config: RunConfig) -> Path:
    return get_output_dir(str(config.output_dir) if config.output_dir else None)


@contextmanager
def command_context(command: str, log_level: Optional[str] = None):
    """로깅 초기화 후 명령을 실행하고, 파이프라인 예외를 종료 코드로 바꿉니다."""
    initialize_app(log_level)
    try:
        yield
    except PipelineException as e:
        logger.error(f"❌ {command} 실패: [{e.error_code}] {e.message}")
        error_console.print(f"[{e.error_code}] {e.message}", markup=False, highlight=False)
        raise typer.Exit(code=e.exit_code)


def path_list(values: Optional[List[Path]]) -> List[Path]:
    return list(values or [])
