import os
import logging
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)
load_dotenv()

DEFAULT_OUTPUT_DIR = "output"


def initialize_logging(level: Optional[str] = None):
    """로깅 설정 (QREL_LOG_LEVEL 환경변수, 기본 INFO)"""
    level_name = (level or os.getenv("QREL_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def get_output_dir(override: Optional[str] = None) -> Path:
    """출력 디렉터리: 플래그 > QREL_OUTPUT_DIR > 기본값"""
    value = override or os.getenv("QREL_OUTPUT_DIR", DEFAULT_OUTPUT_DIR)
    return Path(value)


def get_worker_count(override: Optional[int] = None) -> int:
    """워커 수: 플래그 > QREL_WORKERS > 사용 가능한 CPU 수"""
    if override is not None:
        return max(1, override)
    env_value = os.getenv("QREL_WORKERS")
    if env_value:
        try:
            return max(1, int(env_value))
        except ValueError:
            logger.warning(f"⚠️ QREL_WORKERS 값이 정수가 아닙니다: {env_value}")
    return max(1, os.cpu_count() or 1)


def initialize_app(log_level: Optional[str] = None):
    """애플리케이션 전체 초기화"""
    initialize_logging(log_level)
    logger.debug("애플리케이션 초기화 완료")
