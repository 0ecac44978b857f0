import os
import sys

import numpy as np
import pytest

# 프로젝트 루트를 Python 경로에 추가
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dependencies import (  # noqa: E402
    get_feature_store_repository,
    get_manifest_repository,
    get_model_repository,
    get_question_repository,
    get_relevance_pipeline_service,
    get_resource_repository,
)
from tests.mini_corpus import write_mini_corpus  # noqa: E402


@pytest.fixture(scope="session")
def mini_corpus(tmp_path_factory):
    """세션 동안 공유하는 미니 코퍼스 (읽기 전용으로 사용할 것)"""
    return write_mini_corpus(tmp_path_factory.mktemp("mini_corpus"))


@pytest.fixture
def question_repository():
    return get_question_repository()


@pytest.fixture
def feature_store_repository():
    return get_feature_store_repository()


@pytest.fixture
def manifest_repository():
    return get_manifest_repository()


@pytest.fixture
def resource_repository():
    return get_resource_repository()


@pytest.fixture
def model_repository():
    return get_model_repository()


@pytest.fixture
def pipeline_service():
    return get_relevance_pipeline_service()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch, tmp_path):
    """테스트마다 출력 디렉터리/워커 수 환경변수를 격리"""
    monkeypatch.setenv("QREL_OUTPUT_DIR", str(tmp_path / "output"))
    monkeypatch.delenv("QREL_WORKERS", raising=False)
    monkeypatch.delenv("QREL_LOG_LEVEL", raising=False)
