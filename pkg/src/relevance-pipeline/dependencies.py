from typing import Any

from repository.feature_store_repository import FeatureStoreRepository
from repository.manifest_repository import ManifestRepository
from repository.model_repository import ModelRepository
from repository.question_repository import QuestionRepository
from repository.resource_repository import ResourceRepository

# 싱글톤 인스턴스들
_question_repository_instance = None
_feature_store_repository_instance = None
_manifest_repository_instance = None
_resource_repository_instance = None
_model_repository_instance = None
_relevance_pipeline_service_instance = None


# 의존성 주입 함수들
def get_question_repository() -> QuestionRepository:
    global _question_repository_instance
    if _question_repository_instance is None:
        _question_repository_instance = QuestionRepository()
    return _question_repository_instance


def get_feature_store_repository() -> FeatureStoreRepository:
    global _feature_store_repository_instance
    if _feature_store_repository_instance is None:
        _feature_store_repository_instance = FeatureStoreRepository()
    return _feature_store_repository_instance


def get_manifest_repository() -> ManifestRepository:
    global _manifest_repository_instance
    if _manifest_repository_instance is None:
        _manifest_repository_instance = ManifestRepository()
    return _manifest_repository_instance


def get_resource_repository() -> ResourceRepository:
    global _resource_repository_instance
    if _resource_repository_instance is None:
        _resource_repository_instance = ResourceRepository()
    return _resource_repository_instance


def get_model_repository() -> ModelRepository:
    global _model_repository_instance
    if _model_repository_instance is None:
        _model_repository_instance = ModelRepository()
    return _model_repository_instance


def get_relevance_pipeline_service() -> Any:
    global _relevance_pipeline_service_instance
    if _relevance_pipeline_service_instance is None:
        from service.relevance_pipeline_service import RelevancePipelineService  # lazy import

        _relevance_pipeline_service_instance = RelevancePipelineService(
            get_question_repository(),
            get_feature_store_repository(),
            get_manifest_repository(),
            get_resource_repository(),
            get_model_repository(),
        )
    return _relevance_pipeline_service_instance
