from typing import Any, List, Optional


class PipelineException(Exception):
    """파이프라인 공통 예외 (CLI 종료 코드 포함)"""

    def __init__(
        self,
        message: str,
        error_code: str = "PIPELINE_ERROR",
        details: Any = None,
        exit_code: int = 1,
    ):
        self.message = message
        self.error_code = error_code
        self.details = details
        self.exit_code = exit_code
        super().__init__(self.message)


class ConfigException(PipelineException):
    """설정 관련 예외"""

    def __init__(
        self,
        message: str,
        error_code: str = "CONFIG_ERROR",
        details: Any = None,
    ):
        super().__init__(message, error_code=error_code, details=details, exit_code=2)


class DataException(PipelineException):
    """입력 데이터 관련 예외"""

    def __init__(
        self,
        message: str,
        error_code: str = "DATA_ERROR",
        details: Any = None,
    ):
        super().__init__(message, error_code=error_code, details=details, exit_code=3)


class MalformedRecordException(DataException):
    """JSONL / 텍스트 파일의 특정 줄이 잘못된 경우"""

    def __init__(self, path: str, line_number: int, reason: str):
        self.path = path
        self.line_number = line_number
        super().__init__(
            f"{path}:{line_number}: {reason}",
            error_code="MALFORMED_RECORD",
            details={"path": path, "line_number": line_number},
        )


class FeatureStoreException(DataException):
    """features.bin 포맷 관련 예외 (BAD_MAGIC, TRUNCATED, DUPLICATE_IID, NOT_FOUND ...)"""

    def __init__(self, message: str, error_code: str, details: Any = None):
        super().__init__(message, error_code=error_code, details=details)


class ManifestCorruptionException(DataException):
    """매니페스트 통계와 pair 목록이 일치하지 않는 경우"""

    def __init__(self, message: str, details: Any = None):
        super().__init__(message, error_code="MANIFEST_CORRUPTED", details=details)


class DanglingReferenceException(DataException):
    """존재하지 않는 이미지를 참조하는 질문"""

    def __init__(self, qids: List[str]):
        self.qids = qids
        preview = ", ".join(qids[:10])
        super().__init__(
            f"존재하지 않는 이미지를 참조하는 질문 {len(qids)}개: {preview}",
            error_code="DANGLING_IMAGE_REFERENCE",
            details={"qids": qids},
        )


class NumericException(PipelineException):
    """수치 연산 관련 예외 (NaN loss, 차원 불일치 등)"""

    def __init__(
        self,
        message: str,
        error_code: str = "NUMERIC_ERROR",
        details: Optional[Any] = None,
    ):
        super().__init__(message, error_code=error_code, details=details, exit_code=4)
