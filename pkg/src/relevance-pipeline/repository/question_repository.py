import logging
from contextlib import closing
from pathlib import Path
from typing import Dict, Iterable, Iterator, Union

from pydantic import BaseModel, Field, ValidationError

from dto.corpus_dto import ImageAnnotation, Label, LabeledPair, PairOrder, QuestionRecord
from utils.exceptions import DataException, MalformedRecordException
from utils.text_lines import read_utf8_lines

VTFQ_FALSIFIED_MARKER = "annotated-irrelevant"

PathLike = Union[str, Path]


class _VtfqLine(BaseModel):
    qid: str = Field(..., min_length=1)
    iid: str = Field(..., min_length=1)
    relevant: bool


def _iter_lines(path: PathLike) -> Iterator[tuple]:
    """(줄 번호, 내용) 을 한 줄씩 반환. 빈 줄은 건너뛴다."""
    path = Path(path)
    if not path.exists():
        raise DataException(
            f"입력 파일이 존재하지 않습니다: {path}",
            error_code="MISSING_INPUT",
            details={"path": str(path)},
        )
    with closing(read_utf8_lines(path)) as lines:
        for line_number, line in enumerate(lines, start=1):
            if line.strip():
                yield line_number, line


def _first_error(e: ValidationError) -> str:
    error = e.errors()[0]
    location = ".".join(str(part) for part in error.get("loc", ()))
    return f"{location}: {error['msg']}" if location else error["msg"]


class QuestionRepository:
    """questions.jsonl / annotations.jsonl / VTFQ 파일 입출력"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def read_question_stream(self, path: PathLike) -> Iterator[QuestionRecord]:
        """
        질문을 파일 순서대로 한 건씩 반환합니다. 메모리는 가장 큰 한 줄 크기에만 비례합니다.

        Raises:
            MalformedRecordException: JSON 파싱 실패, 필수 필드 누락, tokens/pos_tags 길이 불일치
        """
        count = 0
        for line_number, line in _iter_lines(path):
            try:
                record = QuestionRecord.model_validate_json(line)
            except ValidationError as e:
                raise MalformedRecordException(str(path), line_number, _first_error(e)) from e
            count += 1
            yield record
        self.logger.info(f"질문 {count}개 읽기 완료: {path}")

    def write_questions(self, records: Iterable[QuestionRecord], path: PathLike) -> int:
        count = 0
        with open(path, "w", encoding="utf-8") as f:
            for record in records:
                f.write(record.model_dump_json(exclude_none=True) + "\n")
                count += 1
        return count

    def read_annotation_stream(self, path: PathLike) -> Iterator[ImageAnnotation]:
        for line_number, line in _iter_lines(path):
            try:
                yield ImageAnnotation.model_validate_json(line)
            except ValidationError as e:
                raise MalformedRecordException(str(path), line_number, _first_error(e)) from e

    def read_annotations(self, path: PathLike) -> Dict[str, ImageAnnotation]:
        annotations: Dict[str, ImageAnnotation] = {}
        for annotation in self.read_annotation_stream(path):
            if annotation.iid in annotations:
                self.logger.warning(f"중복 어노테이션, 마지막 값 사용: {annotation.iid}")
            annotations[annotation.iid] = annotation
        self.logger.info(f"어노테이션 {len(annotations)}개 읽기 완료: {path}")
        return annotations

    def read_vtfq(self, path: PathLike) -> Iterator[LabeledPair]:
        """
        VTFQ 형식({"qid","iid","relevant":bool}) 파일을 평가용 LabeledPair로 읽습니다.
        사람이 라벨링한 데이터라 거짓 전제가 기록되어 있지 않으므로 irrelevant pair에는
        표식 문자열을 falsified로 넣고 order=first로 둡니다.
        """
        for line_number, line in _iter_lines(path):
            try:
                raw = _VtfqLine.model_validate_json(line)
            except ValidationError as e:
                raise MalformedRecordException(str(path), line_number, _first_error(e)) from e
            if raw.relevant:
                yield LabeledPair(
                    qid=raw.qid, iid=raw.iid, label=Label.RELEVANT, order=PairOrder.POSITIVE
                )
            else:
                yield LabeledPair(
                    qid=raw.qid,
                    iid=raw.iid,
                    label=Label.IRRELEVANT,
                    order=PairOrder.FIRST,
                    falsified=[VTFQ_FALSIFIED_MARKER],
                )
