"""텍스트 리소스 로더: 단어 임베딩, POS 태그 사전, 객체 어휘, 반의어 사전."""

import logging
from contextlib import closing
from pathlib import Path
from typing import Dict, Optional, Set, Union

import numpy as np

from dto.premise_dto import AntonymLexicon, ObjectVocabulary
from dto.text_dto import EmbeddingTable, TagLexicon
from utils.exceptions import DataException, MalformedRecordException
from utils.text_lines import read_utf8_lines

PathLike = Union[str, Path]

# 기본 복수형 예외 (COCO 클래스 형태론 기준)
DEFAULT_PLURAL_MAP = {
    "people": "person",
    "men": "man",
    "women": "woman",
    "children": "child",
    "mice": "mouse",
    "knives": "knife",
    "teeth": "tooth",
    "feet": "foot",
    "geese": "goose",
}


def _open_text(path: PathLike):
    path = Path(path)
    if not path.exists():
        raise DataException(
            f"입력 파일이 존재하지 않습니다: {path}",
            error_code="MISSING_INPUT",
            details={"path": str(path)},
        )
    return closing(read_utf8_lines(path))


class ResourceRepository:
    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def load_embeddings(self, path: PathLike, dim: int = 300) -> EmbeddingTable:
        """
        `token v1 ... v_dim` 형식의 임베딩 파일을 읽습니다.
        fastText .vec 형식의 `count dim` 헤더 줄은 건너뜁니다. 중복 토큰은 마지막 값을 사용합니다.

        Raises:
            MalformedRecordException: 값 개수가 dim과 다르거나 숫자가 아닌 줄
        """
        vectors: Dict[str, np.ndarray] = {}
        duplicates = 0
        with _open_text(path) as f:
            for line_number, line in enumerate(f, start=1):
                parts = line.rstrip("\n").split()
                if not parts:
                    continue
                if line_number == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                    continue
                if len(parts) != dim + 1:
                    raise MalformedRecordException(
                        str(path), line_number, f"값 {len(parts) - 1}개, 기대값 {dim}개"
                    )
                try:
                    vector = np.array(parts[1:], dtype=np.float64)
                except ValueError as e:
                    raise MalformedRecordException(str(path), line_number, "숫자가 아닌 값") from e
                if parts[0] in vectors:
                    duplicates += 1
                vectors[parts[0]] = vector

        if duplicates:
            self.logger.warning(f"⚠️ 중복 토큰 {duplicates}개 (마지막 값 사용): {path}")
        self.logger.info(f"임베딩 {len(vectors)}개 로드 완료: {path} (dim={dim})")
        return EmbeddingTable(dim=dim, vectors=vectors)

    def load_lexicon(self, path: PathLike, default_tag: str = "NN") -> TagLexicon:
        """`token<TAB>tag` 형식의 태그 사전"""
        tags: Dict[str, str] = {}
        with _open_text(path) as f:
            for line_number, line in enumerate(f, start=1):
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 2 or not parts[0] or not parts[1]:
                    raise MalformedRecordException(str(path), line_number, "token<TAB>tag 형식이 아닙니다")
                tags[parts[0].lower()] = parts[1]
        return TagLexicon(tags=tags, default_tag=default_tag)

    def load_vocabulary(
        self, path: PathLike, plurals_path: Optional[PathLike] = None
    ) -> ObjectVocabulary:
        """한 줄에 lemma 하나. 복수형 예외는 `plural<TAB>singular` 파일로 추가할 수 있습니다."""
        lemmas: Set[str] = set()
        with _open_text(path) as f:
            for line in f:
                lemma = line.strip().lower()
                if lemma and not lemma.startswith("#"):
                    lemmas.add(" ".join(lemma.split()))

        plural_map = dict(DEFAULT_PLURAL_MAP)
        if plurals_path is not None:
            with _open_text(plurals_path) as f:
                for line_number, line in enumerate(f, start=1):
                    if not line.strip() or line.startswith("#"):
                        continue
                    parts = line.rstrip("\n").split("\t")
                    if len(parts) != 2:
                        raise MalformedRecordException(
                            str(plurals_path), line_number, "plural<TAB>singular 형식이 아닙니다"
                        )
                    plural_map[parts[0].strip().lower()] = parts[1].strip().lower()
        self.logger.info(f"객체 어휘 {len(lemmas)}개 로드 완료: {path}")
        return ObjectVocabulary(lemmas=lemmas, plural_map=plural_map)

    def load_antonyms(self, path: PathLike) -> AntonymLexicon:
        """`attr<TAB>antonym` 형식. 로딩 시 대칭화됩니다."""
        antonyms: Dict[str, Set[str]] = {}
        with _open_text(path) as f:
            for line_number, line in enumerate(f, start=1):
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                    raise MalformedRecordException(str(path), line_number, "attr<TAB>antonym 형식이 아닙니다")
                antonyms.setdefault(parts[0].strip().lower(), set()).add(parts[1].strip().lower())
        return AntonymLexicon(antonyms=antonyms)
