from pathlib import Path
from typing import Iterator, Union

from utils.exceptions import MalformedRecordException


def read_utf8_lines(path: Union[str, Path]) -> Iterator[str]:
    """
    UTF-8 텍스트 파일을 한 줄씩 읽습니다. 줄 끝의 CRLF는 LF로 바꿉니다.

    Raises:
        MalformedRecordException: UTF-8로 디코딩할 수 없는 줄 (줄 번호 포함)
    """
    with open(path, "rb") as f:
        for line_number, raw in enumerate(f, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise MalformedRecordException(
                    str(path), line_number, f"UTF-8이 아닌 바이트 (위치 {e.start})"
                ) from None
            if line.endswith("\r\n"):
                line = line[:-2] + "\n"
            yield line
