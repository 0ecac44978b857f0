from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Iterator, TypeVar

T = TypeVar("T")

_END = object()


def prefetch(iterable: Iterable[T], size: int = 2) -> Iterator[T]:
    """
    별도 워커 스레드 하나가 최대 size개 항목을 미리 만들어 둡니다.

    워커가 하나뿐이라 next() 호출 순서가 유지되므로 출력 순서는 입력과 같습니다.
    생성 중 발생한 예외는 소비하는 쪽에서 그대로 다시 발생합니다.
    """
    if size <= 0:
        yield from iterable
        return

    iterator = iter(iterable)
    with ThreadPoolExecutor(max_workers=1, thread_name_prefix="prefetch") as executor:
        pending = deque(executor.submit(next, iterator, _END) for _ in range(size))
        while pending:
            item = pending.popleft().result()
            if item is _END:
                break
            pending.append(executor.submit(next, iterator, _END))
            yield item
