import logging
from typing import Dict, Sequence

import numpy as np

from model.Classifier import Classifier, Example, make_rng
from utils.exceptions import NumericException

logger = logging.getLogger(__name__)

MAX_COORDINATES = 200
RELATIVE_ERROR_FLOOR = 1e-8
# 중앙 차분의 반올림 오차 대비 이 배수보다 작은 그래디언트는 비교하지 않음
ROUNDOFF_MARGIN = 1e4


def grad_check(
    model: Classifier,
    batch: Sequence[Example],
    epsilon: float = 1e-5,
    max_coordinates: int = MAX_COORDINATES,
    seed: int = 0,
) -> float:
    """
    해석적 그래디언트와 중앙 차분 그래디언트의 최대 상대 오차.

        err = |g_a − g_n| / max(|g_a| + |g_n|, 1e-8)

    원소가 max_coordinates보다 많은 텐서는 seed 기반으로 그만큼만 뽑아 비교합니다.
    |g_a|, |g_n| 모두 차분의 반올림 오차 한계(ε_mach·|L|/ε의 ROUNDOFF_MARGIN배)보다
    작은 좌표는 건너뜁니다.
    파라미터는 검사 후 원래 값으로 복원됩니다.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise NumericException(f"epsilon은 [1e-7, 1e-3] 범위여야 합니다: {epsilon}")

    loss, analytic = model.batch_loss_and_grads(batch)
    roundoff = np.finfo(np.float64).eps * max(abs(loss), 1.0) / epsilon
    negligible = ROUNDOFF_MARGIN * roundoff
    rng = make_rng(seed)
    worst = 0.0
    skipped = 0
    per_tensor: Dict[str, float] = {}
    for name, param in model.parameters.items():
        flat = param.reshape(-1)
        if not np.shares_memory(flat, param):
            raise NumericException(f"파라미터 {name}가 연속 메모리가 아닙니다")
        if flat.size > max_coordinates:
            coordinates = rng.choice(flat.size, size=max_coordinates, replace=False)
        else:
            coordinates = np.arange(flat.size)

        g_analytic = analytic[name].reshape(-1)
        tensor_worst = 0.0
        for index in coordinates:
            original = flat[index]
            flat[index] = original + epsilon
            plus = model.batch_loss(batch)
            flat[index] = original - epsilon
            minus = model.batch_loss(batch)
            flat[index] = original

            g_numeric = (plus - minus) / (2 * epsilon)
            g_a = g_analytic[index]
            if max(abs(g_a), abs(g_numeric)) < negligible:
                skipped += 1
                continue
            error = abs(g_a - g_numeric) / max(abs(g_a) + abs(g_numeric), RELATIVE_ERROR_FLOOR)
            tensor_worst = max(tensor_worst, error)
        per_tensor[name] = tensor_worst
        worst = max(worst, tensor_worst)

    logger.debug(
        f"gradient check 텐서별 최대 상대 오차: {per_tensor} (반올림 오차 이하 좌표 {skipped}개 제외)"
    )
    return worst
