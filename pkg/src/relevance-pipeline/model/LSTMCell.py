from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from model.Classifier import check_dim, glorot_uniform, sigmoid


@dataclass
class StepCache:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    tanh_c: np.ndarray


class LSTMCell:
    """
    표준 LSTM 셀. 게이트 순서는 i, f, g, o.

        z = W x + U h + b
        i, f, o = σ(z_i), σ(z_f), σ(z_o);  g = tanh(z_g)
        c' = f ⊙ c + i ⊙ g;  h' = o ⊙ tanh(c')
    """

    def __init__(
        self,
        input_dim: int,
        hidden_dim: int,
        rng: Optional[np.random.Generator] = None,
    ):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        four_h = 4 * hidden_dim
        if rng is None:
            self.W = np.zeros((four_h, input_dim))
            self.U = np.zeros((four_h, hidden_dim))
        else:
            self.W = glorot_uniform(rng, (four_h, input_dim))
            self.U = glorot_uniform(rng, (four_h, hidden_dim))
        self.b = np.zeros(four_h)

    def named_parameters(self, prefix: str) -> Dict[str, np.ndarray]:
        return {f"{prefix}.W": self.W, f"{prefix}.U": self.U, f"{prefix}.b": self.b}

    def initial_state(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.zeros(self.hidden_dim), np.zeros(self.hidden_dim)

    def step(
        self, x: np.ndarray, h: np.ndarray, c: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, StepCache]:
        check_dim("LSTM 입력", x.shape[0], self.input_dim)
        check_dim("LSTM 은닉 상태", h.shape[0], self.hidden_dim)
        check_dim("LSTM 셀 상태", c.shape[0], self.hidden_dim)
        n = self.hidden_dim
        z = self.W @ x + self.U @ h + self.b
        i = sigmoid(z[:n])
        f = sigmoid(z[n : 2 * n])
        g = np.tanh(z[2 * n : 3 * n])
        o = sigmoid(z[3 * n :])
        c_next = f * c + i * g
        tanh_c = np.tanh(c_next)
        h_next = o * tanh_c
        return h_next, c_next, StepCache(x, h, c, i, f, g, o, tanh_c)

    def step_backward(
        self,
        dh: np.ndarray,
        dc: np.ndarray,
        cache: StepCache,
        grads: Dict[str, np.ndarray],
        prefix: str,
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(dL/dh', dL/dc') → (dL/dx, dL/dh, dL/dc). 파라미터 그래디언트는 grads에 누적."""
        do = dh * cache.tanh_c
        dc_total = dc + dh * cache.o * (1.0 - cache.tanh_c**2)
        di = dc_total * cache.g
        df = dc_total * cache.c_prev
        dg = dc_total * cache.i
        dc_prev = dc_total * cache.f

        dz = np.concatenate(
            [
                di * cache.i * (1.0 - cache.i),
                df * cache.f * (1.0 - cache.f),
                dg * (1.0 - cache.g**2),
                do * cache.o * (1.0 - cache.o),
            ]
        )
        grads[f"{prefix}.W"] += np.outer(dz, cache.x)
        grads[f"{prefix}.U"] += np.outer(dz, cache.h_prev)
        grads[f"{prefix}.b"] += dz
        return self.W.T @ dz, self.U.T @ dz, dc_prev

    def forward(self, inputs: np.ndarray) -> Tuple[np.ndarray, List[StepCache]]:
        """(T × input_dim) 시퀀스를 영 상태에서 시작해 처리하고 (T × hidden_dim) 출력을 반환"""
        h, c = self.initial_state()
        outputs = np.zeros((inputs.shape[0], self.hidden_dim))
        caches = []
        for t in range(inputs.shape[0]):
            h, c, cache = self.step(inputs[t], h, c)
            outputs[t] = h
            caches.append(cache)
        return outputs, caches

    def backward(
        self,
        d_outputs: np.ndarray,
        caches: List[StepCache],
        grads: Dict[str, np.ndarray],
        prefix: str,
    ) -> np.ndarray:
        """시간 역전파. d_outputs[t] = dL/dh_t. 반환값은 (T × input_dim) 입력 그래디언트."""
        d_inputs = np.zeros((len(caches), self.input_dim))
        dh_next = np.zeros(self.hidden_dim)
        dc_next = np.zeros(self.hidden_dim)
        for t in reversed(range(len(caches))):
            dx, dh_next, dc_next = self.step_backward(
                d_outputs[t] + dh_next, dc_next, caches[t], grads, prefix
            )
            d_inputs[t] = dx
        return d_inputs


def lstm_step(
    cell: LSTMCell, x_t: np.ndarray, state: Tuple[np.ndarray, np.ndarray]
) -> Tuple[np.ndarray, np.ndarray]:
    h, c = state
    h_next, c_next, _ = cell.step(np.asarray(x_t, dtype=np.float64), h, c)
    return h_next, c_next
