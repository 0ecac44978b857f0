from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from model.Classifier import (
    Classifier,
    Example,
    binary_cross_entropy,
    check_dim,
    glorot_uniform,
    make_rng,
    output_probability,
)
from utils.exceptions import NumericException


class MLPModel(Classifier):
    """ReLU 은닉층 + sigmoid 출력 1개. layer_dims 예: [4396, 5000, 500, 1]"""

    KIND = "mlp"

    def __init__(self, layer_dims: Sequence[int], seed: Optional[int] = 42):
        layer_dims = [int(d) for d in layer_dims]
        if len(layer_dims) < 2 or layer_dims[-1] != 1 or min(layer_dims) < 1:
            raise NumericException(f"잘못된 layer_dims: {layer_dims}")
        self.layer_dims = layer_dims
        self.seed = seed
        rng = make_rng(seed if seed is not None else 0)
        self.parameters: Dict[str, np.ndarray] = {}
        for layer, (fan_in, fan_out) in enumerate(zip(layer_dims[:-1], layer_dims[1:])):
            self.parameters[f"W{layer}"] = glorot_uniform(rng, (fan_out, fan_in))
            self.parameters[f"b{layer}"] = np.zeros(fan_out)

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1

    def _forward(self, x: np.ndarray) -> Tuple[float, List[np.ndarray]]:
        x = np.asarray(x, dtype=np.float64)
        check_dim("MLP 입력", x.shape[0], self.layer_dims[0])
        activations = [x]
        a = x
        for layer in range(self.n_layers):
            z = self.parameters[f"W{layer}"] @ a + self.parameters[f"b{layer}"]
            if layer < self.n_layers - 1:
                a = np.maximum(z, 0.0)
            else:
                a = z
            activations.append(a)
        return output_probability(float(a[0])), activations

    def mlp_forward(self, x: np.ndarray) -> float:
        return self._forward(x)[0]

    def predict(self, example: Example) -> float:
        return self.mlp_forward(example.features)

    def loss_and_grads(self, example: Example, grads: Dict[str, np.ndarray]) -> float:
        p, activations = self._forward(example.features)
        delta = np.array([p - example.label])
        for layer in reversed(range(self.n_layers)):
            a_in = activations[layer]
            grads[f"W{layer}"] += np.outer(delta, a_in)
            grads[f"b{layer}"] += delta
            if layer > 0:
                delta = (self.parameters[f"W{layer}"].T @ delta) * (a_in > 0)
        return binary_cross_entropy(p, example.label)

    def to_archive(self) -> Tuple[dict, Dict[str, np.ndarray]]:
        return {"layer_dims": self.layer_dims, "seed": self.seed}, dict(self.parameters)

    @classmethod
    def from_archive(cls, meta: dict, tensors: Dict[str, np.ndarray]) -> "MLPModel":
        model = cls(meta["layer_dims"], seed=meta.get("seed"))
        for name, value in tensors.items():
            model.parameters[name][...] = value
        return model
