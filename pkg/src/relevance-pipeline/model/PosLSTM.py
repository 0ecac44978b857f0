from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from model.Classifier import Classifier, Example, binary_cross_entropy, glorot_uniform, make_rng, output_probability
from model.LSTMCell import LSTMCell
from utils.exceptions import NumericException

UNK_TAG = "<UNK>"


class PosLstmModel(Classifier):
    """POS 태그 시퀀스 → 태그 임베딩 → LSTM → 마지막 은닉 상태에 sigmoid head (시각적 질문 확률)"""

    KIND = "pos-lstm"

    def __init__(
        self,
        tag_vocab: Iterable[str],
        embedding_dim: int = 50,
        hidden_dim: int = 100,
        seed: Optional[int] = 42,
    ):
        self.tags: List[str] = [UNK_TAG] + sorted(set(tag_vocab) - {UNK_TAG})
        self.tag_index = {tag: i for i, tag in enumerate(self.tags)}
        self.embedding_dim = embedding_dim
        self.hidden_dim = hidden_dim
        self.seed = seed

        rng = make_rng(seed if seed is not None else 0)
        self.embedding = glorot_uniform(rng, (len(self.tags), embedding_dim))
        self.cell = LSTMCell(embedding_dim, hidden_dim, rng)
        self.head_w = glorot_uniform(rng, (hidden_dim,))
        self.head_b = np.zeros(1)
        self.parameters = {
            "embedding": self.embedding,
            **self.cell.named_parameters("lstm"),
            "head.w": self.head_w,
            "head.b": self.head_b,
        }

    def _indices(self, tags: List[str]) -> List[int]:
        if not tags:
            raise NumericException("빈 태그 시퀀스입니다", error_code="EMPTY_SEQUENCE")
        return [self.tag_index.get(tag, 0) for tag in tags]

    def _forward(self, tags: List[str]):
        indices = self._indices(tags)
        inputs = self.embedding[indices]
        outputs, caches = self.cell.forward(inputs)
        p = output_probability(float(self.head_w @ outputs[-1] + self.head_b[0]))
        return p, indices, outputs, caches

    def poslstm_forward(self, tags: List[str]) -> float:
        return self._forward(tags)[0]

    def predict(self, example: Example) -> float:
        return self.poslstm_forward(example.tags)

    def loss_and_grads(self, example: Example, grads: Dict[str, np.ndarray]) -> float:
        p, indices, outputs, caches = self._forward(example.tags)
        dz = p - example.label
        grads["head.w"] += dz * outputs[-1]
        grads["head.b"][0] += dz
        d_outputs = np.zeros_like(outputs)
        d_outputs[-1] = dz * self.head_w
        d_inputs = self.cell.backward(d_outputs, caches, grads, "lstm")
        np.add.at(grads["embedding"], indices, d_inputs)
        return binary_cross_entropy(p, example.label)

    def to_archive(self) -> Tuple[dict, Dict[str, np.ndarray]]:
        meta = {
            "tags": self.tags[1:],
            "embedding_dim": self.embedding_dim,
            "hidden_dim": self.hidden_dim,
            "seed": self.seed,
        }
        return meta, dict(self.parameters)

    @classmethod
    def from_archive(cls, meta: dict, tensors: Dict[str, np.ndarray]) -> "PosLstmModel":
        model = cls(
            meta["tags"],
            embedding_dim=meta["embedding_dim"],
            hidden_dim=meta["hidden_dim"],
            seed=meta.get("seed"),
        )
        for name, value in tensors.items():
            model.parameters[name][...] = value
        return model
