"""
RelNet 1–4: 이미지 경로와 질문 경로를 LSTM으로 융합하는 관련성 분류기.

    V1: 질문 LSTM 출력 h_t 와 PCA(image)를 매 스텝 concat 해서 융합 LSTM에 입력
    V2: V1과 같지만 이미지 경로가 선형 임베딩 (W·x + b)
    V3: 융합 LSTM 1번째 스텝에 이미지 임베딩, 2번째 스텝부터 질문 LSTM 출력
    V4: 질문 LSTM 없이 1번째 스텝에 이미지 임베딩, 2번째 스텝부터 토큰 임베딩

V3/V4의 1번째 스텝 입력 폭 차이는 step1_mode로 처리한다.
    pad: 짧은 쪽을 0으로 채워 max 폭에 맞춤
    project: 이미지 임베딩을 project.W 로 시퀀스 폭에 사영
"""

from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from dto.config_dto import Step1Mode
from dto.text_dto import EmbeddingTable
from model.Classifier import (
    Classifier,
    Example,
    binary_cross_entropy,
    check_dim,
    glorot_uniform,
    make_rng,
    output_probability,
)
from model.LSTMCell import LSTMCell
from model.PCA import PCAModel
from utils.exceptions import NumericException

UNK_TOKEN = "<UNK>"
VARIANTS = (1, 2, 3, 4)


def _pad(x: np.ndarray, width: int) -> np.ndarray:
    if x.shape[-1] == width:
        return x
    padded = np.zeros(x.shape[:-1] + (width,))
    padded[..., : x.shape[-1]] = x
    return padded


class RelNetModel(Classifier):
    KIND = "relnet"

    def __init__(
        self,
        variant: int,
        vocabulary: Iterable[str],
        image_dim: int,
        embedding_dim: int = 300,
        hidden_dim: int = 256,
        image_embed_dim: int = 300,
        step1_mode: str = "pad",
        seed: Optional[int] = 42,
        pca: Optional[PCAModel] = None,
        embeddings: Optional[EmbeddingTable] = None,
    ):
        if variant not in VARIANTS:
            raise NumericException(f"지원하지 않는 RelNet variant: {variant}")
        if variant == 1:
            if pca is None:
                raise NumericException("RelNet1에는 학습된 PCA 모델이 필요합니다")
            check_dim("RelNet1 PCA 입력", pca.input_dim, image_dim)
            image_embed_dim = pca.k

        self.variant = variant
        self.vocabulary: List[str] = [UNK_TOKEN] + sorted(
            {token.lower() for token in vocabulary} - {UNK_TOKEN.lower()}
        )
        self.token_index = {token: i for i, token in enumerate(self.vocabulary)}
        self.image_dim = image_dim
        self.embedding_dim = embedding_dim
        self.hidden_dim = hidden_dim
        self.image_embed_dim = image_embed_dim
        self.step1_mode = Step1Mode(step1_mode)
        self.seed = seed
        self.pca = pca

        rng = make_rng(seed if seed is not None else 0)
        self.parameters: Dict[str, np.ndarray] = {
            "embedding": glorot_uniform(rng, (len(self.vocabulary), embedding_dim))
        }
        self.pretrained_rows = 0
        if embeddings is not None:
            self._load_pretrained(embeddings)

        if variant != 1:
            self.parameters["image.W"] = glorot_uniform(rng, (image_embed_dim, image_dim))
            self.parameters["image.b"] = np.zeros(image_embed_dim)

        self.question: Optional[LSTMCell] = None
        if variant in (1, 2, 3):
            self.question = LSTMCell(embedding_dim, hidden_dim, rng)
            self.parameters.update(self.question.named_parameters("question"))

        self.fusion = LSTMCell(self._fusion_input_dim(), hidden_dim, rng)
        self.parameters.update(self.fusion.named_parameters("fusion"))

        if self._uses_projection:
            self.parameters["project.W"] = glorot_uniform(
                rng, (self._sequence_width, image_embed_dim)
            )

        self.parameters["head.w"] = glorot_uniform(rng, (hidden_dim,))
        self.parameters["head.b"] = np.zeros(1)

    @property
    def _sequence_width(self) -> int:
        """V3/V4에서 2번째 스텝 이후 입력 폭"""
        return self.hidden_dim if self.variant == 3 else self.embedding_dim

    @property
    def _uses_projection(self) -> bool:
        return self.variant in (3, 4) and self.step1_mode == Step1Mode.PROJECT

    def _fusion_input_dim(self) -> int:
        if self.variant in (1, 2):
            return self.hidden_dim + self.image_embed_dim
        if self.step1_mode == Step1Mode.PROJECT:
            return self._sequence_width
        return max(self.image_embed_dim, self._sequence_width)

    def _load_pretrained(self, table: EmbeddingTable):
        check_dim("사전학습 임베딩", table.dim, self.embedding_dim)
        embedding = self.parameters["embedding"]
        loaded = 0
        for row, token in enumerate(self.vocabulary[1:], start=1):
            vector = table.get(token)
            if vector is not None:
                embedding[row] = vector
                loaded += 1
        self.pretrained_rows = loaded

    def token_indices(self, tokens: List[str]) -> List[int]:
        if not tokens:
            raise NumericException("빈 토큰 시퀀스입니다", error_code="EMPTY_SEQUENCE")
        return [self.token_index.get(token.lower(), 0) for token in tokens]

    def image_embedding(self, image_vec: np.ndarray) -> np.ndarray:
        x = np.asarray(image_vec, dtype=np.float64)
        check_dim("RelNet 이미지 입력", x.shape[0], self.image_dim)
        if self.variant == 1:
            return self.pca.project(x)
        return self.parameters["image.W"] @ x + self.parameters["image.b"]

    def _forward(self, tokens: List[str], image_vec: np.ndarray):
        indices = self.token_indices(tokens)
        emb = self.parameters["embedding"][indices]
        img = self.image_embedding(image_vec)
        state = {"indices": indices, "img": img}

        if self.question is not None:
            hq, state["question"] = self.question.forward(emb)
        else:
            hq = None

        if self.variant in (1, 2):
            fusion_in = np.hstack([hq, np.tile(img, (len(indices), 1))])
        else:
            sequence = hq if self.variant == 3 else emb
            if self._uses_projection:
                first = self.parameters["project.W"] @ img
            else:
                width = self.fusion.input_dim
                first = _pad(img, width)
                sequence = _pad(sequence, width)
            fusion_in = np.vstack([first, sequence])

        outputs, state["fusion"] = self.fusion.forward(fusion_in)
        state["last"] = outputs[-1]
        p = output_probability(float(self.parameters["head.w"] @ outputs[-1] + self.parameters["head.b"][0]))
        return p, outputs, state

    def relnet_forward(self, image_vec: np.ndarray, tokens: List[str]) -> float:
        return self._forward(tokens, image_vec)[0]

    def predict(self, example: Example) -> float:
        return self.relnet_forward(example.image, example.tokens)

    def loss_and_grads(self, example: Example, grads: Dict[str, np.ndarray]) -> float:
        p, outputs, state = self._forward(example.tokens, example.image)
        dz = p - example.label
        grads["head.w"] += dz * state["last"]
        grads["head.b"][0] += dz

        d_outputs = np.zeros_like(outputs)
        d_outputs[-1] = dz * self.parameters["head.w"]
        d_fusion_in = self.fusion.backward(d_outputs, state["fusion"], grads, "fusion")

        img = state["img"]
        if self.variant in (1, 2):
            d_sequence = d_fusion_in[:, : self.hidden_dim]
            d_img = d_fusion_in[:, self.hidden_dim :].sum(axis=0)
        else:
            d_first, d_rest = d_fusion_in[0], d_fusion_in[1:]
            if self._uses_projection:
                grads["project.W"] += np.outer(d_first, img)
                d_img = self.parameters["project.W"].T @ d_first
                d_sequence = d_rest
            else:
                d_img = d_first[: self.image_embed_dim]
                d_sequence = d_rest[:, : self._sequence_width]

        if self.question is not None:
            d_emb = self.question.backward(d_sequence, state["question"], grads, "question")
        else:
            d_emb = d_sequence

        if self.variant != 1:
            grads["image.W"] += np.outer(d_img, np.asarray(example.image, dtype=np.float64))
            grads["image.b"] += d_img

        np.add.at(grads["embedding"], state["indices"], d_emb)
        return binary_cross_entropy(p, example.label)

    def to_archive(self) -> Tuple[dict, Dict[str, np.ndarray]]:
        meta = {
            "variant": self.variant,
            "vocabulary": self.vocabulary[1:],
            "image_dim": self.image_dim,
            "embedding_dim": self.embedding_dim,
            "hidden_dim": self.hidden_dim,
            "image_embed_dim": self.image_embed_dim,
            "step1_mode": self.step1_mode.value,
            "seed": self.seed,
        }
        tensors = dict(self.parameters)
        if self.pca is not None:
            tensors["pca.mean"] = self.pca.mean
            tensors["pca.components"] = self.pca.components
            tensors["pca.eigenvalues"] = self.pca.eigenvalues
        return meta, tensors

    @classmethod
    def from_archive(cls, meta: dict, tensors: Dict[str, np.ndarray]) -> "RelNetModel":
        pca = None
        if "pca.components" in tensors:
            pca = PCAModel(tensors["pca.mean"], tensors["pca.components"], tensors["pca.eigenvalues"])
        model = cls(
            meta["variant"],
            meta["vocabulary"],
            meta["image_dim"],
            embedding_dim=meta["embedding_dim"],
            hidden_dim=meta["hidden_dim"],
            image_embed_dim=meta["image_embed_dim"],
            step1_mode=meta["step1_mode"],
            seed=meta.get("seed"),
            pca=pca,
        )
        for name, value in tensors.items():
            if name in model.parameters:
                model.parameters[name][...] = value
        return model
