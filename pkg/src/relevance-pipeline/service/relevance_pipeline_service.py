import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from dto.config_dto import ModelKind, RunConfig
from dto.corpus_dto import DatasetManifest, LabeledPair, QuestionRecord
from dto.evaluation_dto import EvaluationResult
from dto.text_dto import EmbeddingTable
from model.Classifier import Classifier, make_rng
from model.LogisticRegression import LRModel
from model.MLP import MLPModel
from model.PCA import PCAModel
from model.PosLSTM import PosLstmModel
from model.RelNet import RelNetModel
from repository.feature_store_repository import FeatureStoreRepository
from repository.manifest_repository import ManifestRepository
from repository.model_repository import ModelRepository
from repository.question_repository import QuestionRepository
from repository.resource_repository import ResourceRepository
from service.dataset_miner import DatasetMiner, render_stats, split_manifest
from service.evaluation_service import EvaluationService, evaluate_scores
from service.feature_export_service import FeatureExportService
from service.pca_calculator import fit_pca
from service.pos_feature_service import PosFeatureService
from service.question_similarity_miner import mine_dissimilar_questions
from service.training_service import (
    ExampleBuilder,
    build_model,
    compare_ngram_orders,
    lr_train_streaming,
    predict_all,
    train,
)
from utils.exceptions import ConfigException, DataException

MODEL_FILE = "model.bin"
PCA_FILE = "pca.bin"
MANIFEST_FILE = "manifest.jsonl"


def kind_of(model: Classifier) -> ModelKind:
    """로드된 모델 객체 → 학습 시 사용한 ModelKind"""
    if isinstance(model, LRModel):
        return ModelKind.LR_VISUAL if model.input_kind == "sparse" else ModelKind.LR_PREMISE
    if isinstance(model, PosLstmModel):
        return ModelKind.LSTM_VISUAL
    if isinstance(model, MLPModel):
        return ModelKind.MLP
    if isinstance(model, RelNetModel):
        return ModelKind(f"relnet{model.variant}")
    raise ConfigException(f"분류 모델이 아닙니다: {type(model).__name__}", error_code="NOT_A_CLASSIFIER")


def predict_relevance(
    visual_model: Classifier,
    premise_model: Classifier,
    pairs: Sequence[LabeledPair],
    visual_builder: ExampleBuilder,
    premise_builder: ExampleBuilder,
    threshold: float = 0.5,
) -> List[float]:
    """
    2단계 관련성 판단. 비시각 질문은 어떤 이미지와도 관련이 없으므로 0을 주고,
    시각 질문만 전제 모델로 점수를 매긴다.
    """
    visual_cache: Dict[str, bool] = {}
    scores = []
    for pair in pairs:
        if pair.qid not in visual_cache:
            question = visual_builder.question(pair.qid)
            example = visual_builder.visual_example(question, labeled=False)
            visual_cache[pair.qid] = visual_model.predict(example) >= threshold
        if not visual_cache[pair.qid]:
            scores.append(0.0)
        else:
            scores.append(premise_model.predict(premise_builder.pair_example(pair)))
    return scores


class RelevancePipelineService:
    """CLI 서브커맨드별 흐름: 입력 로드 → 서비스 호출 → 산출물 저장"""

    def __init__(
        self,
        question_repository: QuestionRepository,
        feature_store_repository: FeatureStoreRepository,
        manifest_repository: ManifestRepository,
        resource_repository: ResourceRepository,
        model_repository: ModelRepository,
    ):
        self.logger = logging.getLogger(__name__)
        self.question_repository = question_repository
        self.feature_store_repository = feature_store_repository
        self.manifest_repository = manifest_repository
        self.resource_repository = resource_repository
        self.model_repository = model_repository

    # ---- 입력 로드 ----

    def load_questions(self, config: RunConfig) -> Dict[str, QuestionRecord]:
        path = config.require_paths("questions")["questions"]
        questions = {q.qid: q for q in self.question_repository.read_question_stream(path)}
        self.logger.info(f"질문 {len(questions)}개 로드: {path}")
        return questions

    def load_embeddings(self, config: RunConfig, required: bool = False) -> Optional[EmbeddingTable]:
        if config.paths.embeddings is None and not required:
            return None
        path = config.require_paths("embeddings")["embeddings"]
        return self.resource_repository.load_embeddings(path, config.dims.embedding_dim)

    def load_pca(self, config: RunConfig) -> PCAModel:
        path = config.require_paths("pca")["pca"]
        model = self.model_repository.load_model(path)
        if not isinstance(model, PCAModel):
            raise DataException(f"PCA 파일이 아닙니다: {path}", error_code="NOT_A_PCA_MODEL")
        return model

    def load_features(self, config: RunConfig, n_max: Optional[int] = None, dim: Optional[int] = None):
        lexicon = None
        if config.paths.lexicon is not None:
            lexicon = self.resource_repository.load_lexicon(config.require_paths("lexicon")["lexicon"])
        return PosFeatureService(
            lexicon, n_max=n_max or config.dims.ngram_max, dim=dim or config.dims.hash_dim
        )

    def _optional_path(self, config: RunConfig, name: str) -> Optional[Path]:
        if getattr(config.paths, name) is None:
            return None
        return config.require_paths(name)[name]

    def load_manifest(self, config: RunConfig) -> DatasetManifest:
        return self.manifest_repository.read_manifest(config.require_paths("manifest")["manifest"])

    # ---- textfeat ----

    def tag(self, config: RunConfig, output_path: Path) -> int:
        path = config.require_paths("questions", "lexicon")["questions"]
        features = self.load_features(config)
        stream = features.tag_questions(self.question_repository.read_question_stream(path))
        return self.question_repository.write_questions(stream, output_path)

    def featurize(self, config: RunConfig, output_path: Path) -> int:
        """질문별 해시 n-gram 특징을 JSONL로 저장"""
        features = self.load_features(config)
        path = config.require_paths("questions")["questions"]
        count = 0
        with open(output_path, "w", encoding="utf-8") as f:
            for question in self.question_repository.read_question_stream(path):
                sparse = features.featurize(question)
                entries = {str(index): value for index, value in sorted(sparse.entries.items())}
                line = {"qid": question.qid, "dim": sparse.dim, "entries": entries}
                f.write(json.dumps(line, sort_keys=True) + "\n")
                count += 1
        self.logger.info(f"특징 {count}건 저장: {output_path}")
        return count

    # ---- numerics ----

    def fit_pca(self, config: RunConfig, k: int, output_dir: Path, sample_size: Optional[int] = None) -> PCAModel:
        store = self.feature_store_repository.open_feature_store(
            config.require_paths("features")["features"]
        )
        model = fit_pca(store.data, k, sample_size=sample_size, seed=config.seed)
        output_dir.mkdir(parents=True, exist_ok=True)
        self.model_repository.save_model(model, output_dir / PCA_FILE)
        return model

    def pack_features(self, vectors_path: Path, output_path: Path) -> None:
        self.feature_store_repository.write_rows(
            output_path, self.feature_store_repository.read_vector_lines(vectors_path)
        )

    # ---- miner ----

    def _miner(self, config: RunConfig, workers: int) -> DatasetMiner:
        paths = config.require_paths("annotations", "features", "vocab", "antonyms")
        return DatasetMiner(
            self.feature_store_repository.open_feature_store(paths["features"]),
            self.question_repository.read_annotations(paths["annotations"]),
            self.resource_repository.load_vocabulary(paths["vocab"], self._optional_path(config, "plurals")),
            self.resource_repository.load_antonyms(paths["antonyms"]),
            config.miner,
            workers=workers,
        )

    def build_dataset(self, config: RunConfig, output_dir: Path, workers: int) -> Tuple[DatasetManifest, str]:
        questions = self.load_questions(config)
        manifest = self._miner(config, workers).build_dataset(
            self.load_features(config).tag_questions(questions.values())
            if config.paths.lexicon is not None
            else questions.values()
        )
        output_dir.mkdir(parents=True, exist_ok=True)
        self.manifest_repository.write_manifest(manifest, output_dir / MANIFEST_FILE)
        table = render_stats(manifest.stats)
        (output_dir / "stats.txt").write_text(table, encoding="utf-8")
        self.manifest_repository.write_json(manifest.stats.model_dump(), output_dir / "stats.json")
        return manifest, table

    def mine_dissimilar(
        self, config: RunConfig, k: int, output_path: Path, iid: Optional[str] = None
    ) -> int:
        """이미지별로 가장 덜 비슷한 질문 k개를 JSONL로 저장"""
        questions = list(self.load_questions(config).values())
        embeddings = self.load_embeddings(config, required=True)
        iids = [iid] if iid else sorted({q.iid for q in questions if q.iid is not None})
        written = 0
        with open(output_path, "w", encoding="utf-8") as f:
            for image_id in iids:
                for qid, similarity in mine_dissimilar_questions(image_id, questions, embeddings, k):
                    f.write(json.dumps({"iid": image_id, "qid": qid, "similarity": similarity}, sort_keys=True) + "\n")
                    written += 1
        self.logger.info(f"질문 비유사도 마이닝 완료: 이미지 {len(iids)}장, {written}건")
        return written

    def split(self, config: RunConfig, test_fraction: float, output_dir: Path) -> Tuple[DatasetManifest, DatasetManifest]:
        train_set, test_set = split_manifest(self.load_manifest(config), test_fraction, config.miner.seed)
        output_dir.mkdir(parents=True, exist_ok=True)
        self.manifest_repository.write_manifest(train_set, output_dir / "train_manifest.jsonl")
        self.manifest_repository.write_manifest(test_set, output_dir / "test_manifest.jsonl")
        return train_set, test_set

    # ---- models ----

    def _builder(self, config: RunConfig, kind: ModelKind, questions, model: Optional[Classifier] = None) -> ExampleBuilder:
        store = embeddings = pca = None
        features = None
        if kind.is_visual_task:
            if isinstance(model, LRModel):
                features = self.load_features(config, n_max=model.ngram_max, dim=model.dim)
            else:
                features = self.load_features(config)
        else:
            store = self.feature_store_repository.open_feature_store(
                config.require_paths("features")["features"]
            )
            if kind in (ModelKind.MLP, ModelKind.LR_PREMISE):
                embeddings = self.load_embeddings(config, required=True)
            if kind == ModelKind.LR_PREMISE:
                pca = self.load_pca(config)
        return ExampleBuilder(kind, questions, store, embeddings, pca, features)

    def _items(self, config: RunConfig, kind: ModelKind, questions: Dict[str, QuestionRecord]) -> list:
        if kind.is_visual_task:
            return [q for q in questions.values() if q.visual is not None]
        return list(self.load_manifest(config).pairs)

    def train(self, config: RunConfig, kind: ModelKind, output_dir: Path) -> Tuple[Classifier, List[float]]:
        questions = self.load_questions(config)
        items = self._items(config, kind, questions)
        builder = self._builder(config, kind, questions)
        self.logger.info(f"🚀 {kind.value} 학습 시작: 예제 {len(items)}개")

        if kind in (ModelKind.LR_VISUAL, ModelKind.LR_PREMISE):
            dim = config.dims.hash_dim
            input_kind = "sparse"
            if kind == ModelKind.LR_PREMISE:
                dim = builder.pca.k + builder.embeddings.dim
                input_kind = "dense"
            model, history = lr_train_streaming(
                lambda: ((e.features, e.label) for e in map(builder, items)),
                config.train,
                dim,
                input_kind=input_kind,
                ngram_max=config.dims.ngram_max if kind == ModelKind.LR_VISUAL else None,
            )
        else:
            image_dim = builder.store.dim if builder.store is not None else None
            vocabulary = sorted({t.lower() for q in questions.values() for t in q.tokens})
            tag_vocabulary = sorted({t for q in items if isinstance(q, QuestionRecord) for t in builder.features.tags_for(q)})
            pca = self.load_pca(config) if kind == ModelKind.RELNET1 else None
            model = build_model(
                kind,
                config.dims,
                config.train.seed,
                image_dim=image_dim,
                vocabulary=vocabulary,
                tag_vocabulary=tag_vocabulary,
                pca=pca,
                embeddings=builder.embeddings or self.load_embeddings(config),
            )
            model, history = train(model, items, builder, config.train)

        output_dir.mkdir(parents=True, exist_ok=True)
        self.model_repository.save_model(model, output_dir / MODEL_FILE)
        self.manifest_repository.write_json(
            {"model": kind.value, "loss_history": history}, output_dir / "history.json"
        )
        return model, history

    def ngram_ablation(self, config: RunConfig, test_fraction: float, output_dir: Path) -> str:
        questions = sorted(
            (q for q in self.load_questions(config).values() if q.visual is not None),
            key=lambda q: q.qid,
        )
        order = make_rng(config.seed).permutation(len(questions))
        n_test = max(1, int(round(test_fraction * len(questions))))
        test = [questions[i] for i in order[:n_test]]
        train_set = [questions[i] for i in order[n_test:]]
        results = compare_ngram_orders(
            train_set, test, config.train, config.dims.hash_dim, self.load_features(config)
        )
        return EvaluationService().write_report(results, output_dir)

    # ---- eval ----

    def _datasets(
        self,
        kind: ModelKind,
        questions: Dict[str, QuestionRecord],
        manifest_paths: Sequence[Path],
        vtfq_paths: Sequence[Path],
    ) -> List[Tuple[str, list]]:
        """(데이터셋 이름, 평가 항목) 목록. 시각 판별 모델은 라벨 있는 질문 전체로 평가"""
        if kind.is_visual_task:
            return [("visual", [q for q in questions.values() if q.visual is not None])]
        datasets = [
            (Path(path).stem, list(self.manifest_repository.read_manifest(path).pairs))
            for path in manifest_paths
        ]
        datasets += [
            (Path(path).stem, list(self.question_repository.read_vtfq(path))) for path in vtfq_paths
        ]
        if not datasets:
            raise ConfigException("평가할 매니페스트가 없습니다", error_code="MISSING_DATASET")
        return datasets

    def evaluate(
        self,
        config: RunConfig,
        model_paths: Sequence[Path],
        manifest_paths: Sequence[Path],
        output_dir: Path,
        vtfq_paths: Sequence[Path] = (),
    ) -> Tuple[List[EvaluationResult], str]:
        """(모델, 데이터셋) 조합마다 한 행씩 평가해 report.txt / report.json 으로 저장"""
        questions = self.load_questions(config)
        results = []
        for model_path in model_paths:
            model = self.model_repository.load_model(model_path)
            kind = kind_of(model)
            builder = self._builder(config, kind, questions, model)
            model_name = f"{kind.value}:{Path(model_path).parent.name or Path(model_path).stem}"
            for name, items in self._datasets(kind, questions, manifest_paths, vtfq_paths):
                scores, labels = predict_all(model, items, builder)
                results.append(
                    evaluate_scores(model_name, name, scores, labels, config.train.threshold)
                )
        text = EvaluationService().write_report(results, output_dir)
        return results, text

    def predict(
        self,
        config: RunConfig,
        model_path: Path,
        output_path: Path,
        visual_model_path: Optional[Path] = None,
    ) -> int:
        """매니페스트 pair별 관련성 점수를 predictions.jsonl로 저장"""
        questions = self.load_questions(config)
        pairs = self.load_manifest(config).pairs
        model = self.model_repository.load_model(model_path)
        kind = kind_of(model)
        if kind.is_visual_task:
            raise ConfigException("predict에는 관련성(전제) 모델이 필요합니다", error_code="WRONG_MODEL_KIND")
        builder = self._builder(config, kind, questions, model)

        if visual_model_path is not None:
            visual_model = self.model_repository.load_model(visual_model_path)
            visual_kind = kind_of(visual_model)
            if not visual_kind.is_visual_task:
                raise ConfigException("--visual-model은 시각 판별 모델이어야 합니다", error_code="WRONG_MODEL_KIND")
            visual_builder = self._builder(config, visual_kind, questions, visual_model)
            scores = predict_relevance(
                visual_model, model, pairs, visual_builder, builder, config.train.threshold
            )
        else:
            scores = [model.predict(builder.pair_example(pair)) for pair in pairs]

        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", encoding="utf-8") as f:
            for pair, score in zip(pairs, scores):
                line = {
                    "qid": pair.qid,
                    "iid": pair.iid,
                    "score": float(score),
                    "relevant": bool(score >= config.train.threshold),
                }
                f.write(json.dumps(line, sort_keys=True) + "\n")
        self.logger.info(f"예측 {len(scores)}건 저장: {output_path}")
        return len(scores)

    def export_features(self, config: RunConfig, output_path: Path) -> int:
        questions = self.load_questions(config)
        store = self.feature_store_repository.open_feature_store(
            config.require_paths("features")["features"]
        )
        return FeatureExportService().export_features(
            self.load_manifest(config).pairs,
            questions,
            store,
            self.load_embeddings(config, required=True),
            self.load_pca(config),
            output_path,
        )
