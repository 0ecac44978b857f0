import logging
from pathlib import Path
from typing import Annotated, List, Optional

import typer

from cli.common import (
    ConfigOpt,
    EmbeddingsOpt,
    FeaturesOpt,
    LexiconOpt,
    LogLevelOpt,
    ManifestOpt,
    OutputDirOpt,
    PcaOpt,
    QuestionsOpt,
    SeedOpt,
    command_context,
    console,
    load_run_config,
    output_dir_of,
)
from dependencies import get_relevance_pipeline_service
from dto.config_dto import ModelKind, Step1Mode
from utils.exceptions import ConfigException
from utils.run_manifest import write_run_manifest

router = typer.Typer()
logger = logging.getLogger(__name__)


@router.command("train", help="모델을 학습해 model.bin과 history.json으로 저장")
def train(
    model_kind: Annotated[ModelKind, typer.Argument(help="학습할 모델 종류")],
    config_file: ConfigOpt = None,
    questions: QuestionsOpt = None,
    features: FeaturesOpt = None,
    embeddings: EmbeddingsOpt = None,
    lexicon: LexiconOpt = None,
    manifest: ManifestOpt = None,
    pca: PcaOpt = None,
    epochs: Annotated[Optional[int], typer.Option("--epochs", min=0)] = None,
    learning_rate: Annotated[Optional[float], typer.Option("--learning-rate")] = None,
    batch_size: Annotated[Optional[int], typer.Option("--batch-size", min=1)] = None,
    l2: Annotated[Optional[float], typer.Option("--l2", help="L2 정규화 계수")] = None,
    momentum: Annotated[Optional[float], typer.Option("--momentum")] = None,
    threshold: Annotated[Optional[float], typer.Option("--threshold", help="양성 판정 임계값")] = None,
    embedding_dim: Annotated[Optional[int], typer.Option("--embedding-dim", min=1)] = None,
    hidden_dim: Annotated[Optional[int], typer.Option("--hidden-dim", min=1)] = None,
    image_embed_dim: Annotated[Optional[int], typer.Option("--image-embed-dim", min=1)] = None,
    pos_embedding_dim: Annotated[Optional[int], typer.Option("--pos-embedding-dim", min=1)] = None,
    pos_hidden_dim: Annotated[Optional[int], typer.Option("--pos-hidden-dim", min=1)] = None,
    mlp_hidden: Annotated[
        Optional[List[int]], typer.Option("--mlp-hidden", help="MLP 은닉층 크기 (여러 번 지정)")
    ] = None,
    hash_dim: Annotated[Optional[int], typer.Option("--hash-dim", min=1)] = None,
    ngram_max: Annotated[Optional[int], typer.Option("--ngram-max", min=1, max=3)] = None,
    step1_mode: Annotated[Optional[Step1Mode], typer.Option("--step1-mode", help="RelNet3/4 첫 입력 정렬 방식")] = None,
    ngram_ablation: Annotated[
        bool, typer.Option("--ngram-ablation", help="lr-visual: n-gram 차수 1~3 비교 리포트")
    ] = False,
    test_fraction: Annotated[float, typer.Option("--test-fraction", min=0.0, max=1.0)] = 0.2,
    seed: SeedOpt = None,
    output_dir: OutputDirOpt = None,
    log_level: LogLevelOpt = None,
):
    with command_context("train", log_level):
        config = load_run_config(
            config_file,
            paths={
                "questions": questions,
                "features": features,
                "embeddings": embeddings,
                "lexicon": lexicon,
                "manifest": manifest,
                "pca": pca,
            },
            train={
                "epochs": epochs,
                "learning_rate": learning_rate,
                "batch_size": batch_size,
                "l2": l2,
                "momentum": momentum,
                "threshold": threshold,
            },
            dims={
                "embedding_dim": embedding_dim,
                "hidden_dim": hidden_dim,
                "image_embed_dim": image_embed_dim,
                "pos_embedding_dim": pos_embedding_dim,
                "pos_hidden_dim": pos_hidden_dim,
                "mlp_hidden": mlp_hidden or None,
                "hash_dim": hash_dim,
                "ngram_max": ngram_max,
                "step1_mode": step1_mode,
            },
            model_kind=model_kind,
            seed=seed,
            output_dir=output_dir,
        )
        target = output_dir_of(config)
        service = get_relevance_pipeline_service()

        if ngram_ablation:
            if model_kind != ModelKind.LR_VISUAL:
                raise ConfigException(
                    "--ngram-ablation은 lr-visual에서만 쓸 수 있습니다", error_code="WRONG_MODEL_KIND"
                )
            text = service.ngram_ablation(config, test_fraction, target)
            write_run_manifest(target, "train --ngram-ablation", config)
            console.print(text, markup=False, highlight=False)
            return

        _, history = service.train(config, model_kind, target)
        write_run_manifest(target, "train", config)
        final = f"{history[-1]:.6f}" if history else "-"
        console.print(f"✅ {model_kind.value} 학습 완료: epoch {len(history)}회, 최종 loss {final}")


@router.command("predict", help="매니페스트 pair별 관련성 점수를 predictions.jsonl로 저장")
def predict(
    model: Annotated[Path, typer.Option("--model", help="관련성(전제) 모델 model.bin")],
    visual_model: Annotated[
        Optional[Path], typer.Option("--visual-model", help="시각 판별 모델 (비시각 질문은 무관으로 판정)")
    ] = None,
    config_file: ConfigOpt = None,
    questions: QuestionsOpt = None,
    features: FeaturesOpt = None,
    embeddings: EmbeddingsOpt = None,
    lexicon: LexiconOpt = None,
    manifest: ManifestOpt = None,
    pca: PcaOpt = None,
    embedding_dim: Annotated[Optional[int], typer.Option("--embedding-dim", min=1)] = None,
    threshold: Annotated[Optional[float], typer.Option("--threshold")] = None,
    seed: SeedOpt = None,
    output_dir: OutputDirOpt = None,
    log_level: LogLevelOpt = None,
):
    with command_context("predict", log_level):
        config = load_run_config(
            config_file,
            paths={
                "questions": questions,
                "features": features,
                "embeddings": embeddings,
                "lexicon": lexicon,
                "manifest": manifest,
                "pca": pca,
                "model": model,
            },
            train={"threshold": threshold},
            dims={"embedding_dim": embedding_dim},
            seed=seed,
            output_dir=output_dir,
        )
        target = output_dir_of(config)
        path = target / "predictions.jsonl"
        written = get_relevance_pipeline_service().predict(config, model, path, visual_model)
        extra = {"visual_model": visual_model} if visual_model is not None else None
        write_run_manifest(target, "predict", config, extra_inputs=extra)
        console.print(f"예측 완료: {written}건 → {path}")


@router.command("export-features", help="pair별 (라벨, PCA 이미지 특징, 평균 임베딩)을 헤더 없는 CSV로 저장")
def export_features(
    config_file: ConfigOpt = None,
    questions: QuestionsOpt = None,
    features: FeaturesOpt = None,
    embeddings: EmbeddingsOpt = None,
    manifest: ManifestOpt = None,
    pca: PcaOpt = None,
    embedding_dim: Annotated[Optional[int], typer.Option("--embedding-dim", min=1)] = None,
    seed: SeedOpt = None,
    output_dir: OutputDirOpt = None,
    log_level: LogLevelOpt = None,
):
    with command_context("export-features", log_level):
        config = load_run_config(
            config_file,
            paths={
                "questions": questions,
                "features": features,
                "embeddings": embeddings,
                "manifest": manifest,
                "pca": pca,
            },
            dims={"embedding_dim": embedding_dim},
            seed=seed,
            output_dir=output_dir,
        )
        target = output_dir_of(config)
        path = target / "features.csv"
        written = get_relevance_pipeline_service().export_features(config, path)
        write_run_manifest(target, "export-features", config)
        console.print(f"특징 CSV 저장 완료: {written}행 → {path}")
