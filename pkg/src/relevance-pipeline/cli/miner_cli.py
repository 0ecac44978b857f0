import logging
from pathlib import Path
from typing import Annotated, Optional

import typer

from cli.common import (
    AnnotationsOpt,
    AntonymsOpt,
    ConfigOpt,
    EmbeddingsOpt,
    FeaturesOpt,
    LexiconOpt,
    LogLevelOpt,
    ManifestOpt,
    OutputDirOpt,
    PluralsOpt,
    QuestionsOpt,
    SeedOpt,
    VocabOpt,
    WorkersOpt,
    command_context,
    console,
    load_run_config,
    output_dir_of,
)
from dependencies import get_relevance_pipeline_service
from dto.config_dto import FalsificationMode, MiningOrder
from service.dataset_miner import render_stats
from utils.app_initializer import get_worker_count
from utils.run_manifest import write_run_manifest

router = typer.Typer()
logger = logging.getLogger(__name__)

KSimilarOpt = Annotated[Optional[int], typer.Option("--k-similar", min=1, help="후보로 볼 유사 이미지 수")]
OrderOpt = Annotated[Optional[MiningOrder], typer.Option("--order", help="마이닝할 전제 차수")]
FalsificationOpt = Annotated[
    Optional[FalsificationMode], typer.Option("--falsification-mode", help="부정 이미지 판정 방식")
]
MaxNegativesOpt = Annotated[
    Optional[int], typer.Option("--max-negatives", min=0, help="질문당 최대 부정 이미지 수")
]


@router.command("mine", help="이미지별로 가장 덜 비슷한 질문 k개를 dissimilar_questions.jsonl로 저장")
def mine(
    k: Annotated[int, typer.Option("--k", min=1, help="이미지당 질문 수")] = 5,
    iid: Annotated[Optional[str], typer.Option("--iid", help="특정 이미지만 마이닝")] = None,
    config_file: ConfigOpt = None,
    questions: QuestionsOpt = None,
    embeddings: EmbeddingsOpt = None,
    embedding_dim: Annotated[Optional[int], typer.Option("--embedding-dim", min=1, help="임베딩 차원")] = None,
    seed: SeedOpt = None,
    output_dir: OutputDirOpt = None,
    log_level: LogLevelOpt = None,
):
    with command_context("mine", log_level):
        config = load_run_config(
            config_file,
            paths={"questions": questions, "embeddings": embeddings},
            dims={"embedding_dim": embedding_dim},
            seed=seed,
            output_dir=output_dir,
        )
        target = output_dir_of(config)
        target.mkdir(parents=True, exist_ok=True)
        path = target / "dissimilar_questions.jsonl"
        written = get_relevance_pipeline_service().mine_dissimilar(config, k, path, iid)
        write_run_manifest(target, "mine", config)
        console.print(f"질문 비유사도 마이닝 완료: {written}건 → {path}")


@router.command("build-dataset", help="부정 이미지 마이닝으로 manifest.jsonl과 통계 표를 만든다")
def build_dataset(
    config_file: ConfigOpt = None,
    questions: QuestionsOpt = None,
    annotations: AnnotationsOpt = None,
    features: FeaturesOpt = None,
    vocab: VocabOpt = None,
    plurals: PluralsOpt = None,
    antonyms: AntonymsOpt = None,
    lexicon: LexiconOpt = None,
    k_similar: KSimilarOpt = None,
    order: OrderOpt = None,
    falsification_mode: FalsificationOpt = None,
    max_negatives: MaxNegativesOpt = None,
    seed: SeedOpt = None,
    workers: WorkersOpt = None,
    output_dir: OutputDirOpt = None,
    log_level: LogLevelOpt = None,
):
    with command_context("build-dataset", log_level):
        config = load_run_config(
            config_file,
            paths={
                "questions": questions,
                "annotations": annotations,
                "features": features,
                "vocab": vocab,
                "plurals": plurals,
                "antonyms": antonyms,
                "lexicon": lexicon,
            },
            miner={
                "k_similar": k_similar,
                "order": order,
                "falsification_mode": falsification_mode,
                "max_negatives_per_question": max_negatives,
            },
            seed=seed,
            workers=workers,
            output_dir=output_dir,
        )
        target = output_dir_of(config)
        manifest, table = get_relevance_pipeline_service().build_dataset(
            config, target, get_worker_count(config.workers)
        )
        write_run_manifest(target, "build-dataset", config)
        console.print(table, markup=False, highlight=False)
        console.print(f"✅ pair {len(manifest.pairs)}개 → {target / 'manifest.jsonl'}")


@router.command("split", help="매니페스트를 이미지 단위로 train/test로 나눈다")
def split(
    test_fraction: Annotated[float, typer.Option("--test-fraction", min=0.0, max=1.0, help="테스트 비율")] = 0.2,
    config_file: ConfigOpt = None,
    manifest: ManifestOpt = None,
    seed: SeedOpt = None,
    output_dir: OutputDirOpt = None,
    log_level: LogLevelOpt = None,
):
    with command_context("split", log_level):
        config = load_run_config(
            config_file, paths={"manifest": manifest}, seed=seed, output_dir=output_dir
        )
        target = output_dir_of(config)
        train_set, test_set = get_relevance_pipeline_service().split(config, test_fraction, target)
        write_run_manifest(target, "split", config)
        console.print(f"분할 완료: train {len(train_set.pairs)}개 / test {len(test_set.pairs)}개")


@router.command("stats", help="매니페스트의 pair 통계 표를 출력")
def stats(
    config_file: ConfigOpt = None,
    manifest: ManifestOpt = None,
    log_level: LogLevelOpt = None,
):
    with command_context("stats", log_level):
        config = load_run_config(config_file, paths={"manifest": manifest})
        dataset = get_relevance_pipeline_service().load_manifest(config)
        console.print(render_stats(dataset.stats), markup=False, highlight=False)
