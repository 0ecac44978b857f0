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
    OutputDirOpt,
    PcaOpt,
    QuestionsOpt,
    SeedOpt,
    command_context,
    console,
    load_run_config,
    output_dir_of,
    path_list,
)
from dependencies import get_relevance_pipeline_service
from utils.exceptions import DataException
from utils.run_manifest import write_run_manifest

router = typer.Typer()
logger = logging.getLogger(__name__)


@router.command("evaluate", help="(모델, 데이터셋)마다 per-class 지표를 계산해 report.txt/report.json 저장")
def evaluate(
    models: Annotated[List[Path], typer.Option("--model", help="평가할 model.bin (여러 번 지정)")],
    manifests: Annotated[
        Optional[List[Path]], typer.Option("--manifest", help="평가 매니페스트 (여러 번 지정)")
    ] = None,
    vtfq: Annotated[
        Optional[List[Path]], typer.Option("--vtfq", help="VTFQ 형식 관련성 라벨 JSONL (여러 번 지정)")
    ] = None,
    config_file: ConfigOpt = None,
    questions: QuestionsOpt = None,
    features: FeaturesOpt = None,
    embeddings: EmbeddingsOpt = None,
    lexicon: LexiconOpt = None,
    pca: PcaOpt = None,
    embedding_dim: Annotated[Optional[int], typer.Option("--embedding-dim", min=1)] = None,
    threshold: Annotated[Optional[float], typer.Option("--threshold")] = None,
    seed: SeedOpt = None,
    output_dir: OutputDirOpt = None,
    log_level: LogLevelOpt = None,
):
    with command_context("evaluate", log_level):
        config = load_run_config(
            config_file,
            paths={
                "questions": questions,
                "features": features,
                "embeddings": embeddings,
                "lexicon": lexicon,
                "pca": pca,
            },
            train={"threshold": threshold},
            dims={"embedding_dim": embedding_dim},
            seed=seed,
            output_dir=output_dir,
        )
        manifest_paths = path_list(manifests)
        if not manifest_paths and config.paths.manifest is not None:
            manifest_paths = [config.paths.manifest]
        for path in [*models, *manifest_paths, *path_list(vtfq)]:
            if not Path(path).exists():
                raise DataException(f"입력 파일이 존재하지 않습니다: {path}", error_code="MISSING_INPUT")

        target = output_dir_of(config)
        _, text = get_relevance_pipeline_service().evaluate(
            config, models, manifest_paths, target, vtfq_paths=path_list(vtfq)
        )
        extra = {f"model_{i}": path for i, path in enumerate(models)}
        extra.update({f"dataset_{i}": path for i, path in enumerate([*manifest_paths, *path_list(vtfq)])})
        write_run_manifest(target, "evaluate", config, extra_inputs=extra)
        console.print(text, markup=False, highlight=False)
