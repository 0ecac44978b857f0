import logging
from pathlib import Path
from typing import Annotated, Optional

import typer

from cli.common import (
    ConfigOpt,
    FeaturesOpt,
    LogLevelOpt,
    OutputDirOpt,
    SeedOpt,
    command_context,
    console,
    load_run_config,
    output_dir_of,
)
from dependencies import get_relevance_pipeline_service
from utils.run_manifest import write_run_manifest

router = typer.Typer()
logger = logging.getLogger(__name__)


@router.command("pca", help="features.bin에 PCA를 학습해 pca.bin으로 저장")
def pca(
    k: Annotated[int, typer.Option("--k", min=1, help="주성분 수")] = 10,
    sample_size: Annotated[
        Optional[int], typer.Option("--sample-size", min=1, help="균등 추출할 이미지 수 (기본: 전체)")
    ] = None,
    config_file: ConfigOpt = None,
    features: FeaturesOpt = None,
    seed: SeedOpt = None,
    output_dir: OutputDirOpt = None,
    log_level: LogLevelOpt = None,
):
    with command_context("pca", log_level):
        config = load_run_config(
            config_file, paths={"features": features}, seed=seed, output_dir=output_dir
        )
        target = output_dir_of(config)
        model = get_relevance_pipeline_service().fit_pca(config, k, target, sample_size)
        write_run_manifest(target, "pca", config)
        explained = ", ".join(f"{value:.4f}" for value in model.eigenvalues)
        console.print(f"PCA 완료: {model.input_dim}차원 → {model.k}차원 (고유값: {explained})")


@router.command("pack-features", help="JSONL {iid, vector} 파일을 features.bin으로 변환")
def pack_features(
    vectors: Annotated[Path, typer.Argument(help="한 줄에 {\"iid\", \"vector\"} 인 JSONL")],
    config_file: ConfigOpt = None,
    seed: SeedOpt = None,
    output_dir: OutputDirOpt = None,
    log_level: LogLevelOpt = None,
):
    with command_context("pack-features", log_level):
        config = load_run_config(config_file, seed=seed, output_dir=output_dir)
        target = output_dir_of(config)
        target.mkdir(parents=True, exist_ok=True)
        get_relevance_pipeline_service().pack_features(vectors, target / "features.bin")
        write_run_manifest(target, "pack-features", config, extra_inputs={"vectors": vectors})
        console.print(f"특징 저장 완료: {target / 'features.bin'}")
