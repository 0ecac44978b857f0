import logging
from pathlib import Path
from typing import Annotated, Optional

import typer

from cli.common import (
    ConfigOpt,
    LexiconOpt,
    LogLevelOpt,
    OutputDirOpt,
    QuestionsOpt,
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


@router.command("tag", help="질문에 POS 태그를 붙여 tagged_questions.jsonl로 저장")
def tag(
    config_file: ConfigOpt = None,
    questions: QuestionsOpt = None,
    lexicon: LexiconOpt = None,
    seed: SeedOpt = None,
    output_dir: OutputDirOpt = None,
    log_level: LogLevelOpt = None,
):
    with command_context("tag", log_level):
        config = load_run_config(
            config_file,
            paths={"questions": questions, "lexicon": lexicon},
            seed=seed,
            output_dir=output_dir,
        )
        target = output_dir_of(config)
        target.mkdir(parents=True, exist_ok=True)
        written = get_relevance_pipeline_service().tag(config, target / "tagged_questions.jsonl")
        write_run_manifest(target, "tag", config)
        console.print(f"태깅 완료: 질문 {written}개 → {target / 'tagged_questions.jsonl'}")


@router.command("featurize", help="질문별 해시 POS n-gram 특징을 question_features.jsonl로 저장")
def featurize(
    config_file: ConfigOpt = None,
    questions: QuestionsOpt = None,
    lexicon: LexiconOpt = None,
    ngram_max: Annotated[Optional[int], typer.Option("--ngram-max", min=1, max=3, help="최대 n-gram 차수")] = None,
    hash_dim: Annotated[Optional[int], typer.Option("--hash-dim", min=1, help="해시 공간 크기")] = None,
    seed: SeedOpt = None,
    output_dir: OutputDirOpt = None,
    log_level: LogLevelOpt = None,
):
    with command_context("featurize", log_level):
        config = load_run_config(
            config_file,
            paths={"questions": questions, "lexicon": lexicon},
            dims={"ngram_max": ngram_max, "hash_dim": hash_dim},
            seed=seed,
            output_dir=output_dir,
        )
        target = output_dir_of(config)
        target.mkdir(parents=True, exist_ok=True)
        path: Path = target / "question_features.jsonl"
        written = get_relevance_pipeline_service().featurize(config, path)
        write_run_manifest(target, "featurize", config)
        console.print(f"특징 추출 완료: 질문 {written}개 → {path}")
