"""CLI 종단 테스트 (typer CliRunner)"""

import json
from pathlib import Path

import pytest
from typer.testing import CliRunner

from main import app

runner = CliRunner()
BUNDLED_PLURALS = Path(__file__).resolve().parent.parent / "data" / "plurals.tsv"

COMMANDS = [
    "tag",
    "featurize",
    "pca",
    "pack-features",
    "mine",
    "build-dataset",
    "split",
    "stats",
    "train",
    "predict",
    "export-features",
    "evaluate",
]


def invoke(*args):
    return runner.invoke(app, [str(arg) for arg in args])


def _squash(text: str) -> str:
    return "".join(text.split())


@pytest.fixture(scope="module")
def built_dataset(mini_corpus, tmp_path_factory):
    """미니 코퍼스로 만든 매니페스트 (모듈 공유)"""
    output = tmp_path_factory.mktemp("dataset")
    result = runner.invoke(
        app,
        [
            "build-dataset",
            *mini_corpus.cli_args("questions", "annotations", "features", "vocab", "antonyms"),
            "--k-similar", "3",
            "--max-negatives", "3",
            "--workers", "2",
            "--output-dir", str(output),
        ],
    )
    assert result.exit_code == 0, result.output
    return output


@pytest.mark.integration
class TestCliSurface:
    """명령 목록 / 도움말 / 인자 오류"""

    @pytest.mark.parametrize("command", COMMANDS)
    def test_help(self, command):
        result = invoke(command, "--help")
        assert result.exit_code == 0
        assert "--log-level" in result.output

    def test_root_help_lists_commands(self):
        result = invoke("--help")
        assert result.exit_code == 0
        for command in COMMANDS:
            assert command in result.output

    def test_unknown_flag_rejected(self):
        result = invoke("stats", "--no-such-flag")
        assert result.exit_code == 2

    def test_invalid_config_exits_2(self, tmp_path, mini_corpus):
        config_file = tmp_path / "config.json"
        config_file.write_text(json.dumps({"miner": {"k_similar": 0}}), encoding="utf-8")
        result = invoke("build-dataset", "--config", config_file, *mini_corpus.cli_args("questions"))
        assert result.exit_code == 2
        assert "INVALID_CONFIG" in result.output

    def test_missing_features_exits_3_with_path(self, tmp_path, mini_corpus):
        # Given
        absent = tmp_path / "absent_features.bin"

        # When
        result = invoke(
            "build-dataset",
            *mini_corpus.cli_args("questions", "annotations", "vocab", "antonyms"),
            "--features", absent,
            "--output-dir", tmp_path / "out",
        )

        # Then
        assert result.exit_code == 3
        assert _squash(str(absent)) in _squash(result.output)

    def test_wrong_model_kind_for_ablation(self, tmp_path, mini_corpus):
        result = invoke("train", "mlp", "--ngram-ablation", *mini_corpus.cli_args("questions"))
        assert result.exit_code == 2
        assert "WRONG_MODEL_KIND" in result.output


@pytest.mark.integration
class TestDatasetCommands:
    """build-dataset / split / stats"""

    def test_build_dataset_outputs(self, built_dataset):
        assert (built_dataset / "manifest.jsonl").exists()
        assert (built_dataset / "stats.txt").exists()
        run = json.loads((built_dataset / "run_manifest.json").read_text(encoding="utf-8"))
        assert run["command"] == "build-dataset"
        assert set(run["inputs"]) == {"questions", "annotations", "features", "vocab", "antonyms"}

    def test_reruns_are_byte_identical(self, built_dataset, mini_corpus, tmp_path):
        result = invoke(
            "build-dataset",
            *mini_corpus.cli_args("questions", "annotations", "features", "vocab", "antonyms"),
            "--k-similar", "3",
            "--max-negatives", "3",
            "--workers", "1",
            "--output-dir", tmp_path,
        )
        assert result.exit_code == 0, result.output
        for name in ("manifest.jsonl", "stats.txt", "stats.json"):
            assert (tmp_path / name).read_bytes() == (built_dataset / name).read_bytes()

    def test_stats(self, built_dataset):
        result = invoke("stats", "--manifest", built_dataset / "manifest.jsonl")
        assert result.exit_code == 0
        assert result.output.strip() == (built_dataset / "stats.txt").read_text(encoding="utf-8").strip()

    def test_split(self, built_dataset, tmp_path):
        result = invoke(
            "split", "--manifest", built_dataset / "manifest.jsonl", "--test-fraction", "0.25",
            "--output-dir", tmp_path,
        )
        assert result.exit_code == 0, result.output
        train_iids = {json.loads(line).get("iid") for line in (tmp_path / "train_manifest.jsonl").open()}
        test_iids = {json.loads(line).get("iid") for line in (tmp_path / "test_manifest.jsonl").open()}
        assert not (train_iids - {None}) & (test_iids - {None})

    def test_tampered_manifest_exits_3(self, built_dataset, tmp_path):
        lines = (built_dataset / "manifest.jsonl").read_text(encoding="utf-8").splitlines()
        (tmp_path / "manifest.jsonl").write_text("\n".join(lines[:-1]) + "\n", encoding="utf-8")
        result = invoke("stats", "--manifest", tmp_path / "manifest.jsonl")
        assert result.exit_code == 3
        assert "MANIFEST_CORRUPTED" in result.output

    def test_untagged_questions_are_tagged_from_lexicon(self, mini_corpus, tmp_path):
        # Given: pos_tags를 뺀 질문 파일
        untagged = tmp_path / "untagged.jsonl"
        with open(mini_corpus.paths["questions"], encoding="utf-8") as src, open(untagged, "w", encoding="utf-8") as dst:
            for line in src:
                record = json.loads(line)
                record.pop("pos_tags", None)
                dst.write(json.dumps(record) + "\n")
        common = [
            "build-dataset",
            "--questions", untagged,
            *mini_corpus.cli_args("annotations", "features", "vocab", "antonyms"),
            "--plurals", BUNDLED_PLURALS,
            "--k-similar", "3",
            "--max-negatives", "3",
        ]

        # When
        without_lexicon = invoke(*common, "--output-dir", tmp_path / "plain")
        with_lexicon = invoke(*common, *mini_corpus.cli_args("lexicon"), "--output-dir", tmp_path / "tagged")

        # Then
        assert without_lexicon.exit_code == 0, without_lexicon.output
        assert with_lexicon.exit_code == 0, with_lexicon.output
        plain = json.loads((tmp_path / "plain" / "stats.json").read_text(encoding="utf-8"))
        tagged = json.loads((tmp_path / "tagged" / "stats.json").read_text(encoding="utf-8"))
        assert plain["second_order_non_relevant"] == 0
        assert plain["relevant"] == tagged["relevant"] == 50
        assert tagged["second_order_non_relevant"] > 0


@pytest.mark.integration
class TestTextAndNumericCommands:
    """tag / featurize / mine / pca / pack-features"""

    def test_tag_and_featurize(self, mini_corpus, tmp_path):
        result = invoke("tag", *mini_corpus.cli_args("questions", "lexicon"), "--output-dir", tmp_path)
        assert result.exit_code == 0, result.output
        assert len((tmp_path / "tagged_questions.jsonl").read_text(encoding="utf-8").splitlines()) == 50

        result = invoke(
            "featurize", *mini_corpus.cli_args("questions"), "--hash-dim", "128", "--output-dir", tmp_path
        )
        assert result.exit_code == 0, result.output
        first = json.loads((tmp_path / "question_features.jsonl").read_text(encoding="utf-8").splitlines()[0])
        assert first["qid"] == "q000" and first["dim"] == 128
        # 태그 5개 → unigram 5 + bigram 4
        assert sum(first["entries"].values()) == 9

    def test_mine_dissimilar_questions(self, mini_corpus, tmp_path):
        result = invoke(
            "mine", "--k", "2", "--iid", "img00", *mini_corpus.cli_args("questions", "embeddings"),
            "--embedding-dim", "8", "--output-dir", tmp_path,
        )
        assert result.exit_code == 0, result.output
        rows = [json.loads(line) for line in (tmp_path / "dissimilar_questions.jsonl").open()]
        assert len(rows) == 2 and all(row["iid"] == "img00" for row in rows)

    def test_pca(self, mini_corpus, tmp_path):
        result = invoke("pca", "--k", "4", *mini_corpus.cli_args("features"), "--output-dir", tmp_path)
        assert result.exit_code == 0, result.output
        assert (tmp_path / "pca.bin").exists()
        assert "16차원 → 4차원" in result.output

    def test_pack_features(self, tmp_path):
        vectors = tmp_path / "vectors.jsonl"
        vectors.write_text('{"iid": "a", "vector": [1, 2, 3]}\n{"iid": "b", "vector": [4, 5, 6]}\n', encoding="utf-8")
        result = invoke("pack-features", vectors, "--output-dir", tmp_path / "out")
        assert result.exit_code == 0, result.output
        assert (tmp_path / "out" / "features.bin").read_bytes()[:4] == b"QRFS"


@pytest.mark.integration
class TestModelCommands:
    """train / predict / export-features / evaluate"""

    def test_premise_lr_pipeline(self, mini_corpus, built_dataset, tmp_path):
        # Given: PCA 학습
        assert invoke("pca", "--k", "4", *mini_corpus.cli_args("features"), "--output-dir", tmp_path).exit_code == 0
        common = [
            *mini_corpus.cli_args("questions", "features", "embeddings"),
            "--manifest", built_dataset / "manifest.jsonl",
            "--pca", tmp_path / "pca.bin",
            "--embedding-dim", "8",
        ]

        # When
        trained = invoke("train", "lr-premise", *common, "--epochs", "3", "--output-dir", tmp_path / "lr")
        visual = invoke(
            "train", "lr-visual", *mini_corpus.cli_args("questions", "lexicon"), "--hash-dim", "256",
            "--epochs", "3", "--output-dir", tmp_path / "visual",
        )
        predicted = invoke(
            "predict", "--model", tmp_path / "lr" / "model.bin", "--visual-model", tmp_path / "visual" / "model.bin",
            *common, "--output-dir", tmp_path / "pred",
        )
        exported = invoke("export-features", *common, "--output-dir", tmp_path / "csv")

        # Then
        assert trained.exit_code == 0, trained.output
        assert visual.exit_code == 0, visual.output
        assert predicted.exit_code == 0, predicted.output
        assert exported.exit_code == 0, exported.output
        history = json.loads((tmp_path / "lr" / "history.json").read_text(encoding="utf-8"))
        assert history["model"] == "lr-premise" and len(history["loss_history"]) == 3
        manifest_lines = (built_dataset / "manifest.jsonl").read_text(encoding="utf-8").splitlines()
        predictions = (tmp_path / "pred" / "predictions.jsonl").read_text(encoding="utf-8").splitlines()
        assert len(predictions) == len(manifest_lines) - 1
        non_visual = [json.loads(line) for line in predictions if json.loads(line)["qid"] >= "q040"]
        assert non_visual and all(0.0 <= row["score"] <= 1.0 for row in non_visual)
        rows = [json.loads(line) for line in predictions]
        assert all(isinstance(row["relevant"], bool) and isinstance(row["score"], float) for row in rows)
        first_row = (tmp_path / "csv" / "features.csv").read_text(encoding="utf-8").splitlines()[0]
        assert len(first_row.split(",")) == 1 + 4 + 8

    def test_evaluate_requires_existing_model(self, built_dataset, mini_corpus, tmp_path):
        result = invoke(
            "evaluate", "--model", tmp_path / "nothing.bin", "--manifest", built_dataset / "manifest.jsonl",
            *mini_corpus.cli_args("questions", "features"),
        )
        assert result.exit_code == 3
        assert "nothing.bin" in result.output

    @pytest.mark.slow
    @pytest.mark.acceptance
    def test_relnet4_train_then_evaluate(self, mini_corpus, built_dataset, tmp_path):
        # Given
        manifest = built_dataset / "manifest.jsonl"

        # When
        trained = invoke(
            "train", "relnet4",
            *mini_corpus.cli_args("questions", "features", "embeddings"),
            "--manifest", manifest,
            "--embedding-dim", "8",
            "--hidden-dim", "16",
            "--image-embed-dim", "16",
            "--epochs", "200",
            "--learning-rate", "0.1",
            "--momentum", "0.9",
            "--batch-size", "8",
            "--seed", "3",
            "--output-dir", tmp_path / "relnet4",
        )
        evaluated = invoke(
            "evaluate",
            "--model", tmp_path / "relnet4" / "model.bin",
            "--manifest", manifest,
            *mini_corpus.cli_args("questions", "features"),
            "--output-dir", tmp_path / "eval",
        )

        # Then
        assert trained.exit_code == 0, trained.output
        assert evaluated.exit_code == 0, evaluated.output
        rows = json.loads((tmp_path / "eval" / "report.json").read_text(encoding="utf-8"))
        assert len(rows) == 1
        assert rows[0]["dataset_name"] == "manifest"
        assert rows[0]["accuracy"] >= 0.95
        assert "relnet4" in evaluated.output
