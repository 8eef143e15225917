"""Pipeline stage tests: prepare determinism, resume, scoring, CLI exit codes."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from ctxprobe import pipelines
from ctxprobe.cli import main
from ctxprobe.config import load_config
from ctxprobe.errors import ConfigError
from ctxprobe.instances import read_instances

from runutil import ALL_CELLS, write_run_config


def _read_lines(path: Path):
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


class TestPrepare:
    def test_four_conditions_times_examples(self, tmp_path):
        cells = [
            {"prompt_kind": "generic", "condition": c}
            for c in ("gold", "perturbed", "random", "antecedent_swapped")
        ]
        config_path = write_run_config(
            tmp_path, n_examples=12, cells=cells, with_documents=False
        )
        config = load_config(config_path)
        counts = pipelines.prepare(config)
        assert counts["contrast"] == 4 * 12

    def test_prepare_is_byte_identical_under_same_seed(self, tmp_path):
        config_path = write_run_config(tmp_path, n_examples=6, run_id="a")
        config = load_config(config_path)
        pipelines.prepare(config)
        first = (config.out / pipelines.CONTRAST_FILE).read_bytes()
        genfirst = (config.out / pipelines.GENERATE_FILE).read_bytes()
        pipelines.prepare(config)
        assert (config.out / pipelines.CONTRAST_FILE).read_bytes() == first
        assert (config.out / pipelines.GENERATE_FILE).read_bytes() == genfirst

    def test_swapped_without_lexicon_is_config_error(self, tmp_path):
        cells = [{"prompt_kind": "generic", "condition": "antecedent_swapped"}]
        config_path = write_run_config(tmp_path, cells=cells, with_documents=False)
        raw = json.loads(config_path.read_text())
        raw.pop("lexicon")
        config_path.write_text(json.dumps(raw))
        with pytest.raises(ConfigError, match="lexicon"):
            load_config(config_path)

    def test_swap_log_written(self, tmp_path):
        cells = [{"prompt_kind": "generic", "condition": "antecedent_swapped"}]
        config_path = write_run_config(tmp_path, n_examples=5, cells=cells, with_documents=False)
        config = load_config(config_path)
        pipelines.prepare(config)
        rows = _read_lines(config.out / pipelines.SWAP_LOG_FILE)
        assert rows
        assert all(row["replacement_gender"] != row["original_gender"] for row in rows)

    def test_attribute_instances_cover_exactly_two_pairs(self, tmp_path):
        config_path = write_run_config(
            tmp_path,
            n_examples=5,
            cells=[{"prompt_kind": "generic", "condition": "gold"}],
            with_documents=False,
            extra={"attribution_context_size": 2},
        )
        config = load_config(config_path)
        pipelines.prepare(config)
        instances = read_instances(config.out / pipelines.ATTRIBUTE_FILE)
        assert len(instances) == 5
        for inst in instances:
            # context span ranges = 2 pairs x (src + tgt) sentence payloads
            assert len(inst.char_spans["context"]) == 4
            assert inst.pronoun_text
            assert inst.prompt_text.count("\n") == 2  # 2 pair lines + final line


class TestRunAndResume:
    def test_full_mock_run_produces_tables(self, tmp_path):
        config_path = write_run_config(tmp_path, n_examples=6, sentences_per_doc=4)
        config = load_config(config_path)
        pipelines.prepare(config)
        pipelines.translate(config)
        pipelines.contrast(config)
        pipelines.attribute(config)
        produced = pipelines.score(config)
        table = Path(produced["table1_csv"]).read_text().splitlines()
        header = table[0]
        assert "sentence_none_bleu" in header
        assert "generic_gold_bleu" in header
        assert "explicit_perturbed_chrf" in header
        assert len(table) == 2
        assert Path(produced["figure"]).exists()
        assert Path(produced["table2_csv"]).exists()

    def test_missing_condition_renders_dashes(self, tmp_path):
        cells = [
            {"prompt_kind": "sentence", "condition": "none"},
            {"prompt_kind": "generic", "condition": "gold"},
        ]
        config_path = write_run_config(tmp_path, n_examples=4, cells=cells, sentences_per_doc=3)
        config = load_config(config_path)
        pipelines.prepare(config)
        pipelines.translate(config)
        produced = pipelines.score(config)
        row = Path(produced["table1_csv"]).read_text().splitlines()[1]
        assert "--" in row

    def test_rescore_is_byte_identical(self, tmp_path):
        config_path = write_run_config(tmp_path, n_examples=4, sentences_per_doc=3)
        config = load_config(config_path)
        pipelines.prepare(config)
        pipelines.translate(config)
        pipelines.contrast(config)
        produced = pipelines.score(config)
        first = Path(produced["table1_csv"]).read_bytes()
        second = Path(pipelines.score(config)["table1_csv"]).read_bytes()
        assert first == second

    def test_resume_uses_cache_with_zero_new_requests(self, tmp_path):
        config_path = write_run_config(tmp_path, n_examples=4, sentences_per_doc=3)
        config = load_config(config_path)
        pipelines.prepare(config)
        pipelines.translate(config)
        manifest = tmp_path / "cache" / "manifest.jsonl"
        fetched_once = len(manifest.read_text().splitlines())

        # Simulate an interrupt: drop the second half of the output rows.
        out_path = config.out / pipelines.TRANSLATIONS_FILE
        lines = out_path.read_text().splitlines()
        keep = len(lines) // 2
        out_path.write_text("\n".join(lines[:keep]) + "\n")

        stats = pipelines.translate(config)
        assert stats["skipped"] == keep
        # All request payloads were already cached: no new manifest entries.
        assert len(manifest.read_text().splitlines()) == fetched_once
        assert len(out_path.read_text().splitlines()) == len(lines)

    def test_contrast_en_fr_has_two_variants(self, tmp_path):
        config_path = write_run_config(
            tmp_path,
            n_examples=4,
            shape="en-fr",
            cells=[{"prompt_kind": "generic", "condition": "gold"}],
            with_documents=False,
        )
        config = load_config(config_path)
        pipelines.prepare(config)
        pipelines.contrast(config)
        rows = _read_lines(config.out / pipelines.CPR_FILE)
        assert rows and all(row["n_variants"] == 2 for row in rows)

    def test_external_comet_scores_flow_into_table(self, tmp_path):
        cells = [{"prompt_kind": "sentence", "condition": "none"}]
        config_path = write_run_config(
            tmp_path, n_examples=2, cells=cells, sentences_per_doc=3, with_contrastive=False
        )
        config = load_config(config_path)
        pipelines.prepare(config)
        pipelines.translate(config)
        instances = read_instances(config.out / pipelines.GENERATE_FILE)
        scores_path = tmp_path / "comet.jsonl"
        with open(scores_path, "w") as fh:
            for inst in instances:
                fh.write(json.dumps({"id": inst.instance_id, "score": 82.5}) + "\n")
        raw = json.loads(config_path.read_text())
        raw["external_scores"] = str(scores_path)
        config_path.write_text(json.dumps(raw))
        produced = pipelines.score(load_config(config_path))
        header = Path(produced["table1_csv"]).read_text().splitlines()[0]
        row = Path(produced["table1_csv"]).read_text().splitlines()[1]
        assert "sentence_none_comet" in header
        assert "82.5" in row

    def test_import_attributions_path(self, tmp_path):
        config_path = write_run_config(
            tmp_path,
            n_examples=2,
            cells=[{"prompt_kind": "generic", "condition": "gold"}],
            with_documents=False,
        )
        config = load_config(config_path)
        pipelines.prepare(config)
        record = {
            "schema": "ap-v1",
            "example_id": "x",
            "tokens": ["a", "b"],
            "scores": [1.0, 3.0],
            "spans": {"context": [1], "antecedent": [1]},
            "method": "alti_logit",
            "meta": {},
        }
        import_path = tmp_path / "bridge.jsonl"
        import_path.write_text(json.dumps(record) + "\n")
        stats = pipelines.attribute(config, import_file=str(import_path))
        assert stats == {"done": 1, "rejected": 0}
        produced = pipelines.score(config)
        figure = Path(produced["figure"]).read_text().splitlines()
        assert any("alti_logit" in line for line in figure[1:])


class TestCli:
    def test_exit_code_2_on_bad_config(self, tmp_path):
        runner = CliRunner()
        result = runner.invoke(main, ["prepare", "--config", str(tmp_path / "nope.json")])
        assert result.exit_code == 2

    def test_exit_code_4_on_empty_run_dir(self, tmp_path):
        config_path = write_run_config(tmp_path, n_examples=2, with_documents=False)
        runner = CliRunner()
        result = runner.invoke(main, ["score", "--config", str(config_path)])
        assert result.exit_code == 4

    def test_prepare_translate_score_via_cli(self, tmp_path):
        config_path = write_run_config(tmp_path, n_examples=3, sentences_per_doc=3)
        runner = CliRunner()
        for command in ("prepare", "translate", "contrast", "score"):
            result = runner.invoke(main, [command, "--config", str(config_path)])
            assert result.exit_code == 0, f"{command}: {result.output}"
        assert "table1_csv" in result.output

    def test_flag_overrides_config(self, tmp_path):
        config_path = write_run_config(tmp_path, n_examples=2, with_documents=False)
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["prepare", "--config", str(config_path), "--seed", "99", "--model", "other-model"],
        )
        assert result.exit_code == 0
        config = load_config(config_path, overrides={"seed": 99})
        instances = read_instances(config.out / pipelines.CONTRAST_FILE)
        assert instances[0].seed != 0

    def test_exit_code_3_on_unreachable_backend(self, tmp_path):
        config_path = write_run_config(
            tmp_path,
            n_examples=2,
            cells=[{"prompt_kind": "generic", "condition": "gold"}],
            with_documents=False,
            cache=False,
        )
        config = load_config(config_path)
        pipelines.prepare(config)
        raw = json.loads(config_path.read_text())
        raw["backend"] = {
            "kind": "http",
            "base_url": "http://127.0.0.1:1",
            "model_id": "none",
            "max_retries": 0,
            "request_timeout": 0.2,
        }
        config_path.write_text(json.dumps(raw))
        runner = CliRunner()
        result = runner.invoke(main, ["translate", "--config", str(config_path)])
        assert result.exit_code == 3
        assert "resume" in result.output

    def test_config_error_names_field(self, tmp_path):
        config_path = write_run_config(tmp_path, n_examples=2, with_documents=False)
        raw = json.loads(config_path.read_text())
        raw["cells"] = [{"prompt_kind": "sentence", "condition": "gold"}]
        config_path.write_text(json.dumps(raw))
        runner = CliRunner()
        result = runner.invoke(main, ["prepare", "--config", str(config_path)])
        assert result.exit_code == 2
        assert "condition" in result.output
