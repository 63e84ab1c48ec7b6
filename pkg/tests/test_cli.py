import json
import random

import pytest

from mtss.cli import main
from conftest import planted_monotone_corpus, synthetic_checkpoints


def _write(path, sentences):
    path.write_text("\n".join(" ".join(s) for s in sentences) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def parallel(tmp_path):
    rng = random.Random(3)
    pairs = planted_monotone_corpus(rng, n_sentences=30, vocab=12, lengths=(3, 8))
    src = _write(tmp_path / "src.txt", [s for s, _ in pairs])
    tgt = _write(tmp_path / "tgt.txt", [t for _, t in pairs])
    return src, tgt


class TestExitCodes:
    def test_version_flag(self, capsys):
        assert main(["--version"]) == 0
        assert "mtss" in capsys.readouterr().out

    def test_bleu_identical_prints_100(self, tmp_path, capsys):
        path = _write(tmp_path / "a.txt", [("x", "y"), ("z",)])
        code = main(["bleu", "--hyp", str(path), "--ref", str(path)])
        assert code == 0
        assert capsys.readouterr().out.strip() == "100.00"

    def test_unknown_flag_is_usage_error(self, capsys):
        code = main(["bleu", "--hyp", "a", "--ref", "b", "--frobnicate"])
        assert code == 1
        err = capsys.readouterr().err
        assert "usage" in err

    def test_unknown_subcommand_is_usage_error(self, capsys):
        assert main(["not-a-command"]) == 1

    def test_no_subcommand_is_usage_error(self, capsys):
        assert main([]) == 1

    def test_missing_required_flag_is_usage_error(self, capsys):
        code = main(["bleu", "--hyp", "only.txt"])
        assert code == 1
        assert "--ref" in capsys.readouterr().err

    def test_manifest_missing_file_is_data_error(self, tmp_path, parallel, capsys):
        src, tgt = parallel
        manifest = tmp_path / "m.tsv"
        manifest.write_text("100\tnowhere.txt\n", encoding="utf-8")
        code = main([
            "trajectory", "--manifest", str(manifest), "--refs", str(tgt),
            "--train-tgt", str(tgt), "--heldout-src", str(src),
            "--out", str(tmp_path / "t.csv"),
        ])
        assert code == 2
        err = capsys.readouterr().err
        assert "nowhere.txt" in err
        assert "Traceback" not in err

    def test_line_count_mismatch_is_data_error(self, tmp_path, capsys):
        hyp = _write(tmp_path / "h.txt", [("a",)])
        ref = _write(tmp_path / "r.txt", [("a",), ("b",)])
        code = main(["bleu", "--hyp", str(hyp), "--ref", str(ref)])
        assert code == 2
        assert "mismatch" in capsys.readouterr().err


class TestConfigFile:
    def test_flag_overrides_config(self, tmp_path, capsys):
        corpus = _write(tmp_path / "c.txt", [("a", "b"), ("b", "a"), ("a", "b", "b")])
        config = tmp_path / "mtss.toml"
        config.write_text("order = 3\n", encoding="utf-8")
        out = tmp_path / "m.arpa"
        code = main([
            "train-lm", "--config", str(config), "--order", "5",
            "--in", str(corpus), "--out", str(out), "--json",
        ])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["result"]["order"] == 5
        assert payload["meta"]["config_order"] == "5"

    def test_config_supplies_value(self, tmp_path, capsys):
        corpus = _write(tmp_path / "c.txt", [("a", "b")])
        config = tmp_path / "mtss.toml"
        config.write_text("order = 2\n", encoding="utf-8")
        out = tmp_path / "m.arpa"
        code = main([
            "train-lm", "--config", str(config), "--in", str(corpus),
            "--out", str(out), "--json",
        ])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["result"]["order"] == 2

    def test_unknown_key_suggests_correction(self, tmp_path, capsys):
        corpus = _write(tmp_path / "c.txt", [("a",)])
        config = tmp_path / "mtss.toml"
        config.write_text("oder = 3\n", encoding="utf-8")
        code = main([
            "train-lm", "--config", str(config), "--in", str(corpus),
            "--out", str(tmp_path / "m.arpa"),
        ])
        assert code == 2
        err = capsys.readouterr().err
        assert "oder" in err
        assert "order" in err

    def test_type_mismatch_rejected(self, tmp_path, capsys):
        corpus = _write(tmp_path / "c.txt", [("a",)])
        config = tmp_path / "mtss.toml"
        config.write_text("order = 'three'\n", encoding="utf-8")
        code = main([
            "train-lm", "--config", str(config), "--in", str(corpus),
            "--out", str(tmp_path / "m.arpa"),
        ])
        assert code == 2
        assert "order" in capsys.readouterr().err

    def test_subcommand_table(self, tmp_path, capsys):
        corpus = _write(tmp_path / "c.txt", [("a", "b")])
        config = tmp_path / "mtss.toml"
        config.write_text("[train-lm]\norder = 2\n[bleu]\nmax_order = 9\n", encoding="utf-8")
        code = main([
            "train-lm", "--config", str(config), "--in", str(corpus),
            "--out", str(tmp_path / "m.arpa"), "--json",
        ])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["result"]["order"] == 2

    def test_absent_config_with_flags_is_fine(self, tmp_path, capsys):
        corpus = _write(tmp_path / "c.txt", [("a", "b")])
        code = main(["train-lm", "--order", "2", "--in", str(corpus),
                     "--out", str(tmp_path / "m.arpa")])
        assert code == 0

    def test_global_keys_from_config(self, tmp_path, capsys):
        corpus = _write(tmp_path / "c.txt", [("a", "b")])
        config = tmp_path / "mtss.toml"
        config.write_text("deterministic = true\nseed = 11\n", encoding="utf-8")
        code = main(["train-lm", "--config", str(config), "--order", "2",
                     "--in", str(corpus), "--out", str(tmp_path / "m.arpa"), "--json"])
        assert code == 0
        meta = json.loads(capsys.readouterr().out)["meta"]
        assert meta["config_deterministic"] == "True"
        assert meta["config_seed"] == "11"


class TestLmPipeline:
    def test_train_then_score(self, tmp_path, capsys):
        corpus = _write(tmp_path / "c.txt", [("a", "b"), ("b", "a"), ("a", "b", "b")])
        model = tmp_path / "m.arpa"
        assert main(["train-lm", "--order", "2", "--in", str(corpus),
                     "--out", str(model)]) == 0
        assert model.exists()
        sidecar = json.loads((tmp_path / "m.arpa.meta.json").read_text(encoding="utf-8"))
        assert sidecar["mtss_version"]
        assert any(key.startswith("sha256_") for key in sidecar)

        capsys.readouterr()
        assert main(["score-lm", "--model", str(model), "--in", str(corpus),
                     "--per-sentence", "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["result"]["token_count"] == 10
        assert payload["result"]["per_token_log10"] < 0
        assert len(payload["result"]["sentences"]) == 3

    def test_total_flag_switches_headline(self, tmp_path, capsys):
        corpus = _write(tmp_path / "c.txt", [("a", "b")])
        model = tmp_path / "m.arpa"
        main(["train-lm", "--order", "2", "--in", str(corpus), "--out", str(model)])
        capsys.readouterr()
        assert main(["score-lm", "--model", str(model), "--in", str(corpus),
                     "--total", "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["result"]["score"] == payload["result"]["total_log10"]

    def test_per_sentence_text_output(self, tmp_path, capsys):
        corpus = _write(tmp_path / "c.txt", [("a", "b"), ("b",)])
        model = tmp_path / "m.arpa"
        main(["train-lm", "--order", "2", "--in", str(corpus), "--out", str(model)])
        capsys.readouterr()
        assert main(["score-lm", "--model", str(model), "--in", str(corpus),
                     "--per-sentence"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("0\t")
        assert lines[1].startswith("1\t")
        assert lines[2].startswith("score: ")

    def test_model_without_unknown_symbol_fails_cleanly(self, tmp_path, capsys):
        model = tmp_path / "no_unk.arpa"
        model.write_text(
            "\\data\\\nngram 1=2\n\n\\1-grams:\n-0.3\ta\n-0.5\t</s>\n\n\\end\\\n",
            encoding="utf-8",
        )
        text = _write(tmp_path / "t.txt", [("zz",)])
        code = main(["score-lm", "--model", str(model), "--in", str(text)])
        assert code == 2
        err = capsys.readouterr().err
        assert "<unk>" in err
        assert "Traceback" not in err


class TestAlignPipeline:
    def test_align_then_reorder_score(self, tmp_path, parallel, capsys):
        src, tgt = parallel
        aligns = tmp_path / "aligns.txt"
        ttable = tmp_path / "ttable.tsv"
        assert main(["align", "--src", str(src), "--tgt", str(tgt),
                     "--iters", "5", "--lambda", "4.0", "--p0", "0.08",
                     "--out", str(aligns), "--ttable-out", str(ttable)]) == 0
        assert len(aligns.read_text(encoding="utf-8").splitlines()) == 30
        assert ttable.exists()

        capsys.readouterr()
        scores = tmp_path / "scores.csv"
        assert main(["reorder-score", "--alignments", str(aligns), "--src", str(src),
                     "--tgt", str(tgt), "--out", str(scores), "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["result"]["mean_frs"] == 1.0
        text = scores.read_text(encoding="utf-8")
        assert text.startswith("# mtss_version:")
        assert "corpus_mean" in text

    def test_alignment_out_of_range_reported_with_line(self, tmp_path, parallel, capsys):
        src, tgt = parallel
        bad = tmp_path / "bad.txt"
        bad.write_text("\n".join(["0-0"] * 29 + ["99-0"]) + "\n", encoding="utf-8")
        code = main(["reorder-score", "--alignments", str(bad), "--src", str(src),
                     "--tgt", str(tgt), "--out", str(tmp_path / "s.csv")])
        assert code == 2
        assert "line: 30" in capsys.readouterr().err


class TestTrajectoryPipeline:
    @pytest.fixture
    def world(self, tmp_path):
        rng = random.Random(7)
        sources, references, checkpoints = synthetic_checkpoints(
            rng, n_sentences=40, vocab=20, lengths=(10, 13),
            windows=(4, 2, 0), dropouts=(0.05, 0.02, 0.0),
        )
        src = _write(tmp_path / "heldout.src", sources)
        refs = _write(tmp_path / "dev.tgt", references)
        train_tgt = _write(tmp_path / "train.tgt", references)
        lines = []
        for step, translations in checkpoints:
            path = _write(tmp_path / f"ckpt{step}.txt", translations)
            lines.append(f"{step}\t{path.name}")
        manifest = tmp_path / "m.tsv"
        manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return manifest, refs, train_tgt, src

    def test_trajectory_then_stage_and_teacher(self, tmp_path, world, capsys):
        manifest, refs, train_tgt, src = world
        out = tmp_path / "traj.csv"
        plot = tmp_path / "traj.svg"
        assert main(["trajectory", "--manifest", str(manifest), "--refs", str(refs),
                     "--train-tgt", str(train_tgt), "--heldout-src", str(src),
                     "--out", str(out), "--plot", str(plot),
                     "--orders", "2,3"]) == 0
        body = out.read_text(encoding="utf-8")
        assert "# alignment_mode: per-checkpoint" in body
        assert "# mtss_version:" in body
        svg = plot.read_text(encoding="utf-8")
        assert svg.startswith("<svg")
        assert "<!-- mtss_version:" in svg

        capsys.readouterr()
        assert main(["detect-stages", "--trajectory", str(out), "--json"]) == 0
        stages = json.loads(capsys.readouterr().out)["result"]
        assert stages["stage1_end_step"] in (1000, 2000, 3000)

        assert main(["recommend-teacher", "--trajectory", str(out),
                     "--delta", "100", "--json"]) == 0
        teacher = json.loads(capsys.readouterr().out)["result"]
        assert teacher["step"] == 3000
        assert teacher["frs_at_step"] == 1.0

    def test_shared_aligner_mode(self, tmp_path, world, capsys):
        manifest, refs, train_tgt, src = world
        out = tmp_path / "traj_shared.csv"
        assert main(["trajectory", "--manifest", str(manifest), "--refs", str(refs),
                     "--train-tgt", str(train_tgt), "--heldout-src", str(src),
                     "--out", str(out), "--orders", "2",
                     "--aligner-mode", "shared"]) == 0
        body = out.read_text(encoding="utf-8")
        assert "# alignment_mode: shared" in body

    def test_detect_stages_needs_enough_rows(self, tmp_path, capsys):
        from mtss.trajectory import MetricTrajectory, TrajectoryRow, write_trajectory_csv

        path = tmp_path / "short.csv"
        write_trajectory_csv(
            MetricTrajectory(rows=(
                TrajectoryRow(step=1, metrics={"bleu": 1.0, "lm2": -1.0}),
                TrajectoryRow(step=2, metrics={"bleu": 2.0, "lm2": -1.0}),
            )),
            path,
        )
        assert main(["detect-stages", "--trajectory", str(path)]) == 2
        assert "at least 3" in capsys.readouterr().err


class TestOutputDir:
    def test_relative_outputs_land_in_output_dir(self, tmp_path, capsys):
        corpus = _write(tmp_path / "c.txt", [("a", "b")])
        outdir = tmp_path / "runs"
        assert main(["train-lm", "--order", "2", "--in", str(corpus),
                     "--out", "model.arpa", "--output-dir", str(outdir)]) == 0
        assert (outdir / "model.arpa").exists()

    def test_missing_config_file_is_data_error(self, tmp_path, capsys):
        corpus = _write(tmp_path / "c.txt", [("a", "b")])
        code = main(["train-lm", "--config", str(tmp_path / "nope.toml"),
                     "--order", "2", "--in", str(corpus),
                     "--out", str(tmp_path / "m.arpa")])
        assert code == 2
        assert "nope.toml" in capsys.readouterr().err


class TestThreads:
    def test_env_var_fallback(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("MTSS_THREADS", "3")
        corpus = _write(tmp_path / "c.txt", [("a", "b")])
        assert main(["train-lm", "--order", "2", "--in", str(corpus),
                     "--out", str(tmp_path / "m.arpa"), "--json"]) == 0
        meta = json.loads(capsys.readouterr().out)["meta"]
        assert meta["config_threads"] == "3"

    def test_flag_beats_env_var(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("MTSS_THREADS", "3")
        corpus = _write(tmp_path / "c.txt", [("a", "b")])
        assert main(["train-lm", "--order", "2", "--in", str(corpus),
                     "--out", str(tmp_path / "m.arpa"), "--threads", "2", "--json"]) == 0
        meta = json.loads(capsys.readouterr().out)["meta"]
        assert meta["config_threads"] == "2"

    def test_invalid_thread_count_rejected(self, tmp_path, capsys):
        corpus = _write(tmp_path / "c.txt", [("a", "b")])
        code = main(["train-lm", "--order", "2", "--in", str(corpus),
                     "--out", str(tmp_path / "m.arpa"), "--threads", "0"])
        assert code == 2
        assert "thread count" in capsys.readouterr().err


def test_demo_script_runs_end_to_end(tmp_path, capsys):
    import importlib.util
    from pathlib import Path

    script = Path(__file__).resolve().parent.parent / "scripts" / "synthetic_trajectory_demo.py"
    spec = importlib.util.spec_from_file_location("demo", script)
    demo = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(demo)
    assert demo.run(tmp_path / "demo", seed=7) == 0
    assert (tmp_path / "demo" / "trajectory.csv").exists()
    assert (tmp_path / "demo" / "trajectory.svg").exists()
    assert "recommended_step" in capsys.readouterr().out
