"""CLI: subcommand flows, exit codes, JSON outputs, determinism, figures."""

import hashlib
import json

import pytest

from modalign.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def gen(capsys, out_dir, pairs=30, dim=8, noise=0.0, seed=1, holdout=0):
    argv = [
        "gen-synth",
        "--pairs", str(pairs),
        "--dim", str(dim),
        "--noise", str(noise),
        "--seed", str(seed),
        "--out", str(out_dir),
    ]
    if holdout:
        argv += ["--holdout", str(holdout)]
    return run(capsys, *argv)


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestGenSynth:
    def test_writes_three_files(self, capsys, tmp_path):
        code, out, err = gen(capsys, tmp_path / "d")
        assert code == 0
        summary = json.loads(out)
        assert (tmp_path / "d" / "a.emb").exists()
        assert (tmp_path / "d" / "b.emb").exists()
        assert (tmp_path / "d" / "pairs.jsonl").exists()
        assert summary["files"]["n_examples"] == 60
        assert "gen-synth" in err

    def test_determinism_same_bytes(self, capsys, tmp_path):
        gen(capsys, tmp_path / "one", seed=4)
        gen(capsys, tmp_path / "two", seed=4)
        for name in ("a.emb", "b.emb", "pairs.jsonl"):
            assert sha(tmp_path / "one" / name) == sha(tmp_path / "two" / name)

    def test_pairs_one_is_data_error(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "gen-synth", "--pairs", "1", "--dim", "4", "--out", str(tmp_path / "x")
        )
        assert code == 2
        assert "error" in err

    def test_holdout_split(self, capsys, tmp_path):
        code, out, _ = gen(capsys, tmp_path / "d", pairs=30, holdout=10)
        assert code == 0
        summary = json.loads(out)
        assert summary["train"]["n_vectors"] == 20
        assert summary["test"]["n_vectors"] == 10
        assert (tmp_path / "d" / "train" / "a.emb").exists()
        assert (tmp_path / "d" / "test" / "pairs.jsonl").exists()

    def test_holdout_out_of_range(self, capsys, tmp_path):
        code, _, err = gen(capsys, tmp_path / "d", pairs=10, holdout=10)
        assert code == 2

    def test_missing_required_flag_is_usage_error(self, capsys, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["gen-synth", "--dim", "4", "--out", str(tmp_path)])
        assert exc.value.code == 1

    def test_unknown_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1


@pytest.fixture()
def corpus(capsys, tmp_path):
    """Small zero-noise corpus with a train/test split plus a checkpoint."""
    gen(capsys, tmp_path / "data", pairs=60, dim=8, noise=0.0, seed=3, holdout=20)
    train_dir = tmp_path / "data" / "train"
    test_dir = tmp_path / "data" / "test"
    ckpt = tmp_path / "model.prj"
    code, _, _ = run(
        capsys,
        "train",
        "--a", str(train_dir / "a.emb"),
        "--b", str(train_dir / "b.emb"),
        "--pairs", str(train_dir / "pairs.jsonl"),
        "--checkpoint-out", str(ckpt),
        "--hidden", "16",
        "--seed", "3",
        # 40 training pairs only: needs more steps than the defaults give
        "--lr", "0.03",
        "--epochs", "30",
    )
    assert code == 0
    capsys.readouterr()
    return train_dir, test_dir, ckpt


class TestTrain:
    def test_defaults_echoed(self, capsys, tmp_path, corpus):
        train_dir, _, _ = corpus
        report_dir = tmp_path / "rep"
        code, out, _ = run(
            capsys,
            "train",
            "--a", str(train_dir / "a.emb"),
            "--b", str(train_dir / "b.emb"),
            "--pairs", str(train_dir / "pairs.jsonl"),
            "--checkpoint-out", str(tmp_path / "m.prj"),
            "--hidden", "8",
            "--report-dir", str(report_dir),
        )
        assert code == 0
        summary = json.loads(out)
        assert len(summary["epoch_losses"]) == 5  # default epochs
        report = json.loads((report_dir / "train_report.json").read_text())
        assert report["config"]["epochs"] == 5
        assert report["config"]["margin"] == 1.0
        assert (report_dir / "train_loss.csv").exists()
        assert (report_dir / "train_loss.png").exists()

    def test_zero_lr_checkpoint_equals_fresh_init(self, capsys, tmp_path, corpus):
        import numpy as np

        from modalign import init_params, load_params

        train_dir, _, _ = corpus
        ckpt = tmp_path / "frozen.prj"
        code, _, _ = run(
            capsys,
            "train",
            "--a", str(train_dir / "a.emb"),
            "--b", str(train_dir / "b.emb"),
            "--pairs", str(train_dir / "pairs.jsonl"),
            "--checkpoint-out", str(ckpt),
            "--hidden", "16",
            "--seed", "3",
            "--lr", "0",
        )
        assert code == 0
        loaded = load_params(ckpt)
        fresh = init_params(8, 16, seed=3)
        for a, b in zip(loaded.as_list(), fresh.as_list()):
            assert np.array_equal(a, b)

    def test_train_determinism(self, capsys, tmp_path, corpus):
        train_dir, _, _ = corpus
        blobs = []
        for name in ("x1.prj", "x2.prj"):
            path = tmp_path / name
            run(
                capsys,
                "train",
                "--a", str(train_dir / "a.emb"),
                "--b", str(train_dir / "b.emb"),
                "--pairs", str(train_dir / "pairs.jsonl"),
                "--checkpoint-out", str(path),
                "--hidden", "16",
                "--seed", "11",
            )
            blobs.append(path.read_bytes())
        assert blobs[0] == blobs[1]

    def test_missing_input_file(self, capsys, tmp_path):
        code, _, err = run(
            capsys,
            "train",
            "--a", str(tmp_path / "missing.emb"),
            "--b", str(tmp_path / "missing.emb"),
            "--pairs", str(tmp_path / "missing.jsonl"),
            "--checkpoint-out", str(tmp_path / "m.prj"),
        )
        assert code == 2
        assert "error" in err


class TestEval:
    def test_trained_beats_raw_on_zero_noise(self, capsys, tmp_path, corpus):
        _, test_dir, ckpt = corpus
        out_dir = tmp_path / "report"
        code, out, err = run(
            capsys,
            "eval",
            "--a", str(test_dir / "a.emb"),
            "--b", str(test_dir / "b.emb"),
            "--pairs", str(test_dir / "pairs.jsonl"),
            "--checkpoint", str(ckpt),
            "--baseline", "raw-embedding",
            "--out-dir", str(out_dir),
            "--warmup", "2",
            "--repetitions", "1",
        )
        assert code == 0
        document = json.loads(out)
        models = {row["model"]: row for row in document["reports"]}
        assert models["projection"]["accuracy"] >= 0.95
        assert models["raw-embedding"]["accuracy"] <= 0.10
        assert (out_dir / "report.json").exists()
        assert (out_dir / "metrics.csv").exists()
        assert (out_dir / "metrics.png").exists()
        assert (out_dir / "throughput.png").exists()
        header = (out_dir / "metrics.csv").read_text().splitlines()[0]
        assert header.startswith("model,dataset,accuracy")

    def test_eval_metrics_deterministic(self, capsys, tmp_path, corpus):
        _, test_dir, ckpt = corpus
        metric_fields = ("accuracy", "precision", "recall", "f1", "n_queries")
        snapshots = []
        for _ in range(2):
            _, out, _ = run(
                capsys,
                "eval",
                "--a", str(test_dir / "a.emb"),
                "--b", str(test_dir / "b.emb"),
                "--pairs", str(test_dir / "pairs.jsonl"),
                "--checkpoint", str(ckpt),
                "--warmup", "0",
                "--repetitions", "1",
            )
            row = json.loads(out)["reports"][0]
            snapshots.append({k: row[k] for k in metric_fields})
        assert snapshots[0] == snapshots[1]

    def test_reciprocal_invariant_in_output(self, capsys, tmp_path, corpus):
        _, test_dir, ckpt = corpus
        _, out, _ = run(
            capsys,
            "eval",
            "--a", str(test_dir / "a.emb"),
            "--b", str(test_dir / "b.emb"),
            "--pairs", str(test_dir / "pairs.jsonl"),
            "--checkpoint", str(ckpt),
            "--warmup", "0",
            "--repetitions", "1",
        )
        for row in json.loads(out)["reports"]:
            assert abs(row["throughput_qps"] * row["avg_query_seconds"] - 1.0) <= 1e-12

    def test_missing_checkpoint_exit_2(self, capsys, tmp_path, corpus):
        _, test_dir, _ = corpus
        code, _, err = run(
            capsys,
            "eval",
            "--a", str(test_dir / "a.emb"),
            "--b", str(test_dir / "b.emb"),
            "--pairs", str(test_dir / "pairs.jsonl"),
            "--checkpoint", str(tmp_path / "nope.prj"),
        )
        assert code == 2
        assert "error" in err

    def test_bm25_baseline_requires_texts(self, capsys, tmp_path, corpus):
        _, test_dir, ckpt = corpus
        code, _, err = run(
            capsys,
            "eval",
            "--a", str(test_dir / "a.emb"),
            "--b", str(test_dir / "b.emb"),
            "--pairs", str(test_dir / "pairs.jsonl"),
            "--checkpoint", str(ckpt),
            "--baseline", "bm25",
        )
        assert code == 2
        assert "--texts" in err

    def test_bm25_baseline_with_texts(self, capsys, tmp_path, corpus):
        from modalign import load_embeddings, save_texts

        _, test_dir, ckpt = corpus
        a_ids = load_embeddings(test_dir / "a.emb").ids
        b_ids = load_embeddings(test_dir / "b.emb").ids
        # paired ids share numbering, so give them overlapping vocabulary
        texts = {i: f"alpha token{i[1:]} common" for i in a_ids}
        texts.update({i: f"beta token{i[1:]} common" for i in b_ids})
        texts_path = tmp_path / "texts.jsonl"
        save_texts(texts, texts_path)
        code, out, _ = run(
            capsys,
            "eval",
            "--a", str(test_dir / "a.emb"),
            "--b", str(test_dir / "b.emb"),
            "--pairs", str(test_dir / "pairs.jsonl"),
            "--checkpoint", str(ckpt),
            "--baseline", "bm25",
            "--texts", str(texts_path),
            "--warmup", "0",
            "--repetitions", "1",
        )
        assert code == 0
        models = {row["model"]: row for row in json.loads(out)["reports"]}
        assert models["bm25"]["accuracy"] == 1.0  # unique shared token per pair


class TestRetrieve:
    def test_self_query_top1(self, capsys, tmp_path, corpus):
        _, test_dir, _ = corpus
        from modalign import load_embeddings

        first = load_embeddings(test_dir / "a.emb").ids[0]
        code, out, _ = run(
            capsys,
            "retrieve",
            "--pool", str(test_dir / "a.emb"),
            "--queries", str(test_dir / "a.emb"),
            "--query-id", first,
            "-k", "1",
        )
        assert code == 0
        line = json.loads(out.splitlines()[0])
        assert line["id"] == first
        assert line["score"] == 0.0

    def test_output_is_json_lines_with_id_and_score(self, capsys, tmp_path, corpus):
        _, test_dir, _ = corpus
        code, out, _ = run(
            capsys,
            "retrieve",
            "--pool", str(test_dir / "a.emb"),
            "--queries", str(test_dir / "b.emb"),
            "-k", "3",
        )
        assert code == 0
        lines = [json.loads(x) for x in out.splitlines()]
        assert len(lines) == 20 * 3
        for entry in lines:
            assert set(entry) == {"query_id", "rank", "id", "score"}

    def test_k_larger_than_pool(self, capsys, tmp_path, corpus):
        _, test_dir, _ = corpus
        code, _, err = run(
            capsys,
            "retrieve",
            "--pool", str(test_dir / "a.emb"),
            "--queries", str(test_dir / "b.emb"),
            "-k", "999",
        )
        assert code == 2

    def test_projected_retrieve_with_checkpoint(self, capsys, tmp_path, corpus):
        _, test_dir, ckpt = corpus
        code, out, _ = run(
            capsys,
            "retrieve",
            "--pool", str(test_dir / "a.emb"),
            "--queries", str(test_dir / "b.emb"),
            "--checkpoint", str(ckpt),
            "-k", "1",
        )
        assert code == 0
        lines = [json.loads(x) for x in out.splitlines()]
        hits = sum(1 for e in lines if e["id"][1:] == e["query_id"][1:])
        assert hits / len(lines) >= 0.95


class TestBench:
    def test_bench_summary(self, capsys, tmp_path, corpus):
        _, test_dir, ckpt = corpus
        out_path = tmp_path / "bench.json"
        code, out, err = run(
            capsys,
            "bench",
            "--pool", str(test_dir / "a.emb"),
            "--queries", str(test_dir / "b.emb"),
            "--checkpoint", str(ckpt),
            "--warmup", "2",
            "--repetitions", "2",
            "--out", str(out_path),
        )
        assert code == 0
        summary = json.loads(out)
        assert summary["model"] == "projection"
        assert summary["throughput_qps"] * summary["avg_query_seconds"] == pytest.approx(1.0, abs=1e-12)
        assert "cpu_model" in summary["environment"]
        assert json.loads(out_path.read_text()) == summary

    def test_bench_raw_mode(self, capsys, tmp_path, corpus):
        _, test_dir, _ = corpus
        code, out, _ = run(
            capsys,
            "bench",
            "--pool", str(test_dir / "a.emb"),
            "--queries", str(test_dir / "b.emb"),
            "--warmup", "0",
            "--repetitions", "1",
            "--limit", "5",
        )
        assert code == 0
        summary = json.loads(out)
        assert summary["model"] == "raw-embedding"
        assert summary["n_queries"] == 5


class TestConfigFile:
    def test_config_file_provides_defaults(self, capsys, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"pairs": 12, "dim": 6, "seed": 8}))
        code, out, _ = run(
            capsys,
            "gen-synth",
            "--pairs", "20",  # flag beats config
            "--out", str(tmp_path / "d"),
            "--config", str(config),
        )
        assert code == 0
        summary = json.loads(out)
        assert summary["pairs"] == 20
        assert summary["dim"] == 6  # from config
        assert summary["seed"] == 8

    def test_unknown_config_key(self, capsys, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"bogus": 1}))
        code, _, err = run(
            capsys,
            "gen-synth",
            "--pairs", "5",
            "--out", str(tmp_path / "d"),
            "--config", str(config),
        )
        assert code == 2
        assert "bogus" in err

    def test_threads_flag(self, capsys, tmp_path):
        code, out, _ = run(
            capsys,
            "--threads", "1",
            "gen-synth",
            "--pairs", "5",
            "--dim", "4",
            "--out", str(tmp_path / "d"),
        )
        assert code == 0
        assert json.loads(out)["pairs"] == 5
