"""Command-line entry point wiring data generation, training, evaluation,
retrieval, and benchmarking.

Machine-readable JSON goes to stdout; human-readable summaries go to
stderr.  Exit codes: 0 success, 1 usage error, 2 data/validation error.
Flag precedence: command line > --config JSON file > built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ModalignError
from .store import (
    EmbeddingSet,
    PairDataset,
    generate_synthetic,
    load_embeddings,
    load_pairs,
    load_texts,
    save_embeddings,
    save_pairs,
)
from .training import TrainConfig, train

DEFAULT_SEED = 0

_USAGE_EXIT = 1
_DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this toolkit reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(_USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def _add_config_flag(sub) -> None:
    sub.add_argument(
        "--config",
        help="JSON file of flag defaults (command line overrides it)",
    )


def _apply_config(args, argv) -> None:
    """Overlay --config file values onto flags not given on the command line."""
    if not getattr(args, "config", None):
        return
    try:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ModalignError(f"cannot read config file {args.config}: {e}") from None
    if not isinstance(config, dict):
        raise ModalignError(f"config file {args.config} must hold a JSON object")
    sub = args._subparser
    dests = {}
    explicit = set()
    for action in sub._actions:
        dests[action.dest] = action
        for opt in action.option_strings:
            if any(tok == opt or tok.startswith(opt + "=") for tok in argv):
                explicit.add(action.dest)
    for key, value in config.items():
        dest = key.replace("-", "_")
        if dest not in dests or dest in ("config", "help"):
            raise ModalignError(f"unknown config key {key!r} for this subcommand")
        if dest not in explicit:
            setattr(args, dest, value)


# ---------------------------------------------------------------- gen-synth


def _write_split(a_set, b_set, dataset, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "a": out_dir / "a.emb",
        "b": out_dir / "b.emb",
        "pairs": out_dir / "pairs.jsonl",
    }
    save_embeddings(a_set, paths["a"])
    save_embeddings(b_set, paths["b"])
    save_pairs(dataset, paths["pairs"])
    return {
        "a": str(paths["a"]),
        "b": str(paths["b"]),
        "pairs": str(paths["pairs"]),
        "n_vectors": len(a_set),
        "n_examples": len(dataset),
    }


def _subset(a_set, b_set, dataset, keep: set[int]) -> tuple:
    """Restrict a synthetic corpus to the positive indices in ``keep``.

    Negatives survive only if both endpoints stay inside the split.
    """
    a_ids = [f"a{i}" for i in sorted(keep)]
    b_ids = [f"b{i}" for i in sorted(keep)]
    kept_a, kept_b = set(a_ids), set(b_ids)
    examples = [
        ex
        for ex in dataset.examples
        if ex.anchor_id in kept_a and ex.candidate_id in kept_b
    ]
    sub_a = EmbeddingSet(dim=a_set.dim, ids=tuple(a_ids), vectors=a_set.rows(a_ids))
    sub_b = EmbeddingSet(dim=b_set.dim, ids=tuple(b_ids), vectors=b_set.rows(b_ids))
    return sub_a, sub_b, PairDataset(examples=tuple(examples))


def cmd_gen_synth(args) -> int:
    a_set, b_set, dataset = generate_synthetic(
        n_pairs=args.pairs, dim=args.dim, noise_sigma=args.noise, seed=args.seed
    )
    out = Path(args.out)
    summary = {"pairs": args.pairs, "dim": args.dim, "noise": args.noise, "seed": args.seed}
    if args.holdout:
        if not 0 < args.holdout < args.pairs:
            raise ModalignError(
                f"--holdout must lie in (0, {args.pairs}), got {args.holdout}"
            )
        split = args.pairs - args.holdout
        train_part = _subset(a_set, b_set, dataset, set(range(split)))
        test_part = _subset(a_set, b_set, dataset, set(range(split, args.pairs)))
        summary["train"] = _write_split(*train_part, out / "train")
        summary["test"] = _write_split(*test_part, out / "test")
        _say(f"gen-synth: {split} train / {args.holdout} test pairs under {out}")
    else:
        summary["files"] = _write_split(a_set, b_set, dataset, out)
        _say(f"gen-synth: {args.pairs} pairs (dim {args.dim}) under {out}")
    _emit(summary)
    return 0


# -------------------------------------------------------------------- train


def cmd_train(args) -> int:
    a_set = load_embeddings(args.a)
    b_set = load_embeddings(args.b)
    dataset = load_pairs(args.pairs)
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        margin=args.margin,
        seed=args.seed,
        optimizer=args.optimizer,
        shuffle=not args.no_shuffle,
        hidden_dim=args.hidden,
        l2_normalize=args.normalize,
    )
    Path(args.checkpoint_out).parent.mkdir(parents=True, exist_ok=True)
    params, rep = train(a_set, b_set, dataset, cfg, checkpoint_path=args.checkpoint_out)
    summary = {
        "checkpoint": rep.checkpoint_path,
        "epoch_losses": rep.epoch_losses,
        "wall_seconds": rep.wall_seconds,
        "d": params.d,
        "h": params.h,
        "n_positives": len(dataset.positives()),
    }
    if args.report_dir:
        from . import report as report_mod

        report_dir = Path(args.report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        report_path = report_dir / "train_report.json"
        payload = dict(summary)
        payload["config"] = {
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "learning_rate": cfg.learning_rate,
            "margin": cfg.margin,
            "seed": cfg.seed,
            "optimizer": cfg.optimizer,
            "shuffle": cfg.shuffle,
            "hidden_dim": cfg.hidden_dim,
            "l2_normalize": cfg.l2_normalize,
        }
        report_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        written = report_mod.render_train_outputs(
            rep.epoch_losses, report_dir, figures=not args.no_figures
        )
        summary["report"] = [str(report_path), *written]
    losses = ", ".join(f"{x:.4f}" for x in rep.epoch_losses)
    _say(f"train: {cfg.epochs} epochs in {rep.wall_seconds:.2f}s; epoch losses [{losses}]")
    _emit(summary)
    return 0


# --------------------------------------------------------------------- eval


def _gold_from_positives(dataset: PairDataset) -> dict[str, str]:
    gold: dict[str, str] = {}
    for ex in dataset.positives():
        if ex.candidate_id in gold:
            raise ModalignError(
                f"query {ex.candidate_id!r} appears in more than one positive pair"
            )
        gold[ex.candidate_id] = ex.anchor_id
    if not gold:
        raise ModalignError("dataset has no positive pairs to evaluate")
    return gold


def _eval_one(name, retriever, gold, args) -> dict:
    from .evaluation import EvalReport, benchmark_latency, evaluate_retrieval

    metrics = evaluate_retrieval(retriever, gold, average=args.average)
    latency = benchmark_latency(
        retriever, list(gold), warmup=args.warmup, repetitions=args.repetitions
    )
    report = EvalReport.from_parts(metrics, latency, n_queries=len(gold))
    report.validate()
    row = {"model": name, "dataset": args.dataset_name}
    row.update(
        {
            "accuracy": report.accuracy,
            "precision": report.precision,
            "recall": report.recall,
            "f1": report.f1,
            "avg_query_seconds": report.avg_query_seconds,
            "throughput_qps": report.throughput_qps,
            "harmonic_mean": report.harmonic_mean,
            "n_queries": report.n_queries,
        }
    )
    return row


def cmd_eval(args) -> int:
    from .bm25 import bm25_retrieve, build_bm25_index
    from .evaluation import environment_descriptor
    from .projection import load_params
    from .retrieval import build_index, project_and_query, query

    a_set = load_embeddings(args.a)
    b_set = load_embeddings(args.b)
    dataset = load_pairs(args.pairs)
    dataset.validate_against(a_set, b_set)
    params = load_params(args.checkpoint)
    if params.d != a_set.dim or a_set.dim != b_set.dim:
        raise ModalignError(
            f"dimension mismatch: checkpoint d={params.d}, A dim={a_set.dim}, B dim={b_set.dim}"
        )
    gold = _gold_from_positives(dataset)
    index = build_index(a_set, metric=args.metric)

    rows = [
        _eval_one(
            "projection",
            lambda qid: project_and_query(params, index, b_set.vector(qid), 1),
            gold,
            args,
        )
    ]
    for baseline in args.baseline or []:
        if baseline == "raw-embedding":
            rows.append(
                _eval_one("raw-embedding", lambda qid: query(index, b_set.vector(qid), 1), gold, args)
            )
        else:  # bm25
            if not args.texts:
                raise ModalignError("--baseline bm25 requires --texts with a raw-text corpus")
            texts = load_texts(args.texts)
            missing = [i for i in (*a_set.ids, *gold) if i not in texts]
            if missing:
                raise ModalignError(
                    f"text corpus is missing {len(missing)} ids (first: {missing[0]!r})"
                )
            bm25_index = build_bm25_index({i: texts[i] for i in a_set.ids})
            rows.append(
                _eval_one(
                    "bm25", lambda qid: bm25_retrieve(bm25_index, texts[qid], 1), gold, args
                )
            )

    document = {
        "dataset": args.dataset_name,
        "config": {
            "a": args.a,
            "b": args.b,
            "pairs": args.pairs,
            "checkpoint": args.checkpoint,
            "metric": args.metric,
            "average": args.average,
            "warmup": args.warmup,
            "repetitions": args.repetitions,
            "baselines": list(args.baseline or []),
        },
        "environment": environment_descriptor(),
        "reports": rows,
    }
    if args.out_dir:
        from . import report as report_mod

        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(
            json.dumps(document, indent=2) + "\n", encoding="utf-8"
        )
        report_mod.render_eval_outputs(rows, out_dir, figures=not args.no_figures)
    for row in rows:
        _say(
            f"eval[{row['model']}]: acc={row['accuracy']:.4f} prec={row['precision']:.4f} "
            f"rec={row['recall']:.4f} f1={row['f1']:.4f} "
            f"qps={row['throughput_qps']:.1f} hm={row['harmonic_mean']:.4f}"
        )
    _emit(document)
    return 0


# ----------------------------------------------------------------- retrieve


def cmd_retrieve(args) -> int:
    from .projection import load_params
    from .retrieval import build_index, project_and_query, query

    pool = load_embeddings(args.pool)
    queries = load_embeddings(args.queries)
    index = build_index(pool, metric=args.metric)
    params = load_params(args.checkpoint) if args.checkpoint else None
    if args.query_id is not None:
        ids = [args.query_id]
    else:
        ids = list(queries.ids)
    for qid in ids:
        vec = queries.vector(qid)
        if params is not None:
            result = project_and_query(params, index, vec, args.k)
        else:
            result = query(index, vec, args.k)
        for rank, (id_, score) in enumerate(result.items, 1):
            print(json.dumps({"query_id": qid, "rank": rank, "id": id_, "score": score}))
    _say(f"retrieve: {len(ids)} queries, top-{args.k} under {args.metric}")
    return 0


# -------------------------------------------------------------------- bench


def cmd_bench(args) -> int:
    from .evaluation import benchmark_latency, environment_descriptor
    from .projection import load_params
    from .retrieval import build_index, project_and_query, query

    pool = load_embeddings(args.pool)
    queries = load_embeddings(args.queries)
    index = build_index(pool, metric=args.metric)
    query_ids = list(queries.ids)
    if args.limit:
        query_ids = query_ids[: args.limit]
    if args.checkpoint:
        params = load_params(args.checkpoint)
        model = "projection"

        def retriever(qid):
            return project_and_query(params, index, queries.vector(qid), args.k)

    else:
        model = "raw-embedding"

        def retriever(qid):
            return query(index, queries.vector(qid), args.k)

    stats = benchmark_latency(
        retriever, query_ids, warmup=args.warmup, repetitions=args.repetitions
    )
    summary = {
        "model": model,
        "metric": args.metric,
        "k": args.k,
        "n_queries": len(query_ids),
        "warmup": args.warmup,
        "repetitions": args.repetitions,
        "avg_query_seconds": stats.avg_query_seconds,
        "throughput_qps": stats.throughput_qps,
        "environment": environment_descriptor(),
    }
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    _say(
        f"bench[{model}]: avg {stats.avg_query_seconds * 1e3:.3f} ms/query, "
        f"{stats.throughput_qps:.1f} queries/s over {len(query_ids)} queries"
    )
    _emit(summary)
    return 0


# ------------------------------------------------------------------ parsing


def _build_parser() -> _Parser:
    parser = _Parser(prog="modalign", description=__doc__)
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="cap internal (BLAS) parallelism at this many threads",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("gen-synth", help="generate a deterministic synthetic corpus")
    g.add_argument("--pairs", type=int, required=True, help="number of positive pairs")
    g.add_argument("--dim", type=int, default=768, help="vector dimensionality")
    g.add_argument("--noise", type=float, default=0.0, help="modality-B noise sigma")
    g.add_argument("--seed", type=int, default=DEFAULT_SEED)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--holdout", type=int, default=0, help="held-out pairs (train/test split)")
    _add_config_flag(g)
    g.set_defaults(func=cmd_gen_synth, _subparser=g)

    t = sub.add_parser("train", help="train the projection network")
    t.add_argument("--a", required=True, help="modality-A EMBV1 file (anchors)")
    t.add_argument("--b", required=True, help="modality-B EMBV1 file (to be projected)")
    t.add_argument("--pairs", required=True, help="pair dataset JSONL")
    t.add_argument("--checkpoint-out", required=True, help="PRJV1 output path")
    t.add_argument("--report-dir", default=None, help="directory for train report + figures")
    t.add_argument("--epochs", type=int, default=5)
    t.add_argument("--batch-size", type=int, default=32)
    t.add_argument("--lr", type=float, default=1e-3, help="learning rate")
    t.add_argument("--margin", type=float, default=1.0)
    t.add_argument("--seed", type=int, default=DEFAULT_SEED)
    t.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    t.add_argument("--hidden", type=int, default=2048, help="hidden layer width")
    t.add_argument("--no-shuffle", action="store_true")
    t.add_argument("--normalize", action="store_true", help="L2-normalize inputs")
    t.add_argument("--no-figures", action="store_true")
    _add_config_flag(t)
    t.set_defaults(func=cmd_train, _subparser=t)

    e = sub.add_parser("eval", help="evaluate retrieval quality and latency")
    e.add_argument("--a", required=True, help="candidate pool EMBV1 file")
    e.add_argument("--b", required=True, help="query-side EMBV1 file")
    e.add_argument("--pairs", required=True, help="pair dataset JSONL (positives give gold)")
    e.add_argument("--checkpoint", required=True, help="trained PRJV1 checkpoint")
    e.add_argument("--metric", choices=["euclidean", "cosine"], default="euclidean")
    e.add_argument(
        "--baseline",
        action="append",
        choices=["bm25", "raw-embedding"],
        help="also evaluate this baseline (repeatable)",
    )
    e.add_argument("--texts", default=None, help="raw-text corpus JSONL (needed for bm25)")
    e.add_argument("--out-dir", default=None, help="directory for report.json, CSV, figures")
    e.add_argument("--warmup", type=int, default=10)
    e.add_argument("--repetitions", type=int, default=3)
    e.add_argument("--average", choices=["weighted", "macro"], default="weighted")
    e.add_argument("--dataset-name", default="", help="dataset label for reports")
    e.add_argument("--no-figures", action="store_true")
    _add_config_flag(e)
    e.set_defaults(func=cmd_eval, _subparser=e)

    r = sub.add_parser("retrieve", help="top-k retrieval, printed as JSON lines")
    r.add_argument("--pool", required=True, help="candidate pool EMBV1 file")
    r.add_argument("--queries", required=True, help="query EMBV1 file")
    r.add_argument("--query-id", default=None, help="run only this query id")
    r.add_argument("--checkpoint", default=None, help="project queries through this checkpoint")
    r.add_argument("--metric", choices=["euclidean", "cosine"], default="euclidean")
    r.add_argument("-k", type=int, default=1)
    _add_config_flag(r)
    r.set_defaults(func=cmd_retrieve, _subparser=r)

    b = sub.add_parser("bench", help="latency/throughput benchmark")
    b.add_argument("--pool", required=True, help="candidate pool EMBV1 file")
    b.add_argument("--queries", required=True, help="query EMBV1 file")
    b.add_argument("--checkpoint", default=None, help="PRJV1 checkpoint (omit for raw queries)")
    b.add_argument("--metric", choices=["euclidean", "cosine"], default="euclidean")
    b.add_argument("-k", type=int, default=1)
    b.add_argument("--limit", type=int, default=None, help="use only the first N queries")
    b.add_argument("--warmup", type=int, default=10)
    b.add_argument("--repetitions", type=int, default=3)
    b.add_argument("--out", default=None, help="also write the summary JSON here")
    _add_config_flag(b)
    b.set_defaults(func=cmd_bench, _subparser=b)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, argv)
        if args.threads is not None:
            if args.threads < 1:
                raise ModalignError(f"--threads must be >= 1, got {args.threads}")
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                return args.func(args)
        return args.func(args)
    except (ModalignError, FileNotFoundError, NotADirectoryError, PermissionError) as e:
        print(f"modalign {args.command}: error: {e}", file=sys.stderr)
        return _DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
