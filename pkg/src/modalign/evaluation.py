"""Retrieval metrics, the latency/throughput benchmark, and report emission.

The metric protocol treats each query's single gold candidate id as a class
with exactly one true instance; top-1 predictions over the candidate pool
form a confusion matrix, and precision/recall/F1 are averaged per class
weighted by support.  Under this one-relevant-item protocol recall always
equals accuracy, while precision is dragged down by FPs on other queries'
gold classes.  A macro average is available behind a flag.

Throughput is defined as the reciprocal of mean per-query latency measured
sequentially around the full retrieve path, so throughput * avg_seconds = 1
holds by construction.
"""

from __future__ import annotations

import json
import os
import platform
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Mapping, NamedTuple

from .errors import ValidationError
from .retrieval import RetrievalResult

_AVERAGES = ("weighted", "macro")


class RetrievalMetrics(NamedTuple):
    accuracy: float
    precision: float
    recall: float
    f1: float


def evaluate_retrieval(
    retriever: Callable[[str], RetrievalResult],
    gold: Mapping[str, str],
    average: str = "weighted",
) -> RetrievalMetrics:
    """Score top-1 predictions against a one-gold-per-query map."""
    if not gold:
        raise ValidationError("gold map is empty")
    if average not in _AVERAGES:
        raise ValidationError(f"average must be one of {_AVERAGES}, got {average!r}")

    predictions = {}
    for query_id in gold:
        result = retriever(query_id)
        if not result.items:
            raise ValidationError(f"retriever returned no items for query {query_id!r}")
        predictions[query_id] = result.items[0][0]

    classes = list(dict.fromkeys(gold.values()))  # unique, insertion-ordered
    support = {c: 0 for c in classes}
    tp = {c: 0 for c in classes}
    fp = {c: 0 for c in classes}
    correct = 0
    for query_id, gold_id in gold.items():
        pred = predictions[query_id]
        support[gold_id] += 1
        if pred == gold_id:
            tp[gold_id] += 1
            correct += 1
        elif pred in fp:
            fp[pred] += 1
        # predictions outside every gold class only cost their query's recall

    per_class = {}
    for c in classes:
        prec = tp[c] / (tp[c] + fp[c]) if tp[c] + fp[c] > 0 else 0.0
        rec = tp[c] / support[c]
        f1 = 2.0 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
        per_class[c] = (prec, rec, f1)

    if average == "weighted":
        total = sum(support.values())
        precision = sum(support[c] * per_class[c][0] for c in classes) / total
        recall = sum(support[c] * per_class[c][1] for c in classes) / total
        f1 = sum(support[c] * per_class[c][2] for c in classes) / total
    else:
        n_classes = len(classes)
        precision = sum(v[0] for v in per_class.values()) / n_classes
        recall = sum(v[1] for v in per_class.values()) / n_classes
        f1 = sum(v[2] for v in per_class.values()) / n_classes

    accuracy = correct / len(gold)
    return RetrievalMetrics(accuracy=accuracy, precision=precision, recall=recall, f1=f1)


def harmonic_mean(f1: float, throughput: float) -> float:
    """Combined accuracy/speed figure: 2 * f1 * throughput / (f1 + throughput)."""
    if f1 < 0 or throughput < 0:
        raise ValidationError(f"inputs must be non-negative, got f1={f1}, throughput={throughput}")
    if f1 > 1:
        raise ValidationError(f"f1 must lie in [0, 1], got {f1}")
    if throughput == 0:
        raise ValidationError("throughput must be positive")
    if f1 == 0:
        return 0.0
    return 2.0 * f1 * throughput / (f1 + throughput)


class LatencyStats(NamedTuple):
    avg_query_seconds: float
    throughput_qps: float


def benchmark_latency(
    retriever: Callable[[str], object],
    queries: list[str],
    warmup: int = 10,
    repetitions: int = 3,
) -> LatencyStats:
    """Mean sequential per-query wall time and its reciprocal throughput.

    Runs ``warmup`` discarded calls (cycling through the queries), then times
    ``repetitions`` full passes with a monotonic clock.
    """
    if not queries:
        raise ValidationError("query list is empty")
    if repetitions < 1:
        raise ValidationError(f"repetitions must be >= 1, got {repetitions}")
    if warmup < 0:
        raise ValidationError(f"warmup must be >= 0, got {warmup}")

    for i in range(warmup):
        retriever(queries[i % len(queries)])

    t0 = time.perf_counter()
    for _ in range(repetitions):
        for q in queries:
            retriever(q)
    elapsed = time.perf_counter() - t0
    if elapsed <= 0.0:
        raise ValidationError("timer resolution too coarse to measure this retriever")
    avg = elapsed / (repetitions * len(queries))
    return LatencyStats(avg_query_seconds=avg, throughput_qps=1.0 / avg)


@dataclass(frozen=True)
class EvalReport:
    """One model's full benchmark row: quality, latency, and their combination."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    avg_query_seconds: float
    throughput_qps: float
    harmonic_mean: float
    n_queries: int

    def validate(self) -> None:
        for name in ("accuracy", "precision", "recall", "f1"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {value}")
        if self.avg_query_seconds <= 0 or self.throughput_qps <= 0:
            raise ValidationError("timing fields must be positive")
        if abs(self.throughput_qps * self.avg_query_seconds - 1.0) > 1e-9:
            raise ValidationError(
                "throughput_qps must be the reciprocal of avg_query_seconds "
                f"(product {self.throughput_qps * self.avg_query_seconds})"
            )
        expected = harmonic_mean(self.f1, self.throughput_qps)
        if abs(self.harmonic_mean - expected) > 1e-9 * max(1.0, expected):
            raise ValidationError(
                f"harmonic_mean {self.harmonic_mean} does not match formula value {expected}"
            )
        if self.n_queries < 1:
            raise ValidationError(f"n_queries must be positive, got {self.n_queries}")

    @classmethod
    def from_parts(
        cls, metrics: RetrievalMetrics, latency: LatencyStats, n_queries: int
    ) -> "EvalReport":
        return cls(
            accuracy=metrics.accuracy,
            precision=metrics.precision,
            recall=metrics.recall,
            f1=metrics.f1,
            avg_query_seconds=latency.avg_query_seconds,
            throughput_qps=latency.throughput_qps,
            harmonic_mean=harmonic_mean(metrics.f1, latency.throughput_qps),
            n_queries=n_queries,
        )


def environment_descriptor() -> dict:
    """CPU model, core count, platform and interpreter of this host."""
    cpu_model = platform.processor() or platform.machine()
    try:
        with open("/proc/cpuinfo", encoding="utf-8") as fh:
            for line in fh:
                if line.lower().startswith("model name"):
                    cpu_model = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    return {
        "cpu_model": cpu_model,
        "cpu_count": os.cpu_count(),
        "platform": platform.platform(),
        "python": platform.python_version(),
    }


def report_to_dict(
    report: EvalReport,
    config: Mapping | None = None,
    environment: Mapping | None = None,
    dataset: str = "",
    model: str = "",
) -> dict:
    """Validated JSON-ready dict: EvalReport fields plus run context."""
    report.validate()
    out = asdict(report)
    out["config"] = dict(config) if config is not None else {}
    out["environment"] = dict(environment) if environment is not None else environment_descriptor()
    out["dataset"] = dataset
    out["model"] = model
    return out


def emit_report(
    report: EvalReport,
    path,
    config: Mapping | None = None,
    environment: Mapping | None = None,
    dataset: str = "",
    model: str = "",
) -> None:
    """Write one validated report as JSON (floats round-trip losslessly)."""
    payload = report_to_dict(
        report, config=config, environment=environment, dataset=dataset, model=model
    )
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def read_report(path) -> dict:
    """Load a report emitted by emit_report."""
    return json.loads(Path(path).read_text(encoding="utf-8"))
