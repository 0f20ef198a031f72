"""Budget sweeps, guarantee estimation runs and coverage simulations."""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .aggregation import DEFAULT_POLICY, AggregationPolicy, global_arrays
from .core import AgreementMatrix, Dataset, ValidationError, require_valid
from .guarantee import (DEFAULT_LEVEL, DEFAULT_N_EST, DEFAULT_REPLICATES, candidate_confidence,
                        draw_estimation_sample, estimate_with_bound)
from .metrics import MetricReport, metric_report
from .persist import write_rows
from .samplers import Method, apply_human_scores_at, compute_weights, exponential_key_order, sample_size

DEFAULT_BUDGETS = (0.1, 0.2, 0.3, 0.4, 0.6, 0.8)
DEFAULT_TRIALS = 20


def derive_seed(seed: int, *path: int) -> int:
    """Deterministic 64-bit child seed for a (seed, index, ...) path."""
    if seed < 0 or any(p < 0 for p in path):
        raise ValidationError("seeds must be nonnegative")
    return int(np.random.SeedSequence([seed, *path]).generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SweepReportRow:
    model_tag: str
    method: str
    budget_fraction: float
    trial_seed: int
    accuracy_after: float
    qwk_after: float
    accuracy_before: float
    qwk_before: float

    @property
    def accuracy_gain(self) -> float:
        return self.accuracy_after - self.accuracy_before

    @property
    def qwk_gain(self) -> float:
        return self.qwk_after - self.qwk_before


SWEEP_HEADER = [f.name for f in fields(SweepReportRow)]


def global_metrics(dataset: Dataset, policy=DEFAULT_POLICY) -> MetricReport:
    machine, human = global_arrays(dataset, policy)
    return metric_report(machine, human, dataset.scale.size)


def _require_labeled(dataset: Dataset) -> None:
    require_valid(dataset)
    if not dataset.has_machine_labels:
        raise ValidationError("test data needs a machine label on every response")
    if not dataset.has_human_labels:
        raise ValidationError("test data needs a human label on every response")


def run_sweep(dataset: Dataset, matrix: AgreementMatrix | None, methods: Sequence = tuple(Method),
              budgets: Sequence[float] = DEFAULT_BUDGETS, trials: int = DEFAULT_TRIALS, seed: int = 0,
              policy=DEFAULT_POLICY, model_tag: str = "model") -> list[SweepReportRow]:
    """Triage ``dataset`` for every (method, budget, trial) and report global metrics.

    A trial's random keys depend only on (seed, trial), so within a trial
    the samples of increasing budgets are nested and all methods share
    the same uniforms.
    """
    _require_labeled(dataset)
    policy = AggregationPolicy.parse(policy)
    methods = [Method.parse(m) for m in methods]
    n = len(dataset)
    sizes = [sample_size(b, n) for b in budgets]
    if trials < 1:
        raise ValidationError("need at least one trial")
    before = global_metrics(dataset, policy)
    trial_seeds = [derive_seed(seed, t) for t in range(trials)]
    rows = []
    for method in methods:
        probs = compute_weights(method, dataset, matrix, policy).probs
        orders = [exponential_key_order(probs, s) for s in trial_seeds]
        for budget, k in zip(budgets, sizes):
            for trial_seed, order in zip(trial_seeds, orders):
                after = global_metrics(apply_human_scores_at(dataset, order[:k]), policy)
                rows.append(SweepReportRow(model_tag, method.value, float(budget), trial_seed,
                                           after.accuracy, after.qwk, before.accuracy, before.qwk))
    return rows


def write_sweep_report(rows: Sequence[SweepReportRow], path) -> None:
    write_rows(path, SWEEP_HEADER, (astuple(r) for r in rows))


def read_sweep_report(path) -> list[SweepReportRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_HEADER:
            raise ValidationError(f"{path}: header must be {','.join(SWEEP_HEADER)}")
        try:
            return [SweepReportRow(r["model_tag"], r["method"], float(r["budget_fraction"]),
                                   int(r["trial_seed"]), float(r["accuracy_after"]), float(r["qwk_after"]),
                                   float(r["accuracy_before"]), float(r["qwk_before"]))
                    for r in reader]
        except (TypeError, ValueError) as e:
            raise ValidationError(f"{path}: malformed report row ({e})") from None


def summarize_sweep(rows: Sequence[SweepReportRow]) -> dict:
    """Mean/min/max of metrics per (model_tag, method, budget)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.model_tag, r.method, r.budget_fraction), []).append(r)
    out = {}
    for key, group in groups.items():
        acc = np.array([r.accuracy_after for r in group])
        kap = np.array([r.qwk_after for r in group])
        out[key] = {
            "accuracy_mean": float(acc.mean()), "accuracy_min": float(acc.min()), "accuracy_max": float(acc.max()),
            "qwk_mean": float(kap.mean()), "qwk_min": float(kap.min()), "qwk_max": float(kap.max()),
            "accuracy_before": group[0].accuracy_before, "qwk_before": group[0].qwk_before,
            "trials": len(group),
        }
    return out


def triage(dataset: Dataset, matrix, method, budget: float, seed: int, policy=DEFAULT_POLICY) -> Dataset:
    probs = compute_weights(method, dataset, matrix, policy).probs
    k = sample_size(budget, len(dataset))
    return apply_human_scores_at(dataset, exponential_key_order(probs, seed)[:k])


def _estimate_once(dataset, triaged, confidences, n_est, level, replicates, seed, policy, weighted):
    chosen = draw_estimation_sample(confidences, n_est, derive_seed(seed, 1))
    inclusion = {c.candidate_id: c.prob for c in confidences} if weighted else None
    return estimate_with_bound(triaged, chosen, policy, level, replicates, derive_seed(seed, 2), inclusion)


def run_estimate(dataset: Dataset, matrix: AgreementMatrix, method=Method.REWARD, budget: float = 0.8,
                 n_est: int = DEFAULT_N_EST, level: float = DEFAULT_LEVEL,
                 replicates: int = DEFAULT_REPLICATES, seed: int = 0, policy=DEFAULT_POLICY,
                 weighted: bool = False) -> dict:
    """Triage, then estimate post-triage global metrics with lower bounds.

    Confidences come from the predictions before triage. The returned dict
    also carries the true post-triage metrics computed from all labels.
    """
    _require_labeled(dataset)
    if n_est > dataset.n_candidates:
        raise ValidationError(f"n_est={n_est} exceeds {dataset.n_candidates} candidates")
    triaged = triage(dataset, matrix, method, budget, derive_seed(seed, 0), policy)
    confidences = candidate_confidence(dataset, matrix)
    report = _estimate_once(dataset, triaged, confidences, n_est, level, replicates, seed, policy, weighted)
    probs = np.array([c.prob for c in confidences])
    return {
        "method": Method.parse(method).value,
        "budget_fraction": float(budget),
        "seed": seed,
        "guarantee": report.to_dict(),
        "before": global_metrics(dataset, policy).to_dict(),
        "truth": global_metrics(triaged, policy).to_dict(),
        "confidence_distribution": {
            "n_candidates": int(probs.size),
            "min_prob": float(probs.min()),
            "max_prob": float(probs.max()),
            "uniform_prob": 1.0 / probs.size,
            "effective_sample_size": float(1.0 / np.sum(probs ** 2)),
        },
    }


COVERAGE_HEADER = ["replication", "metric", "point", "bound", "truth"]


def run_coverage(dataset: Dataset, matrix: AgreementMatrix, method=Method.REWARD, budget: float = 0.8,
                 replications: int = 200, n_est: int = DEFAULT_N_EST, level: float = DEFAULT_LEVEL,
                 replicates: int = DEFAULT_REPLICATES, seed: int = 0, policy=DEFAULT_POLICY,
                 weighted: bool = False) -> list[tuple]:
    """Repeat triage + estimation; one (replication, metric, point, bound, truth) row per metric."""
    _require_labeled(dataset)
    if n_est > dataset.n_candidates:
        raise ValidationError(f"n_est={n_est} exceeds {dataset.n_candidates} candidates")
    probs = compute_weights(method, dataset, matrix, policy).probs
    k = sample_size(budget, len(dataset))
    confidences = candidate_confidence(dataset, matrix)
    rows = []
    for r in range(replications):
        rep_seed = derive_seed(seed, r)
        triaged = apply_human_scores_at(dataset, exponential_key_order(probs, derive_seed(rep_seed, 0))[:k])
        truth = global_metrics(triaged, policy)
        report = _estimate_once(dataset, triaged, confidences, n_est, level, replicates, rep_seed, policy, weighted)
        rows.append((r, "accuracy", report.accuracy_point, report.accuracy_lower_bound, truth.accuracy))
        rows.append((r, "qwk", report.qwk_point, report.qwk_lower_bound, truth.qwk))
    return rows


def coverage_rates(rows: Sequence[tuple]) -> dict[str, float]:
    """Fraction of replications whose bound does not exceed the truth, per metric."""
    hits: dict[str, list[bool]] = {}
    for _, metric, _point, bound, truth in rows:
        hits.setdefault(metric, []).append(bound <= truth)
    return {m: float(np.mean(h)) for m, h in hits.items()}


def write_coverage(rows: Sequence[tuple], path) -> None:
    write_rows(Path(path), COVERAGE_HEADER, rows)
