"""Accuracy, confusion matrix and quadratic weighted kappa on ordinal labels."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .aggregation import DEFAULT_POLICY, GlobalTable, aggregate_dataset
from .core import Dataset, ValidationError


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    qwk: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def _check_pair(predictions, labels) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions, dtype=np.int64).reshape(-1)
    t = np.asarray(labels, dtype=np.int64).reshape(-1)
    if p.size != t.size:
        raise ValidationError(f"length mismatch: {p.size} predictions vs {t.size} labels")
    if p.size == 0:
        raise ValidationError("cannot score empty sequences")
    return p, t


def accuracy(predictions, labels) -> float:
    p, t = _check_pair(predictions, labels)
    return float(np.mean(p == t))


def confusion(predictions, labels, k: int) -> np.ndarray:
    """K x K counts with ``counts[label][prediction]``."""
    p, t = _check_pair(predictions, labels)
    if np.any((p < 0) | (p >= k) | (t < 0) | (t >= k)):
        raise ValidationError(f"labels must lie in [0, {k})")
    return np.bincount(t * k + p, minlength=k * k).reshape(k, k)


def quadratic_weights(k: int) -> np.ndarray:
    i = np.arange(k)
    return (i[:, None] - i[None, :]) ** 2 / (k - 1) ** 2


def qwk_from_confusion(counts) -> np.ndarray | float:
    """QWK of one confusion matrix or a stack of them (shape ``(..., K, K)``).

    A zero expected-disagreement term only happens when both raters put all
    mass on one and the same class; that case returns 1.0.
    """
    counts = np.asarray(counts, dtype=np.float64)
    k = counts.shape[-1]
    w = quadratic_weights(k)
    total = counts.sum(axis=(-2, -1), keepdims=True)
    observed = counts / total
    rows = observed.sum(axis=-1)
    cols = observed.sum(axis=-2)
    expected = rows[..., :, None] * cols[..., None, :]
    num = (w * observed).sum(axis=(-2, -1))
    den = (w * expected).sum(axis=(-2, -1))
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(den > 0, 1.0 - num / np.where(den > 0, den, 1.0), 1.0)
    if kappa.ndim == 0:
        return float(kappa)
    return kappa


def qwk(predictions, labels, k: int) -> float:
    if k < 2:
        raise ValidationError("QWK needs K >= 2")
    return qwk_from_confusion(confusion(predictions, labels, k))


def metric_report(predictions, labels, k: int) -> MetricReport:
    p, t = _check_pair(predictions, labels)
    return MetricReport(accuracy(p, t), qwk(p, t, k), int(p.size))


def evaluate_table(table: GlobalTable, k: int) -> MetricReport:
    """Global metrics over candidates whose human global score exists."""
    machine, human = table.labeled()
    return metric_report(machine, human, k)


def evaluate_dataset(dataset: Dataset, policy=DEFAULT_POLICY) -> MetricReport:
    return evaluate_table(aggregate_dataset(dataset, policy), dataset.scale.size)
