"""Candidate-level (global) scores from item-level ordinal scores."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import MISSING, Dataset, ValidationError, require_valid


class AggregationPolicy(str, enum.Enum):
    ROUNDED_MEAN = "rounded_mean"
    MEDIAN = "median"

    @classmethod
    def parse(cls, value) -> "AggregationPolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            choices = ", ".join(p.value for p in cls)
            raise ValidationError(f"unknown aggregation policy {value!r} (choose from {choices})") from None


DEFAULT_POLICY = AggregationPolicy.ROUNDED_MEAN


def global_score(item_scores: Sequence[int], policy=DEFAULT_POLICY) -> int:
    """Aggregate ordinal indices into one global index.

    ``rounded_mean`` rounds half up (2.5 -> 3) using exact integer
    arithmetic; ``median`` takes the lower median.
    """
    scores = [int(s) for s in item_scores]
    if not scores:
        raise ValidationError("cannot aggregate an empty score sequence")
    policy = AggregationPolicy.parse(policy)
    n = len(scores)
    if policy is AggregationPolicy.ROUNDED_MEAN:
        # floor(sum / n + 1/2) without floating point
        return (2 * sum(scores) + n) // (2 * n)
    return sorted(scores)[(n - 1) // 2]


def global_scores_by_code(labels: np.ndarray, codes: np.ndarray, n_groups: int, policy=DEFAULT_POLICY) -> np.ndarray:
    """Vectorized ``global_score`` for every group code in ``range(n_groups)``."""
    policy = AggregationPolicy.parse(policy)
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(codes, minlength=n_groups)
    if policy is AggregationPolicy.ROUNDED_MEAN:
        sums = np.bincount(codes, weights=labels, minlength=n_groups).astype(np.int64)
        return (2 * sums + counts) // (2 * counts)
    order = np.lexsort((labels, codes))
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return labels[order][starts + (counts - 1) // 2]


@dataclass(frozen=True)
class GlobalTable:
    """One row per candidate: (global_machine, global_human or None)."""

    rows: dict[str, tuple[int, Optional[int]]]

    def __len__(self) -> int:
        return len(self.rows)

    def labeled(self) -> tuple[np.ndarray, np.ndarray]:
        """(machine, human) global arrays restricted to fully labeled candidates."""
        pairs = [(m, h) for m, h in self.rows.values() if h is not None]
        if not pairs:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        arr = np.array(pairs, dtype=np.int64)
        return arr[:, 0], arr[:, 1]


def global_arrays(dataset: Dataset, policy=DEFAULT_POLICY) -> tuple[np.ndarray, np.ndarray]:
    """Per-candidate machine and human global scores, in candidate order.

    The human entry is ``MISSING`` for candidates with any unlabeled response.
    """
    if not dataset.has_machine_labels:
        raise ValidationError("cannot aggregate: some responses have no machine label")
    codes, n = dataset.candidate_codes, dataset.n_candidates
    machine = global_scores_by_code(dataset.machine, codes, n, policy)
    missing = np.bincount(codes, weights=(dataset.human == MISSING), minlength=n) > 0
    human_filled = np.where(dataset.human == MISSING, 0, dataset.human)
    human = global_scores_by_code(human_filled, codes, n, policy)
    human[missing] = MISSING
    return machine, human


def aggregate_dataset(dataset: Dataset, policy=DEFAULT_POLICY) -> GlobalTable:
    require_valid(dataset)
    machine, human = global_arrays(dataset, policy)
    rows = {
        cid: (int(m), None if h == MISSING else int(h))
        for cid, m, h in zip(dataset.candidates, machine, human)
    }
    return GlobalTable(rows)
