"""Sampling weights for triage and weighted sampling without replacement.

Three weightings decide which responses go to expert raters:

* random: uniform over records;
* uncertainty: the cross-entropy loss of the predicted class's agreement
  row against its one-hot ideal, i.e. ``-ln p(m | m)``;
* reward: expected absolute change of the candidate's global score when
  the prediction is swapped for the human class, weighted by ``p(c | m)``.

Uncertainty and reward weights are additively smoothed by ``DELTA`` so
every record keeps a nonzero chance of selection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .aggregation import DEFAULT_POLICY, AggregationPolicy, global_score
from .core import AgreementMatrix, Dataset, ItemResponse, ValidationError, lookup_prob, require_valid

DELTA = 0.001
LOG_EPS = 1e-6


class Method(str, enum.Enum):
    RANDOM = "random"
    UNCERTAINTY = "uncertainty"
    REWARD = "reward"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ValidationError(f"unknown sampling method {value!r} (choose from {choices})") from None


@dataclass(frozen=True, eq=False)
class SamplingWeights:
    """A normalized, strictly positive distribution over identifiers."""

    keys: tuple
    probs: np.ndarray

    def __post_init__(self):
        keys = tuple(self.keys)
        probs = np.array(self.probs, dtype=np.float64).reshape(-1)
        if len(keys) != probs.size:
            raise ValidationError("keys and probs differ in length")
        if probs.size == 0:
            raise ValidationError("empty weight vector")
        if np.any(~np.isfinite(probs)) or np.any(probs <= 0):
            raise ValidationError("sampling probabilities must be strictly positive")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValidationError("sampling probabilities must sum to 1")
        probs.flags.writeable = False
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_raw(cls, keys: Sequence[Hashable], raw) -> "SamplingWeights":
        raw = np.asarray(raw, dtype=np.float64)
        return cls(tuple(keys), raw / raw.sum())

    def __len__(self) -> int:
        return len(self.keys)


def sample_size(budget_fraction: float, n: int) -> int:
    """Number of records a budget buys: floor(budget * n), at least 1."""
    if not 0 < budget_fraction <= 1:
        raise ValidationError(f"budget fraction must be in (0, 1], got {budget_fraction}")
    # tolerance absorbs products such as 0.29 * 100 = 28.999999999999996
    return max(1, math.floor(budget_fraction * n + 1e-9))


@dataclass(frozen=True)
class SamplePlan:
    method: Method
    budget_fraction: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        sample_size(self.budget_fraction, 1)

    def size(self, n_records: int) -> int:
        return sample_size(self.budget_fraction, n_records)


def class_uncertainty(matrix: AgreementMatrix) -> np.ndarray:
    """Per predicted class, cross-entropy of its row against the one-hot ideal."""
    diagonal = np.diag(matrix.probs)
    return -np.log(np.maximum(diagonal, LOG_EPS))


def random_weights(dataset: Dataset) -> SamplingWeights:
    n = len(dataset)
    if n == 0:
        raise ValidationError("dataset is empty")
    return SamplingWeights(tuple(dataset.keys), np.full(n, 1.0 / n))


def _record_losses(dataset: Dataset, matrix: AgreementMatrix) -> np.ndarray:
    if not dataset.has_machine_labels:
        raise ValidationError("every record needs a machine label")
    if matrix.scale != dataset.scale:
        raise ValidationError("agreement matrix scale differs from dataset scale")
    return class_uncertainty(matrix)[dataset.machine]


def uncertainty_weights(dataset: Dataset, matrix: AgreementMatrix) -> SamplingWeights:
    require_valid(dataset)
    return SamplingWeights.from_raw(dataset.keys, _record_losses(dataset, matrix) + DELTA)


def _swapped_global(items: list[int], position: int, new_class: int, policy) -> int:
    swapped = list(items)
    swapped[position] = new_class
    return global_score(swapped, policy)


def reward_of_swap(record: ItemResponse, dataset: Dataset, new_class: int, policy=DEFAULT_POLICY) -> int:
    """|global after swapping this record's prediction to new_class - global now|."""
    pos = dataset.position_of(record.key)
    k = dataset.scale.size
    if not 0 <= new_class < k:
        raise ValidationError(f"class index {new_class} out of range for K={k}")
    positions = dataset.candidate_index[record.candidate_id]
    items = [int(dataset.machine[p]) for p in positions]
    before = global_score(items, policy)
    after = _swapped_global(items, positions.index(pos), new_class, policy)
    return abs(after - before)


def _candidate_expected_rewards(items: list[int], probs: np.ndarray, policy) -> list[float]:
    before = global_score(items, policy)
    out = []
    for j, m in enumerate(items):
        total = 0.0
        for c in range(probs.shape[1]):
            reward = abs(_swapped_global(items, j, c, policy) - before)
            total += float(probs[m, c]) * reward
        out.append(total + DELTA)
    return out


def expected_reward(record: ItemResponse, dataset: Dataset, matrix: AgreementMatrix, policy=DEFAULT_POLICY) -> float:
    """Sum over classes c of p(c | m) * reward(record, c), plus DELTA."""
    policy = AggregationPolicy.parse(policy)
    m = int(dataset.machine[dataset.position_of(record.key)])
    total = 0.0
    for c in range(dataset.scale.size):
        total += lookup_prob(matrix, m, c) * reward_of_swap(record, dataset, c, policy)
    return total + DELTA


def expected_rewards(dataset: Dataset, matrix: AgreementMatrix, policy=DEFAULT_POLICY) -> np.ndarray:
    """``expected_reward`` for every record, in dataset order."""
    require_valid(dataset)
    policy = AggregationPolicy.parse(policy)
    _record_losses(dataset, matrix)
    out = np.empty(len(dataset))
    for positions in dataset.candidate_index.values():
        items = [int(dataset.machine[p]) for p in positions]
        out[list(positions)] = _candidate_expected_rewards(items, matrix.probs, policy)
    return out


def reward_weights(dataset: Dataset, matrix: AgreementMatrix, policy=DEFAULT_POLICY) -> SamplingWeights:
    return SamplingWeights.from_raw(dataset.keys, expected_rewards(dataset, matrix, policy))


def compute_weights(method, dataset: Dataset, matrix: AgreementMatrix | None = None,
                    policy=DEFAULT_POLICY) -> SamplingWeights:
    method = Method.parse(method)
    if method is Method.RANDOM:
        return random_weights(dataset)
    if matrix is None:
        raise ValidationError(f"{method.value} sampling needs an agreement matrix")
    if method is Method.UNCERTAINTY:
        return uncertainty_weights(dataset, matrix)
    return reward_weights(dataset, matrix, policy)


def exponential_key_order(probs, seed) -> np.ndarray:
    """Positions sorted by descending key ``u ** (1 / w)``.

    Taking the first k positions is a weighted draw of k items without
    replacement, equivalent to k sequential draws with renormalization.
    Prefixes are nested, so larger budgets extend smaller ones.
    """
    probs = np.asarray(probs, dtype=np.float64)
    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random(probs.size)  # (0, 1], keeps log finite
    keys = np.log(u) / probs
    return np.argsort(-keys, kind="stable")


def draw_positions(probs, k: int, seed) -> np.ndarray:
    n = len(probs)
    if k < 1:
        raise ValidationError("sample size must be at least 1")
    if k > n:
        raise ValidationError(f"sample size {k} exceeds population {n}")
    return exponential_key_order(probs, seed)[:k]


def draw_without_replacement(weights: SamplingWeights, k: int, seed) -> list:
    """Ordered sample of k distinct identifiers from ``weights``."""
    return [weights.keys[i] for i in draw_positions(weights.probs, k, seed)]


def apply_human_scores(dataset: Dataset, sample) -> Dataset:
    """New dataset whose sampled records take their human label as prediction."""
    positions = [dataset.position_of(key) for key in sample]
    return apply_human_scores_at(dataset, positions)


def apply_human_scores_at(dataset: Dataset, positions) -> Dataset:
    positions = np.asarray(positions, dtype=np.int64)
    if positions.size == 0:
        return dataset
    if np.any(dataset.human[positions] < 0):
        bad = int(positions[np.flatnonzero(dataset.human[positions] < 0)[0]])
        raise ValidationError(f"unlabeled record in sample: {dataset.keys[bad]!r}")
    machine = dataset.machine.copy()
    machine[positions] = dataset.human[positions]
    return dataset.replace(machine=machine)
