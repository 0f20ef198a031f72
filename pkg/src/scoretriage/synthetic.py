"""Synthetic scored datasets, pseudo models and candidate-wise splits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import MISSING, Dataset, ScoreScale, ValidationError


def bell_distribution(k: int) -> tuple[float, ...]:
    """Discretized normal centred on the scale with sd (k - 1) / 4.

    Class i receives the mass of [i - 1/2, i + 1/2); the tails fold into
    the end classes. For k = 6 this is about 5.5/15.7/28.8% per half.
    """
    mu, sd = (k - 1) / 2, (k - 1) / 4

    def cdf(x):
        return 0.5 * (1.0 + math.erf((x - mu) / (sd * math.sqrt(2.0))))

    edges = [0.0] + [cdf(i + 0.5) for i in range(k - 1)] + [1.0]
    return tuple(float(b - a) for a, b in zip(edges[:-1], edges[1:]))


@dataclass(frozen=True)
class SynthConfig:
    n_candidates: int
    items_per_candidate: int = 6
    k: int = 6
    label_distribution: Optional[Sequence[float]] = None
    seed: int = 0
    scale: Optional[ScoreScale] = field(default=None, compare=False)

    def __post_init__(self):
        if self.n_candidates < 1 or self.items_per_candidate < 1:
            raise ValidationError("candidate and item counts must be at least 1")
        if self.k < 2:
            raise ValidationError("need at least 2 classes")
        dist = self.label_distribution
        dist = bell_distribution(self.k) if dist is None else tuple(float(p) for p in dist)
        if len(dist) != self.k:
            raise ValidationError(f"label distribution has {len(dist)} entries for K={self.k}")
        if any(p < 0 for p in dist) or abs(sum(dist) - 1.0) > 1e-9:
            raise ValidationError("label distribution must be nonnegative and sum to 1")
        object.__setattr__(self, "label_distribution", dist)
        scale = self.scale or ScoreScale.default(self.k)
        if scale.size != self.k:
            raise ValidationError("scale size does not match K")
        object.__setattr__(self, "scale", scale)


@dataclass(frozen=True)
class PseudoModelConfig:
    local_accuracy: float
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.local_accuracy <= 1:
            raise ValidationError("local accuracy must be in (0, 1]")


def _width(n: int) -> int:
    return len(str(n))


def generate_labels(config: SynthConfig) -> Dataset:
    """Human-labelled responses with iid labels; predictions left unset."""
    rng = np.random.default_rng(config.seed)
    n_items = config.items_per_candidate
    n = config.n_candidates * n_items
    human = rng.choice(config.k, size=n, p=np.asarray(config.label_distribution))
    cw, iw = _width(config.n_candidates), _width(n_items)
    candidate_ids = [f"c{c:0{cw}d}" for c in range(1, config.n_candidates + 1) for _ in range(n_items)]
    item_ids = [f"i{i:0{iw}d}" for _ in range(config.n_candidates) for i in range(1, n_items + 1)]
    return Dataset(config.scale, candidate_ids, item_ids, np.full(n, MISSING), human)


def n_flipped(local_accuracy: float, n: int) -> int:
    # tolerance absorbs (1 - 0.66) * 6000 = 2039.9999999999998
    return math.floor((1.0 - local_accuracy) * n + 1e-9)


def apply_pseudo_model(dataset: Dataset, config: PseudoModelConfig) -> Dataset:
    """Predictions equal to the human labels except an exact-size random subset.

    Each changed prediction is drawn uniformly from the other K - 1 classes.
    """
    if not dataset.has_human_labels:
        raise ValidationError("pseudo model needs a human label on every response")
    rng = np.random.default_rng(config.seed)
    n, k = len(dataset), dataset.scale.size
    flips = rng.choice(n, size=n_flipped(config.local_accuracy, n), replace=False)
    machine = dataset.human.copy()
    machine[flips] = (machine[flips] + rng.integers(1, k, size=flips.size)) % k
    return dataset.replace(machine=machine)


def split_by_candidate(dataset: Dataset, train_fraction: float = 0.7, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Random candidate partition; every response follows its candidate."""
    if not 0 < train_fraction < 1:
        raise ValidationError("train fraction must be in (0, 1)")
    total = dataset.n_candidates
    n_train = math.floor(train_fraction * total + 0.5)
    if n_train == 0 or n_train == total:
        raise ValidationError(f"train fraction {train_fraction} leaves one side empty for {total} candidates")
    rng = np.random.default_rng(seed)
    in_train = np.zeros(total, dtype=bool)
    in_train[rng.permutation(total)[:n_train]] = True
    mask = in_train[dataset.candidate_codes]
    return dataset.subset(np.flatnonzero(mask)), dataset.subset(np.flatnonzero(~mask))
