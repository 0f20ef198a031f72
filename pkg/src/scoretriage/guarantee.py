"""Post-triage metric estimates with one-sided bootstrap lower bounds.

A second, small sample of whole candidates is drawn with probability
proportional to a per-candidate confidence

    zeta(t) = (1 - sum of t's normalized response uncertainties) ** 2

and accuracy/QWK of the global scores on that sample are bootstrapped
(candidates resampled with replacement) to get lower confidence bounds.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .aggregation import DEFAULT_POLICY, global_arrays
from .core import MISSING, AgreementMatrix, Dataset, ValidationError, require_valid
from .metrics import qwk_from_confusion
from .samplers import DELTA, SamplingWeights, class_uncertainty, draw_without_replacement

DEFAULT_N_EST = 200
DEFAULT_LEVEL = 0.95
DEFAULT_REPLICATES = 1000


@dataclass(frozen=True)
class CandidateConfidence:
    candidate_id: str
    confidence: float
    prob: float


@dataclass(frozen=True)
class GuaranteeReport:
    accuracy_point: float
    accuracy_lower_bound: float
    qwk_point: float
    qwk_lower_bound: float
    confidence_level: float
    estimation_sample_size: int
    bootstrap_replicates: int
    estimator: str = "unweighted"

    def to_dict(self) -> dict:
        return asdict(self)


def normalized_uncertainties(dataset: Dataset, matrix: AgreementMatrix) -> np.ndarray:
    """Per-response class uncertainty divided by its dataset-wide total.

    No smoothing is added here, so zero-loss responses contribute exactly 0;
    an all-zero dataset yields all zeros.
    """
    if not dataset.has_machine_labels:
        raise ValidationError("every record needs a machine label")
    losses = class_uncertainty(matrix)[dataset.machine]
    total = losses.sum()
    return losses / total if total > 0 else np.zeros_like(losses)


def candidate_confidence(dataset: Dataset, matrix: AgreementMatrix) -> list[CandidateConfidence]:
    require_valid(dataset)
    u = normalized_uncertainties(dataset, matrix)
    per_candidate = np.bincount(dataset.candidate_codes, weights=u, minlength=dataset.n_candidates)
    zeta = (1.0 - per_candidate) ** 2
    smoothed = zeta + DELTA
    probs = smoothed / smoothed.sum()
    return [CandidateConfidence(cid, float(z), float(p))
            for cid, z, p in zip(dataset.candidates, zeta, probs)]


def confidence_weights(confidences: Sequence[CandidateConfidence]) -> SamplingWeights:
    probs = np.array([c.prob for c in confidences])
    return SamplingWeights(tuple(c.candidate_id for c in confidences), probs / probs.sum())


def draw_estimation_sample(confidences: Sequence[CandidateConfidence], n_est: int = DEFAULT_N_EST,
                           seed: int = 0) -> list[str]:
    if n_est > len(confidences):
        raise ValidationError(f"estimation sample of {n_est} exceeds {len(confidences)} candidates")
    return draw_without_replacement(confidence_weights(confidences), n_est, seed)


def bootstrap_indices(n: int, replicates: int, seed: int) -> np.ndarray:
    """(replicates, n) resampling indices; row b depends only on (seed, b)."""
    out = np.empty((replicates, n), dtype=np.int64)
    for b in range(replicates):
        out[b] = np.random.default_rng([seed, b]).integers(0, n, size=n)
    return out


def _batched_confusion(machine, human, idx, k, weights=None) -> np.ndarray:
    reps = idx.shape[0]
    cells = (np.arange(reps)[:, None] * k * k + human[idx] * k + machine[idx]).ravel()
    w = None if weights is None else weights[idx].ravel()
    return np.bincount(cells, weights=w, minlength=reps * k * k).reshape(reps, k, k)


def _lower_quantile(values: np.ndarray, level: float) -> float:
    return float(np.quantile(values, 1.0 - level, method="inverted_cdf"))


def estimate_with_bound(dataset: Dataset, sample: Iterable[str], policy=DEFAULT_POLICY,
                        level: float = DEFAULT_LEVEL, replicates: int = DEFAULT_REPLICATES,
                        seed: int = 0, inclusion_probs: Optional[Mapping[str, float]] = None) -> GuaranteeReport:
    """Point estimates and lower bounds of global accuracy and QWK on ``sample``.

    With ``inclusion_probs`` the estimates are Hajek-weighted by
    ``1 / prob``; otherwise every sampled candidate counts equally.
    Lower bounds are the empirical ``1 - level`` quantile of the bootstrap
    replicates, capped at the point estimate.
    """
    if not 0.5 < level < 1:
        raise ValidationError("confidence level must be in (0.5, 1)")
    if replicates < 100:
        raise ValidationError("need at least 100 bootstrap replicates")
    sample = list(dict.fromkeys(sample))
    if not sample:
        raise ValidationError("estimation sample is empty")
    index = dataset.candidate_index
    positions = []
    for cid in sample:
        if cid not in index:
            raise ValidationError(f"candidate {cid!r} is not in the dataset")
        positions.extend(index[cid])
    sub = dataset.subset(positions)
    machine, human = global_arrays(sub, policy)
    if np.any(human == MISSING):
        bad = sub.candidates[int(np.flatnonzero(human == MISSING)[0])]
        raise ValidationError(f"unlabeled candidate in sample: {bad!r}")
    weights = None
    if inclusion_probs is not None:
        weights = np.array([1.0 / inclusion_probs[cid] for cid in sub.candidates])

    k = dataset.scale.size
    n = machine.size
    match = (machine == human).astype(np.float64)
    full = np.arange(n)[None, :]
    idx = bootstrap_indices(n, replicates, seed)
    if weights is None:
        acc_point = float(match.mean())
        acc_reps = match[idx].mean(axis=1)
    else:
        acc_point = float((weights * match).sum() / weights.sum())
        acc_reps = (weights[idx] * match[idx]).sum(axis=1) / weights[idx].sum(axis=1)
    qwk_point = float(qwk_from_confusion(_batched_confusion(machine, human, full, k, weights))[0])
    qwk_reps = qwk_from_confusion(_batched_confusion(machine, human, idx, k, weights))

    return GuaranteeReport(
        accuracy_point=acc_point,
        accuracy_lower_bound=min(acc_point, _lower_quantile(acc_reps, level)),
        qwk_point=qwk_point,
        qwk_lower_bound=min(qwk_point, _lower_quantile(qwk_reps, level)),
        confidence_level=level,
        estimation_sample_size=n,
        bootstrap_replicates=replicates,
        estimator="unweighted" if weights is None else "hajek",
    )
