"""Domain types shared across the package and the human-machine agreement matrix."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

MISSING = -1

# Band names used when a 6-class scale is generated without explicit labels.
CEFR_BANDS = ("A2", "Low B1", "High B1", "Low B2", "High B2", "C")


class ValidationError(ValueError):
    """Raised when input data violates a domain invariant."""


@dataclass(frozen=True)
class ScoreScale:
    """Ordered ordinal labels; index 0 is the lowest proficiency."""

    classes: tuple[str, ...]

    def __post_init__(self):
        classes = tuple(self.classes)
        object.__setattr__(self, "classes", classes)
        if len(classes) < 2:
            raise ValidationError("a scale needs at least 2 classes")
        for label in classes:
            if not isinstance(label, str) or not label:
                raise ValidationError(f"scale labels must be nonempty strings, got {label!r}")
        if len(set(classes)) != len(classes):
            raise ValidationError("scale labels must be unique")

    @classmethod
    def default(cls, k: int = 6) -> "ScoreScale":
        if k == len(CEFR_BANDS):
            return cls(CEFR_BANDS)
        return cls(tuple(str(i) for i in range(k)))

    @property
    def size(self) -> int:
        return len(self.classes)

    def __len__(self) -> int:
        return len(self.classes)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {label: i for i, label in enumerate(self.classes)}

    def index_of(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ValidationError(f"unknown label {label!r}") from None

    def label_of(self, index: int) -> str:
        return self.classes[index]

    def __contains__(self, label) -> bool:
        return label in self._index


@dataclass(frozen=True)
class ItemResponse:
    candidate_id: str
    item_id: str
    machine_label: Optional[int] = None
    human_label: Optional[int] = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.candidate_id, self.item_id)


class Dataset:
    """Scored responses backed by parallel arrays.

    Labels are stored as int64 arrays with ``MISSING`` (-1) for absent
    values. Arrays are read-only; every transformation returns a new
    ``Dataset``. Candidates are indexed in order of first appearance.
    """

    def __init__(self, scale: ScoreScale, candidate_ids: Sequence[str], item_ids: Sequence[str],
                 machine: Sequence[int], human: Sequence[int]):
        self.scale = scale
        self.candidate_ids = tuple(candidate_ids)
        self.item_ids = tuple(item_ids)
        self.machine = _frozen_labels(machine)
        self.human = _frozen_labels(human)
        n = len(self.candidate_ids)
        if not (len(self.item_ids) == n == len(self.machine) == len(self.human)):
            raise ValidationError("response columns have different lengths")

    @classmethod
    def from_responses(cls, scale: ScoreScale, responses: Iterable[ItemResponse]) -> "Dataset":
        responses = list(responses)
        return cls(
            scale,
            [r.candidate_id for r in responses],
            [r.item_id for r in responses],
            [MISSING if r.machine_label is None else r.machine_label for r in responses],
            [MISSING if r.human_label is None else r.human_label for r in responses],
        )

    def __len__(self) -> int:
        return len(self.candidate_ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.scale == other.scale
                and self.candidate_ids == other.candidate_ids
                and self.item_ids == other.item_ids
                and np.array_equal(self.machine, other.machine)
                and np.array_equal(self.human, other.human))

    __hash__ = None

    def __repr__(self) -> str:
        return f"Dataset(n_responses={len(self)}, n_candidates={self.n_candidates}, K={self.scale.size})"

    @property
    def responses(self) -> tuple[ItemResponse, ...]:
        return tuple(self.response_at(i) for i in range(len(self)))

    def response_at(self, position: int) -> ItemResponse:
        m, h = int(self.machine[position]), int(self.human[position])
        return ItemResponse(
            self.candidate_ids[position],
            self.item_ids[position],
            None if m == MISSING else m,
            None if h == MISSING else h,
        )

    @property
    def keys(self) -> list[tuple[str, str]]:
        return list(zip(self.candidate_ids, self.item_ids))

    @cached_property
    def _candidate_layout(self):
        order: dict[str, list[int]] = {}
        for pos, cid in enumerate(self.candidate_ids):
            order.setdefault(cid, []).append(pos)
        candidates = tuple(order)
        codes = np.empty(len(self), dtype=np.int64)
        for code, positions in enumerate(order.values()):
            codes[positions] = code
        codes.flags.writeable = False
        index = {cid: tuple(positions) for cid, positions in order.items()}
        return candidates, codes, index

    @property
    def candidates(self) -> tuple[str, ...]:
        return self._candidate_layout[0]

    @property
    def n_candidates(self) -> int:
        return len(self.candidates)

    @property
    def candidate_codes(self) -> np.ndarray:
        """Per-response integer code of the owning candidate."""
        return self._candidate_layout[1]

    @property
    def candidate_index(self) -> dict[str, tuple[int, ...]]:
        """Map candidate_id to the positions of its responses."""
        return self._candidate_layout[2]

    @cached_property
    def _positions(self) -> dict[tuple[str, str], int]:
        return {key: i for i, key in enumerate(zip(self.candidate_ids, self.item_ids))}

    def position_of(self, key: tuple[str, str]) -> int:
        try:
            return self._positions[tuple(key)]
        except KeyError:
            raise ValidationError(f"record {key!r} is not in the dataset") from None

    @property
    def has_machine_labels(self) -> bool:
        return bool(np.all(self.machine != MISSING))

    @property
    def has_human_labels(self) -> bool:
        return bool(np.all(self.human != MISSING))

    def replace(self, machine=None, human=None) -> "Dataset":
        return Dataset(
            self.scale, self.candidate_ids, self.item_ids,
            self.machine if machine is None else machine,
            self.human if human is None else human,
        )

    def subset(self, positions: Sequence[int]) -> "Dataset":
        positions = list(positions)
        return Dataset(
            self.scale,
            [self.candidate_ids[i] for i in positions],
            [self.item_ids[i] for i in positions],
            self.machine[positions],
            self.human[positions],
        )


def _frozen_labels(values) -> np.ndarray:
    arr = np.array(values, dtype=np.int64).reshape(-1)
    arr.flags.writeable = False
    return arr


def validate_dataset(dataset: Dataset) -> list[str]:
    """Return a list of invariant violations; empty iff the dataset is well formed."""
    problems = []
    k = dataset.scale.size
    seen = set()
    for pos, key in enumerate(dataset.keys):
        cid, iid = key
        if not cid:
            problems.append(f"empty candidate_id at position {pos}")
        if not iid:
            problems.append(f"empty item_id at position {pos}")
        if key in seen:
            problems.append(f"duplicate key {key!r} at position {pos}")
        seen.add(key)
        for side, arr in (("machine", dataset.machine), ("human", dataset.human)):
            v = int(arr[pos])
            if v != MISSING and not 0 <= v < k:
                problems.append(f"{side} label out of range ({v}) for {key!r}")
    if len(dataset) == 0:
        problems.append("dataset has no responses")
    return problems


def require_valid(dataset: Dataset) -> Dataset:
    problems = validate_dataset(dataset)
    if problems:
        shown = "; ".join(problems[:5])
        more = f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""
        raise ValidationError(f"invalid dataset: {shown}{more}")
    return dataset


@dataclass(frozen=True, eq=False)
class AgreementMatrix:
    """Row-stochastic P(human = h | machine = m).

    ``row_counts[m]`` is the number of training pairs with machine class m;
    a zero count marks a row that fell back to the one-hot diagonal.
    """

    scale: ScoreScale
    probs: np.ndarray
    row_counts: np.ndarray

    def __post_init__(self):
        k = self.scale.size
        probs = np.array(self.probs, dtype=np.float64)
        counts = np.array(self.row_counts, dtype=np.int64)
        if probs.shape != (k, k):
            raise ValidationError(f"matrix shape {probs.shape} does not match scale size {k}")
        if counts.shape != (k,):
            raise ValidationError("row_counts length does not match scale size")
        if np.any(probs < 0) or np.any(probs > 1) or not np.all(np.isfinite(probs)):
            raise ValidationError("matrix entries must lie in [0, 1]")
        if np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-9):
            raise ValidationError("matrix not row-stochastic")
        probs.flags.writeable = False
        counts.flags.writeable = False
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "row_counts", counts)

    def __eq__(self, other):
        if not isinstance(other, AgreementMatrix):
            return NotImplemented
        return (self.scale == other.scale
                and np.array_equal(self.probs, other.probs)
                and np.array_equal(self.row_counts, other.row_counts))

    __hash__ = None


def build_agreement_matrix(pairs, scale: ScoreScale, alpha: float = 0.0) -> AgreementMatrix:
    """Row-normalized confusion of (machine_label, human_label) pairs.

    ``alpha`` adds a pseudo-count to every cell of rows that have data.
    Rows without any pair become one-hot on the diagonal.
    """
    arr = np.asarray(pairs)
    if arr.size == 0:
        raise ValidationError("no pairs")
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("pairs must be (machine_label, human_label) tuples")
    if alpha < 0:
        raise ValidationError("alpha must be nonnegative")
    k = scale.size
    bad = np.flatnonzero(np.any((arr < 0) | (arr >= k), axis=1))
    if bad.size:
        i = int(bad[0])
        raise ValidationError(f"label out of range in pair {i}: {tuple(arr[i].tolist())}")
    arr = arr.astype(np.int64)
    counts = np.bincount(arr[:, 0] * k + arr[:, 1], minlength=k * k).reshape(k, k).astype(np.float64)
    row_counts = counts.sum(axis=1).astype(np.int64)
    probs = np.eye(k)
    seen = row_counts > 0
    smoothed = counts[seen] + alpha
    probs[seen] = smoothed / smoothed.sum(axis=1, keepdims=True)
    return AgreementMatrix(scale, probs, row_counts)


def lookup_prob(matrix: AgreementMatrix, machine: int, human: int) -> float:
    k = matrix.scale.size
    if not (0 <= machine < k and 0 <= human < k):
        raise ValidationError(f"class index out of range: ({machine}, {human}) for K={k}")
    return float(matrix.probs[machine, human])
