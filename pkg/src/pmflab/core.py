"""Simplex data types, the l^p_p loss, counting, and seeded dataset sampling.

Symbols are dense integer indices 0..k-1 throughout; mapping string alphabets
onto indices is the CLI's concern.  Datasets are carried as count vectors
(sufficient statistics for multinomial sampling), never as raw sample lists.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Iterator

import numpy as np

__all__ = [
    "SIMPLEX_ATOL",
    "ShapeMismatch",
    "LossExponent",
    "Pmf",
    "JointPmf",
    "ConditionalPmf",
    "Counts",
    "JointCounts",
    "lp_loss",
    "counts_from_samples",
    "slice_conditional",
    "sample_datasets",
    "compositions",
    "composition_count",
    "task_rng",
]

# Tolerance for accepting a vector as a probability distribution.  Inputs
# whose total is within this of 1 are renormalized; anything further off is
# rejected rather than silently fixed.
SIMPLEX_ATOL = 1e-9


class ShapeMismatch(ValueError):
    """Operands do not live on the same support."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _validated_probs(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} entries must be finite and nonnegative")
    total = float(arr.sum())
    if abs(total - 1.0) > SIMPLEX_ATOL:
        raise ValueError(f"{what} sums to {total!r}, not 1 within {SIMPLEX_ATOL}")
    return _freeze(arr / total)


@dataclass(frozen=True, eq=False)
class Pmf:
    """A probability mass function on the dense alphabet 0..k-1, k >= 2."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.probs, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("a pmf needs a 1-D support with at least two symbols")
        object.__setattr__(self, "probs", _validated_probs(arr, "pmf"))

    @property
    def k(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, k: int) -> "Pmf":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def point_mass(cls, k: int, x: int) -> "Pmf":
        arr = np.zeros(k)
        arr[x] = 1.0
        return cls(arr)

    def __repr__(self) -> str:
        return f"Pmf({np.array2string(self.probs, precision=6)})"


@dataclass(frozen=True, eq=False)
class JointPmf:
    """A joint pmf on the product alphabet (0..k_x-1) x (0..k_y-1)."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.probs, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 2:
            raise ValueError("a joint pmf needs a 2-D support, both sides >= 2")
        object.__setattr__(self, "probs", _validated_probs(arr, "joint pmf"))

    @property
    def k_x(self) -> int:
        return self.probs.shape[0]

    @property
    def k_y(self) -> int:
        return self.probs.shape[1]

    @classmethod
    def uniform(cls, k_x: int, k_y: int) -> "JointPmf":
        return cls(np.full((k_x, k_y), 1.0 / (k_x * k_y)))

    @classmethod
    def from_marginal_and_rows(cls, marginal: Pmf, rows: "ConditionalPmf") -> "JointPmf":
        if marginal.k != rows.k_x:
            raise ShapeMismatch("marginal and conditional rows disagree on k_x")
        return cls(marginal.probs[:, None] * rows.matrix)

    def marginal_x(self) -> Pmf:
        return Pmf(self.probs.sum(axis=1))

    def conditional(self) -> "ConditionalPmf":
        """Rows p(y|x); a zero-mass row conditions on nothing and falls back to uniform."""
        rows = []
        for x in range(self.k_x):
            mass = self.probs[x].sum()
            if mass <= 0.0:
                rows.append(Pmf.uniform(self.k_y))
            else:
                rows.append(Pmf(self.probs[x] / mass))
        return ConditionalPmf(tuple(rows))

    def __repr__(self) -> str:
        return f"JointPmf({np.array2string(self.probs, precision=6)})"


@dataclass(frozen=True, eq=False)
class ConditionalPmf:
    """One pmf over Y per X symbol, stored row-wise."""

    rows: tuple[Pmf, ...]

    def __post_init__(self) -> None:
        if len(self.rows) < 2:
            raise ValueError("conditional needs at least two rows")
        k_y = self.rows[0].k
        if any(r.k != k_y for r in self.rows):
            raise ShapeMismatch("conditional rows disagree on k_y")

    @property
    def k_x(self) -> int:
        return len(self.rows)

    @property
    def k_y(self) -> int:
        return self.rows[0].k

    @property
    def matrix(self) -> np.ndarray:
        return np.vstack([r.probs for r in self.rows])


@dataclass(frozen=True, eq=False)
class Counts:
    """Counts over 0..k-1 from an i.i.d. sample (the sufficient statistic)."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.counts)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("counts need a 1-D support with at least two symbols")
        if not np.issubdtype(arr.dtype, np.integer):
            rounded = np.rint(np.asarray(arr, dtype=float))
            if np.any(np.abs(arr - rounded) > 0):
                raise ValueError("counts must be integers")
            arr = rounded.astype(np.int64)
        if np.any(arr < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", _freeze(arr.astype(np.int64)))

    @property
    def k(self) -> int:
        return self.counts.size

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def zeros(cls, k: int) -> "Counts":
        return cls(np.zeros(k, dtype=np.int64))

    def key(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self.counts)

    def __repr__(self) -> str:
        return f"Counts({self.counts.tolist()})"


@dataclass(frozen=True, eq=False)
class JointCounts:
    """Labeled-sample counts on the product alphabet; row x holds slice counts."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.counts)
        if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 2:
            raise ValueError("joint counts need a 2-D support, both sides >= 2")
        if not np.issubdtype(arr.dtype, np.integer):
            rounded = np.rint(np.asarray(arr, dtype=float))
            if np.any(np.abs(arr - rounded) > 0):
                raise ValueError("counts must be integers")
            arr = rounded.astype(np.int64)
        if np.any(arr < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", _freeze(arr.astype(np.int64)))

    @property
    def k_x(self) -> int:
        return self.counts.shape[0]

    @property
    def k_y(self) -> int:
        return self.counts.shape[1]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row(self, x: int) -> Counts:
        if not 0 <= x < self.k_x:
            raise IndexError(f"symbol {x} outside alphabet 0..{self.k_x - 1}")
        return Counts(self.counts[x])

    def x_counts(self) -> Counts:
        """Marginal X counts (row sums)."""
        return Counts(self.counts.sum(axis=1))

    @classmethod
    def zeros(cls, k_x: int, k_y: int) -> "JointCounts":
        return cls(np.zeros((k_x, k_y), dtype=np.int64))

    def __repr__(self) -> str:
        return f"JointCounts({self.counts.tolist()})"


@dataclass(frozen=True)
class LossExponent:
    """The exponent p >= 2 of the l^p_p loss, with its falling factorials.

    falling(i) = p (p-1) ... (p-i+1) for 0 <= i <= floor(p); falling(0) = 1.
    """

    p: float

    def __post_init__(self) -> None:
        p = float(self.p)
        if not math.isfinite(p) or p < 2.0:
            raise ValueError(f"loss exponent must be a real number >= 2, got {self.p!r}")
        object.__setattr__(self, "p", p)

    @property
    def floor_p(self) -> int:
        return int(math.floor(self.p))

    def falling(self, i: int) -> float:
        if not 0 <= i <= self.floor_p:
            raise ValueError(f"falling factorial defined for 0 <= i <= {self.floor_p}")
        out = 1.0
        for j in range(i):
            out *= self.p - j
        return out


def lp_loss(a, b, loss: LossExponent) -> float:
    """l^p_p distance sum |a_i - b_i|^p between two pmfs on the same support."""
    pa = a.probs if hasattr(a, "probs") else np.asarray(a, dtype=float)
    pb = b.probs if hasattr(b, "probs") else np.asarray(b, dtype=float)
    if pa.shape != pb.shape:
        raise ShapeMismatch(f"supports differ: {pa.shape} vs {pb.shape}")
    return float(np.sum(np.abs(pa - pb) ** loss.p))


def counts_from_samples(samples, k: int) -> Counts:
    """Tally integer samples on 0..k-1; out-of-range symbols are rejected."""
    arr = np.asarray(list(samples), dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= k):
        bad = arr[(arr < 0) | (arr >= k)][0]
        raise ValueError(f"symbol {bad} outside alphabet 0..{k - 1}")
    return Counts(np.bincount(arr, minlength=k))


def slice_conditional(labeled: JointCounts, x: int) -> Counts:
    """Y-counts among labeled pairs whose X equals x (row slice)."""
    return labeled.row(x)


def task_rng(master_seed: int, *path) -> np.random.Generator:
    """A named random stream derived from the master seed.

    Streams are keyed by (seed, path), not by draw order, so concurrent or
    reordered tasks see identical randomness.  Path parts may be ints or
    strings; strings hash through crc32 for a platform-stable key.
    """
    key = []
    for part in path:
        if isinstance(part, str):
            key.append(zlib.crc32(part.encode("utf-8")) & 0xFFFFFFFF)
        elif isinstance(part, (int, np.integer)):
            key.append(int(part) & 0xFFFFFFFF)
        else:
            raise TypeError(f"stream path parts must be int or str, got {type(part)!r}")
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(key))
    return np.random.default_rng(seq)


def sample_datasets(p_xy: JointPmf, m: int, n: int, seed: int) -> tuple[JointCounts, Counts]:
    """Draw a labeled multinomial(m, p_xy) and an unlabeled multinomial(n, p_x).

    The two draws use independent named streams off the same seed, so the
    result is reproducible and the unlabeled part does not shift when m moves.
    """
    if m < 0 or n < 0:
        raise ValueError("sample sizes must be nonnegative")
    cells = p_xy.probs.reshape(-1)
    labeled_flat = task_rng(seed, "labeled").multinomial(m, cells)
    labeled = JointCounts(labeled_flat.reshape(p_xy.k_x, p_xy.k_y))
    unlabeled = Counts(task_rng(seed, "unlabeled").multinomial(n, p_xy.marginal_x().probs))
    return labeled, unlabeled


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All count vectors with the given total, in colex order."""
    if parts < 1:
        raise ValueError("need at least one part")
    if parts == 1:
        yield (total,)
        return
    for last in range(total + 1):
        for head in compositions(total - last, parts - 1):
            yield head + (last,)


def composition_count(total: int, parts: int) -> int:
    """Number of count vectors with the given total over `parts` symbols."""
    return math.comb(total + parts - 1, parts - 1)
