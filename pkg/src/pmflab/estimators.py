"""Univariate pmf estimators and their conditional / joint compositions.

Estimators map Counts to a Pmf on the same alphabet.  A family indexes one
estimator per sample size, which is what the conditional composition needs:
each X-slice of a labeled sample has its own (random) size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar

import numpy as np

from .core import ConditionalPmf, Counts, JointCounts, JointPmf, Pmf, ShapeMismatch

__all__ = [
    "EmptySample",
    "UnivariateEstimator",
    "MleEstimator",
    "AddConstantL2Estimator",
    "UniformEstimator",
    "GameTableEstimator",
    "EstimatorFamily",
    "mle_family",
    "add_constant_family",
    "uniform_family",
    "game_family",
    "mle",
    "add_constant_l2",
    "zero_sample_estimate",
    "conditional_composition",
    "joint_composition",
    "add_constant_l2_risk",
    "mle_l2_risk",
]


class EmptySample(ValueError):
    """An estimator that needs data was handed zero samples."""


@dataclass(frozen=True)
class UnivariateEstimator:
    """Base for estimators on the alphabet 0..k-1."""

    k: int
    kind: ClassVar[str] = "abstract"

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("estimator alphabet needs at least two symbols")

    def __call__(self, c: Counts) -> Pmf:
        return Pmf(self.estimate_batch(c.counts[None, :])[0])

    def estimate_batch(self, counts: np.ndarray) -> np.ndarray:
        """Estimates for a (N, k) batch of count rows, returned as (N, k) floats."""
        raise NotImplementedError


@dataclass(frozen=True)
class MleEstimator(UnivariateEstimator):
    """Empirical frequencies; undefined on an empty sample."""

    kind: ClassVar[str] = "mle"

    def estimate_batch(self, counts: np.ndarray) -> np.ndarray:
        counts = np.asarray(counts, dtype=float)
        totals = counts.sum(axis=1, keepdims=True)
        if np.any(totals == 0):
            raise EmptySample("maximum likelihood needs at least one sample")
        return counts / totals


@dataclass(frozen=True)
class AddConstantL2Estimator(UnivariateEstimator):
    """Add sqrt(n)/k to each count and normalize; minimax for the l2 loss.

    q(x) = (T_x + sqrt(n)/k) / (n + sqrt(n)).  Its exact l2 risk is the same
    at every true pmf, which the risk-engine tests certify by enumeration.
    An empty sample degenerates to the uniform output.
    """

    kind: ClassVar[str] = "add-constant"

    def estimate_batch(self, counts: np.ndarray) -> np.ndarray:
        counts = np.asarray(counts, dtype=float)
        totals = counts.sum(axis=1, keepdims=True)
        root = np.sqrt(totals)
        with np.errstate(invalid="ignore"):
            out = (counts + root / self.k) / (totals + root)
        uniform = np.full(self.k, 1.0 / self.k)
        return np.where(totals == 0, uniform[None, :], out)


@dataclass(frozen=True)
class UniformEstimator(UnivariateEstimator):
    """Ignore the data, answer uniform; the zero-sample minimax choice."""

    kind: ClassVar[str] = "uniform"

    def estimate_batch(self, counts: np.ndarray) -> np.ndarray:
        counts = np.asarray(counts)
        return np.full((counts.shape[0], self.k), 1.0 / self.k)


@dataclass(frozen=True, eq=False)
class GameTableEstimator(UnivariateEstimator):
    """A lookup table over every count outcome at one fixed sample size.

    `outcomes` must enumerate all count vectors of total n (colex order is the
    house convention); `estimates` holds the matching output pmfs row by row.
    """

    n: int = 0
    outcomes: np.ndarray = field(default=None)
    estimates: np.ndarray = field(default=None)

    kind: ClassVar[str] = "game-table"

    def __post_init__(self) -> None:
        super().__post_init__()
        outcomes = np.asarray(self.outcomes, dtype=np.int64)
        estimates = np.asarray(self.estimates, dtype=float)
        expected = math.comb(self.n + self.k - 1, self.k - 1)
        if outcomes.shape != (expected, self.k):
            raise ValueError(
                f"table must cover all {expected} outcomes of total {self.n} over {self.k} symbols"
            )
        if estimates.shape != outcomes.shape:
            raise ShapeMismatch("estimates must align with outcomes row by row")
        if np.any(outcomes.sum(axis=1) != self.n):
            raise ValueError("every outcome row must sum to the table's sample size")
        sums = estimates.sum(axis=1)
        if np.any(estimates < 0) or np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValueError("every estimate row must be a pmf")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "estimates", estimates / sums[:, None])
        object.__setattr__(self, "_row_of", {tuple(map(int, row)): i for i, row in enumerate(outcomes)})

    # the base class compares by k alone, which would collapse distinct
    # tables inside the risk-table cache; tables only equal themselves
    __eq__ = object.__eq__
    __hash__ = object.__hash__

    def estimate_batch(self, counts: np.ndarray) -> np.ndarray:
        counts = np.asarray(counts, dtype=np.int64)
        rows = np.empty(counts.shape[0], dtype=np.int64)
        for i, row in enumerate(counts):
            key = tuple(map(int, row))
            try:
                rows[i] = self._row_of[key]
            except KeyError:
                raise ValueError(f"counts {key} not of total {self.n}; table does not apply") from None
        return self.estimates[rows]


class EstimatorFamily:
    """One estimator per sample size, over a fixed alphabet."""

    def __init__(self, k: int, factory: Callable[[int], UnivariateEstimator], kind: str):
        if k < 2:
            raise ValueError("family alphabet needs at least two symbols")
        self.k = k
        self.kind = kind
        self._factory = factory
        self._cache: dict[int, UnivariateEstimator] = {}

    def at(self, size: int) -> UnivariateEstimator:
        if size < 0:
            raise ValueError("sample size must be nonnegative")
        est = self._cache.get(size)
        if est is None:
            est = self._factory(size)
            if est.k != self.k:
                raise ShapeMismatch("family factory returned an estimator on the wrong alphabet")
            self._cache[size] = est
        return est

    def __repr__(self) -> str:
        return f"EstimatorFamily(kind={self.kind!r}, k={self.k})"


def mle_family(k: int) -> EstimatorFamily:
    """Maximum likelihood per size, uniform fallback for the empty slice."""
    return EstimatorFamily(
        k, lambda size: UniformEstimator(k) if size == 0 else MleEstimator(k), "mle"
    )


def add_constant_family(k: int) -> EstimatorFamily:
    return EstimatorFamily(k, lambda size: AddConstantL2Estimator(k), "add-constant")


def uniform_family(k: int) -> EstimatorFamily:
    return EstimatorFamily(k, lambda size: UniformEstimator(k), "uniform")


def game_family(tables: dict[int, GameTableEstimator]) -> EstimatorFamily:
    """Family backed by solved game tables, one per sample size."""
    if not tables:
        raise ValueError("need at least one game table")
    ks = {t.k for t in tables.values()}
    if len(ks) != 1:
        raise ShapeMismatch("game tables disagree on the alphabet")

    def factory(size: int) -> UnivariateEstimator:
        try:
            return tables[size]
        except KeyError:
            raise KeyError(f"no game table for sample size {size}") from None

    return EstimatorFamily(ks.pop(), factory, "game-table")


def mle(c: Counts) -> Pmf:
    """Empirical frequencies of a nonempty sample."""
    return MleEstimator(c.k)(c)


def add_constant_l2(c: Counts) -> Pmf:
    return AddConstantL2Estimator(c.k)(c)


def zero_sample_estimate(k: int) -> Pmf:
    return Pmf.uniform(k)


def add_constant_l2_risk(n: int, k: int) -> float:
    """Exact l2 risk of the add-constant rule, the same at every true pmf:
    (1 - 1/k) / (sqrt(n) + 1)^2.  Also valid at n = 0 (uniform vs a vertex)."""
    if n < 0 or k < 2:
        raise ValueError("need n >= 0 and k >= 2")
    return (1.0 - 1.0 / k) / (math.sqrt(n) + 1.0) ** 2


def mle_l2_risk(p_true: Pmf, n: int) -> float:
    """Exact l2 risk of maximum likelihood at sample size n: (1 - sum p^2) / n."""
    if n < 1:
        raise ValueError("maximum likelihood needs n >= 1")
    return (1.0 - float(np.sum(p_true.probs**2))) / n


def conditional_composition(base: EstimatorFamily, labeled: JointCounts) -> ConditionalPmf:
    """Estimate p(y|x) by applying the base rule to each X-slice at its own size.

    Row x depends only on slice x, so edits to other slices never move it.
    Empty slices use the family's size-0 member (uniform for the mle family).
    """
    if base.k != labeled.k_y:
        raise ShapeMismatch("base family alphabet must match the Y alphabet")
    rows = []
    for x in range(labeled.k_x):
        slice_counts = labeled.row(x)
        rows.append(base.at(slice_counts.total)(slice_counts))
    return ConditionalPmf(tuple(rows))


def joint_composition(base: EstimatorFamily, unlabeled: Counts, labeled: JointCounts) -> JointPmf:
    """Pooled-sample ML marginal times the conditional composition.

    The X marginal is estimated from unlabeled counts pooled with the labeled
    X-counts; the conditional part never sees the unlabeled sample.
    """
    if unlabeled.k != labeled.k_x:
        raise ShapeMismatch("unlabeled counts must live on the X alphabet")
    pooled = unlabeled.counts + labeled.x_counts().counts
    total = int(pooled.sum())
    if total == 0:
        raise EmptySample("no samples at all: the pooled marginal is undefined")
    marginal = Pmf(pooled / total)
    rows = conditional_composition(base, labeled)
    return JointPmf.from_marginal_and_rows(marginal, rows)
