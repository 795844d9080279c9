"""Risk evaluation: exact enumeration, Monte Carlo, and worst-case search.

Exact risks sum loss over every count outcome, weighted by multinomial
probabilities computed in log space (colex outcome order, per-term
exponentiation; overflow-safe far past n = 60).  Outcome tables are built
once per (estimator, size) and reused, so a worst-case search pays the
enumeration cost a single time.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .asymptotics import mass_risk_curve
from .core import (
    Counts,
    JointCounts,
    JointPmf,
    LossExponent,
    Pmf,
    ShapeMismatch,
    composition_count,
    lp_loss,
    task_rng,
)
from .estimators import EstimatorFamily, UnivariateEstimator, joint_composition
from .search import SearchConfig, maximize_on_simplex

__all__ = [
    "DEFAULT_OUTCOME_CAP",
    "CapExceeded",
    "RiskEstimate",
    "WorstCaseResult",
    "enumerate_outcomes",
    "outcome_basis",
    "exact_risk_univariate",
    "exact_risk_joint",
    "exact_risk_joint_limit",
    "mc_risk",
    "worst_case_risk",
    "worst_case_risk_joint",
    "worst_case_risk_joint_limit",
    "adversarial_marginal_objective",
    "maximize_adversarial_marginal",
    "limit_risk_bracket",
]

DEFAULT_OUTCOME_CAP = 10**6


class CapExceeded(RuntimeError):
    """Enumeration would need more outcomes than the configured cap."""

    def __init__(self, required: int, cap: int):
        super().__init__(f"enumeration needs {required} outcomes, cap is {cap}")
        self.required = required
        self.cap = cap


@dataclass(frozen=True)
class RiskEstimate:
    """A risk number plus how it was obtained.

    uncertainty is 0.0 for exact values, a 95% CI half-width for Monte Carlo,
    and a (lower, upper) interval for brackets.
    """

    value: float
    method: str
    uncertainty: float | tuple[float, float] = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.method not in ("exact", "monte-carlo", "bracket"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "bracket":
            lo, hi = self.uncertainty
            if not lo <= self.value <= hi:
                raise ValueError("bracket must contain its value")
        elif not float(self.uncertainty) >= 0.0:
            raise ValueError("uncertainty must be nonnegative")
        if self.value < 0.0:
            raise ValueError("risk cannot be negative")

    @property
    def interval(self) -> tuple[float, float]:
        if self.method == "exact":
            return (self.value, self.value)
        if self.method == "monte-carlo":
            return (max(0.0, self.value - self.uncertainty), self.value + self.uncertainty)
        return tuple(self.uncertainty)


@dataclass(frozen=True)
class WorstCaseResult:
    risk: RiskEstimate
    argmax: Pmf | JointPmf
    trace: tuple


def enumerate_outcomes(total: int, parts: int) -> np.ndarray:
    """All count vectors of the given total as an (N, parts) array, colex order."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for last in range(total + 1):
        head = enumerate_outcomes(total - last, parts - 1)
        blocks.append(np.hstack([head, np.full((head.shape[0], 1), last, dtype=np.int64)]))
    return np.vstack(blocks)


def _log_multinomial_coeff(outcomes: np.ndarray) -> np.ndarray:
    totals = outcomes.sum(axis=1)
    return gammaln(totals + 1.0) - gammaln(outcomes + 1.0).sum(axis=1)


@functools.lru_cache(maxsize=128)
def outcome_basis(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Cached (outcomes, log multinomial coefficients) for total n over k symbols."""
    outcomes = enumerate_outcomes(n, k)
    log_coeff = _log_multinomial_coeff(outcomes)
    outcomes.setflags(write=False)
    log_coeff.setflags(write=False)
    return outcomes, log_coeff


def _outcome_weights(outcomes: np.ndarray, log_coeff: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Multinomial probabilities of each outcome row under `probs`.

    Zero-probability symbols are handled exactly: any outcome that uses one
    has weight 0, and 0 * log 0 never enters the sum.
    """
    probs = np.asarray(probs, dtype=float)
    positive = probs > 0.0
    safe_log = np.where(positive, np.log(np.where(positive, probs, 1.0)), 0.0)
    weights = np.exp(log_coeff + outcomes @ safe_log)
    if not positive.all():
        impossible = (outcomes[:, ~positive] > 0).any(axis=1)
        weights = np.where(impossible, 0.0, weights)
    return weights


class UnivariateOutcomeTable:
    """Precomputed outcomes, log coefficients, and estimates for one (est, n)."""

    def __init__(self, est: UnivariateEstimator, n: int, loss: LossExponent, cap: int):
        required = composition_count(n, est.k)
        if required > cap:
            raise CapExceeded(required, cap)
        self.loss = loss
        self.outcomes, self.log_coeff = outcome_basis(n, est.k)
        self.estimates = est.estimate_batch(self.outcomes)

    @classmethod
    def from_arrays(
        cls, outcomes: np.ndarray, log_coeff: np.ndarray, estimates: np.ndarray, loss: LossExponent
    ) -> "UnivariateOutcomeTable":
        """Wrap already-computed arrays without re-enumeration (game-loop path)."""
        table = cls.__new__(cls)
        table.loss = loss
        table.outcomes = outcomes
        table.log_coeff = log_coeff
        table.estimates = estimates
        return table

    def risk(self, probs: np.ndarray) -> float:
        weights = _outcome_weights(self.outcomes, self.log_coeff, probs)
        losses = np.abs(probs[None, :] - self.estimates) ** self.loss.p
        return float(weights @ losses.sum(axis=1))


@functools.lru_cache(maxsize=64)
def _univariate_table(est: UnivariateEstimator, n: int, loss: LossExponent, cap: int) -> UnivariateOutcomeTable:
    return UnivariateOutcomeTable(est, n, loss, cap)


class JointOutcomeTable:
    """Outcome tables for the joint composition at labeled size m, unlabeled n.

    Estimates are precomputed for every (labeled, unlabeled) outcome pair, so a
    risk evaluation at a candidate joint pmf is a pair of weight vectors and
    one loss matrix contraction.
    """

    def __init__(self, base: EstimatorFamily, k_x: int, m: int, n: int, loss: LossExponent, cap: int):
        k_y = base.k
        cells = k_x * k_y
        n_lab = composition_count(m, cells)
        n_unl = composition_count(n, k_x)
        if n_lab * n_unl > cap:
            raise CapExceeded(n_lab * n_unl, cap)
        if m + n == 0:
            raise ValueError("need at least one sample overall (m + n >= 1)")
        self.loss = loss
        self.k_x, self.k_y, self.m, self.n = k_x, k_y, m, n

        self.lab_outcomes, self.lab_log_coeff = outcome_basis(m, cells)
        self.unl_outcomes, self.unl_log_coeff = outcome_basis(n, k_x)

        lab_x = self.lab_outcomes.reshape(n_lab, k_x, k_y).sum(axis=2)
        cond = np.empty((n_lab, k_x, k_y))
        for i in range(n_lab):
            jc = JointCounts(self.lab_outcomes[i].reshape(k_x, k_y))
            for x in range(k_x):
                row = jc.row(x)
                cond[i, x] = base.at(row.total).estimate_batch(row.counts[None, :])[0]

        pooled = lab_x[:, None, :] + self.unl_outcomes[None, :, :]
        marginal = pooled / float(m + n)
        estimates = marginal[:, :, :, None] * cond[:, None, :, :]
        self.estimates = estimates.reshape(n_lab * n_unl, cells)

    def risk(self, p_cells: np.ndarray) -> float:
        p_flat = np.asarray(p_cells, dtype=float).reshape(-1)
        p_x = p_flat.reshape(self.k_x, self.k_y).sum(axis=1)
        w_lab = _outcome_weights(self.lab_outcomes, self.lab_log_coeff, p_flat)
        w_unl = _outcome_weights(self.unl_outcomes, self.unl_log_coeff, p_x)
        losses = np.abs(p_flat[None, :] - self.estimates) ** self.loss.p
        matrix = losses.sum(axis=1).reshape(w_lab.size, w_unl.size)
        return float(w_lab @ matrix @ w_unl)


class JointLimitTable:
    """The unlabeled-size-to-infinity idealization: the marginal is known.

    Only labeled outcomes are enumerated; the estimate for each is the true
    marginal of the candidate pmf times the conditional composition.
    """

    def __init__(self, base: EstimatorFamily, k_x: int, m: int, loss: LossExponent, cap: int):
        k_y = base.k
        cells = k_x * k_y
        n_lab = composition_count(m, cells)
        if n_lab > cap:
            raise CapExceeded(n_lab, cap)
        self.loss = loss
        self.k_x, self.k_y, self.m = k_x, k_y, m
        self.lab_outcomes, self.lab_log_coeff = outcome_basis(m, cells)
        self.cond = np.empty((n_lab, k_x, k_y))
        for i in range(n_lab):
            jc = JointCounts(self.lab_outcomes[i].reshape(k_x, k_y))
            for x in range(k_x):
                row = jc.row(x)
                self.cond[i, x] = base.at(row.total).estimate_batch(row.counts[None, :])[0]

    def risk(self, p_cells: np.ndarray) -> float:
        p = np.asarray(p_cells, dtype=float).reshape(self.k_x, self.k_y)
        p_x = p.sum(axis=1)
        w_lab = _outcome_weights(self.lab_outcomes, self.lab_log_coeff, p.reshape(-1))
        estimates = p_x[None, :, None] * self.cond
        losses = np.abs(p[None, :, :] - estimates) ** self.loss.p
        return float(w_lab @ losses.sum(axis=(1, 2)))


@functools.lru_cache(maxsize=32)
def _joint_table(base: EstimatorFamily, k_x: int, m: int, n: int, loss: LossExponent, cap: int) -> JointOutcomeTable:
    return JointOutcomeTable(base, k_x, m, n, loss, cap)


@functools.lru_cache(maxsize=32)
def _joint_limit_table(base: EstimatorFamily, k_x: int, m: int, loss: LossExponent, cap: int) -> JointLimitTable:
    return JointLimitTable(base, k_x, m, loss, cap)


def _meta(loss: LossExponent, *, n=None, m=None, k_x=None, k_y=None) -> dict:
    return {"p": loss.p, "n": n, "m": m, "k_x": k_x, "k_y": k_y}


def exact_risk_univariate(
    est: UnivariateEstimator, p_true: Pmf, n: int, loss: LossExponent, cap: int = DEFAULT_OUTCOME_CAP
) -> RiskEstimate:
    """Expected loss of `est` on multinomial(n, p_true) samples, by enumeration."""
    if est.k != p_true.k:
        raise ShapeMismatch("estimator and truth live on different alphabets")
    table = _univariate_table(est, n, loss, cap)
    return RiskEstimate(
        table.risk(p_true.probs), "exact", 0.0, _meta(loss, n=n, k_x=p_true.k)
    )


def exact_risk_joint(
    base: EstimatorFamily,
    p_xy: JointPmf,
    m: int,
    n: int,
    loss: LossExponent,
    cap: int = DEFAULT_OUTCOME_CAP,
) -> RiskEstimate:
    """Expected loss of the joint composition over both samples, by enumeration."""
    if base.k != p_xy.k_y:
        raise ShapeMismatch("base family must live on the Y alphabet")
    table = _joint_table(base, p_xy.k_x, m, n, loss, cap)
    return RiskEstimate(
        table.risk(p_xy.probs), "exact", 0.0, _meta(loss, n=n, m=m, k_x=p_xy.k_x, k_y=p_xy.k_y)
    )


def exact_risk_joint_limit(
    base: EstimatorFamily, p_xy: JointPmf, m: int, loss: LossExponent, cap: int = DEFAULT_OUTCOME_CAP
) -> RiskEstimate:
    """Joint-composition risk with unlimited unlabeled data (marginal known)."""
    if base.k != p_xy.k_y:
        raise ShapeMismatch("base family must live on the Y alphabet")
    table = _joint_limit_table(base, p_xy.k_x, m, loss, cap)
    return RiskEstimate(
        table.risk(p_xy.probs), "exact", 0.0, _meta(loss, m=m, k_x=p_xy.k_x, k_y=p_xy.k_y)
    )


def _grouped_mc(rows: np.ndarray, loss_of_row, draws: int) -> tuple[float, float]:
    """Mean and CI half-width of per-draw losses, grouping identical outcomes."""
    unique, counts = np.unique(rows, axis=0, return_counts=True)
    losses = np.array([loss_of_row(row) for row in unique])
    mean = float(counts @ losses) / draws
    ss = float(counts @ (losses - mean) ** 2)
    std = math.sqrt(ss / (draws - 1))
    return mean, 1.96 * std / math.sqrt(draws)


def mc_risk(
    est_or_base,
    p_true: Pmf | JointPmf,
    m: int | None,
    n: int,
    loss: LossExponent,
    draws: int,
    seed: int,
) -> RiskEstimate:
    """Monte-Carlo risk; normal-approximation 95% CI (losses are bounded by 2)."""
    if draws < 100:
        raise ValueError("need at least 100 draws for the CI to mean anything")
    if isinstance(p_true, JointPmf):
        base: EstimatorFamily = est_or_base
        if base.k != p_true.k_y:
            raise ShapeMismatch("base family must live on the Y alphabet")
        if m is None:
            raise ValueError("joint risk needs the labeled size m")
        cells = p_true.probs.reshape(-1)
        labeled = task_rng(seed, "mc-labeled").multinomial(m, cells, size=draws)
        unlabeled = task_rng(seed, "mc-unlabeled").multinomial(n, p_true.marginal_x().probs, size=draws)
        rows = np.hstack([labeled, unlabeled])
        k_x, k_y = p_true.k_x, p_true.k_y

        def row_loss(row: np.ndarray) -> float:
            jc = JointCounts(row[: k_x * k_y].reshape(k_x, k_y))
            u = Counts(row[k_x * k_y :])
            return lp_loss(p_true, joint_composition(base, u, jc), loss)

        value, ci = _grouped_mc(rows, row_loss, draws)
        return RiskEstimate(value, "monte-carlo", ci, _meta(loss, n=n, m=m, k_x=k_x, k_y=k_y))

    est: UnivariateEstimator = est_or_base
    if est.k != p_true.k:
        raise ShapeMismatch("estimator and truth live on different alphabets")
    rows = task_rng(seed, "mc-univariate").multinomial(n, p_true.probs, size=draws)

    def row_loss(row: np.ndarray) -> float:
        return lp_loss(p_true, Pmf(est.estimate_batch(row[None, :])[0]), loss)

    value, ci = _grouped_mc(rows, row_loss, draws)
    return RiskEstimate(value, "monte-carlo", ci, _meta(loss, n=n, k_x=p_true.k))


def _search_result(outcome, loss: LossExponent, meta: dict, as_joint: tuple[int, int] | None) -> WorstCaseResult:
    if as_joint is None:
        argmax = Pmf(outcome.argmax)
    else:
        argmax = JointPmf(outcome.argmax.reshape(as_joint))
    risk = RiskEstimate(outcome.value, "exact", 0.0, meta)
    return WorstCaseResult(risk=risk, argmax=argmax, trace=outcome.trace)


def worst_case_risk(
    est: UnivariateEstimator,
    n: int,
    loss: LossExponent,
    config: SearchConfig | None = None,
    cap: int = DEFAULT_OUTCOME_CAP,
) -> WorstCaseResult:
    """max over true pmfs of the exact risk, by grid + projected coordinate ascent."""
    table = _univariate_table(est, n, loss, cap)
    outcome = maximize_on_simplex(table.risk, est.k, config)
    return _search_result(outcome, loss, _meta(loss, n=n, k_x=est.k), None)


def worst_case_risk_joint(
    base: EstimatorFamily,
    k_x: int,
    m: int,
    n: int,
    loss: LossExponent,
    config: SearchConfig | None = None,
    cap: int = DEFAULT_OUTCOME_CAP,
) -> WorstCaseResult:
    table = _joint_table(base, k_x, m, n, loss, cap)
    outcome = maximize_on_simplex(table.risk, k_x * base.k, config)
    meta = _meta(loss, n=n, m=m, k_x=k_x, k_y=base.k)
    return _search_result(outcome, loss, meta, (k_x, base.k))


def worst_case_risk_joint_limit(
    base: EstimatorFamily,
    k_x: int,
    m: int,
    loss: LossExponent,
    config: SearchConfig | None = None,
    cap: int = DEFAULT_OUTCOME_CAP,
) -> WorstCaseResult:
    table = _joint_limit_table(base, k_x, m, loss, cap)
    outcome = maximize_on_simplex(table.risk, k_x * base.k, config)
    meta = _meta(loss, m=m, k_x=k_x, k_y=base.k)
    return _search_result(outcome, loss, meta, (k_x, base.k))


def adversarial_marginal_objective(p_x: Pmf, r_values, loss: LossExponent) -> float:
    """The payoff of marginal p_x when nature later picks worst conditionals.

    With r_i the per-size conditional risks, symbol x of mass t contributes
    sum_i C(m, i) r_i t^(i+p) (1-t)^(m-i); this sums that over the alphabet.
    """
    values = np.asarray(r_values, dtype=float)
    if values.ndim != 1 or values.size < 1:
        raise ValueError("need a 1-D table r_0..r_m")
    if np.any(values < 0.0) or np.any(values > 2.0):
        raise ValueError("per-size risks must sit in [0, 2]")
    m = values.size - 1
    return float(sum(mass_risk_curve(t, m, loss, values) for t in p_x.probs))


def maximize_adversarial_marginal(
    k_x: int,
    m: int,
    loss: LossExponent,
    r_values,
    config: SearchConfig | None = None,
) -> WorstCaseResult:
    """Maximize the adversarial-marginal objective over the k_x simplex."""
    values = np.asarray(r_values, dtype=float)
    if values.size != m + 1:
        raise ValueError(f"table must hold r_0..r_{m}, got {values.size} entries")

    def objective(t: np.ndarray) -> float:
        return float(sum(mass_risk_curve(v, m, loss, values) for v in t))

    outcome = maximize_on_simplex(objective, k_x, config)
    meta = _meta(loss, m=m, k_x=k_x)
    return _search_result(outcome, loss, meta, None)


def limit_risk_bracket(r_m: RiskEstimate, k_x: int) -> RiskEstimate:
    """Bracket [r, k_x * r] for the fixed-marginal joint risk in the n -> infinity
    regime, from the univariate value at the same labeled size."""
    if k_x < 1:
        raise ValueError("need k_x >= 1")
    lo, hi = r_m.interval
    bracket = (lo, k_x * hi)
    value = 0.5 * (bracket[0] + bracket[1])
    meta = dict(r_m.meta)
    meta["k_x"] = k_x
    return RiskEstimate(value, "bracket", bracket, meta)
