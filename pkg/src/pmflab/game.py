"""Fictitious play between nature (a prior over the simplex) and the
estimator (Bayes responses), bracketing the minimax risk at one sample size.

Any prior's Bayes risk lower-bounds the minimax risk; any estimator's worst
case upper-bounds it.  The play loop keeps the best of each, so the bracket
is valid at every iteration, converged or not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import RiskTable
from .core import LossExponent, Pmf, composition_count
from .estimators import GameTableEstimator
from .risk import (
    DEFAULT_OUTCOME_CAP,
    CapExceeded,
    UnivariateOutcomeTable,
    WorstCaseResult,
    outcome_basis,
    worst_case_risk,
)
from .search import SearchConfig, maximize_on_simplex, project_rows_to_simplex

__all__ = [
    "NatureStrategy",
    "GameBracket",
    "SolvedTable",
    "bayes_response",
    "nature_best_response",
    "fictitious_play",
    "solve_risk_table",
    "geometric_sizes",
    "solution_to_json",
    "solution_from_json",
]

ATOM_MERGE_TOL = 1e-6
BRACKET_SLACK = 1e-9

# Stands in for log 0 in atom likelihoods: finite, so 0 * it is 0 (a zero
# count on a zero-probability symbol is fine), yet exp() of it underflows.
_LOG_ZERO = -1e30

_MAX_DESCENT_STEPS = 10**4
_DESCENT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class NatureStrategy:
    """A finitely supported prior: (weight, atom) pairs on the simplex."""

    atoms: tuple[tuple[float, Pmf], ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise ValueError("a strategy needs at least one atom")
        weights = np.array([w for w, _ in self.atoms], dtype=float)
        if np.any(weights < 0.0) or abs(weights.sum() - 1.0) > BRACKET_SLACK:
            raise ValueError("weights must be nonnegative and sum to 1")
        ks = {pmf.k for _, pmf in self.atoms}
        if len(ks) != 1:
            raise ValueError("atoms must share one alphabet")
        support = self.support
        for i in range(len(support)):
            for j in range(i + 1, len(support)):
                if np.abs(support[i] - support[j]).max() <= ATOM_MERGE_TOL:
                    raise ValueError("atoms must be distinct beyond the merge tolerance")

    @property
    def k(self) -> int:
        return self.atoms[0][1].k

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.atoms], dtype=float)

    @property
    def support(self) -> np.ndarray:
        return np.vstack([pmf.probs for _, pmf in self.atoms])

    @classmethod
    def uniform_atom(cls, k: int) -> "NatureStrategy":
        return cls(atoms=((1.0, Pmf.uniform(k)),))


@dataclass(frozen=True)
class GameBracket:
    """lower = best Bayes risk found, upper = best worst-case risk found."""

    lower: float
    upper: float
    iterations: int
    converged: bool

    def __post_init__(self) -> None:
        if not (0.0 <= self.lower <= self.upper + BRACKET_SLACK):
            raise ValueError("need 0 <= lower <= upper (to slack)")
        if self.upper > 2.0 + BRACKET_SLACK:
            raise ValueError("no simplex estimator has risk above 2")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, value: float) -> bool:
        return self.lower - BRACKET_SLACK <= value <= self.upper + BRACKET_SLACK


def _atom_log_likelihoods(support: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
    """(A, N) log-likelihoods of each outcome under each atom, sans coefficient."""
    positive = support > 0.0
    logs = np.where(positive, np.log(np.where(positive, support, 1.0)), _LOG_ZERO)
    return logs @ outcomes.T.astype(float)


def _posteriors(weights: np.ndarray, loglik: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior over atoms per outcome column; flags columns no atom can produce."""
    scores = np.log(weights)[:, None] + loglik
    top = scores.max(axis=0)
    reachable = top > _LOG_ZERO / 2
    shifted = np.exp(scores - np.where(reachable, top, 0.0))
    shifted = np.where(reachable[None, :], shifted, 0.0)
    total = shifted.sum(axis=0)
    return shifted / np.where(total > 0.0, total, 1.0), reachable


def _descend(post: np.ndarray, support: np.ndarray, start: np.ndarray, loss: LossExponent) -> np.ndarray:
    """Projected gradient descent on the per-outcome posterior loss, all
    outcomes at once.  Fixed step 1/(p 2^(p-1)); stops when the total
    objective stops dropping."""
    p = loss.p
    step = 1.0 / (p * 2.0 ** (p - 1.0))
    q = start.copy()
    diff = q[None, :, :] - support[:, None, :]
    obj = (post * (np.abs(diff) ** p).sum(axis=2)).sum(axis=0)
    for _ in range(_MAX_DESCENT_STEPS):
        grad = (post[:, :, None] * (p * np.sign(diff) * np.abs(diff) ** (p - 1.0))).sum(axis=0)
        candidate = project_rows_to_simplex(q - step * grad)
        diff_c = candidate[None, :, :] - support[:, None, :]
        obj_c = (post * (np.abs(diff_c) ** p).sum(axis=2)).sum(axis=0)
        improved = float(obj.sum() - obj_c.sum())
        if improved > 0.0:
            q, diff, obj = candidate, diff_c, obj_c
        if improved < _DESCENT_TOL:
            break
    return q


def _bisect_binary(post: np.ndarray, support: np.ndarray, loss: LossExponent) -> np.ndarray:
    """Exact p>2 Bayes responses on a two-symbol alphabet.

    With k=2 the response is the scalar minimizer of sum_j w_j |theta_j - t|^p
    (both coordinates contribute the same term), whose derivative is monotone:
    bisection pins it to ~1e-15, far past the descent tolerance.
    """
    theta = support[:, 0]
    p = loss.p
    lo = np.full(post.shape[1], theta.min())
    hi = np.full(post.shape[1], theta.max())
    for _ in range(52):
        mid = 0.5 * (lo + hi)
        diff = mid[None, :] - theta[:, None]
        slope = (post * np.sign(diff) * np.abs(diff) ** (p - 1.0)).sum(axis=0)
        hi = np.where(slope > 0.0, mid, hi)
        lo = np.where(slope > 0.0, lo, mid)
    t = 0.5 * (lo + hi)
    return np.column_stack([t, 1.0 - t])


def _bayes_estimates(
    post: np.ndarray, reachable: np.ndarray, support: np.ndarray, loss: LossExponent
) -> np.ndarray:
    """Per-outcome Bayes response: posterior mean for p=2, convex descent for
    p>2 (exact bisection when the alphabet is binary).  Outcomes with an
    all-zero posterior fall back to uniform."""
    q = post.T @ support
    if loss.p != 2.0:
        if support.shape[1] == 2:
            q = _bisect_binary(post, support, loss)
        else:
            q = _descend(post, support, project_rows_to_simplex(q), loss)
    q[~reachable] = 1.0 / support.shape[1]
    return q


def bayes_response(
    prior: NatureStrategy, n: int, loss: LossExponent, cap: int = DEFAULT_OUTCOME_CAP
) -> GameTableEstimator:
    """The estimator minimizing the prior's expected loss, outcome by outcome."""
    k = prior.k
    required = composition_count(n, k)
    if required > cap:
        raise CapExceeded(required, cap)
    outcomes, _ = outcome_basis(n, k)
    loglik = _atom_log_likelihoods(prior.support, outcomes)
    post, reachable = _posteriors(prior.weights, loglik)
    estimates = _bayes_estimates(post, reachable, prior.support, loss)
    return GameTableEstimator(k, n=n, outcomes=outcomes, estimates=estimates)


def nature_best_response(
    est, n: int, loss: LossExponent, config: SearchConfig | None = None, cap: int = DEFAULT_OUTCOME_CAP
) -> WorstCaseResult:
    """Nature's reply to a fixed estimator: the worst-case truth."""
    return worst_case_risk(est, n, loss, config=config, cap=cap)


def _play(
    k: int,
    n: int,
    loss: LossExponent,
    support: np.ndarray,
    masses: np.ndarray,
    max_iters: int,
    tol: float,
    rel_tol: float | None,
    search: SearchConfig | None,
    cap: int,
):
    """The play loop proper, on raw atom arrays; returns the final arrays too
    so a caller can carry nature's strategy to the next sample size."""
    required = composition_count(n, k)
    if required > cap:
        raise CapExceeded(required, cap)
    outcomes, log_coeff = outcome_basis(n, k)
    loglik = _atom_log_likelihoods(support, outcomes)

    best_lower = 0.0
    best_upper = math.inf
    best_estimates: np.ndarray | None = None
    iterations = 0
    converged = False

    for iterations in range(1, max_iters + 1):
        weights = masses / masses.sum()
        post, reachable = _posteriors(weights, loglik)
        estimates = _bayes_estimates(post, reachable, support, loss)

        out_probs = np.exp(log_coeff[None, :] + loglik)
        atom_losses = (np.abs(support[:, None, :] - estimates[None, :, :]) ** loss.p).sum(axis=2)
        best_lower = max(best_lower, float(weights @ (out_probs * atom_losses).sum(axis=1)))

        table = UnivariateOutcomeTable.from_arrays(outcomes, log_coeff, estimates, loss)
        reply = maximize_on_simplex(table.risk, k, search)
        if reply.value < best_upper:
            best_upper = reply.value
            best_estimates = estimates

        target = rel_tol * best_upper if rel_tol is not None else tol
        if best_upper - best_lower <= target:
            converged = True
            break

        gaps = np.abs(support - reply.argmax[None, :]).max(axis=1)
        nearest = int(np.argmin(gaps))
        if gaps[nearest] <= ATOM_MERGE_TOL:
            masses[nearest] += 1.0
        else:
            support = np.vstack([support, reply.argmax])
            masses = np.append(masses, 1.0)
            loglik = np.vstack([loglik, _atom_log_likelihoods(reply.argmax[None, :], outcomes)])

    bracket = GameBracket(
        lower=best_lower, upper=best_upper, iterations=iterations, converged=converged
    )
    est = GameTableEstimator(k, n=n, outcomes=outcomes, estimates=best_estimates)
    return bracket, est, support, masses


def fictitious_play(
    k: int,
    n: int,
    loss: LossExponent,
    max_iters: int = 500,
    tol: float = 1e-3,
    rel_tol: float | None = None,
    initial: NatureStrategy | None = None,
    search: SearchConfig | None = None,
    cap: int = DEFAULT_OUTCOME_CAP,
) -> tuple[GameBracket, GameTableEstimator]:
    """Bracket the minimax risk at sample size n over a k-symbol alphabet.

    Each round: Bayes-respond to the running prior, record its mixture risk
    (lower bound), find the response's worst-case truth (upper bound), and add
    that truth to the prior with one play's worth of mass.  Stops once the
    bracket width drops below tol (or rel_tol times the upper bound, when
    given); otherwise runs max_iters rounds and reports converged=False.
    """
    if k < 2 or n < 0 or max_iters < 1 or tol <= 0.0:
        raise ValueError("need k >= 2, n >= 0, max_iters >= 1, tol > 0")
    if rel_tol is not None and rel_tol <= 0.0:
        raise ValueError("rel_tol must be positive when given")
    if initial is None:
        initial = NatureStrategy.uniform_atom(k)
    if initial.k != k:
        raise ValueError("initial strategy lives on the wrong alphabet")
    bracket, est, _, _ = _play(
        k, n, loss, initial.support.copy(), initial.weights.copy(),
        max_iters, tol, rel_tol, search, cap,
    )
    return bracket, est


@dataclass(frozen=True, eq=False)
class SolvedTable:
    """A risk table plus the per-size game artifacts that produced it.

    Sizes absent from `brackets` were filled by monotonicity between their
    solved neighbors (more samples never raise the minimax risk), so they
    carry wider brackets and no estimator.
    """

    table: RiskTable
    brackets: dict[int, GameBracket]
    estimators: dict[int, GameTableEstimator]


def geometric_sizes(max_n: int, dense_upto: int = 32, ratio: float = 1.08) -> tuple[int, ...]:
    """Every size up to dense_upto, then geometric spacing out to max_n."""
    if max_n < 0 or dense_upto < 0 or ratio <= 1.0:
        raise ValueError("need max_n, dense_upto >= 0 and ratio > 1")
    sizes = list(range(min(dense_upto, max_n) + 1))
    current = sizes[-1]
    while current < max_n:
        current = min(max_n, max(current + 1, int(round(current * ratio))))
        sizes.append(current)
    return tuple(sizes)


def solve_risk_table(
    k: int,
    max_n: int,
    loss: LossExponent,
    sizes=None,
    max_iters: int = 500,
    tol: float = 1e-3,
    rel_tol: float | None = None,
    search: SearchConfig | None = None,
    cap: int = DEFAULT_OUTCOME_CAP,
    carry_mass: float = 12.0,
) -> SolvedTable:
    """Bracket r_0..r_max_n by fictitious play, size by size.

    With `sizes` given (must start at 0 and end at max_n), only those sizes
    are played; the rest inherit the bracket [next solved lower, previous
    solved upper], which is valid because the true sequence is nonincreasing.

    Nature's strategy carries over from one size to the next (the least
    favorable prior drifts slowly in n), rescaled to carry_mass plays so new
    rounds can still move it.  Any carried prior gives valid bounds.
    """
    if sizes is None:
        sizes = tuple(range(max_n + 1))
    else:
        sizes = tuple(sorted(set(int(s) for s in sizes)))
        if not sizes or sizes[0] != 0 or sizes[-1] != max_n:
            raise ValueError("sizes must run from 0 to max_n")
    if carry_mass <= 0.0:
        raise ValueError("carry_mass must be positive")

    support = NatureStrategy.uniform_atom(k).support
    masses = np.array([1.0])
    brackets: dict[int, GameBracket] = {}
    estimators: dict[int, GameTableEstimator] = {}
    for n in sizes:
        total = masses.sum()
        if total > carry_mass:
            masses = masses * (carry_mass / total)
        bracket, est, support, masses = _play(
            k, n, loss, support, masses, max_iters, tol, rel_tol, search, cap
        )
        brackets[n] = bracket
        estimators[n] = est

    lo = np.empty(max_n + 1)
    hi = np.empty(max_n + 1)
    for n in sizes:
        lo[n] = brackets[n].lower
        hi[n] = brackets[n].upper
    for a, b in zip(sizes, sizes[1:]):
        lo[a + 1 : b] = brackets[b].lower
        hi[a + 1 : b] = brackets[a].upper
    # Nonincreasing truth lets bounds travel: uppers forward, lowers backward.
    hi = np.minimum.accumulate(hi)
    lo = np.maximum.accumulate(lo[::-1])[::-1]
    lo = np.minimum(lo, hi)

    table = RiskTable(values=(lo + hi) / 2.0, widths=hi - lo, k=k, loss=loss)
    return SolvedTable(table=table, brackets=brackets, estimators=estimators)


def solution_to_json(solved: SolvedTable) -> dict:
    """JSON document for a solved table: schema_version, brackets, estimates."""
    table = solved.table
    return {
        "schema_version": "1",
        "kind": "game-table-family",
        "k": table.k,
        "p": table.loss.p,
        "max_n": table.max_n,
        "values": [float(v) for v in table.values],
        "widths": [float(w) for w in table.widths],
        "solved": [
            {
                "n": n,
                "lower": bracket.lower,
                "upper": bracket.upper,
                "iterations": bracket.iterations,
                "converged": bracket.converged,
                "outcomes": solved.estimators[n].outcomes.tolist(),
                "estimates": solved.estimators[n].estimates.tolist(),
            }
            for n, bracket in sorted(solved.brackets.items())
        ],
    }


def solution_from_json(doc: dict) -> SolvedTable:
    if doc.get("schema_version") != "1" or doc.get("kind") != "game-table-family":
        raise ValueError("not a version-1 game-table-family document")
    k = int(doc["k"])
    loss = LossExponent(float(doc["p"]))
    table = RiskTable(
        values=np.asarray(doc["values"], dtype=float),
        widths=np.asarray(doc["widths"], dtype=float),
        k=k,
        loss=loss,
    )
    brackets: dict[int, GameBracket] = {}
    estimators: dict[int, GameTableEstimator] = {}
    for entry in doc["solved"]:
        n = int(entry["n"])
        brackets[n] = GameBracket(
            lower=float(entry["lower"]),
            upper=float(entry["upper"]),
            iterations=int(entry["iterations"]),
            converged=bool(entry["converged"]),
        )
        estimators[n] = GameTableEstimator(
            k, n=n, outcomes=np.asarray(entry["outcomes"]), estimates=np.asarray(entry["estimates"])
        )
    return SolvedTable(table=table, brackets=brackets, estimators=estimators)
