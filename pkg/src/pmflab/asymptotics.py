"""Rate analysis tools: binomial-weighted risk curves, the Bernstein operator,
Chernoff tail bounds, rate-constant extraction, and the labeled-vs-pooled gap
bound.

Binomial coefficients always go through log-gamma; terms that underflow exp
(below ~1e-300) drop out, which cannot move any assertion made at the 1e-12
level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from .core import LossExponent
from .estimators import add_constant_l2_risk

__all__ = [
    "RiskTable",
    "RateConstant",
    "mass_risk_curve",
    "plugin_risk_curve",
    "bernstein",
    "binomial_tail_bounds",
    "rate_constants",
    "mle_risk_upper",
    "gap_bound",
    "exact_l2_risk_table",
]

_MONOTONE_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class RiskTable:
    """Per-sample-size worst-case risks r_0..r_N as bracket midpoints.

    widths are full bracket widths (upper minus lower); zero for closed forms.
    The sequence must be nonincreasing up to bracket slack: one more sample
    never hurts a minimax estimator.
    """

    values: np.ndarray
    widths: np.ndarray
    k: int
    loss: LossExponent

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        widths = np.asarray(self.widths, dtype=float)
        if values.ndim != 1 or values.size < 1 or widths.shape != values.shape:
            raise ValueError("values and widths must be matching 1-D sequences")
        if np.any(widths < 0.0):
            raise ValueError("bracket widths cannot be negative")
        if np.any(values - widths / 2 < -_MONOTONE_SLACK) or np.any(values + widths / 2 > 2.0 + _MONOTONE_SLACK):
            raise ValueError("risk brackets must sit inside [0, 2]")
        lo, hi = values - widths / 2, values + widths / 2
        if np.any(lo[1:] > hi[:-1] + _MONOTONE_SLACK):
            raise ValueError("risks must be nonincreasing in sample size, up to bracket slack")
        if self.k < 2:
            raise ValueError("alphabet must have at least 2 symbols")
        values.setflags(write=False)
        widths.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "widths", widths)

    def __len__(self) -> int:
        return self.values.size

    @property
    def max_n(self) -> int:
        return self.values.size - 1

    def lower(self) -> np.ndarray:
        return self.values - self.widths / 2

    def upper(self) -> np.ndarray:
        return self.values + self.widths / 2

    def entry(self, n: int) -> tuple[float, float]:
        return (float(self.lower()[n]), float(self.upper()[n]))

    def window(self, n_lo: int, n_hi: int) -> tuple[tuple[int, float, float], ...]:
        """Bracket triples (n, lower, upper) for n_lo <= n <= n_hi."""
        if not 0 <= n_lo <= n_hi <= self.max_n:
            raise ValueError("window outside the table")
        lo, hi = self.lower(), self.upper()
        return tuple((n, float(lo[n]), float(hi[n])) for n in range(n_lo, n_hi + 1))


@dataclass(frozen=True, eq=False)
class RateConstant:
    """Tail sup/inf of the n^{p/2}-scaled risk sequence.

    points hold (n, scaled lower, scaled upper); c_inf/c_sup are taken over
    the tail half of the supplied window, the operational stand-in for the
    n -> infinity limits.
    """

    points: tuple[tuple[int, float, float], ...]
    c_inf: float
    c_sup: float

    def __post_init__(self) -> None:
        if not self.c_inf <= self.c_sup:
            raise ValueError("need c_inf <= c_sup")
        if any(lo <= 0.0 for _, lo, _ in self.points):
            raise ValueError("scaled entries must be positive")

    @property
    def c_mid(self) -> float:
        return 0.5 * (self.c_inf + self.c_sup)

    @property
    def spread(self) -> float:
        return self.c_sup - self.c_inf


def _table_values(r, n: int) -> np.ndarray:
    values = np.asarray(getattr(r, "values", r), dtype=float)
    if values.ndim != 1 or values.size != n + 1:
        raise ValueError(f"need a table r_0..r_{n}, got {values.size} entries")
    return values


def mass_risk_curve(x: float, n: int, loss: LossExponent, r) -> float:
    """sum_i C(n,i) r_i x^(i+p) (1-x)^(n-i): the payoff a symbol of mass x
    contributes when its conditional is estimated from a Binomial(n, x) count."""
    values = _table_values(r, n)
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return float(values[n])
    i = np.arange(n + 1)
    log_coeff = gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
    terms = values * np.exp(log_coeff + (i + loss.p) * math.log(x) + (n - i) * math.log1p(-x))
    return float(terms.sum())


def plugin_risk_curve(x: float, n: int, loss: LossExponent, r) -> float:
    """sum_i C(n,i) r_i x^i (i/n)^p (1-x)^(n-i): the same payoff with the
    plug-in weight (i/n)^p in place of x^p."""
    if n < 1:
        raise ValueError("need n >= 1")
    values = _table_values(r, n)
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return float(values[n])
    i = np.arange(n + 1)
    log_coeff = gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
    weights = np.exp(log_coeff + i * math.log(x) + (n - i) * math.log1p(-x))
    return float((values * (i / n) ** loss.p * weights).sum())


def bernstein(f: Callable[[float], float], n: int, x: float) -> float:
    """Bernstein operator B_n(f, x) = sum_i C(n,i) f(i/n) x^i (1-x)^(n-i)."""
    if n < 1:
        raise ValueError("need n >= 1")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    i = np.arange(n + 1)
    vals = np.array([float(f(t)) for t in i / n])
    return float(vals @ binom.pmf(i, n, x))


def binomial_tail_bounds(expected: float, lam: float) -> tuple[float, float]:
    """Chernoff bounds for a sum of independent Bernoullis with mean total E:
    P(X <= E - lam) <= first value, P(X >= E + lam) <= second value."""
    if expected < 0.0 or lam < 0.0:
        raise ValueError("expected sum and deviation must be nonnegative")
    if expected == 0.0:
        return (1.0, 1.0) if lam == 0.0 else (0.0, 0.0)
    lower = math.exp(-(lam**2) / (2.0 * expected))
    upper = math.exp(-(lam**2) / (2.0 * (expected + lam / 3.0)))
    return (lower, upper)


def rate_constants(brackets, loss: LossExponent) -> RateConstant:
    """Extract the rate constant window from risk brackets.

    brackets: a RiskTable (all sizes n >= 1 are used) or an iterable of
    (n, lower, upper) triples.  Scales each bracket by n^{p/2}; the constants
    are the sup/inf over the tail half of the window.
    """
    if isinstance(brackets, RiskTable):
        entries = brackets.window(1, brackets.max_n)
    else:
        entries = tuple(tuple(e) for e in brackets)
    if len(entries) < 4:
        raise ValueError("need at least 4 window points")
    ns = [e[0] for e in entries]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("window sizes must be strictly increasing")
    points = []
    for n, lo, hi in entries:
        if n < 1 or lo <= 0.0 or hi < lo:
            raise ValueError("window needs n >= 1 and positive brackets")
        scale = float(n) ** (loss.p / 2.0)
        points.append((int(n), lo * scale, hi * scale))
    tail = points[len(points) // 2 :]
    c_sup = max(hi for _, _, hi in tail)
    c_inf = min(lo for _, lo, _ in tail)
    return RateConstant(points=tuple(points), c_inf=c_inf, c_sup=c_sup)


def mle_risk_upper(n: int, k: int, loss: LossExponent) -> float:
    """Worst-case risk of the empirical pmf is at most (2n)^{-p/2} p k Gamma(p/2)."""
    if n < 1:
        raise ValueError("need n >= 1")
    p = loss.p
    return (2.0 * n) ** (-p / 2.0) * p * k * math.gamma(p / 2.0)


def gap_bound(limit_risk: float, pooled_risk: float, loss: LossExponent, k_y: int) -> float:
    """Upper bound on how far the joint risk at (m, n) sits above its fixed-
    marginal limit, in terms of that limit R and the pooled size risk r.

    gamma = sum_{i=1}^{floor(p)-1} c_i R^{(p-i)/p} r^{i/p}
          + c' R^{(p-fp)/p} r^{fp/p} + c'' (R + r)^{(p-fp)/p} r^{fp/p}
    with c_i = p^(i) k_y^{i/p} / i! and c'' = 2^{p-1} c'.
    """
    if limit_risk < 0.0 or pooled_risk < 0.0:
        raise ValueError("risks cannot be negative")
    if k_y < 2:
        raise ValueError("alphabet must have at least 2 symbols")
    p, fp = loss.p, loss.floor_p
    gamma = 0.0
    for i in range(1, fp):
        c_i = loss.falling(i) * k_y ** (i / p) / math.factorial(i)
        gamma += c_i * limit_risk ** ((p - i) / p) * pooled_risk ** (i / p)
    c_prime = loss.falling(fp) * k_y ** (fp / p) / math.factorial(fp)
    tail_power = pooled_risk ** (fp / p)
    gamma += c_prime * limit_risk ** ((p - fp) / p) * tail_power
    gamma += 2.0 ** (p - 1.0) * c_prime * (limit_risk + pooled_risk) ** ((p - fp) / p) * tail_power
    return gamma


def exact_l2_risk_table(max_n: int, k: int) -> RiskTable:
    """The squared-loss table in closed form: r_n = (1 - 1/k) / (sqrt(n) + 1)^2.

    The add-constant rule attains this risk at every truth, and a matching
    prior makes it Bayes, so the value is exactly minimax (zero width).
    """
    if max_n < 0:
        raise ValueError("need max_n >= 0")
    values = np.array([add_constant_l2_risk(n, k) for n in range(max_n + 1)])
    return RiskTable(values=values, widths=np.zeros(max_n + 1), k=k, loss=LossExponent(2.0))
