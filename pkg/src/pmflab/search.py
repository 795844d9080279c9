"""Deterministic maximization over the probability simplex.

Strategy: score a coarse simplex grid, then refine the best few starts by
projected coordinate ascent with step halving.  Everything is derandomized
(fixed grid order, stable sorts, first-wins tie-breaks) so repeated runs give
identical argmaxes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import compositions

__all__ = ["SearchConfig", "SearchOutcome", "project_to_simplex", "simplex_grid", "maximize_on_simplex"]


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 16
    grid_divisions: int = 8
    initial_step: float = 0.1
    min_improvement: float = 1e-12
    min_step: float = 1e-13


@dataclass(frozen=True)
class SearchOutcome:
    argmax: np.ndarray
    value: float
    # (iterate, running best) pairs; the objective column is nondecreasing.
    trace: tuple[tuple[np.ndarray, float], ...]


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a vector onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u + (1.0 - cumulative) / idx > 0.0)[0][-1]
    theta = (1.0 - cumulative[rho]) / (rho + 1.0)
    return np.maximum(v + theta, 0.0)


def project_rows_to_simplex(rows: np.ndarray) -> np.ndarray:
    """Row-wise simplex projection (vectorized form of project_to_simplex)."""
    rows = np.asarray(rows, dtype=float)
    u = np.sort(rows, axis=1)[:, ::-1]
    cumulative = np.cumsum(u, axis=1)
    idx = np.arange(1, rows.shape[1] + 1)
    positive = u + (1.0 - cumulative) / idx > 0.0
    rho = rows.shape[1] - 1 - np.argmax(positive[:, ::-1], axis=1)
    theta = (1.0 - cumulative[np.arange(rows.shape[0]), rho]) / (rho + 1.0)
    return np.maximum(rows + theta[:, None], 0.0)


def simplex_grid(dim: int, divisions: int) -> np.ndarray:
    """The lattice {c / divisions : c a count vector summing to divisions}."""
    pts = np.array(list(compositions(divisions, dim)), dtype=float)
    return pts / divisions


def maximize_on_simplex(objective, dim: int, config: SearchConfig | None = None) -> SearchOutcome:
    """Maximize a scalar objective over the probability simplex of dimension dim."""
    cfg = config or SearchConfig()
    grid = simplex_grid(dim, cfg.grid_divisions)
    scores = np.array([objective(x) for x in grid])
    order = np.argsort(-scores, kind="stable")[: cfg.restarts]

    trace: list[tuple[np.ndarray, float]] = []
    best_x = grid[order[0]].copy()
    best_val = float(scores[order[0]])
    trace.append((best_x.copy(), best_val))

    for start_idx in order:
        x = grid[start_idx].copy()
        val = float(scores[start_idx])
        step = cfg.initial_step
        while step >= cfg.min_step:
            cand_x, cand_val = None, val
            for i in range(dim):
                for sign in (1.0, -1.0):
                    move = x.copy()
                    move[i] += sign * step
                    move = project_to_simplex(move)
                    f = float(objective(move))
                    if f > cand_val + cfg.min_improvement:
                        cand_x, cand_val = move, f
            if cand_x is None:
                step *= 0.5
                continue
            x, val = cand_x, cand_val
            if val > best_val:
                best_x, best_val = x.copy(), val
                trace.append((best_x.copy(), best_val))
        if val > best_val:
            best_x, best_val = x.copy(), val
            trace.append((best_x.copy(), best_val))

    return SearchOutcome(argmax=best_x, value=best_val, trace=tuple(trace))
