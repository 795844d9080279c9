import numpy as np
import pytest

from pmflab.search import (
    SearchConfig,
    maximize_on_simplex,
    project_rows_to_simplex,
    project_to_simplex,
    simplex_grid,
)


class TestProjection:
    def test_fixed_point_on_simplex(self):
        x = np.array([0.2, 0.5, 0.3])
        assert np.allclose(project_to_simplex(x), x)

    def test_known_clip(self):
        assert np.allclose(project_to_simplex(np.array([1.2, -0.2])), [1.0, 0.0])

    def test_output_always_feasible(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            v = rng.normal(scale=3.0, size=rng.integers(2, 6))
            q = project_to_simplex(v)
            assert q.min() >= 0.0
            assert q.sum() == pytest.approx(1.0, abs=1e-12)

    def test_projection_is_nearest_point(self):
        rng = np.random.default_rng(1)
        v = rng.normal(size=4)
        q = project_to_simplex(v)
        for point in simplex_grid(4, 6):
            assert np.sum((v - q) ** 2) <= np.sum((v - point) ** 2) + 1e-12

    def test_rows_version_matches(self):
        rng = np.random.default_rng(2)
        rows = rng.normal(size=(5, 3))
        got = project_rows_to_simplex(rows)
        for i in range(5):
            assert np.allclose(got[i], project_to_simplex(rows[i]))


class TestGrid:
    def test_grid_size_and_feasibility(self):
        grid = simplex_grid(3, 4)
        assert len(grid) == 15  # C(6, 2)
        assert np.allclose(grid.sum(axis=1), 1.0)
        assert grid.min() >= 0.0


class TestMaximize:
    def test_finds_interior_peak(self):
        target = np.array([0.6, 0.3, 0.1])
        out = maximize_on_simplex(lambda x: -np.sum((x - target) ** 2), 3)
        assert np.max(np.abs(out.argmax - target)) < 1e-6
        assert out.value == pytest.approx(0.0, abs=1e-10)

    def test_linear_objective_goes_to_vertex(self):
        out = maximize_on_simplex(lambda x: x[0], 4)
        assert out.argmax[0] == pytest.approx(1.0, abs=1e-9)
        assert out.value == pytest.approx(1.0, abs=1e-9)

    def test_never_below_grid_best(self):
        def wiggly(x):
            return float(np.sin(7 * x[0]) + 0.5 * np.cos(11 * x[1]))

        cfg = SearchConfig(restarts=4, grid_divisions=12)
        out = maximize_on_simplex(wiggly, 3, cfg)
        grid_best = max(wiggly(g) for g in simplex_grid(3, 12))
        assert out.value >= grid_best - 1e-12

    def test_trace_is_nondecreasing(self):
        out = maximize_on_simplex(lambda x: -np.sum((x - 1 / 3) ** 2), 3)
        values = [v for _, v in out.trace]
        assert values == sorted(values)
