import math

import numpy as np
import pytest

from kle.errors import EmptyValidation, NoCandidates
from kle.hyperparams import (
    CSV_COLUMNS,
    edge_order,
    entropy_convergence_curve,
    grid_search_validation,
    select_lengthscale,
    write_curves_csv,
)
from kle.kernels import KernelConfig


def fake_curve(t, collapse):
    """A 4-vertex heat curve object whose collapse flag is forced."""
    c = entropy_convergence_curve(4, KernelConfig.heat(t))
    vals = c.vne_raw.copy()
    vals[1:] = 0.0 if collapse else math.log(4)
    return type(c)(c.n_vertices, c.config, c.schedule, c.seed, c.edge_counts, vals)


class TestCurves:
    def test_starts_at_one(self):
        for n in (2, 5, 9):
            for sched in ("sequential", "random"):
                c = entropy_convergence_curve(n, KernelConfig.heat(0.3), sched, seed=1)
                assert c.vne_scaled[0] == pytest.approx(1.0, abs=1e-12)
                np.testing.assert_array_equal(c.edge_counts, np.arange(n * (n - 1) // 2 + 1))

    def test_two_vertices(self):
        c = entropy_convergence_curve(2, KernelConfig.heat(0.3))
        assert c.vne_scaled[1] == pytest.approx(0.937887630481657, abs=1e-9)

    def test_large_t_collapses_on_complete_graph(self):
        c = entropy_convergence_curve(8, KernelConfig.heat(20.0))
        assert c.vne_scaled[-1] < 0.01

    def test_deterministic(self):
        a = entropy_convergence_curve(7, KernelConfig.heat(1.0), "random", seed=5)
        b = entropy_convergence_curve(7, KernelConfig.heat(1.0), "random", seed=5)
        np.testing.assert_array_equal(a.vne_raw, b.vne_raw)
        assert edge_order(7, "random", 5) != edge_order(7, "random", 6)

    def test_sequential_non_increasing(self):
        for n in (3, 8, 15, 20):
            for t in (0.1, 0.3, 1.0, 5.0):
                v = entropy_convergence_curve(n, KernelConfig.heat(t)).vne_scaled
                assert np.all(np.diff(v) <= 1e-12)

    def test_matern_curve(self):
        c = entropy_convergence_curve(6, KernelConfig.matern(1.0, 1.0))
        assert c.vne_scaled[0] == pytest.approx(1.0)
        assert c.vne_scaled[-1] < 1.0

    def test_csv(self, tmp_path):
        path = tmp_path / "c.csv"
        write_curves_csv(path, [entropy_convergence_curve(3, KernelConfig.heat(0.3))])
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[1].startswith("3,sequential,t,0.3,0,")
        assert len(lines) == 1 + 4


class TestSelect:
    def test_largest_collapses(self):
        curves = [fake_curve(t, t == 10) for t in (0.1, 0.3, 1.0, 10)]
        assert select_lengthscale(curves) == 0.3

    def test_single_survivor(self):
        curves = [fake_curve(t, t != 0.5) for t in (0.5, 2, 4)]
        assert select_lengthscale(curves) == 0.5

    def test_all_collapse(self):
        assert select_lengthscale([fake_curve(t, True) for t in (3, 1, 2)]) == 1

    def test_duplicates_do_not_change_selection(self):
        for ts in [(0.1, 0.3), (0.1, 0.3, 1.0, 10), (0.2, 0.4, 0.6, 5, 9)]:
            curves = [fake_curve(t, t > 4) for t in ts]
            assert select_lengthscale(curves + curves) == select_lengthscale(curves)

    def test_real_curves(self):
        curves = [entropy_convergence_curve(20, KernelConfig.heat(t)) for t in (0.1, 0.3, 5.0, 10.0)]
        assert [c.collapses() for c in curves] == [False, False, True, True]
        assert select_lengthscale(curves) == 0.1

    def test_empty(self):
        with pytest.raises(NoCandidates):
            select_lengthscale([])


class TestGridSearch:
    def test_cases(self):
        y = [True, False, True, False]
        a, b = KernelConfig.heat(0.3), KernelConfig.heat(1.0)
        assert grid_search_validation({a: [0.1, 0.9, 0.2, 0.8]}, y) == a
        good, bad = [0.1, 0.9, 0.2, 0.8], [0.9, 0.1, 0.2, 0.8]
        assert grid_search_validation({a: bad, b: good}, y) == b
        assert grid_search_validation({b: good, a: good}, y) == a

    def test_errors(self):
        with pytest.raises(EmptyValidation):
            grid_search_validation({KernelConfig.heat(): []}, [])
        with pytest.raises(NoCandidates):
            grid_search_validation({}, [True])
