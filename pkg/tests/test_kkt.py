import numpy as np
import pytest

from lagcrit.corpus import CBRT2, CBRT4
from lagcrit.kkt import (
    CriticalPoint,
    Problem,
    SolverConfig,
    deduplicate,
    find_critical_points,
    kkt_jacobian,
    kkt_residual,
    lagrangian_hessian,
    multistart,
    solve_from,
)

X_AREA = (CBRT2, CBRT2, CBRT2 / 2)
L_AREA = (-2 * CBRT4,)


class TestProblem:
    def test_needs_fewer_constraints_than_variables(self):
        with pytest.raises(ValueError):
            Problem.from_text(("x1", "x2"), "x1", ("x1", "x2"))

    def test_default_box(self):
        p = Problem.from_text(("x1", "x2"), "x1", ("x2",))
        assert p.box == ((-5.0, 5.0), (-5.0, 5.0))

    def test_degenerate_box(self):
        with pytest.raises(ValueError):
            Problem.from_text(("x1", "x2"), "x1", ("x2",), ((0, 1), (2, 2)))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(starts=0)
        with pytest.raises(ValueError):
            SolverConfig(dedup_radius=1e-12, stationarity_tol=1e-9)


class TestResidual:
    def test_min_area(self, cases):
        r = kkt_residual(cases["min-area-box"].problem, X_AREA, L_AREA)
        assert r.shape == (4,)
        np.testing.assert_allclose(r, 0, atol=1e-12)

    def test_bowl_origin(self, bowl):
        np.testing.assert_array_equal(kkt_residual(bowl, [0, 0], [0]), np.zeros(3))

    def test_cone_plane(self, cases):
        r = kkt_residual(cases["cone-plane"].problem, [1, 0, 1], [0.25, -0.5])
        np.testing.assert_allclose(r, 0, atol=1e-12)


class TestJacobian:
    def test_matches_fd_of_residual(self, cases, rng):
        for case in cases.values():
            p = case.problem
            lo, hi = p.box_bounds()
            for _ in range(5):
                x = rng.uniform(lo, hi)
                lam = rng.normal(size=p.m)
                K = kkt_jacobian(p, x, lam)
                z = np.concatenate([x, lam])
                fd = np.empty_like(K)
                for j in range(z.size):
                    h = 1e-6 * (1 + abs(z[j]))
                    zp, zm = z.copy(), z.copy()
                    zp[j] += h
                    zm[j] -= h
                    fd[:, j] = (kkt_residual(p, zp[: p.n], zp[p.n:])
                                - kkt_residual(p, zm[: p.n], zm[p.n:])) / (2 * h)
                assert np.max(np.abs(K - fd)) <= 1e-5 * (1 + np.max(np.abs(K)))

    def test_linear_problem_block_zero(self):
        p = Problem.from_text(("x1", "x2", "x3"), "x1 - 2*x3", ("x1 + x2 + x3 - 1",))
        K = kkt_jacobian(p, [0.3, 0.2, 0.1], [2.0])
        np.testing.assert_array_equal(K[:3, :3], np.zeros((3, 3)))
        np.testing.assert_array_equal(K[3, :3], [1, 1, 1])
        np.testing.assert_array_equal(K[:3, 3], [1, 1, 1])

    def test_lagrangian_hessian_examples(self, cases):
        H = lagrangian_hessian(cases["min-area-box"].problem, X_AREA, L_AREA)
        np.testing.assert_allclose(H, -np.array([[0, 1, 2], [1, 0, 2], [2, 2, 0]]), atol=1e-9)
        H = lagrangian_hessian(cases["cone-plane"].problem, [1, 0, 1], [0.25, -0.5])
        np.testing.assert_allclose(H, np.diag([2, 2, -2]) / 4, atol=1e-15)

    def test_zero_multiplier_is_objective_hessian(self, cases):
        p = cases["local-not-global-3d"].problem
        x = np.array([0.4, -1.2, 0.3])
        np.testing.assert_array_equal(lagrangian_hessian(p, x, [0.0]), p.objective.hessian(x))


class TestSolveFrom:
    def test_cubic_parabola_from_origin(self, cases):
        cp, reason = solve_from(cases["cubic-parabola"].problem, [0.0, 0.0], [0.0])
        assert reason is None
        near = [np.allclose(cp.x, t, atol=1e-9) for t in ([-1 / 3, 1 / 9], [1, 1])]
        assert any(near)
        assert cp.lam[0] == pytest.approx(-1, abs=1e-9)

    def test_start_at_solution(self, cases):
        cp, _ = solve_from(cases["cone-plane"].problem, [1.0, 0.0, 1.0], [0.25, -0.5])
        assert cp.iterations == 0
        assert cp.residual_norm == 0.0

    def test_min_area_from_ones(self, cases):
        cp, _ = solve_from(cases["min-area-box"].problem, [1.0, 1.0, 1.0], [-1.0])
        np.testing.assert_allclose(cp.x, X_AREA, atol=1e-9)
        assert cp.residual_norm <= SolverConfig().stationarity_tol

    def test_start_outside_domain(self):
        p = Problem.from_text(("x1", "x2"), "ln(x1) + x2", ("x1 - x2",))
        cp, reason = solve_from(p, [-1.0, 0.0], [0.0])
        assert cp is None and reason == "start outside domain"

    def test_no_root_reports_divergence(self):
        p = Problem.from_text(("x1", "x2"), "x1", ("x2",))
        cp, reason = solve_from(p, [0.5, 0.5], [0.0])
        assert cp is None and reason


class TestFindCriticalPoints:
    def test_septic(self, cases):
        pts = find_critical_points(cases["septic-saddles"].problem)
        np.testing.assert_allclose([cp.x[0] for cp in pts], [0, 1, 1.5, 3], atol=1e-6)
        np.testing.assert_allclose([cp.lam[0] for cp in pts], 0, atol=1e-6)

    def test_cone_plane(self, cases):
        (cp,) = find_critical_points(cases["cone-plane"].problem)
        np.testing.assert_allclose(cp.x, [1, 0, 1], atol=1e-9)

    def test_bowl(self, bowl):
        (cp,) = find_critical_points(bowl)
        np.testing.assert_allclose(cp.x, 0, atol=1e-12)

    def test_deterministic(self, cases):
        p = cases["cubic-parabola"].problem
        cfg = SolverConfig(rng_seed=7)
        a, b = find_critical_points(p, cfg), find_critical_points(p, cfg)
        assert len(a) == len(b)
        for u, v in zip(a, b):
            assert np.array_equal(u.x, v.x) and np.array_equal(u.lam, v.lam)

    def test_sorted_and_counted(self, cases):
        res = multistart(cases["septic-saddles"].problem)
        keys = [tuple(cp.x) for cp in res.points]
        assert keys == sorted(keys)
        assert res.converged + res.diverged + res.skipped == SolverConfig().starts

    def test_every_point_is_stationary(self, cases):
        cfg = SolverConfig()
        for case in cases.values():
            for cp in find_critical_points(case.problem, cfg):
                r = kkt_residual(case.problem, cp.x, cp.lam)
                assert np.max(np.abs(r)) <= cfg.stationarity_tol


class TestDeduplicate:
    def test_keeps_smallest_residual(self):
        a = CriticalPoint(np.array([1.0, 0.0]), np.array([0.0]), 1e-10)
        b = CriticalPoint(np.array([1.0 + 1e-8, 0.0]), np.array([0.0]), 1e-12)
        c = CriticalPoint(np.array([-1.0, 0.0]), np.array([0.0]), 1e-11)
        out = deduplicate([a, b, c], 1e-6)
        assert [cp.residual_norm for cp in out] == [1e-11, 1e-12]


class TestScaling:
    @pytest.mark.parametrize("c", [-2.0, 0.5, 10.0])
    def test_constraint_scaling(self, cases, c):
        case = cases["cubic-parabola"]
        p = case.problem
        q = Problem(p.variables, p.objective, (p.constraints[0].scaled(c),), p.box)
        a, b = find_critical_points(p), find_critical_points(q)
        assert len(a) == len(b) == 2
        for u, v in zip(a, b):
            np.testing.assert_allclose(v.x, u.x, atol=1e-9)
            np.testing.assert_allclose(v.lam * c, u.lam, atol=1e-9)

