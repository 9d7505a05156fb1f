import numpy as np
import pytest

from graphdenoise import (
    ConvergenceError,
    InvalidArgumentError,
    NotPositiveDefiniteError,
    SddOperator,
    SingularSystemError,
    VertexSet,
    build_grid_graph,
    cg_solve,
    dirichlet_energy,
    harmonic_interpolate,
)

from conftest import dense_laplacian, random_connected_graph


class TestCgSolve:
    def test_identity_operator_one_iteration(self, p3):
        op = SddOperator.shifted_laplacian(p3, np.ones(3), 0.0)
        b = np.array([3.0, -1.0, 2.0])
        report = cg_solve(op, b)
        assert np.allclose(report.solution, b)
        assert report.iterations <= 1

    def test_p3_against_dense_inverse(self, p3):
        op = SddOperator.shifted_laplacian(p3, np.ones(3), 1.0)
        b = np.array([1.0, 0.0, 0.0])
        report = cg_solve(op, b, tol=1e-12)
        expect = np.linalg.solve(np.eye(3) + dense_laplacian(p3), b)
        assert np.allclose(report.solution, expect, atol=1e-10)

    def test_zero_rhs(self, p3):
        op = SddOperator.shifted_laplacian(p3, np.ones(3), 2.0)
        report = cg_solve(op, np.zeros(3))
        assert np.array_equal(report.solution, np.zeros(3))
        assert report.iterations == 0

    def test_matches_dense_solves_on_random_graphs(self, rng):
        for _ in range(10):
            n = int(rng.integers(5, 100))
            g = random_connected_graph(n, int(rng.integers(0, n // 2 + 1)), rng)
            d = rng.uniform(0.1, 2.0, size=n)
            tau = float(rng.uniform(0.0, 3.0))
            op = SddOperator.shifted_laplacian(g, d, tau)
            b = rng.normal(size=n)
            got = cg_solve(op, b, tol=1e-12, max_iter=50 * n).solution
            expect = np.linalg.solve(np.diag(d) + tau * dense_laplacian(g), b)
            assert np.linalg.norm(got - expect) <= 1e-8 * np.linalg.norm(expect)

    def test_singular_operator_rejected(self, p3):
        with pytest.raises(NotPositiveDefiniteError):
            SddOperator.shifted_laplacian(p3, np.zeros(3), 1.0)
        with pytest.raises(NotPositiveDefiniteError):
            SddOperator.shifted_laplacian(p3, np.array([1.0, 0.0, 1.0]), 0.0)

    def test_max_iter_error_carries_best_iterate(self, rng):
        g = random_connected_graph(60, 30, rng)
        op = SddOperator.shifted_laplacian(g, np.full(g.n, 1e-6), 1.0)
        b = rng.normal(size=g.n)
        with pytest.raises(ConvergenceError) as err:
            cg_solve(op, b, tol=1e-14, max_iter=2)
        report = err.value.report
        assert report.iterations == 2
        assert report.solution.shape == (g.n,)
        assert report.relative_residual > 1e-14

    def test_report_residual_is_true_residual(self, rng):
        g = random_connected_graph(25, 10, rng)
        op = SddOperator.shifted_laplacian(g, np.ones(g.n), 0.7)
        b = rng.normal(size=g.n)
        report = cg_solve(op, b, tol=1e-10)
        resid = np.linalg.norm(op.apply(report.solution) - b) / np.linalg.norm(b)
        assert resid <= 1e-10
        assert report.relative_residual == pytest.approx(resid, abs=1e-12)

    def test_invalid_inputs(self, p3):
        op = SddOperator.shifted_laplacian(p3, np.ones(3), 1.0)
        with pytest.raises(InvalidArgumentError):
            cg_solve(op, np.zeros(4))
        with pytest.raises(InvalidArgumentError):
            cg_solve(op, np.zeros(3), tol=0.0)
        with pytest.raises(InvalidArgumentError):
            SddOperator.shifted_laplacian(p3, -np.ones(3), 1.0)


class TestHarmonicInterpolate:
    def test_full_known_set_returns_observations(self, p3):
        s = VertexSet.from_iterable([0, 1, 2])
        obs = np.array([4.0, 5.0, 6.0])
        assert np.array_equal(harmonic_interpolate(p3, s, obs), obs)

    def test_p3_midpoint_average(self, p3):
        s = VertexSet.from_iterable([0, 2])
        out = harmonic_interpolate(p3, s, np.array([0.0, 2.0]))
        assert out[1] == pytest.approx(1.0, abs=1e-10)

    def test_constant_extension_from_one_corner(self):
        g = build_grid_graph(2, 2)
        s = VertexSet.from_iterable([0])
        out = harmonic_interpolate(g, s, np.array([3.25]))
        assert np.allclose(out, 3.25, atol=1e-10)

    def test_empty_known_set_rejected(self, p3):
        with pytest.raises(SingularSystemError):
            harmonic_interpolate(p3, VertexSet.from_iterable([]), np.array([]))

    def test_harmonicity_and_maximum_principle(self, rng):
        for _ in range(20):
            n = int(rng.integers(6, 60))
            g = random_connected_graph(n, int(rng.integers(0, n)), rng)
            ksize = int(rng.integers(1, n))
            s = VertexSet(
                np.sort(rng.choice(n, size=ksize, replace=False)).astype(np.int64)
            )
            obs = rng.normal(size=ksize)
            out = harmonic_interpolate(g, s, obs, tol=1e-12)
            assert np.array_equal(out[s.members], obs)
            comp = s.complement(n)
            if len(comp) == 0:
                continue
            lap = dense_laplacian(g) @ out
            assert np.max(np.abs(lap[comp.members])) <= 1e-7
            assert out[comp.members].min() >= obs.min() - 1e-9
            assert out[comp.members].max() <= obs.max() + 1e-9

    def test_minimizes_energy_among_feasible(self, rng):
        g = random_connected_graph(20, 10, rng)
        s = VertexSet.from_iterable(range(0, 20, 3))
        obs = rng.normal(size=len(s))
        out = harmonic_interpolate(g, s, obs, tol=1e-12)
        base = dirichlet_energy(g, out)
        comp = s.complement(g.n)
        for _ in range(20):
            delta = np.zeros(g.n)
            delta[comp.members] = rng.normal(size=len(comp))
            perturbed = out + 1e-3 * delta
            assert dirichlet_energy(g, perturbed) >= base - 1e-12

    def test_depends_only_on_boundary_of_known_set(self, rng):
        """Editing observations away from the boundary only moves those
        vertices' own outputs."""
        from graphdenoise import boundary

        g = random_connected_graph(25, 12, rng)
        s = VertexSet.from_iterable(range(0, 25, 2))
        obs = rng.normal(size=len(s))
        out1 = harmonic_interpolate(g, s, obs, tol=1e-12)
        bnd = boundary(g, s)
        interior = [
            i for i, v in enumerate(s.members) if v not in bnd.members.tolist()
        ]
        if not interior:
            pytest.skip("no interior vertices in this draw")
        obs2 = obs.copy()
        obs2[interior] += rng.normal(size=len(interior))
        out2 = harmonic_interpolate(g, s, obs2, tol=1e-12)
        comp = s.complement(g.n)
        assert np.allclose(out1[comp.members], out2[comp.members], atol=1e-9)
        assert np.array_equal(out2[s.members], obs2)
