import numpy as np
import pytest

from scalarfield.discretization import Field, build_grid
from scalarfield.kernels import green_G, poisson_P
from scalarfield.operators import (IterationLimitError, apply_green,
                                   assemble_green, jacobian,
                                   linearized_spectrum, poisson_trace,
                                   smallest_singular_value)
from scalarfield.solver import monotone_iterate


class TestAssembly:
    def test_two_node_entries_match_kernel(self):
        g = build_grid(1, 5.0, 5.0, 1, 2, grading=1.0)
        K = assemble_green(g)
        x1, x2 = g.heights
        assert K.entries[0, 1] / g.quad_weights[1] \
            == pytest.approx(green_G(1, x1, x2), rel=1e-14)

    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_entries_nonnegative_and_near_symmetric(self, N):
        g = build_grid(N, 6.0, 6.0, 10, 14)
        K = assemble_green(g)
        assert np.all(K.entries >= 0.0)
        bare = K.entries / g.quad_weights[None, :]
        off = ~np.eye(g.n_nodes, dtype=bool)
        np.testing.assert_allclose(bare[off], bare.T[off], rtol=1e-12)

    def test_constant_source_oracle(self, grid_line, K_line):
        # G[1] = 1 - e^{-x}; compared away from the truncation end
        out = apply_green(K_line, Field(grid_line, np.ones(grid_line.n_nodes)))
        core = grid_line.heights <= 10.0
        err = np.abs(out.values - (1.0 - np.exp(-grid_line.heights)))
        assert np.max(err[core]) <= 1e-3

    def test_row_sums_below_one(self, K_line):
        assert np.all(K_line.entries.sum(axis=1) <= 1.0)

    def test_memory_guard(self):
        g = build_grid(1, 20.0, 20.0, 1, 20_001)
        with pytest.raises(ValueError, match="cap"):
            assemble_green(g)


class TestApply:
    def test_linearity_and_positivity(self, grid_line, K_line):
        rng = np.random.default_rng(3)
        f = rng.uniform(0.0, 1.0, grid_line.n_nodes)
        h = rng.normal(size=grid_line.n_nodes)
        zero = apply_green(K_line, Field(grid_line, np.zeros_like(f)))
        assert np.all(zero.values == 0.0)
        assert np.all(apply_green(K_line, Field(grid_line, f)).values >= 0.0)
        lhs = apply_green(K_line, Field(grid_line, f + h)).values
        rhs = apply_green(K_line, Field(grid_line, f)).values \
            + apply_green(K_line, Field(grid_line, h)).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-14)

    def test_grid_mismatch(self, K_line):
        other = build_grid(1, 20.0, 20.0, 1, 64)
        with pytest.raises(ValueError, match="grid"):
            apply_green(K_line, Field(other, np.ones(64)))


class TestPoissonTrace:
    def test_half_line_exact(self, grid_line):
        f = poisson_trace(grid_line, {"type": "point_mass", "mass": 1.0})
        np.testing.assert_array_equal(f.values, np.exp(-grid_line.heights))

    def test_three_dimensional_point_mass(self):
        g = build_grid(3, 8.0, 8.0, 6, 8)
        f = poisson_trace(g, {"type": "point_mass", "mass": 1.0})
        np.testing.assert_allclose(f.values, poisson_P(3, g.nodes), rtol=1e-13)

    def test_mass_linearity(self, grid_line):
        one = poisson_trace(grid_line, {"type": "point_mass", "mass": 1.0})
        two = poisson_trace(grid_line, {"type": "point_mass", "mass": 2.0})
        np.testing.assert_allclose(two.values, 2.0 * one.values)

    def test_constant_radial_density_matches_uniform_data(self):
        # density 1 out to radius 30 acts like boundary data 1: e^{-x_N}
        g = build_grid(2, 4.0, 4.0, 6, 10)
        f = poisson_trace(g, {"type": "radial_density",
                              "radii": [0.0, 30.0], "values": [1.0, 1.0]})
        np.testing.assert_allclose(f.values, np.exp(-g.heights), atol=1e-3)
        assert np.all(f.values > 0.0)

    def test_radial_density_three_dimensional(self):
        g = build_grid(3, 4.0, 4.0, 5, 8)
        f = poisson_trace(g, {"type": "radial_density",
                              "radii": [0.0, 30.0], "values": [1.0, 1.0]})
        np.testing.assert_allclose(f.values, np.exp(-g.heights), atol=1e-3)

    def test_invalid_measures(self, grid_line):
        with pytest.raises(ValueError):
            poisson_trace(grid_line, {"type": "point_mass", "mass": 0.0})
        with pytest.raises(ValueError):
            poisson_trace(grid_line, {"type": "surface"})
        with pytest.raises(ValueError):
            poisson_trace(grid_line, {"type": "radial_density",
                                      "radii": [0.0, 1.0],
                                      "values": [1.0, 1.0]})  # N = 1
        g2 = build_grid(2, 4.0, 4.0, 4, 6)
        with pytest.raises(ValueError):
            poisson_trace(g2, {"type": "radial_density",
                               "radii": [1.0, 0.5], "values": [1.0, 1.0]})
        with pytest.raises(ValueError):
            poisson_trace(g2, {"type": "point_mass", "mass": 1.0,
                               "location": [1.0]})


class TestLinearizedSpectrum:
    def test_fold_state_eigenpair(self, grid_line, K_line):
        # derivative of the soliton family in its shift parameter gives the
        # neutral eigenfield sech * tanh at lambda = 1
        z = grid_line.heights
        u = Field(grid_line, np.sqrt(2.0) / np.cosh(z))
        res = linearized_spectrum(K_line, u, 3.0)
        assert res.lambda_ == pytest.approx(1.0, abs=2e-2)
        assert res.residual <= 1e-8 * np.max(np.abs(res.eigenfield.values))
        assert np.all(res.eigenfield.values >= 0.0)
        mode = np.tanh(z) / np.cosh(z)
        psi = res.eigenfield.values / np.max(res.eigenfield.values)
        np.testing.assert_allclose(psi, mode / np.max(mode), atol=5e-3)

    def test_minimal_branch_is_stable(self, K_line, Pmu_line):
        kappa_star = np.sqrt(2.0)
        for frac in (0.25, 0.5, 0.75, 0.9):
            u = monotone_iterate(frac * kappa_star, K_line, Pmu_line,
                                 3.0).solution
            res = linearized_spectrum(K_line, u, 3.0)
            assert res.lambda_ > 1.0
            assert res.rho < 1.0

    def test_zero_state_rejected(self, grid_line, K_line):
        with pytest.raises(ValueError):
            linearized_spectrum(K_line,
                                Field(grid_line,
                                      np.zeros(grid_line.n_nodes)), 3.0)

    def test_iteration_limit_carries_residual(self, grid_line, K_line):
        u = Field(grid_line, np.ones(grid_line.n_nodes))
        with pytest.raises(IterationLimitError) as info:
            linearized_spectrum(K_line, u, 3.0, tol=1e-15, max_iter=2)
        assert info.value.residual is not None

    def test_refinement_stability(self, K_line, Pmu_line, grid_line):
        from scalarfield.operators import assemble_green
        lam = []
        for K, Pmu in [(K_line, Pmu_line), (None, None)]:
            if K is None:
                g = build_grid(1, 20.0, 20.0, 1, 2000)
                K = assemble_green(g)
                Pmu = poisson_trace(g, {"type": "point_mass", "mass": 1.0})
            u = monotone_iterate(1.0, K, Pmu, 3.0).solution
            lam.append(linearized_spectrum(K, u, 3.0).lambda_)
        assert abs(lam[1] - lam[0]) < 1e-3

    def test_compactness_heuristic(self, K_line, Pmu_line):
        # singular values of h -> G[p u^{p-1} h] decay fast
        u = monotone_iterate(1.0, K_line, Pmu_line, 3.0).solution
        Ta = K_line.entries * (3.0 * u.values ** 2)[None, :]
        s = np.linalg.svd(Ta, compute_uv=False)
        assert s[19] / s[0] < 5e-3
        assert s[39] / s[0] < 1e-3


class TestJacobianAndSingularValues:
    def test_jacobian_structure(self, grid_line, K_line):
        u = Field(grid_line, np.full(grid_line.n_nodes, 0.5))
        J = jacobian(K_line, u, 3.0)
        expected = np.eye(grid_line.n_nodes) - K_line.entries * (3.0 * 0.25)
        np.testing.assert_allclose(J, expected, atol=1e-15)

    def test_negative_part_ignored(self, grid_line, K_line):
        u = Field(grid_line, -np.ones(grid_line.n_nodes))
        np.testing.assert_allclose(jacobian(K_line, u, 3.0),
                                   np.eye(grid_line.n_nodes))

    def test_matches_dense_svd(self):
        rng = np.random.default_rng(23)
        A = rng.normal(size=(60, 60)) + 3.0 * np.eye(60)
        expected = np.linalg.svd(A, compute_uv=False)[-1]
        assert smallest_singular_value(A) == pytest.approx(expected, rel=1e-6)

    def test_singular_matrix_returns_zero(self):
        A = np.ones((5, 5))
        assert smallest_singular_value(A) == 0.0

    def test_square_required(self):
        with pytest.raises(ValueError):
            smallest_singular_value(np.ones((3, 4)))
