import numpy as np
import pytest

from phonrec import (
    collide,
    delta_temperature,
    equilibrium_kernel,
    make_table,
    maxwellian_comparison,
    paper_grid,
)


class TestEquilibriumKernel:
    def test_frozen_values(self):
        # high-precision evaluations of w^2 e^w / (e^w - 1)^2
        assert equilibrium_kernel(1.0) == pytest.approx(0.92067359420779232, rel=1e-14)
        assert equilibrium_kernel(2.0) == pytest.approx(0.72406166096631047, rel=1e-14)

    def test_small_argument_limit(self):
        assert equilibrium_kernel(1e-4) == pytest.approx(0.99999999916666667, rel=1e-13)
        assert equilibrium_kernel(1e-8) == pytest.approx(1.0, rel=1e-12)

    def test_large_argument_no_overflow(self):
        assert equilibrium_kernel(800.0) == pytest.approx(0.0, abs=1e-300)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            equilibrium_kernel(0.0)
        with pytest.raises(ValueError):
            equilibrium_kernel(np.array([0.5, -1.0]))

    def test_vectorized_matches_scalar(self, tiny_grid):
        values = equilibrium_kernel(tiny_grid.omega)
        for l, w in enumerate(tiny_grid.omega):
            assert values[l] == equilibrium_kernel(float(w))
        assert np.all(values > 0)


class TestMaxwellianTable:
    def test_discrete_normalization(self, tiny_grid, tiny_table):
        m = np.broadcast_to(tiny_table.maxwellian, (tiny_grid.n_mu, tiny_grid.n_omega))
        assert tiny_grid.bracket(m) == pytest.approx(1.0, abs=1e-14)

    def test_normalization_on_paper_grid(self):
        grid = paper_grid()
        table = make_table(grid)
        m = np.broadcast_to(table.maxwellian, (grid.n_mu, grid.n_omega))
        assert grid.bracket(m) == pytest.approx(1.0, abs=1e-14)

    def test_flux_norm_is_kernel_moment(self, tiny_grid, tiny_table):
        flux = tiny_grid.omega * tiny_table.kernel
        broadcast = np.broadcast_to(flux, (tiny_grid.n_mu, tiny_grid.n_omega))
        assert tiny_table.flux_norm == pytest.approx(tiny_grid.bracket(broadcast))


class TestDeltaTemperature:
    def test_zero_field(self, tiny_grid, tiny_table):
        zero = np.zeros((tiny_grid.n_mu, tiny_grid.n_omega))
        assert delta_temperature(zero, tiny_table) == 0.0

    def test_equilibrium_normalized_to_one(self, tiny_grid, tiny_table):
        g = np.broadcast_to(tiny_table.kernel, (tiny_grid.n_mu, tiny_grid.n_omega))
        assert delta_temperature(g, tiny_table) == pytest.approx(1.0, abs=1e-14)

    def test_linearity(self, tiny_grid, tiny_table, rng):
        f = rng.standard_normal((tiny_grid.n_mu, tiny_grid.n_omega))
        g = rng.standard_normal((tiny_grid.n_mu, tiny_grid.n_omega))
        lhs = delta_temperature(1.7 * f - 0.3 * g, tiny_table)
        rhs = 1.7 * delta_temperature(f, tiny_table) - 0.3 * delta_temperature(g, tiny_table)
        assert lhs == pytest.approx(rhs, abs=1e-13)

    def test_scaling_of_equilibrium(self, tiny_grid, tiny_table):
        g = np.broadcast_to(tiny_table.kernel, (tiny_grid.n_mu, tiny_grid.n_omega))
        for c in (-3.0, 0.25, 42.0):
            assert delta_temperature(c * g, tiny_table) == pytest.approx(c, rel=1e-13)


class TestCollide:
    def test_zero_field(self, tiny_grid, tiny_table):
        zero = np.zeros((tiny_grid.n_mu, tiny_grid.n_omega))
        assert np.all(collide(zero, tiny_table) == 0.0)

    def test_equilibrium_annihilated(self, tiny_grid, tiny_table):
        g = np.broadcast_to(tiny_table.kernel, (tiny_grid.n_mu, tiny_grid.n_omega))
        assert np.abs(collide(g, tiny_table)).max() <= 1e-12

    def test_conservation_random_fields(self, coarse, rng):
        grid, table = coarse
        for _ in range(100):
            g = rng.standard_normal((grid.n_mu, grid.n_omega))
            moment = grid.bracket(collide(g, table))
            assert abs(moment) <= 1e-12 * np.abs(g).max()

    def test_self_adjoint_with_kernel_weight(self, coarse, rng):
        grid, table = coarse
        for _ in range(50):
            g = rng.standard_normal((grid.n_mu, grid.n_omega))
            h = rng.standard_normal((grid.n_mu, grid.n_omega))
            lhs = grid.bracket(collide(g, table) * h / table.kernel)
            rhs = grid.bracket(collide(h, table) * g / table.kernel)
            assert abs(lhs - rhs) <= 1e-12 * np.abs(g).max() * np.abs(h).max()

    def test_per_cell_application(self, tiny_grid, tiny_table, rng):
        field = rng.standard_normal((tiny_grid.n_x, tiny_grid.n_mu, tiny_grid.n_omega))
        full = collide(field, tiny_table)
        for j in range(tiny_grid.n_x):
            np.testing.assert_allclose(full[j], collide(field[j], tiny_table), rtol=1e-14)


def test_maxwellian_comparison_curves(tiny_grid):
    curves = maxwellian_comparison(tiny_grid)
    assert set(curves) == {"maxwellian", "bose_einstein", "exponential"}
    shape = (tiny_grid.n_mu, tiny_grid.n_omega)
    for values in curves.values():
        assert tiny_grid.bracket(np.broadcast_to(values, shape)) == pytest.approx(1.0)
