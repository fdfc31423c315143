import numpy as np
import pytest

from phonrec import make_grid, paper_grid
from phonrec.errors import ConfigError, ShapeError

from reference import brute_bracket


def test_paper_grid_dimensions():
    grid = paper_grid()
    assert grid.n_x == 25
    assert grid.n_mu == 200
    assert grid.n_omega == 40
    assert grid.n_steps == 500
    assert grid.dx == pytest.approx(0.02)
    assert grid.domega == pytest.approx(0.05)
    assert grid.omega[0] == pytest.approx(0.05)
    assert grid.omega[-1] == pytest.approx(2.0)
    assert grid.cfl == pytest.approx(1.0)


def test_courant_number_rejection():
    with pytest.raises(ConfigError, match="unstable"):
        make_grid(x_max=0.5, dx=0.02, t_max=5.0, dt=0.02, dmu=0.01, domega=0.05)


def test_spacing_based_coarse_grid_accepted():
    grid = make_grid(x_max=0.5, dx=0.05, t_max=5.0, dt=0.02, dmu=0.1, domega=0.1)
    assert grid.cfl == pytest.approx(0.8)
    # 0.1 does not tile [0.05, 2]; nodes stop at the last one inside
    assert grid.omega[-1] == pytest.approx(1.95)
    assert grid.n_omega == 20


def test_structural_rejections():
    with pytest.raises(ConfigError):
        make_grid(x_max=0.5, dx=0.02, t_max=5.0, dt=0.01, n_mu=7, domega=0.05)
    with pytest.raises(ConfigError):
        make_grid(x_max=0.5, dx=-0.02, t_max=5.0, dt=0.01, dmu=0.01, domega=0.05)
    with pytest.raises(ConfigError):
        make_grid(x_max=0.5, dx=0.02, t_max=5.0, dt=0.01, dmu=0.01, domega=0.05,
                  omega_min=0.0)
    with pytest.raises(ConfigError):
        make_grid(x_max=0.5, dx=0.02, n_x=25, t_max=5.0, dt=0.01, dmu=0.01,
                  domega=0.05)


def test_mu_grid_symmetric_and_never_zero():
    grid = paper_grid()
    assert np.all(grid.mu != 0.0)
    np.testing.assert_array_equal(grid.mu, -grid.mu[::-1])
    for k in range(grid.n_mu):
        m = grid.mirror_mu(k)
        assert grid.mu[m] == -grid.mu[k]
        assert grid.mirror_mu(m) == k


def test_bracket_constant_field():
    grid = paper_grid()
    ones = np.ones((grid.n_mu, grid.n_omega))
    # 2 (mu range) times 2.0 (omega range 0.05..2.0 with weight 0.05 each)
    assert grid.bracket(ones) == pytest.approx(4.0, abs=1e-12)
    assert grid.bracket_pos(ones) == pytest.approx(2.0, abs=1e-12)


def test_bracket_matches_brute_force(tiny_grid, rng):
    values = rng.standard_normal((tiny_grid.n_mu, tiny_grid.n_omega))
    assert tiny_grid.bracket(values) == pytest.approx(
        brute_bracket(tiny_grid, values), rel=1e-14
    )


def test_bracket_linearity(tiny_grid, rng):
    f = rng.standard_normal((tiny_grid.n_mu, tiny_grid.n_omega))
    g = rng.standard_normal((tiny_grid.n_mu, tiny_grid.n_omega))
    lhs = tiny_grid.bracket(2.5 * f - 0.75 * g)
    rhs = 2.5 * tiny_grid.bracket(f) - 0.75 * tiny_grid.bracket(g)
    assert lhs == pytest.approx(rhs, abs=1e-13 * max(1.0, abs(rhs)))


def test_bracket_splits_exactly(tiny_grid, rng):
    for _ in range(20):
        values = rng.standard_normal((tiny_grid.n_mu, tiny_grid.n_omega))
        full = tiny_grid.bracket(values)
        assert tiny_grid.bracket_pos(values) + tiny_grid.bracket_neg(values) == full


def test_half_brackets_symmetry(tiny_grid):
    even = np.ones((tiny_grid.n_mu, tiny_grid.n_omega))
    assert tiny_grid.bracket_pos(even) == pytest.approx(tiny_grid.bracket_neg(even))
    odd = np.broadcast_to(tiny_grid.mu[:, None], even.shape)
    assert tiny_grid.bracket_pos(odd) == pytest.approx(-tiny_grid.bracket_neg(odd))


def test_bracket_shape_validation(tiny_grid):
    with pytest.raises(ShapeError):
        tiny_grid.bracket(np.ones((tiny_grid.n_mu + 1, tiny_grid.n_omega)))
    with pytest.raises(ShapeError):
        tiny_grid.bracket(np.ones(tiny_grid.n_omega))


def test_bracket_broadcasts_over_cells(tiny_grid, rng):
    field = rng.standard_normal((tiny_grid.n_x, tiny_grid.n_mu, tiny_grid.n_omega))
    per_cell = tiny_grid.bracket(field)
    assert per_cell.shape == (tiny_grid.n_x,)
    for j in range(tiny_grid.n_x):
        assert per_cell[j] == pytest.approx(tiny_grid.bracket(field[j]))


def test_grid_arrays_immutable():
    grid = paper_grid()
    with pytest.raises(ValueError):
        grid.mu[0] = 0.5
    with pytest.raises(ValueError):
        grid.w_omega[0] = 1.0
