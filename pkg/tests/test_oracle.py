import numpy as np
import pytest

from approximal import frames, oracle, proxcalc
from approximal.errors import FrameTooLarge
from approximal.proxcalc import L1


class _Zero:
    name = "zero"

    def value(self, z):
        return 0.0

    def subgradient(self, z):
        return np.zeros_like(z)

    def __call__(self, v, s):
        return v


class _Box:
    """Indicator of [-1, 1]^k; the prox is clipping."""

    name = "box"

    def value(self, z):
        return 0.0 if np.all(np.abs(z) <= 1 + 1e-12) else np.inf

    def subgradient(self, z):
        return np.where(z > 1, 1.0, np.where(z < -1, -1.0, 0.0))

    def __call__(self, v, s):
        return np.clip(v, -1.0, 1.0)


@pytest.fixture(scope="module")
def grid():
    return oracle.oracle_phi_grid(frames.demo_frame(), L1)


def test_zero_function_returns_x():
    x = np.array([0.3, -2.0, 5.0])
    u = oracle.oracle_prox(np.eye(3), _Zero(), x)
    np.testing.assert_allclose(u, x, atol=1e-12)


def test_identity_l1_is_soft_threshold():
    u, info = oracle.oracle_prox(np.eye(2), L1, np.array([2.0, -0.5]), return_info=True)
    np.testing.assert_allclose(u, [1.0, 0.0], atol=1e-5)
    assert info.gap <= 1e-6 and not info.budget_exceeded


def test_identity_box_is_clipping():
    x = np.array([2.5, -0.2, -4.0, 0.9])
    u = oracle.oracle_prox(np.eye(4), _Box(), x)
    np.testing.assert_allclose(u, np.clip(x, -1, 1), atol=1e-5)


def test_oracle_prox_rejects_small_budget():
    with pytest.raises(ValueError):
        oracle.oracle_prox(np.eye(2), L1, np.zeros(2), budget=10)


def test_grid_shape_and_origin(grid):
    assert grid.shape == (441, 4)
    origin = grid[(grid[:, 0] == 0) & (grid[:, 1] == 0)]
    np.testing.assert_array_equal(origin, [[0.0, 0.0, 0.0, 0.0]])


def test_grid_phi_below_f(grid):
    assert np.max(grid[:, 3] - grid[:, 2]) <= 1e-8


def test_grid_f_at_one_one(grid):
    row = grid[(grid[:, 0] == 1.0) & (grid[:, 1] == 1.0)]
    assert row[0, 2] == pytest.approx(3.5017, abs=1e-3)


def test_grid_symmetry(grid):
    # the grid is listed in row-major order, so x -> -x reverses the rows
    flipped = grid[::-1]
    np.testing.assert_array_equal(grid[:, :2], -flipped[:, :2])
    np.testing.assert_array_equal(grid[:, 2:], flipped[:, 2:])


def test_grid_csv(tmp_path, grid):
    path = tmp_path / "grid.csv"
    oracle.write_grid_csv(grid, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,f,phi"
    assert len(lines) == 442
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(back, grid)


def test_phi_rejects_large_frame():
    with pytest.raises(FrameTooLarge):
        oracle.oracle_phi_grid(frames.make_dct_frame(64), L1)
    with pytest.raises(FrameTooLarge):
        oracle.oracle_phi_grid(frames.make_gabor_frame(16, 4, 32, 64), L1)


def _sampler(n, scale=3.0):
    return lambda rng: scale * rng.standard_normal(n)


def test_criteria_soft_threshold():
    rep = oracle.check_prox_criteria(lambda v: proxcalc.soft_threshold(v, 0.7), _sampler(5))
    assert rep.passed and rep.trials == 1000


def test_criteria_approximal_demo():
    f = frames.demo_frame()
    rep = oracle.check_prox_criteria(lambda v: proxcalc.approximal(L1, f, v), _sampler(2))
    assert rep.passed


def test_criteria_negative_control():
    rep = oracle.check_prox_criteria(lambda v: 2.0 * v, _sampler(3), trials=100)
    assert not rep.passed
    assert rep.nonexpansive_violations == 100
    assert rep.nonexpansive == pytest.approx(1.0)


def test_criteria_needs_100_trials():
    with pytest.raises(ValueError):
        oracle.check_prox_criteria(lambda v: v, _sampler(2), trials=99)
