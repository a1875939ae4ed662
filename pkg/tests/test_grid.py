import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fixangle.grid import GridError, build_grid, causal_half_width, diff, quad, sphere_samples


def test_defaults_snap_to_lattice():
    g = build_grid()
    assert g.dt == pytest.approx(g.h / 2)
    assert g.times[-1] == g.T
    assert np.all(np.diff(g.times) > 0)
    assert g.L == pytest.approx(causal_half_width(6.5, 0.5))
    assert np.any(g.x == 0.0)
    # characteristic t = x_n lands on time levels
    assert g.steps_per_cell * g.dt == pytest.approx(g.h)


@pytest.mark.parametrize("kw", [dict(n=4), dict(h=0.0), dict(T=1.0), dict(t0=-0.5), dict(dt_factor=0.8),
                                dict(L=1.2), dict(sponge_width=0.0)])
def test_invalid_parameters(kw):
    with pytest.raises(GridError):
        build_grid(**kw)


@given(st.sampled_from([1 / 8, 1 / 16, 1 / 32]), st.floats(0.2, 0.7))
def test_cfl_and_snapping(h, f):
    g = build_grid(h=h, dt_factor=f, L=3.0)
    assert g.dt <= h / math.sqrt(2) + 1e-15
    assert round(h / g.dt) * g.dt == pytest.approx(h)
    assert (g.T - g.t0) / g.dt == pytest.approx(round((g.T - g.t0) / g.dt))


@pytest.mark.parametrize("n", [2, 3])
def test_sphere_rule_measure(n):
    s = sphere_samples(n, 1 / 16)
    area = 2 * math.pi if n == 2 else 4 * math.pi
    assert s.weights.sum() == pytest.approx(area, rel=1e-12)
    assert np.allclose(np.linalg.norm(s.points, axis=1), 1.0)
    # odd moments vanish, second moment = area / n
    assert np.abs(s.points.T @ s.weights).max() < 1e-12
    assert (s.points[:, 0] ** 2) @ s.weights == pytest.approx(area / n, rel=1e-10)


def test_ball_and_gamma_quadrature():
    g = build_grid(h=1 / 32, L=2.0)
    assert quad(1.0, "B", g) == pytest.approx(math.pi, rel=2e-3)
    assert quad(g.coords[0] ** 2, "B", g) == pytest.approx(math.pi / 4, rel=5e-3)
    assert quad(1.0, "Gamma", g) == pytest.approx(math.sqrt(2) * math.pi, rel=2e-3)


def test_q_and_sigma_quadrature():
    g = build_grid(h=1 / 32, L=2.0, T=3.0)
    # |Q| = int_B (T - x_n) dx = T pi
    assert quad(1.0, "Q", g) == pytest.approx(3.0 * math.pi, rel=3e-3)
    # |Sigma| = int_S (T - x_n) dS = 2 pi T
    assert quad(1.0, "Sigma", g) == pytest.approx(2 * math.pi * 3.0, rel=1e-3)
    with pytest.raises(GridError):
        quad(1.0, "nowhere", g)


def test_diff_exact_on_quadratics():
    g = build_grid(h=1 / 16, L=2.0, T=2.0)
    x, y = g.coords
    f = 3 * x**2 - x * y + 2 * y
    assert np.allclose(diff(f, 0, g), 6 * x - y)
    assert np.allclose(diff(f, "x2", g), -x + 2)
    ft = np.broadcast_to(g.times[:, None, None] ** 2, (g.nt,) + g.shape)
    assert np.allclose(diff(ft, "t", g), 2 * g.times[:, None, None])
    with pytest.raises(GridError):
        diff(f, "t", g)
