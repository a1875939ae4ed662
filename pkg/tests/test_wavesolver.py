import numpy as np
import pytest

from fixangle.grid import build_grid
from fixangle.potential import halfline_integral_grid, make_potential
from fixangle.wavesolver import (SolverError, boundary_trace, calibrate_sponge, characteristic_trace, h1_sigma_norm,
                                 laplacian, mms_order, solve_scattered)

V1 = make_potential([{"center": (0.1, -0.2), "radius": 0.4, "amplitude": 1.0}], label="V1")
ZERO = make_potential([], label="0")


@pytest.fixture(scope="module")
def g16():
    return build_grid(h=1 / 16)


def test_laplacian_exact_on_quadratic():
    g = build_grid(h=1 / 16, L=2.0)
    x, y = g.coords
    lap = laplacian(x**2 + 3 * y**2, g.h)
    assert np.allclose(lap[1:-1, 1:-1], 8.0)


def test_zero_potential_gives_zero_field(g16):
    f = solve_scattered(ZERO, g16)
    assert np.abs(f.sigma_u).max() == 0.0 and np.abs(f.u_T).max() == 0.0


def test_field_is_linear_in_source(g16):
    a = solve_scattered(V1, g16, source_scale=1.0, offsets=())
    b = solve_scattered(V1, g16, source_scale=-2.5, offsets=())
    assert np.allclose(b.sigma_u, -2.5 * a.sigma_u, atol=1e-15)


def test_deterministic(g16):
    a = solve_scattered(V1, g16, offsets=())
    b = solve_scattered(V1, g16, offsets=())
    assert np.array_equal(a.sigma_u, b.sigma_u)


def test_precondition_errors():
    g = build_grid(h=1 / 16, t0=-1.5)
    with pytest.raises(SolverError):
        solve_scattered(V1, g)  # t0 too late for eps = 4h
    with pytest.raises(SolverError):
        solve_scattered(V1, build_grid(h=1 / 16), eps=1 / 64)  # under-resolved pulse


def test_mms_second_order():
    errs, orders = mms_order([1 / 16, 1 / 32, 1 / 64])
    assert all(o >= 1.8 for o in orders), orders
    assert errs[-1] < errs[0]


def test_mms_order_3d():
    _, orders = mms_order([1 / 8, 1 / 16], n=3)
    assert orders[0] >= 1.8


def test_causal_box_is_reflection_free(g16):
    assert calibrate_sponge(V1, g16, T_cal=3.0, threshold=None) < 1e-10


def test_thin_box_fails_calibration():
    g = build_grid(h=1 / 16, L=1.6, T=3.0)
    with pytest.raises(SolverError):
        calibrate_sponge(V1, g, threshold=0.05)


def test_characteristic_trace_matches_halfline_datum():
    g = build_grid(h=1 / 32)
    f = solve_scattered(V1, g, offsets=(8.0,))
    tr = characteristic_trace(f, 8.0)
    datum = -0.5 * halfline_integral_grid(V1, g)
    sel = g.inside_ball & tr.valid & (np.abs(datum) > 0.1 * np.abs(datum).max())
    assert np.max(np.abs(tr.w - datum)[sel] / np.abs(datum[sel])) < 0.05


def test_unrecorded_offset_raises(g16):
    f = solve_scattered(V1, g16, offsets=(4.0,))
    with pytest.raises(SolverError):
        characteristic_trace(f, 8.0)


def test_difference_field_and_h1_norm(g16):
    a = solve_scattered(V1, g16)
    w = a - a
    assert h1_sigma_norm(boundary_trace(w), g16) == 0.0
    assert h1_sigma_norm(boundary_trace(a), g16) > 0
