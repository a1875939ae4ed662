import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad as squad

from fixangle.grid import build_grid
from fixangle.potential import (Bump, PotentialError, halfline_integral, l2_norm_B, make_potential,
                                random_ensemble)


def test_bump_support_and_peak():
    b = Bump((0.1, -0.2), 0.3, 2.0)
    assert b(np.array(0.1), np.array(-0.2)) == pytest.approx(2.0 / math.e)
    assert b(np.array(0.45), np.array(-0.2)) == 0.0


def test_dimension_mismatch():
    with pytest.raises(PotentialError):
        make_potential([{"center": (0.0, 0.0, 0.0), "radius": 0.2}], n=2)


@given(st.floats(-0.5, 0.5), st.floats(-0.9, 0.9))
def test_halfline_integral_matches_adaptive_quadrature(x1, xn):
    V = make_potential([{"center": (0.05, 0.1), "radius": 0.45, "amplitude": 1.3},
                        {"center": (-0.2, -0.3), "radius": 0.3, "amplitude": -0.7}])
    got = halfline_integral(V, np.array([[x1, xn]]))[0]
    ref = squad(lambda s: float(V(np.array(x1), np.array(s))), -1.0, xn, limit=200, epsabs=1e-13)[0]
    assert got == pytest.approx(ref, abs=1e-9)


def test_linearity_helpers():
    g = build_grid(h=1 / 32, L=2.0)
    V = make_potential([{"center": (0.0, 0.0), "radius": 0.5}], label="V")
    assert l2_norm_B(V.minus(V), g) == 0.0
    assert l2_norm_B(V.scaled(-3.0), g) == pytest.approx(3 * l2_norm_B(V, g))


def test_random_ensemble_is_seeded():
    a = random_ensemble(4, 11)
    b = random_ensemble(4, 11)
    assert [p.descriptor() for p in a] == [p.descriptor() for p in b]
    for p in a:
        for bump in p.bumps:
            assert math.hypot(*bump.center) + bump.radius <= 1.0
