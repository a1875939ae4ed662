import math

import numpy as np
import pytest

from fixangle.carleman import AnalyticRules
from fixangle.carleman.quadrature import composite_gl


def test_composite_gl_polynomial_exactness():
    x, w = composite_gl(-1.0, 2.0, 3, 2)
    assert w @ x**3 == pytest.approx((16 - 1) / 4, rel=1e-13)


@pytest.mark.parametrize("n,p", [(2, 1), (2, 2), (3, 2)])
def test_region_measures(n, p):
    R = AnalyticRules(n=n, h=1 / 8, p=p, T=3.0)
    vol_ball = math.pi if n == 2 else 4 * math.pi / 3
    area = 2 * math.pi if n == 2 else 4 * math.pi
    tol = 2e-2 if p == 1 else 1e-3
    assert R.ball[1].sum() == pytest.approx(vol_ball, rel=tol)
    assert sum(w.sum() for _, w in R.q_chunks()) == pytest.approx(3.0 * vol_ball, rel=tol)
    assert sum(w.sum() for _, w, _ in R.sigma_chunks()) == pytest.approx(3.0 * area, rel=tol)
    assert R.gamma[1].sum() == pytest.approx(math.sqrt(2) * vol_ball, rel=tol)
    assert R.top[1].sum() == pytest.approx(vol_ball, rel=tol)


def test_q_points_inside_region():
    R = AnalyticRules(h=1 / 8, p=2, T=3.0)
    for pts, _ in R.q_chunks():
        assert np.all(np.linalg.norm(pts[:, :2], axis=1) <= 1)
        assert np.all(pts[:, 2] >= pts[:, 1] - 1e-12) and np.all(pts[:, 2] <= 3.0 + 1e-12)


def test_t_moment_over_Q():
    # int_Q t = int_B (T^2 - x_n^2)/2 = (T^2 pi - pi/4)/2
    R = AnalyticRules(h=1 / 8, p=2, T=3.0)
    got = sum(w @ pts[:, 2] for pts, w in R.q_chunks())
    assert got == pytest.approx((9 * math.pi - math.pi / 4) / 2, rel=1e-3)
