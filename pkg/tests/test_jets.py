import numpy as np
from hypothesis import given, strategies as st

from fixangle.jets import Jet, coordinates


def _fd_check(build, pts, e=1e-5):
    j = build(coordinates(pts))
    d = pts.shape[-1]
    for k in range(d):
        dp, dm = pts.copy(), pts.copy()
        dp[:, k] += e
        dm[:, k] -= e
        jp, jm = build(coordinates(dp)), build(coordinates(dm))
        assert np.allclose((jp.v - jm.v) / (2 * e), j.g[:, k], atol=1e-6)
        assert np.allclose((jp.g - jm.g) / (2 * e), j.H[:, k, :], atol=1e-5)


@given(st.integers(0, 2**32 - 1))
def test_products_and_elementary_functions(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (6, 3))

    def build(c):
        x, y, t = c
        return (x * y + 2.0).exp() * (t * 0.7).sin() - (x * t).cos() * y + (x * x + 1.5).reciprocal()

    _fd_check(build, pts)


def test_hessian_symmetric():
    pts = np.random.default_rng(1).uniform(-1, 1, (5, 3))
    x, y, t = coordinates(pts)
    j = (x * y * t).exp() * (y - t)
    assert np.allclose(j.H, np.swapaxes(j.H, -1, -2))


def test_constant_has_no_derivatives():
    c = Jet.constant(3.0, (4,), 3)
    assert np.all(c.g == 0) and np.all(c.H == 0) and np.all(c.v == 3.0)
