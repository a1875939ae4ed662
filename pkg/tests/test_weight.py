import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from fixangle.carleman import (CarlemanWeight, WeightError, eval_weight, geometry_check, h_s_decay, hs_integral,
                               laplace_estimate)


def _sympy_weight(a, lam):
    x1, x2, t = sp.symbols("x1 x2 t", real=True)
    psi = 5 * (a - x2) ** 2 + 5 * x1**2 - (t - x2) ** 2
    phi = sp.exp(lam * psi)
    box = lambda f: sp.diff(f, t, 2) - sp.diff(f, x1, 2) - sp.diff(f, x2, 2)
    return (x1, x2, t), phi, box(phi), box(box(phi))


@pytest.fixture(scope="module")
def oracle():
    wt = CarlemanWeight(a=1.1, lam=0.1)
    (x1, x2, t), phi, box, box2 = _sympy_weight(sp.Rational(11, 10), sp.Rational(1, 10))
    fns = {
        "phi": phi, "box": box, "box2": box2,
        "phi_t": sp.diff(phi, t), "phi_n": sp.diff(phi, x2), "phi_tn": sp.diff(phi, t, x2),
        "box_t": sp.diff(box, t), "box_1": sp.diff(box, x1),
    }
    return wt, {k: sp.lambdify((x1, x2, t), v, "numpy") for k, v in fns.items()}


@given(st.floats(-0.7, 0.7), st.floats(-0.7, 0.7), st.floats(-1.0, 6.5))
def test_closed_form_derivatives_match_sympy(oracle, x1, x2, t):
    wt, f = oracle
    W = eval_weight(wt, np.array([[x1, x2]]), np.array([t]))
    args = (x1, x2, t)
    scale = float(f["phi"](*args))
    pairs = [(W.phi[0], f["phi"]), (W.box_phi[0], f["box"]), (W.box2_phi[0], f["box2"]),
             (W.phi_t[0], f["phi_t"]), (W.grad_phi[0, 1], f["phi_n"]), (W.grad_phi_t[0, 1], f["phi_tn"]),
             (W.box_phi_t[0], f["box_t"]), (W.grad_box_phi[0, 0], f["box_1"])]
    for got, fn in pairs:
        assert got == pytest.approx(float(fn(*args)), rel=1e-10, abs=1e-12 * scale)


@pytest.mark.parametrize("n", [2, 3])
def test_hessian_constants(n):
    wt = CarlemanWeight(n=n)
    ev = np.linalg.eigvalsh(wt.hessian[:n, :n])
    assert sorted(ev) == pytest.approx(sorted([10.0] * (n - 1) + [8.0]))
    assert wt.hessian[n, n] == -2.0


def test_parameter_validation():
    with pytest.raises(WeightError):
        CarlemanWeight(a=1.0)
    with pytest.raises(WeightError):
        CarlemanWeight(lam=0.0)


def test_geometry_threshold():
    ok = geometry_check(6.5, 1.1)
    assert ok.ok and ok.alpha > 0
    assert all(not geometry_check(6.0, a).ok for a in np.linspace(1.0001, 3.0, 200))
    # boundary of (T-1)^2 > 20a + 5
    a_star = ((6.5 - 1) ** 2 - 5) / 20
    assert geometry_check(6.5, a_star - 1e-6).ok and not geometry_check(6.5, a_star + 1e-6).ok


def test_hs_decay_monotone_and_laplace():
    wt = CarlemanWeight()
    d = h_s_decay(wt, [0.5, 1, 2, 4, 8], samples=41, nt=4001)
    assert d.monotone
    rho, xn = 0.0, 0.5
    v = hs_integral(wt, 200.0, np.array([rho]), np.array([xn]), nt=200001)[0]
    # half of the Laplace peak: only t >= x_n... both sides lie in [0, T] here
    assert v == pytest.approx(laplace_estimate(wt, 200.0, rho, xn), rel=0.05)
