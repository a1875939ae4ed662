import numpy as np
import pytest
from hypothesis import given, strategies as st

from fixangle.carleman import (CarlemanWeight, ConjugationOverflow, LogField, conjugate, conjugation_residual,
                               deconjugate, random_points_Q, random_suite)


def test_conjugation_identity_exact():
    suite = random_suite(5, 3)
    pts = random_points_Q(np.random.default_rng(0), 500, 2, 6.5)
    for s in (0.5, 2.0):
        wt = CarlemanWeight(s=s)
        assert max(conjugation_residual(tf, wt, pts) for tf in suite) < 1e-9


def test_points_lie_in_Q():
    p = random_points_Q(np.random.default_rng(1), 1000, 2, 6.5)
    assert np.all(np.linalg.norm(p[:, :2], axis=1) < 1)
    assert np.all(p[:, 2] >= p[:, 1]) and np.all(p[:, 2] <= 6.5)


@given(st.floats(0.1, 50.0), st.integers(0, 1000))
def test_conjugate_roundtrip(s, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=20)
    phi = rng.uniform(1, 5, 20)
    assert np.allclose(deconjugate(conjugate(v, phi, s), phi, s), v, rtol=1e-12)


def test_overflow_reported_with_exponent():
    z = LogField(np.array([800.0, 1.0]), np.array([1.0, -1.0]))
    with pytest.raises(ConjugationOverflow) as e:
        z.value()
    assert e.value.exponent == pytest.approx(800.0)
    assert np.allclose(z.value(offset=800.0), [1.0, -np.exp(-799.0)])
