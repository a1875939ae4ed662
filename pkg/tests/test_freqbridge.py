import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fixangle.freqbridge import (FrequencyError, FrequencyTrace, born_far_field, cosine_taper, directions, far_field,
                                 fourier_integral, time_to_frequency)
from fixangle.grid import build_grid, sphere_samples
from fixangle.potential import make_potential
from fixangle.wavesolver import boundary_trace, solve_scattered

T_REC = np.arange(-2.5, 6.5 + 1e-12, 1 / 64)


def test_gaussian_transform_matches_closed_form():
    k = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
    got = fourier_integral(T_REC, np.exp(-(T_REC - 2) ** 2), k)
    ref = math.sqrt(math.pi) * np.exp(2j * k) * np.exp(-(k**2) / 4)
    assert np.abs(got - ref).max() < 1e-6


def test_zero_trace_and_symmetry():
    assert np.all(fourier_integral(T_REC, np.zeros((len(T_REC), 3)), [1.0, 2.0]) == 0)
    f = np.random.default_rng(0).normal(size=(len(T_REC), 4))
    a = fourier_integral(T_REC, f, [1.5])
    b = fourier_integral(T_REC, f, [-1.5])
    assert np.abs(b - np.conj(a)).max() < 1e-12


def test_nyquist_and_window_errors():
    with pytest.raises(FrequencyError):
        fourier_integral(T_REC, np.zeros(len(T_REC)), [math.pi * 64])
    with pytest.raises(FrequencyError):
        fourier_integral(T_REC, np.zeros(len(T_REC)), [1.0], window="hann")


def test_taper_shape():
    w = cosine_taper(T_REC, 0.1)
    assert w[0] == 1.0 and w[-1] == pytest.approx(0.0, abs=1e-15)
    assert np.all(np.diff(w) <= 1e-15)
    assert np.all(w[T_REC <= 5.6] == 1.0)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_far_field_linear(a, b):
    sph = sphere_samples(2, 1 / 16)
    rng = np.random.default_rng(3)
    u1, d1, u2, d2 = (rng.normal(size=(1, len(sph))) + 1j * rng.normal(size=(1, len(sph))) for _ in range(4))
    th = directions(2, 8)
    f = lambda u, d: far_field(FrequencyTrace(np.array([2.0]), u, d, sph), 2.0, th)
    assert np.allclose(f(a * u1 + b * u2, a * d1 + b * d2), a * f(u1, d1) + b * f(u2, d2), atol=1e-12)


def test_far_field_of_plane_wave_vanishes():
    # an entire solution of Helmholtz carries no outgoing part
    sph = sphere_samples(2, 1 / 32)
    k = 3.0
    d = np.array([0.6, 0.8])
    y = sph.points
    u = np.exp(1j * k * y @ d)[None, :]
    dnu = (1j * k * (y @ d) * u[0])[None, :]
    ff = far_field(FrequencyTrace(np.array([k]), u, dnu, sph), k, directions(2, 12))
    assert np.abs(ff).max() < 1e-10


def test_sampling_threshold():
    sph = sphere_samples(2, 1 / 4)
    z = np.zeros((1, len(sph)), complex)
    with pytest.raises(FrequencyError):
        far_field(FrequencyTrace(np.array([40.0]), z, z, sph), 40.0, directions(2, 4))


@pytest.fixture(scope="module")
def solved():
    g = build_grid(h=1 / 32)
    weak = make_potential([{"center": (0.1, -0.2), "radius": 0.4, "amplitude": 0.05}])
    return g, weak, solve_scattered(weak, g, offsets=())


def test_end_to_end_far_field_and_born(solved):
    g, weak, f = solved
    ks = [4.0, 8.0]
    ft = time_to_frequency(boundary_trace(f), ks)
    th = directions(2, 16)
    for k in ks:
        a, b = far_field(ft, k, th), born_far_field(weak, k, th)
        assert np.abs(a - b).max() / np.abs(b).max() < 0.05


def test_zero_and_equal_potentials_end_to_end(solved):
    g, weak, f = solved
    zero = solve_scattered(make_potential([]), g, offsets=())
    th = directions(2, 16)
    ft0 = time_to_frequency(boundary_trace(zero), [4.0])
    assert np.abs(far_field(ft0, 4.0, th)).max() == 0.0
    again = solve_scattered(weak, g, offsets=())
    d = far_field(time_to_frequency(boundary_trace(f - again), [4.0]), 4.0, th)
    assert np.abs(d).max() == 0.0


def test_negative_k_rejected(solved):
    with pytest.raises(FrequencyError):
        time_to_frequency(boundary_trace(solved[2]), [-1.0])
