"""Time-domain Sigma data to frequency-domain scattered fields and far fields.

Convention: u_hat(x, k) = int u(x, t) e^{ikt} dt, so the incident delta wave
becomes e^{ik x.d} and the scattered part solves Lap u + k^2 u = V u with the
outgoing condition.  The solver field is smeared by a unit Gaussian of width
eps in t, which multiplies the transform by exp(-(k eps)^2 / 2); that factor
is divided out.

Far field (Kirchhoff representation on the unit sphere):

    u_inf(theta) = g_n int_{dB} [u d_nu e^{-ik theta.y} - d_nu u e^{-ik theta.y}] ds,
    g_2 = e^{i pi/4} / sqrt(8 pi k),   g_3 = 1 / (4 pi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .grid import SphereSamples
from .potential import Potential
from .wavesolver import BoundaryTrace

Array = NDArray[np.float64]


class FrequencyError(ValueError):
    pass


@dataclass
class FrequencyTrace:
    k: Array
    u: NDArray[np.complex128]  # (K, M)
    dnu: NDArray[np.complex128]  # (K, M)
    sphere: SphereSamples

    def at(self, k: float) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        i = int(np.argmin(np.abs(self.k - k)))
        if abs(self.k[i] - k) > 1e-12 * max(1.0, abs(k)):
            raise FrequencyError(f"k={k} not in the transformed set")
        return self.u[i], self.dnu[i]


def cosine_taper(times: Array, fraction: float = 0.1) -> Array:
    """1 on the first (1 - fraction) of the record, half-cosine down to 0 at the end."""
    t0, t1 = float(times[0]), float(times[-1])
    ta = t1 - fraction * (t1 - t0)
    w = np.ones_like(times)
    tail = times > ta
    if fraction > 0:
        w[tail] = 0.5 * (1 + np.cos(math.pi * (times[tail] - ta) / (t1 - ta)))
    return w


def fourier_integral(times: Array, series: Array, k_list: Sequence[float], window: str = "cosine",
                     taper: float = 0.1) -> NDArray[np.complex128]:
    """Trapezoid Fourier integral int f(t) w(t) e^{ikt} dt along axis 0 of series."""
    times = np.asarray(times, float)
    k = np.asarray(k_list, float)
    if np.any(np.diff(times) <= 0):
        raise FrequencyError("times must be strictly increasing")
    dt = float(np.max(np.diff(times)))
    if np.any(np.abs(k) >= math.pi / dt):
        raise FrequencyError(f"k beyond Nyquist pi/dt = {math.pi / dt:.4g}")
    if window == "cosine":
        w = cosine_taper(times, taper)
    elif window == "none":
        w = np.ones_like(times)
    else:
        raise FrequencyError(f"unknown window {window!r}")
    series = np.asarray(series)
    tw = np.empty_like(times)  # trapezoid weights
    tw[0] = 0.5 * (times[1] - times[0])
    tw[-1] = 0.5 * (times[-1] - times[-2])
    tw[1:-1] = 0.5 * (times[2:] - times[:-2])
    E = np.exp(1j * np.outer(k, times)) * (w * tw)[None, :]
    return np.tensordot(E, series, axes=(1, 0))


def time_to_frequency(trace: BoundaryTrace, k_list: Sequence[float], window: str = "cosine",
                      taper: float = 0.1, deconvolve: bool = True) -> FrequencyTrace:
    """Scattered field and normal derivative at the sphere samples for each k."""
    k = np.asarray(k_list, float)
    if np.any(k <= 0):
        raise FrequencyError("only k > 0 is stored (negative k follow by conjugate symmetry)")
    u = fourier_integral(trace.times, trace.sigma_w, k, window, taper)
    d = fourier_integral(trace.times, trace.sigma_dnu, k, window, taper)
    if deconvolve and trace.eps > 0:
        f = np.exp(0.5 * (k * trace.eps) ** 2)[:, None]
        u, d = u * f, d * f
    return FrequencyTrace(k, u, d, trace.sphere)


def _gamma_n(n: int, k: float) -> complex:
    if n == 2:
        return np.exp(1j * math.pi / 4) / math.sqrt(8 * math.pi * k)
    return 1.0 / (4 * math.pi)


def directions(n: int, count: int) -> Array:
    """Observation directions: equispaced angles (n=2) or a Fibonacci sphere (n=3)."""
    if n == 2:
        th = 2 * math.pi * np.arange(count) / count
        return np.stack([np.cos(th), np.sin(th)], -1)
    i = np.arange(count) + 0.5
    z = 1 - 2 * i / count
    r = np.sqrt(1 - z**2)
    ph = math.pi * (1 + 5**0.5) * i
    return np.stack([r * np.cos(ph), r * np.sin(ph), z], -1)


def points_per_wavelength(sphere: SphereSamples, k: float) -> float:
    n = sphere.points.shape[1]
    area = float(np.sum(sphere.weights))
    spacing = (area / len(sphere)) ** (1.0 / (n - 1))
    return (2 * math.pi / k) / spacing


def far_field(ft: FrequencyTrace, k: float, theta: Array, min_ppw: float = 6.0) -> NDArray[np.complex128]:
    """u_inf(theta, k) for unit directions theta (m, n)."""
    sph = ft.sphere
    ppw = points_per_wavelength(sph, k)
    if ppw < min_ppw:
        raise FrequencyError(f"sphere sampling gives {ppw:.2f} points per wavelength at k={k} (< {min_ppw})")
    u, dnu = ft.at(k)
    y, nu, w = sph.points, sph.normals, sph.weights
    theta = np.atleast_2d(theta)
    E = np.exp(-1j * k * theta @ y.T)  # (m, M)
    dE = -1j * k * (theta @ nu.T) * E
    return _gamma_n(y.shape[1], k) * ((dE * u[None, :] - E * dnu[None, :]) @ w)


def born_far_field(V: Potential, k: float, theta: Array, h: float = 1 / 128) -> NDArray[np.complex128]:
    """First Born approximation -g_n int V(y) e^{ik(y_n - theta.y)} dy (small V)."""
    n = V.n
    x = np.arange(-1 + h / 2, 1, h)
    Y = np.stack(np.meshgrid(*([x] * n), indexing="ij"), -1).reshape(-1, n)
    vals = V(*[Y[:, i] for i in range(n)]) * h**n
    keep = vals != 0
    Y, vals = Y[keep], vals[keep]
    theta = np.atleast_2d(theta)
    phase = np.exp(1j * k * (Y[:, -1][None, :] - theta @ Y.T))
    return -_gamma_n(n, k) * (phase @ vals)
