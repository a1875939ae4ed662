"""Carleman weight psi, phi = exp(lambda psi), and its closed-form derivatives.

Coordinates are y = (x_1, ..., x_n, t).  With p = grad_y psi and the constant
Hessian H of psi, every derivative of phi needed by the estimates reduces to
polynomials in p times phi.  The d'Alembertian uses the metric
eta = diag(-1, ..., -1, +1), so box = d_t^2 - Lap = sum_k eta_k d_k^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

Array = NDArray[np.float64]


class WeightError(ValueError):
    pass


@dataclass(frozen=True)
class CarlemanWeight:
    a: float = 1.1
    lam: float = 0.1
    s: float = 1.0
    T: float = 6.5
    n: int = 2

    def __post_init__(self):
        if not self.a > 1:
            raise WeightError(f"a must exceed 1, got {self.a}")
        if not self.lam > 0:
            raise WeightError(f"lambda must be positive, got {self.lam}")
        if not self.s > 0:
            raise WeightError(f"s must be positive, got {self.s}")
        if self.n not in (2, 3):
            raise WeightError("n must be 2 or 3")

    def with_s(self, s: float) -> "CarlemanWeight":
        return replace(self, s=s)

    @property
    def psi_max(self) -> float:
        """max of psi over the closure of Q, attained at x = -e_n, t = -1."""
        return 5.0 * (self.a + 1.0) ** 2

    @property
    def exponent_offset(self) -> float:
        """Shared offset: max of 2 s phi over the closure of Q."""
        return 2.0 * self.s * math.exp(self.lam * self.psi_max)

    def aliases(self, phi: Array | float = 1.0) -> dict:
        """Symbols used without definition in the appendix, read as
        varrho = 1, gamma = lambda, sigma = s lambda phi."""
        return {"varrho": 1.0, "gamma": self.lam, "sigma": self.s * self.lam * np.asarray(phi)}

    @property
    def hessian(self) -> Array:
        """Constant Hessian of psi in (x_1..x_n, t)."""
        d = self.n + 1
        H = np.zeros((d, d))
        for i in range(self.n - 1):
            H[i, i] = 10.0
        H[self.n - 1, self.n - 1] = 8.0
        H[self.n, self.n] = -2.0
        H[self.n - 1, self.n] = H[self.n, self.n - 1] = 2.0
        return H

    @property
    def eta(self) -> Array:
        return np.array([-1.0] * self.n + [1.0])


def psi(wt: CarlemanWeight, x: Array, t: Array) -> Array:
    """psi at points x (..., n) and times t (...)."""
    x = np.asarray(x, float)
    xn = x[..., -1]
    return 5 * (wt.a - xn) ** 2 + 5 * np.sum(x[..., :-1] ** 2, axis=-1) - (np.asarray(t) - xn) ** 2


def psi_gradient(wt: CarlemanWeight, x: Array, t: Array) -> Array:
    """grad_y psi, shape (..., n+1)."""
    x = np.asarray(x, float)
    t = np.asarray(t, float)
    xn = x[..., -1]
    p = np.empty(np.broadcast_shapes(x.shape[:-1], t.shape) + (wt.n + 1,))
    p[..., : wt.n - 1] = 10 * x[..., :-1]
    p[..., wt.n - 1] = -10 * (wt.a - xn) + 2 * (t - xn)
    p[..., wt.n] = -2 * (t - xn)
    return p


@dataclass
class WeightEval:
    """psi- and phi-level derivatives at a set of points (leading shape S)."""

    psi: Array
    p: Array  # grad_y psi (S, n+1); p[..., -1] = psi_t
    H: Array  # constant Hessian of psi (n+1, n+1)
    phi: Array
    dphi: Array  # grad_y phi (S, n+1)
    d2phi: Array  # Hessian of phi (S, n+1, n+1)
    box_phi: Array  # (d_t^2 - Lap) phi
    dbox_phi: Array  # grad_y of box phi (S, n+1)
    box2_phi: Array  # (d_t^2 - Lap)^2 phi
    b: Array  # psi_t^2 - |grad_x psi|^2

    @property
    def psi_t(self) -> Array:
        return self.p[..., -1]

    @property
    def grad_psi(self) -> Array:
        return self.p[..., :-1]

    @property
    def psi_tt(self) -> float:
        return float(self.H[-1, -1])

    @property
    def psi_tn(self) -> float:
        return float(self.H[-2, -1])

    @property
    def hess_psi_x(self) -> Array:
        return self.H[:-1, :-1]

    @property
    def phi_t(self) -> Array:
        return self.dphi[..., -1]

    @property
    def grad_phi(self) -> Array:
        return self.dphi[..., :-1]

    @property
    def phi_tt(self) -> Array:
        return self.d2phi[..., -1, -1]

    @property
    def lap_phi(self) -> Array:
        return np.trace(self.d2phi[..., :-1, :-1], axis1=-2, axis2=-1)

    @property
    def grad_phi_t(self) -> Array:
        return self.d2phi[..., :-1, -1]

    @property
    def hess_phi_x(self) -> Array:
        return self.d2phi[..., :-1, :-1]

    @property
    def box_phi_t(self) -> Array:
        return self.dbox_phi[..., -1]

    @property
    def grad_box_phi(self) -> Array:
        return self.dbox_phi[..., :-1]


def eval_weight(wt: CarlemanWeight, x: Array, t: Array) -> WeightEval:
    """Closed-form weight derivatives at points x (..., n), times t (...)."""
    lam = wt.lam
    H = wt.hessian
    eta = wt.eta
    ps = psi(wt, x, t)
    p = psi_gradient(wt, x, t)
    phi = np.exp(lam * ps)
    dphi = lam * phi[..., None] * p
    d2phi = phi[..., None, None] * (lam * H + lam**2 * p[..., :, None] * p[..., None, :])
    trH = float(np.sum(eta * np.diag(H)))  # = -10 n
    b = np.einsum("...k,k,...k->...", p, eta, p)
    Hep = np.einsum("kj,j,...j->...k", H, eta, p)
    box_phi = phi * (lam * trH + lam**2 * b)
    dbox_phi = phi[..., None] * (lam**2 * (trH * p + 2 * Hep) + lam**3 * b[..., None] * p)
    tr_eHeH = float(np.trace(np.diag(eta) @ H @ np.diag(eta) @ H))
    Hq = np.einsum("...i,ij,...j->...", eta * p, H, eta * p)
    box2_phi = phi * (lam**4 * b**2 + lam**3 * (2 * trH * b + 4 * Hq) + lam**2 * (trH**2 + 2 * tr_eHeH))
    return WeightEval(ps, p, H, phi, dphi, d2phi, box_phi, dbox_phi, box2_phi, b)


@dataclass(frozen=True)
class GeometryResult:
    ok: bool
    alpha: float
    max_phi_top: float
    min_phi_gamma: float
    threshold_gap: float


def _disk_samples(m: int) -> tuple[Array, Array]:
    """(|x'|, x_n) samples covering the closed unit ball (radial symmetry in x')."""
    xn = np.linspace(-1.0, 1.0, m)
    frac = np.linspace(0.0, 1.0, m)
    rho = np.sqrt(np.maximum(1 - xn[:, None] ** 2, 0.0)) * frac[None, :]
    return rho.ravel(), np.broadcast_to(xn[:, None], rho.shape).ravel()


def geometry_check(T: float, a: float, lam: float = 0.1, samples: int = 801) -> GeometryResult:
    """Check (T-1)^2 > 20a + 5 and compute alpha = min_Gamma phi - max_top phi."""
    if not T > 1 or not a > 1:
        raise WeightError("geometry_check needs T > 1 and a > 1")
    rho, xn = _disk_samples(samples)
    psi_top = 5 * (a - xn) ** 2 + 5 * rho**2 - (T - xn) ** 2
    psi_gam = 5 * (a - xn) ** 2 + 5 * rho**2
    max_top = float(np.exp(lam * psi_top.max()))
    min_gam = float(np.exp(lam * psi_gam.min()))
    gap = (T - 1) ** 2 - (20 * a + 5)
    return GeometryResult(bool(gap > 0), min_gam - max_top, max_top, min_gam, gap)


@dataclass
class HSDecay:
    s_values: list[float]
    values: list[float]
    argmax: list[tuple[float, float]]
    monotone: bool


def hs_integral(wt: CarlemanWeight, s: float, rho: Array, xn: Array, nt: int = 20001) -> Array:
    """Integral over t in [0, T] of exp(2s(phi(x,t) - phi(x,x_n))) per point."""
    t = np.linspace(0.0, wt.T, nt)
    out = np.empty(len(rho))
    chunk = max(1, 2_000_000 // nt)
    for i in range(0, len(rho), chunk):
        r = rho[i : i + chunk, None]
        z = xn[i : i + chunk, None]
        base = 5 * (wt.a - z) ** 2 + 5 * r**2
        e = 2 * s * (np.exp(wt.lam * (base - (t[None, :] - z) ** 2)) - np.exp(wt.lam * base))
        out[i : i + chunk] = np.trapezoid(np.exp(e), t, axis=1)
    return out


def h_s_decay(wt: CarlemanWeight, s_list, samples: int = 201, nt: int = 20001) -> HSDecay:
    """h(s) = sup over the closed ball of the time-integrated weight ratio."""
    rho, xn = _disk_samples(samples)
    vals, args = [], []
    for s in s_list:
        v = hs_integral(wt, float(s), rho, xn, nt)
        k = int(np.argmax(v))
        vals.append(float(v[k]))
        args.append((float(rho[k]), float(xn[k])))
    mono = all(vals[i + 1] < vals[i] for i in range(len(vals) - 1))
    return HSDecay([float(s) for s in s_list], vals, args, mono)


def laplace_estimate(wt: CarlemanWeight, s: float, rho: float, xn: float) -> float:
    """Laplace approximation of the h(s) integrand's integral for 0 < x_n < T."""
    phi0 = math.exp(wt.lam * (5 * (wt.a - xn) ** 2 + 5 * rho**2))
    return math.sqrt(math.pi / (2 * s * wt.lam * phi0))
