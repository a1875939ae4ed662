"""Closed family of analytic test functions on a neighbourhood of Q.

    v(y) = poly(y) * gauss(y) * mode(y) * cutoff(y),   y = (x, t)

with a polynomial of degree <= 3, an optional Gaussian envelope, an optional
sin/cos plane-wave mode and an optional product cutoff exp(1 - 1/(1 - u^2))
per coordinate (equal to 1 at the box center, vanishing with all derivatives
at the box faces).  Derivatives through second order come from jets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..jets import Jet

Array = NDArray[np.float64]


def _cutoff_profile(u: Array) -> tuple[Array, Array, Array]:
    """rho(u) = exp(1 - 1/(1-u^2)) on |u| < 1 and its first two derivatives."""
    out0 = np.zeros_like(u)
    out1 = np.zeros_like(u)
    out2 = np.zeros_like(u)
    m = np.abs(u) < 1
    um = u[m]
    q = 1.0 / (1.0 - um**2)
    r = np.exp(1.0 - q)
    d = -2.0 * um * q**2  # derivative of (1 - q)
    dd = -2.0 * q**2 - 8.0 * um**2 * q**3
    out0[m] = r
    out1[m] = r * d
    out2[m] = r * (d * d + dd)
    return out0, out1, out2


def _poly_jet(poly, y: Array) -> Jet:
    """Jet of sum c * prod y_k^e_k."""
    d = y.shape[-1]
    shape = y.shape[:-1]
    v = np.zeros(shape)
    g = np.zeros(shape + (d,))
    H = np.zeros(shape + (d, d))

    def mono(e):
        if min(e) < 0:
            return None
        out = np.ones(shape)
        for k, ek in enumerate(e):
            if ek:
                out = out * y[..., k] ** ek
        return out

    for exps, c in poly:
        e = np.array(exps)
        v += c * mono(e)
        for i in range(d):
            if e[i] == 0:
                continue
            ei = e.copy()
            ei[i] -= 1
            g[..., i] += c * e[i] * mono(ei)
            for j in range(d):
                if ei[j] == 0:
                    continue
                eij = ei.copy()
                eij[j] -= 1
                H[..., i, j] += c * e[i] * ei[j] * mono(eij)
    return Jet(v, g, H)


def _separable_jet(f0: Array, f1: Array, f2: Array) -> Jet:
    """Jet of prod_k f_k(y_k) given per-coordinate values and derivatives (..., d)."""
    d = f0.shape[-1]
    v = np.prod(f0, axis=-1)
    g = np.empty(f0.shape)
    H = np.empty(f0.shape + (d,))
    for i in range(d):
        rest = np.prod(np.delete(f0, i, axis=-1), axis=-1)
        g[..., i] = f1[..., i] * rest
        H[..., i, i] = f2[..., i] * rest
        for j in range(i + 1, d):
            rest2 = np.prod(np.delete(f0, [i, j], axis=-1), axis=-1)
            H[..., i, j] = H[..., j, i] = f1[..., i] * f1[..., j] * rest2
    return Jet(v, g, H)


@dataclass(frozen=True)
class TestFunction:
    """Descriptor of one member of the family (dimension n, variables x_1..x_n, t)."""

    n: int
    poly: tuple[tuple[tuple[int, ...], float], ...] = (((0,) * 3, 1.0),)
    gauss_center: tuple[float, ...] | None = None
    gauss_width: float = 1.0
    mode_k: tuple[float, ...] | None = None
    mode_phase: float = 0.0
    mode_kind: str = "cos"
    cutoff: bool = True
    box_lo: tuple[float, ...] = ()
    box_hi: tuple[float, ...] = ()
    name: str = ""

    __test__ = False  # not a pytest class

    def jet(self, points: Array) -> Jet:
        """Jet of v at points (..., n+1); each factor's jet is written in closed form."""
        y = np.asarray(points, float)
        d = self.n + 1
        v = _poly_jet(self.poly, y)
        if self.gauss_center is not None:
            c = y - np.asarray(self.gauss_center)
            iw2 = 1.0 / self.gauss_width**2
            G = np.exp(-0.5 * iw2 * np.sum(c * c, axis=-1))
            g = -iw2 * G[..., None] * c
            H = G[..., None, None] * (iw2**2 * c[..., :, None] * c[..., None, :] - iw2 * np.eye(d))
            v = v * Jet(G, g, H)
        if self.mode_k is not None:
            k = np.asarray(self.mode_k)
            ph = y @ k + self.mode_phase
            f0, f1 = (np.cos(ph), -np.sin(ph)) if self.mode_kind == "cos" else (np.sin(ph), np.cos(ph))
            v = v * Jet(f0, f1[..., None] * k, -f0[..., None, None] * np.outer(k, k))
        if self.cutoff:
            lo, hi = np.asarray(self.box_lo), np.asarray(self.box_hi)
            c, r = 0.5 * (hi + lo), 0.5 * (hi - lo)
            r0, r1, r2 = _cutoff_profile((y - c) / r)
            v = v * _separable_jet(r0, r1 / r, r2 / r**2)
        return v

    def evaluate(self, points: Array) -> dict[str, Array]:
        """v, grad_x v, v_t, P v = v_tt - Lap v at points (..., n+1)."""
        j = self.jet(points)
        n = self.n
        lap = sum(j.H[..., k, k] for k in range(n))
        return {"v": j.v, "grad": j.g[..., :n], "vt": j.g[..., n], "Pv": j.H[..., n, n] - lap,
                "vtt": j.H[..., n, n], "lap": lap}

    def describe(self) -> dict:
        return {
            "name": self.name,
            "poly": [[list(e), c] for e, c in self.poly],
            "gauss_center": None if self.gauss_center is None else list(self.gauss_center),
            "gauss_width": self.gauss_width,
            "mode_k": None if self.mode_k is None else list(self.mode_k),
            "mode_phase": self.mode_phase,
            "mode_kind": self.mode_kind,
            "cutoff": self.cutoff,
        }


def default_box(n: int, T: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Cutoff box strictly containing the closure of Q."""
    return (-1.5,) * n + (-1.5,), (1.5,) * n + (T + 0.5,)


def constant_function(n: int, c: float = 1.0) -> TestFunction:
    return TestFunction(n, poly=(((0,) * (n + 1), c),), cutoff=False, name=f"const{c}")


def random_test_function(rng: np.random.Generator, n: int, T: float, name: str = "") -> TestFunction:
    """Random member: poly always, Gaussian/mode/cutoff each with probability."""
    d = n + 1
    lo, hi = default_box(n, T)
    terms = [((0,) * d, 1.0)]
    for _ in range(int(rng.integers(1, 5))):
        e = np.zeros(d, int)
        deg = int(rng.integers(1, 4))
        for _ in range(deg):
            e[int(rng.integers(0, d))] += 1
        terms.append((tuple(int(v) for v in e), float(rng.normal(scale=0.5))))
    gc = gw = None
    if rng.uniform() < 0.7:
        gc = tuple(float(v) for v in np.concatenate([rng.uniform(-0.6, 0.6, n), rng.uniform(-0.5, 3.0, 1)]))
        gw = float(rng.uniform(0.4, 1.2))
    mk = None
    ph = 0.0
    kind = "cos"
    if rng.uniform() < 0.6:
        mk = tuple(float(v) for v in rng.uniform(-3.0, 3.0, d))
        ph = float(rng.uniform(0, 2 * np.pi))
        kind = "sin" if rng.uniform() < 0.5 else "cos"
    cut = bool(rng.uniform() < 0.7)
    return TestFunction(n, tuple(terms), gc, gw if gw is not None else 1.0, mk, ph, kind, cut, lo, hi, name)


def random_suite(count: int, seed: int, n: int = 2, T: float = 6.5) -> list[TestFunction]:
    rng = np.random.default_rng(seed)
    return [random_test_function(rng, n, T, name=f"f{i:02d}") for i in range(count)]
