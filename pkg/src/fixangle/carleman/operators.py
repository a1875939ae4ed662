"""Conjugation by the weight and the P_s^+ / P_s^- splitting.

With z = e^{s phi} v,

    e^{s phi} P(e^{-s phi} z) = P_s^+ z + P_s^- z,
    P_s^+ z = z'' - Lap z + s^2 (phi'^2 - |grad phi|^2) z,
    P_s^- z = -2s (z' phi' - <grad z, grad phi>) - s (phi'' - Lap phi) z.

The left side is evaluated independently with jets (phi rebuilt from a psi
jet, the exponential carried in normalized form), the right side from the
closed-form weight derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..jets import Jet, coordinates
from .testfunc import TestFunction
from .weight import CarlemanWeight, WeightEval, eval_weight

Array = NDArray[np.float64]

# exp overflows just above 709
_EXP_LIMIT = 700.0


class ConjugationOverflow(OverflowError):
    def __init__(self, exponent: float):
        super().__init__(f"exponent {exponent:.6g} exceeds the safe range after offsetting")
        self.exponent = exponent


@dataclass
class LogField:
    """Signed log-space representation: value = sign * exp(log_abs)."""

    log_abs: Array
    sign: Array

    def value(self, offset: float = 0.0) -> Array:
        e = self.log_abs - offset
        finite = np.isfinite(e)
        if finite.any():
            top = float(e[finite].max())
            if top > _EXP_LIMIT:
                raise ConjugationOverflow(top)
        return self.sign * np.exp(e)

    @property
    def max_exponent(self) -> float:
        f = self.log_abs[np.isfinite(self.log_abs)]
        return float(f.max()) if f.size else -np.inf


def conjugate(v: Array, phi: Array, s: float) -> LogField:
    """z = e^{s phi} v in log form (log|v| + s phi, sign v)."""
    v = np.asarray(v, float)
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(v))
    return LogField(la + s * np.asarray(phi), np.sign(v))


def deconjugate(z: LogField, phi: Array, s: float) -> Array:
    """v = e^{-s phi} z."""
    return LogField(z.log_abs - s * np.asarray(phi), z.sign).value()


@dataclass
class Derivs:
    """Value and derivatives of a scalar field in (x_1..x_n, t)."""

    v: Array
    grad: Array  # spatial gradient (..., n)
    vt: Array
    vtt: Array
    lap: Array
    grad_t: Array  # grad of v_t (..., n)

    @classmethod
    def from_jet(cls, j: Jet) -> "Derivs":
        n = j.dim - 1
        lap = np.trace(j.H[..., :n, :n], axis1=-2, axis2=-1)
        return cls(j.v, j.g[..., :n], j.g[..., n], j.H[..., n, n], lap, j.H[..., :n, n])


def apply_P(d: Derivs) -> Array:
    return d.vtt - d.lap


def apply_Ps_plus(z: Derivs, W: WeightEval, s: float) -> Array:
    m = W.phi_t**2 - np.sum(W.grad_phi**2, axis=-1)
    return z.vtt - z.lap + s**2 * m * z.v


def apply_Ps_minus(z: Derivs, W: WeightEval, s: float) -> Array:
    inner = z.vt * W.phi_t - np.sum(z.grad * W.grad_phi, axis=-1)
    return -2 * s * inner - s * W.box_phi * z.v


def weight_jet(wt: CarlemanWeight, W: WeightEval, s: float, shift: Array | float = 0.0) -> Jet:
    """Jet of exp(s phi - shift) from closed-form phi derivatives."""
    E = np.exp(s * W.phi - shift)
    g = s * E[..., None] * W.dphi
    H = E[..., None, None] * (s * W.d2phi + s**2 * W.dphi[..., :, None] * W.dphi[..., None, :])
    return Jet(E, g, H)


def _phi_jet(wt: CarlemanWeight, points: Array) -> Jet:
    y = coordinates(points)
    n = wt.n
    xs = y[:n]
    t = y[n]
    psi = (xs[-1] * -1.0 + wt.a) * (xs[-1] * -1.0 + wt.a) * 5.0
    for k in range(n - 1):
        psi = psi + xs[k] * xs[k] * 5.0
    d = t - xs[-1]
    psi = psi - d * d
    return (psi * wt.lam).exp()


def conjugation_residual(tf: TestFunction, wt: CarlemanWeight, points: Array) -> float:
    """max |e^{s phi} P(e^{-s phi} z) - (P_s^+ z + P_s^- z)| / max |e^{s phi} P(e^{-s phi} z)|,
    with z the test function itself."""
    s = wt.s
    zj = tf.jet(points)
    # normalized e^{-s phi}: value 1, derivatives divided by e^{-s phi}
    ph = _phi_jet(wt, points)
    arg = ph * (-s)
    one = Jet(np.ones_like(arg.v), arg.g, arg.H + arg.g[..., :, None] * arg.g[..., None, :])
    lhs = apply_P(Derivs.from_jet(one * zj))
    x, t = points[..., : wt.n], points[..., wt.n]
    W = eval_weight(wt, x, t)
    zd = Derivs.from_jet(zj)
    rhs = apply_Ps_plus(zd, W, s) + apply_Ps_minus(zd, W, s)
    scale = float(np.max(np.abs(lhs)))
    if scale == 0.0:
        return float(np.max(np.abs(rhs)))
    return float(np.max(np.abs(lhs - rhs)) / scale)


def random_points_Q(rng: np.random.Generator, count: int, n: int, T: float) -> Array:
    """Uniform samples of Q by rejection."""
    out = []
    have = 0
    while have < count:
        x = rng.uniform(-1, 1, (2 * count, n))
        x = x[np.sum(x**2, axis=1) < 1]
        t = rng.uniform(-1, T, len(x))
        keep = t >= x[:, -1]
        pts = np.concatenate([x[keep], t[keep, None]], axis=1)
        out.append(pts)
        have += len(pts)
    return np.concatenate(out)[:count]
