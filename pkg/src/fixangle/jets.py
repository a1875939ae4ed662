"""Second-order forward-mode jets: value, gradient and Hessian arrays.

A Jet over d variables holds f (shape S), grad f (S + (d,)) and Hess f
(S + (d, d)).  Arithmetic follows the product and chain rules, so any
expression built from the primitives below carries exact first and second
derivatives.  Used for analytic test functions and weight cross-checks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

Array = NDArray[np.float64]


@dataclass
class Jet:
    v: Array
    g: Array
    H: Array

    @property
    def dim(self) -> int:
        return self.g.shape[-1]

    @classmethod
    def variable(cls, values: Array, index: int, dim: int) -> "Jet":
        values = np.asarray(values, float)
        g = np.zeros(values.shape + (dim,))
        g[..., index] = 1.0
        return cls(values, g, np.zeros(values.shape + (dim, dim)))

    @classmethod
    def constant(cls, value, shape: tuple[int, ...], dim: int) -> "Jet":
        v = np.broadcast_to(np.asarray(value, float), shape).copy()
        return cls(v, np.zeros(shape + (dim,)), np.zeros(shape + (dim, dim)))

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.v.shape, self.dim)

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.v + other, self.g, self.H)
        return Jet(self.v + other.v, self.g + other.g, self.H + other.H)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.g, -self.H)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, float)
            return Jet(self.v * c, self.g * c[..., None], self.H * c[..., None, None])
        a, b = self.v[..., None], other.v[..., None]
        v = self.v * other.v
        g = self.g * b + other.g * a
        outer = self.g[..., :, None] * other.g[..., None, :]
        H = self.H * b[..., None]
        H += other.H * a[..., None]
        H += outer
        H += np.swapaxes(outer, -1, -2)
        return Jet(v, g, H)

    __rmul__ = __mul__

    def compose(self, f0: Array, f1: Array, f2: Array) -> "Jet":
        """Chain rule for a scalar function with values f0, f1 = f', f2 = f'' at self.v."""
        g = f1[..., None] * self.g
        H = f2[..., None, None] * self.g[..., :, None] * self.g[..., None, :] + f1[..., None, None] * self.H
        return Jet(f0, g, H)

    def exp(self) -> "Jet":
        e = np.exp(self.v)
        return self.compose(e, e, e)

    def sin(self) -> "Jet":
        s, c = np.sin(self.v), np.cos(self.v)
        return self.compose(s, c, -s)

    def cos(self) -> "Jet":
        s, c = np.sin(self.v), np.cos(self.v)
        return self.compose(c, -s, -c)

    def reciprocal(self) -> "Jet":
        r = 1.0 / self.v
        return self.compose(r, -r * r, 2 * r**3)

    def apply(self, fn: Callable[[Array], tuple[Array, Array, Array]]) -> "Jet":
        return self.compose(*fn(self.v))

    def mask(self, keep: NDArray[np.bool_]) -> "Jet":
        k = keep.astype(float)
        return Jet(self.v * k, self.g * k[..., None], self.H * k[..., None, None])

    def second(self, i: int, j: int) -> Array:
        return self.H[..., i, j]


def coordinates(points: Array) -> list[Jet]:
    """Independent variables from points of shape (..., d)."""
    pts = np.asarray(points, float)
    d = pts.shape[-1]
    return [Jet.variable(pts[..., k], k, d) for k in range(d)]
