"""High-order quadrature rules on Q, Sigma, Gamma and the top slice.

Used for integrands known in closed form (analytic test functions times
the weight).  Every rule is parametrized by a cell size h and a number p of
Gauss-Legendre points per cell:

  B      polar (n=2) or spherical (n=3) coordinates; composite GL in r (and
         in cos(theta) for n=3), periodic trapezoid in the azimuth with
         arc spacing about h on each ring
  Q      per B node, composite GL in t over [x_n, T] with ceil((T+1)/h) cells
  Sigma  sphere rule times the same t rule over [x_n, T]
  Gamma  B rule at t = x_n with the surface factor sqrt(2)
  top    B rule at t = T
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np
from numpy.typing import NDArray

Array = NDArray[np.float64]


def composite_gl(lo: float, hi: float, cells: int, p: int) -> tuple[Array, Array]:
    x, w = np.polynomial.legendre.leggauss(p)
    e = np.linspace(lo, hi, cells + 1)
    mid = 0.5 * (e[:-1] + e[1:])
    half = 0.5 * (e[1:] - e[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


@dataclass(frozen=True)
class AnalyticRules:
    n: int = 2
    h: float = 1 / 32
    p: int = 2
    T: float = 6.5
    max_chunk: int = 400_000

    def _ring(self, radius: float) -> tuple[Array, Array]:
        m = max(8, math.ceil(2 * math.pi * radius / self.h))
        ph = 2 * math.pi * np.arange(m) / m
        return ph, np.full(m, 2 * math.pi / m)

    @cached_property
    def ball(self) -> tuple[Array, Array]:
        r, wr = composite_gl(0.0, 1.0, math.ceil(1 / self.h), self.p)
        pts, wts = [], []
        if self.n == 2:
            for ri, wi in zip(r, wr):
                ph, wph = self._ring(ri)
                pts.append(np.stack([ri * np.cos(ph), ri * np.sin(ph)], -1))
                wts.append(wi * ri * wph)
            return np.concatenate(pts), np.concatenate(wts)
        mu, wmu = composite_gl(-1.0, 1.0, math.ceil(2 / self.h), self.p)
        for ri, wi in zip(r, wr):
            for mj, wj in zip(mu, wmu):
                st = math.sqrt(1 - mj**2)
                ph, wph = self._ring(ri * st)
                pts.append(np.stack([ri * st * np.cos(ph), ri * st * np.sin(ph), np.full_like(ph, ri * mj)], -1))
                wts.append(wi * ri**2 * wj * wph)
        return np.concatenate(pts), np.concatenate(wts)

    @cached_property
    def sphere(self) -> tuple[Array, Array]:
        nph = math.ceil(2 * math.pi / self.h) * self.p
        ph = 2 * math.pi * np.arange(nph) / nph
        wph = np.full(nph, 2 * math.pi / nph)
        if self.n == 2:
            return np.stack([np.cos(ph), np.sin(ph)], -1), wph
        mu, wmu = composite_gl(-1.0, 1.0, math.ceil(2 / self.h), self.p)
        M, P = np.meshgrid(mu, ph, indexing="ij")
        st = np.sqrt(1 - M**2)
        pts = np.stack([st * np.cos(P), st * np.sin(P), M], -1).reshape(-1, 3)
        return pts, (wmu[:, None] * wph[None, :]).ravel()

    @property
    def t_cells(self) -> int:
        return math.ceil((self.T + 1) / self.h)

    def _t_rule(self, lower: Array) -> tuple[Array, Array]:
        """(len(lower), K) nodes and weights for [lower, T]."""
        u, wu = composite_gl(0.0, 1.0, self.t_cells, self.p)
        span = self.T - lower
        return lower[:, None] + span[:, None] * u[None, :], span[:, None] * wu[None, :]

    def q_chunks(self) -> Iterator[tuple[Array, Array]]:
        """Yield (points (K, n+1), weights (K,)) chunks covering Q."""
        pts, w = self.ball
        per = self.t_cells * self.p
        step = max(1, self.max_chunk // per)
        for i in range(0, len(w), step):
            xb = pts[i : i + step]
            tt, wt = self._t_rule(xb[:, -1])
            X = np.repeat(xb[:, None, :], tt.shape[1], axis=1)
            yield (np.concatenate([X, tt[..., None]], -1).reshape(-1, self.n + 1),
                   (w[i : i + step, None] * wt).ravel())

    def sigma_chunks(self) -> Iterator[tuple[Array, Array, Array]]:
        """Yield (points, weights, normals) chunks covering Sigma."""
        pts, w = self.sphere
        per = self.t_cells * self.p
        step = max(1, self.max_chunk // per)
        for i in range(0, len(w), step):
            xb = pts[i : i + step]
            tt, wt = self._t_rule(xb[:, -1])
            X = np.repeat(xb[:, None, :], tt.shape[1], axis=1)
            yield (np.concatenate([X, tt[..., None]], -1).reshape(-1, self.n + 1),
                   (w[i : i + step, None] * wt).ravel(), X.reshape(-1, self.n))

    @cached_property
    def gamma(self) -> tuple[Array, Array]:
        """Points on t = x_n and surface weights dS = sqrt(2) dx."""
        pts, w = self.ball
        return np.concatenate([pts, pts[:, -1:]], -1), math.sqrt(2) * w

    def slice(self, t: float) -> tuple[Array, Array]:
        pts, w = self.ball
        return np.concatenate([pts, np.full((len(w), 1), t)], -1), w

    @property
    def top(self) -> tuple[Array, Array]:
        return self.slice(self.T)
