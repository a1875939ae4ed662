"""Smooth compactly supported potentials built from bump functions.

A bump with center x0, radius r and amplitude c is

    c * exp(-1 / (1 - |x - x0|^2 / r^2))   for |x - x0| < r,   0 otherwise,

so its peak value is c/e.  Line integrals along e_n are computed per bump over
the chord where the line crosses the bump's ball.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .grid import SpaceTimeGrid, quad

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class Bump:
    center: tuple[float, ...]
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise PotentialError(f"bump radius must be positive, got {self.radius}")
        if not math.isfinite(self.amplitude):
            raise PotentialError("bump amplitude must be finite")
        if math.hypot(*self.center) + self.radius >= 1.0:
            raise PotentialError(
                f"bump support |x0| + r = {math.hypot(*self.center) + self.radius:.4f} must be < 1"
            )

    def __call__(self, *coords: ArrayLike) -> NDArray[np.float64]:
        cs = np.broadcast_arrays(*[np.asarray(c, float) for c in coords])
        q = sum((c - x0) ** 2 for c, x0 in zip(cs, self.center)) / self.radius**2
        out = np.zeros(cs[0].shape)
        m = q < 1.0
        out[m] = self.amplitude * np.exp(-1.0 / (1.0 - q[m]))
        return out

    def chord_integral(self, xp: NDArray[np.float64], xn: NDArray[np.float64]) -> NDArray[np.float64]:
        """Integral over s <= xn of the bump along the line (xp, s).  xp: (P, n-1)."""
        d2 = np.sum((xp - np.asarray(self.center[:-1])) ** 2, axis=1)
        half = np.sqrt(np.maximum(self.radius**2 - d2, 0.0))
        lo = self.center[-1] - half
        hi = np.minimum(self.center[-1] + half, xn)
        ok = (half > 0) & (hi > lo)
        out = np.zeros(len(xn))
        if not ok.any():
            return out
        a, b = lo[ok], hi[ok]
        mid, rad = (a + b) / 2, (b - a) / 2
        s = mid[:, None] + rad[:, None] * _GL_NODES[None, :]
        cols = [np.broadcast_to(xp[ok, k][:, None], s.shape) for k in range(xp.shape[1])]
        vals = self(*cols, s)
        out[ok] = rad * (vals @ _GL_WEIGHTS)
        return out


@dataclass(frozen=True)
class Potential:
    """Sum of bumps in dimension n, optionally sampled on a grid."""

    n: int
    bumps: tuple[Bump, ...] = ()
    samples: NDArray[np.float64] | None = field(default=None, repr=False, compare=False)
    sup_bound: float = 0.0
    label: str = ""

    def __call__(self, *coords: ArrayLike) -> NDArray[np.float64]:
        shape = np.broadcast_shapes(*[np.shape(c) for c in coords])
        out = np.zeros(shape)
        for b in self.bumps:
            out = out + b(*coords)
        return out

    @property
    def is_zero(self) -> bool:
        return all(b.amplitude == 0 for b in self.bumps)

    def descriptor(self) -> list[dict]:
        return [dict(center=list(b.center), radius=b.radius, amplitude=b.amplitude) for b in self.bumps]

    def scaled(self, c: float, grid: SpaceTimeGrid | None = None) -> "Potential":
        bumps = [Bump(b.center, b.radius, c * b.amplitude) for b in self.bumps]
        return make_potential(bumps, n=self.n, grid=grid, label=f"{c}*{self.label}")

    def minus(self, other: "Potential", grid: SpaceTimeGrid | None = None) -> "Potential":
        neg = [Bump(b.center, b.radius, -b.amplitude) for b in other.bumps]
        return make_potential(list(self.bumps) + neg, n=self.n, grid=grid,
                              label=f"({self.label})-({other.label})")

    def on(self, grid: SpaceTimeGrid) -> NDArray[np.float64]:
        if self.samples is not None and self.samples.shape == grid.shape:
            return self.samples
        return self(*grid.coords)


def _sup_estimate(n: int, bumps: list[Bump]) -> float:
    if not bumps:
        return 0.0
    h = 1 / 256 if n == 2 else 1 / 64
    x = np.arange(-1.0, 1.0 + h / 2, h)
    pot = Potential(n, tuple(bumps))
    best = 0.0
    # scan slab by slab along x_1 to bound memory in 3-D
    rest = np.meshgrid(*([x] * (n - 1)), indexing="ij")
    for x1 in x:
        best = max(best, float(np.abs(pot(x1, *rest)).max()))
    # bump centers are the likely maxima for well separated bumps
    for b in bumps:
        best = max(best, float(abs(pot(*[np.array(c) for c in b.center]))))
    return best


def make_potential(
    bumps: list[Bump] | list[dict],
    n: int = 2,
    grid: SpaceTimeGrid | None = None,
    label: str = "",
) -> Potential:
    """Build a potential from bump descriptors (Bump or dicts with center/radius/amplitude)."""
    bs: list[Bump] = []
    for b in bumps:
        if isinstance(b, dict):
            b = Bump(tuple(float(c) for c in b["center"]), float(b["radius"]), float(b.get("amplitude", 1.0)))
        if len(b.center) != n:
            raise PotentialError(f"bump center {b.center} has wrong dimension for n={n}")
        bs.append(b)
    pot = Potential(n, tuple(bs), label=label)
    samples = pot(*grid.coords) if grid is not None else None
    sup = _sup_estimate(n, bs)
    if samples is not None and samples.size:
        sup = max(sup, float(np.abs(samples).max()))
    return Potential(n, tuple(bs), samples, sup, label)


def halfline_integral(V: Potential, x: ArrayLike) -> NDArray[np.float64]:
    """Integral of V(x', s) over s in (-inf, x_n] for each point x (shape (..., n)).

    The characteristic datum on t = x_n is -1/2 times this value.
    """
    pts = np.asarray(x, float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != V.n:
        raise PotentialError(f"points must have {V.n} coordinates")
    flat = pts.reshape(-1, V.n)
    out = np.zeros(len(flat))
    for b in V.bumps:
        out += b.chord_integral(flat[:, :-1], flat[:, -1])
    out = out.reshape(pts.shape[:-1])
    return out[0] if single else out


def halfline_integral_grid(V: Potential, grid: SpaceTimeGrid) -> NDArray[np.float64]:
    """halfline_integral at every spatial node of the grid."""
    pts = np.stack(grid.coords, axis=-1)
    return halfline_integral(V, pts)


def l2_norm_B(V: Potential | NDArray[np.float64], grid: SpaceTimeGrid) -> float:
    vals = V.on(grid) if isinstance(V, Potential) else np.asarray(V)
    return math.sqrt(max(quad(vals**2, "B", grid), 0.0))


def random_potential(
    rng: np.random.Generator,
    n: int = 2,
    n_bumps: tuple[int, int] = (1, 3),
    center_radius: float = 0.4,
    radius: tuple[float, float] = (0.2, 0.4),
    amplitude: tuple[float, float] = (-1.0, 1.0),
    grid: SpaceTimeGrid | None = None,
    label: str = "",
) -> Potential:
    k = int(rng.integers(n_bumps[0], n_bumps[1] + 1))
    bumps = []
    for _ in range(k):
        d = rng.normal(size=n)
        d /= np.linalg.norm(d)
        c = d * center_radius * rng.uniform() ** (1 / n)
        bumps.append(Bump(tuple(float(v) for v in c), float(rng.uniform(*radius)), float(rng.uniform(*amplitude))))
    return make_potential(bumps, n=n, grid=grid, label=label)


def random_ensemble(count: int, seed: int, n: int = 2, grid: SpaceTimeGrid | None = None, **kw) -> list[Potential]:
    """Seeded list of random bump potentials (labels 'E0', 'E1', ...)."""
    rng = np.random.default_rng(seed)
    return [random_potential(rng, n=n, grid=grid, label=f"E{i}", **kw) for i in range(count)]
