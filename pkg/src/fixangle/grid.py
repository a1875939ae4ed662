"""Space-time discretization of the scattering cylinder.

The computational domain is a box [-L, L]^n in space (with a damping sponge
near its faces) times a uniform time axis [t0, T].  The physical region is

    Q     = {(x, t): |x| < 1, x_n <= t <= T}
    Sigma = {(x, t): |x| = 1, x_n <= t <= T}
    Gamma = {(x, t): |x| < 1, t = x_n}
    top   = {(x, T): |x| < 1}

Fields live on the Cartesian nodes; the lateral boundary is sampled by a
parametrized sphere rule and reached through a sparse interpolation matrix.
Space-time arrays are laid out as (time, x_1, ..., x_n).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

SQRT2 = math.sqrt(2.0)
REGIONS = ("Q", "Sigma", "Gamma", "top", "B")


class GridError(ValueError):
    """Invalid discretization parameters."""


@dataclass(frozen=True)
class SphereSamples:
    """Quadrature nodes on the unit sphere |x| = 1 with outward normals."""

    points: NDArray[np.float64]
    weights: NDArray[np.float64]

    @property
    def normals(self) -> NDArray[np.float64]:
        return self.points

    def __len__(self) -> int:
        return len(self.weights)


def sphere_samples(n: int, h: float, density: float = 1.0, rotation: float = 0.0) -> SphereSamples:
    """Sample the unit sphere with spacing about h/density.

    n=2 uses the periodic trapezoid rule in the angle (spectrally accurate);
    n=3 uses Gauss-Legendre in cos(theta) times a trapezoid rule in azimuth.
    `rotation` shifts the angular lattice by a fraction of one spacing.
    """
    if n == 2:
        m = max(8, math.ceil(density * 2 * math.pi / h))
        th = 2 * math.pi * (np.arange(m) + rotation) / m
        pts = np.stack([np.cos(th), np.sin(th)], axis=1)
        return SphereSamples(pts, np.full(m, 2 * math.pi / m))
    if n == 3:
        nmu = max(4, math.ceil(density * math.pi / (2 * h)))
        nph = max(8, math.ceil(density * 2 * math.pi / h))
        mu, wmu = np.polynomial.legendre.leggauss(nmu)
        ph = 2 * math.pi * (np.arange(nph) + rotation) / nph
        MU, PH = np.meshgrid(mu, ph, indexing="ij")
        st = np.sqrt(1 - MU**2)
        pts = np.stack([st * np.cos(PH), st * np.sin(PH), MU], axis=-1).reshape(-1, 3)
        w = (wmu[:, None] * np.full(nph, 2 * math.pi / nph)[None, :]).ravel()
        return SphereSamples(pts, w)
    raise GridError(f"dimension n={n} not supported (use 2 or 3)")


def _diff_matrix_1d(m: int, step: float) -> sp.csr_matrix:
    """Sparse first-derivative matrix matching np.gradient(edge_order=2)."""
    rows, cols, vals = [], [], []
    for i in range(1, m - 1):
        rows += [i, i]
        cols += [i - 1, i + 1]
        vals += [-0.5 / step, 0.5 / step]
    rows += [0, 0, 0, m - 1, m - 1, m - 1]
    cols += [0, 1, 2, m - 1, m - 2, m - 3]
    vals += [-1.5 / step, 2 / step, -0.5 / step, 1.5 / step, -2 / step, 0.5 / step]
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, m))


@dataclass(frozen=True)
class SpaceTimeGrid:
    n: int
    L: float
    h: float
    dt: float
    t0: float
    T: float
    sponge_width: float
    sphere: SphereSamples = field(repr=False)

    # -- axes ---------------------------------------------------------------
    @cached_property
    def x(self) -> NDArray[np.float64]:
        m = round(self.L / self.h)
        return self.h * np.arange(-m, m + 1)

    @property
    def N(self) -> int:
        return len(self.x)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @cached_property
    def nt(self) -> int:
        return round((self.T - self.t0) / self.dt) + 1

    @cached_property
    def times(self) -> NDArray[np.float64]:
        return self.T - self.dt * np.arange(self.nt - 1, -1, -1)

    @cached_property
    def steps_per_cell(self) -> int:
        return round(self.h / self.dt)

    @cached_property
    def coords(self) -> tuple[NDArray[np.float64], ...]:
        return tuple(np.meshgrid(*([self.x] * self.n), indexing="ij"))

    @property
    def xn(self) -> NDArray[np.float64]:
        return self.coords[-1]

    @cached_property
    def radius(self) -> NDArray[np.float64]:
        return np.sqrt(sum(c**2 for c in self.coords))

    @cached_property
    def inside_ball(self) -> NDArray[np.bool_]:
        return self.radius < 1.0

    # -- quadrature weights ---------------------------------------------------
    @cached_property
    def ball_weights(self) -> NDArray[np.float64]:
        """Node weights for integrals over B: h^n times the fraction of the
        node's dual cell lying inside the unit ball (supersampled near |x|=1)."""
        h, n = self.h, self.n
        w = np.where(self.inside_ball, h**n, 0.0)
        r = self.radius
        cut = np.abs(r - 1.0) < 0.5 * h * math.sqrt(n) + 1e-12
        k = 16 if n == 2 else 8
        sub = (np.arange(k) + 0.5) / k - 0.5
        offs = np.stack(np.meshgrid(*([sub] * n), indexing="ij"), -1).reshape(-1, n) * h
        centers = np.stack([c[cut] for c in self.coords], -1)
        frac = (np.sum((centers[:, None, :] + offs[None]) ** 2, -1) < 1.0).mean(1)
        w[cut] = frac * h**n
        return w

    @cached_property
    def sponge_profile(self) -> NDArray[np.float64]:
        """Normalized damping profile, 0 in the interior and 1 at the box faces."""
        inner = self.L - self.sponge_width
        d = np.maximum(np.abs(self.x) - inner, 0.0) / self.sponge_width
        prof = d**2
        out = np.zeros(self.shape)
        for ax in range(self.n):
            sh = [1] * self.n
            sh[ax] = self.N
            out = out + prof.reshape(sh)
        return out

    # -- characteristic bookkeeping ---------------------------------------------
    def tau_index(self, tau: float) -> int:
        """Offset k such that node (x, t) with t - x_n = tau lies on time index
        i(x_n) + k, where i(x_n) is the index of t = x_n (exact lattice)."""
        return round(tau / self.dt)

    @cached_property
    def gamma_time_index(self) -> NDArray[np.int64]:
        """Time index of t = x_n for every x_n node (may be out of range)."""
        return np.rint((self.x - self.t0) / self.dt).astype(np.int64)

    def gamma_nodes(self) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
        """(time index, flat spatial index) of all nodes with |t - x_n| <= dt/2, x in B."""
        flat = np.flatnonzero(self.inside_ball.ravel())
        xn = self.xn.ravel()[flat]
        lo = np.ceil((xn - self.dt / 2 - self.t0) / self.dt - 1e-9).astype(int)
        hi = np.floor((xn + self.dt / 2 - self.t0) / self.dt + 1e-9).astype(int)
        ti, si = [], []
        for k in range(0, int((hi - lo).max()) + 1):
            sel = hi - lo >= k
            ti.append(lo[sel] + k)
            si.append(flat[sel])
        return np.concatenate(ti), np.concatenate(si)

    # -- operators -------------------------------------------------------------
    @cached_property
    def gradient_matrices(self) -> tuple[sp.csr_matrix, ...]:
        eye = sp.identity(self.N, format="csr")
        d1 = _diff_matrix_1d(self.N, self.h)
        mats = []
        for ax in range(self.n):
            factors = [d1 if k == ax else eye for k in range(self.n)]
            m = factors[0]
            for f in factors[1:]:
                m = sp.kron(m, f, format="csr")
            mats.append(m)
        return tuple(mats)

    def interp_matrix(self, points: NDArray[np.float64]) -> sp.csr_matrix:
        """Multilinear interpolation from the nodes to arbitrary points."""
        pts = np.atleast_2d(points)
        if np.any(np.abs(pts) > self.x[-1]):
            raise GridError("interpolation point outside the computational box")
        s = (pts - self.x[0]) / self.h
        i0 = np.clip(np.floor(s).astype(int), 0, self.N - 2)
        fr = s - i0
        rows, cols, vals = [], [], []
        strides = [self.N ** (self.n - 1 - k) for k in range(self.n)]
        for corner in np.ndindex(*(2,) * self.n):
            c = np.asarray(corner)
            idx = sum((i0[:, k] + c[k]) * strides[k] for k in range(self.n))
            wgt = np.prod(np.where(c == 1, fr, 1 - fr), axis=1)
            rows.append(np.arange(len(pts)))
            cols.append(idx)
            vals.append(wgt)
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(len(pts), self.N**self.n),
        )

    @cached_property
    def sigma_operators(self) -> tuple[sp.csr_matrix, ...]:
        """Sparse maps from a nodal field to (w, d_1 w, ..., d_n w) on Sigma samples."""
        P = self.interp_matrix(self.sphere.points)
        return (P,) + tuple((P @ D).tocsr() for D in self.gradient_matrices)

    def time_weights_from(self, lower: NDArray[np.float64]) -> NDArray[np.float64]:
        """Trapezoid weights (nt, len(lower)) for integrals over [lower, T] of
        piecewise-linear time series sampled at self.times."""
        lower = np.asarray(lower, float)
        t = self.times
        w = np.zeros((self.nt, lower.size))
        k0 = np.clip(np.searchsorted(t, lower, side="left"), 1, self.nt - 1)
        cols = np.arange(lower.size)
        # full cells [t_k, t_{k+1}] with k >= k0
        full = np.arange(self.nt)[:, None] >= k0[None, :]
        w += np.where(full, self.dt, 0.0)
        w[k0, cols] -= self.dt / 2
        w[-1, :] -= self.dt / 2
        # partial cell [lower, t_k0] under linear interpolation
        a = np.clip((lower - t[k0 - 1]) / self.dt, 0.0, 1.0)
        seg = (1 - a) * self.dt
        w[k0 - 1, cols] += seg * (1 - a) / 2
        w[k0, cols] += seg * (1 + a) / 2
        return w


def causal_half_width(T: float, sponge_width: float) -> float:
    return 1.0 + sponge_width + 0.5 * (T + 1.0)


def build_grid(
    n: int = 2,
    L: float | None = None,
    h: float = 1 / 32,
    dt_factor: float = 0.5,
    t0: float = -2.5,
    T: float = 6.5,
    sponge_width: float = 0.5,
    sphere_density: float = 1.0,
    sphere_rotation: float = 0.0,
) -> SpaceTimeGrid:
    """Validate parameters and construct the grid.

    dt = h / m with m = ceil(1/dt_factor) so that the characteristic lattice
    t - x_n is aligned with the time levels; t0 is moved down so that T is a
    time level exactly.  L = None selects the causal box
    L = 1 + sponge_width + (T + 1)/2: a wave scattered at t = -1 needs longer
    than T + 1 to reach the sponge and return to the unit sphere, so the
    sponge cannot contaminate Sigma data on [t0, T].
    """
    if n not in (2, 3):
        raise GridError(f"n must be 2 or 3, got {n}")
    if not h > 0:
        raise GridError("h must be positive")
    if not T > 1:
        raise GridError(f"T must exceed 1, got {T}")
    if not t0 < -1:
        raise GridError(f"t0 must be below -1, got {t0}")
    if dt_factor * h > h / math.sqrt(n) + 1e-15:
        raise GridError(f"CFL violated: dt = {dt_factor}h exceeds h/sqrt({n})")
    if sponge_width <= 0:
        raise GridError("sponge_width must be positive")
    if L is None:
        L = causal_half_width(T, sponge_width)
    m = math.ceil(1 / dt_factor - 1e-12)
    dt = h / m
    Lsnap = h * math.ceil(L / h - 1e-9)
    if Lsnap - sponge_width <= 1 + h:
        raise GridError(
            f"box half-width {Lsnap} minus sponge {sponge_width} does not contain the unit ball"
        )
    nsteps = math.ceil((T - t0) / dt - 1e-9)
    t0a = T - nsteps * dt
    return SpaceTimeGrid(n, Lsnap, h, dt, t0a, T, sponge_width, sphere_samples(n, h, sphere_density, sphere_rotation))


# -- differentiation and quadrature ---------------------------------------------

def _axis(axis: int | str, grid: SpaceTimeGrid, ndim: int) -> tuple[int, float]:
    spacetime = ndim == grid.n + 1
    if ndim not in (grid.n, grid.n + 1):
        raise GridError(f"field has {ndim} dims, expected {grid.n} or {grid.n + 1}")
    if axis == "t":
        if not spacetime:
            raise GridError("time derivative needs a space-time field")
        return 0, grid.dt
    if isinstance(axis, str):
        if not axis.startswith("x"):
            raise GridError(f"unknown axis {axis!r}")
        axis = int(axis[1:]) - 1
    if not 0 <= axis < grid.n:
        raise GridError(f"axis {axis} out of range for n={grid.n}")
    return axis + (1 if spacetime else 0), grid.h


def diff(field: NDArray[np.float64], axis: int | str, grid: SpaceTimeGrid) -> NDArray[np.float64]:
    """Second-order derivative along a spatial axis (0-based int or 'x1'..) or 't'.

    Centered differences inside, second-order one-sided at the edges.
    """
    ax, step = _axis(axis, grid, np.ndim(field))
    return np.gradient(field, step, axis=ax, edge_order=2)


def normal_derivative(grad_at_samples: NDArray[np.float64], sphere: SphereSamples) -> NDArray[np.float64]:
    """Project gradient samples (..., M, n) onto the outward normals."""
    return np.einsum("...mi,mi->...m", grad_at_samples, sphere.normals)


def _interp_at_gamma(field: NDArray[np.float64], grid: SpaceTimeGrid) -> NDArray[np.float64]:
    """Linear-in-time interpolation of a space-time field to t = x_n."""
    s = (grid.x - grid.t0) / grid.dt
    k = np.clip(np.floor(s).astype(int), 0, grid.nt - 2)
    a = s - k
    g = np.moveaxis(field, -1, 1)
    j = np.arange(grid.N)
    out = (1 - a.reshape((-1,) + (1,) * (grid.n - 1))) * g[k, j] + a.reshape((-1,) + (1,) * (grid.n - 1)) * g[k + 1, j]
    return np.moveaxis(out, 0, -1)


def quad(field: NDArray[np.float64] | float, region: str, grid: SpaceTimeGrid) -> float:
    """Composite trapezoid-type quadrature of a sampled field over a region.

    Q: space-time field (nt, *shape); time integral from x_n to T per node.
    Sigma: samples (nt, M) at the sphere points; same time limits.
    Gamma: nodal values at t = x_n (shape) or a space-time field; measure
           dS = sqrt(2) dx from the characteristic slope.
    top, B: nodal spatial field (a space-time field is sliced at t = T).
    """
    if region not in REGIONS:
        raise GridError(f"unknown region {region!r}; expected one of {REGIONS}")
    f = np.asarray(field, float)
    if region in ("B", "top"):
        if f.ndim == grid.n + 1:
            f = f[-1]
        return float(np.sum(np.broadcast_to(f, grid.shape) * grid.ball_weights))
    if region == "Gamma":
        if f.ndim == grid.n + 1:
            f = _interp_at_gamma(f, grid)
        return SQRT2 * float(np.sum(np.broadcast_to(f, grid.shape) * grid.ball_weights))
    if region == "Sigma":
        f = np.broadcast_to(f, (grid.nt, len(grid.sphere)))
        tw = grid.time_weights_from(grid.sphere.points[:, -1])
        return float(np.sum(f * tw * grid.sphere.weights[None, :]))
    # Q
    f = np.broadcast_to(f, (grid.nt,) + grid.shape)
    inside = grid.ball_weights > 0
    vals = f[:, inside]
    tw = grid.time_weights_from(grid.xn[inside])
    return float(np.sum(vals * tw * grid.ball_weights[inside][None, :]))
