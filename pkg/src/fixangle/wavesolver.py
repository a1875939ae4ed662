"""Regularized-source leapfrog solver for the scattered field.

The plane wave delta(t - x_n) hitting a potential V produces the field
U = delta(t - x_n) + u H(t - x_n).  We compute the smeared version

    (d_t^2 - Lap + V) u_s = -V delta_eps(t - x_n),     u_s = 0 for t <= t0,

whose exact solution is u_s = (u H) *_t delta_eps with a unit-mass Gaussian
delta_eps.  Time stepping is the standard leapfrog with a graded sponge.

Characteristic traces use the equation in the coordinates y = x,
tau = t - x_n, where the operator becomes 2 d_{y_n} d_tau - Lap_y + V.
Integrating over tau <= tau1 gives, for S(y, tau) = u_s(y, y_n + tau),

    2 d_{y_n} S(y, tau1) = Lap_y I(y) - V I(y) - V Phi(tau1/eps),
    I(y) = integral of S(y, tau) over tau <= tau1,

which is exact for every tau1.  The solver therefore accumulates S(., tau1)
and I(.) on the spatial grid for a few offsets tau1 = k eps instead of
storing the space-time field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit
from numpy.typing import NDArray
from scipy.integrate import cumulative_trapezoid
from scipy.special import ndtr

from .grid import SpaceTimeGrid, SphereSamples, build_grid, quad
from .potential import Potential

Array = NDArray[np.float64]


class SolverError(RuntimeError):
    pass


def laplacian(u: Array, h: float) -> Array:
    """Standard (2n+1)-point Laplacian; zero on the outermost node layer."""
    out = np.zeros_like(u)
    inner = tuple(slice(1, -1) for _ in range(u.ndim))
    acc = -2.0 * u.ndim * u[inner]
    for ax in range(u.ndim):
        lo = list(inner)
        hi = list(inner)
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        acc = acc + u[tuple(lo)] + u[tuple(hi)]
    out[inner] = acc / h**2
    return out


def gaussian_pulse(tau: Array, eps: float) -> Array:
    return np.exp(-0.5 * (tau / eps) ** 2) / (eps * math.sqrt(2 * math.pi))


@dataclass
class GammaAccumulator:
    """S(., tau1) and the tau-integral of S up to tau1 on the spatial grid."""

    k1: int
    tau1: float
    G: Array
    I: Array


class Recorder:
    """Consumes time levels u^i and records Sigma, top-slice and Gamma data."""

    def __init__(self, grid: SpaceTimeGrid, eps: float, offsets: Sequence[float], keep_history: bool = False):
        self.grid = grid
        self.eps = eps
        self.ops = grid.sigma_operators
        M = len(grid.sphere)
        self.sig_u = np.zeros((grid.nt, M))
        self.sig_grad = np.zeros((grid.nt, M, grid.n))
        gi = grid.gamma_time_index
        self.gamma_index = gi
        # all columns share one lattice residual t_{i(j)} - x_j
        self.rho = float(grid.t0 + gi[0] * grid.dt - grid.x[0])
        self.klo = -math.ceil(8 * eps / grid.dt) if eps > 0 else 0
        self.acc: dict[float, GammaAccumulator] = {}
        for o in offsets:
            k1 = max(0, round((o * eps - self.rho) / grid.dt)) if eps > 0 else 0
            self.acc[float(o)] = GammaAccumulator(k1, self.rho + k1 * grid.dt, np.zeros(grid.shape), np.zeros(grid.shape))
        self.history = np.zeros((grid.nt,) + grid.shape) if keep_history else None
        self.u_T: Array | None = None
        self.ut_T: Array | None = None

    def record(self, i: int, u: Array) -> None:
        g = self.grid
        flat = u.ravel()
        self.sig_u[i] = self.ops[0] @ flat
        for k in range(g.n):
            self.sig_grad[i, :, k] = self.ops[k + 1] @ flat
        if self.history is not None:
            self.history[i] = u
        kcol = i - self.gamma_index
        for a in self.acc.values():
            band = (kcol >= self.klo) & (kcol <= a.k1)
            if not band.any():
                continue
            wcol = np.where(kcol[band] == a.k1, 0.5, 1.0) * g.dt
            if self.eps == 0:
                wcol = np.zeros_like(wcol)
            a.I[..., band] += u[..., band] * wcol
            hit = kcol == a.k1
            if hit.any():
                a.G[..., hit] = u[..., hit]

    def finish(self, u_T: Array, ut_T: Array) -> None:
        self.u_T = u_T
        self.ut_T = ut_T


@dataclass
class WaveField:
    """Solver output: Sigma time series, top slice, Gamma accumulators.

    `parts` lists (coefficient, (potential, eps)) for linear combinations such
    as the difference field w = u_s(V1) - u_s(V2).
    """

    grid: SpaceTimeGrid
    eps: float
    potential: Potential | None
    sigma_u: Array
    sigma_grad: Array
    u_T: Array
    ut_T: Array
    gamma: dict[float, GammaAccumulator]
    history: Array | None = None
    parts: tuple = ()
    d: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.d:
            self.d = tuple([0.0] * (self.grid.n - 1) + [1.0])
        if not self.parts and self.potential is not None:
            self.parts = ((1.0, self.potential),)

    @property
    def potential_ref(self) -> str:
        return self.potential.label if self.potential is not None else "combination"

    @property
    def u_s(self) -> Array:
        if self.history is None:
            raise SolverError("space-time history not kept; solve with keep_history=True")
        return self.history

    def _combine(self, other: "WaveField", c: float) -> "WaveField":
        if other.grid is not self.grid and other.grid != self.grid:
            raise SolverError("fields live on different grids")
        if abs(other.eps - self.eps) > 1e-15:
            raise SolverError("fields use different pulse widths")
        gam = {}
        for o, a in self.gamma.items():
            b = other.gamma[o]
            gam[o] = GammaAccumulator(a.k1, a.tau1, a.G + c * b.G, a.I + c * b.I)
        hist = None
        if self.history is not None and other.history is not None:
            hist = self.history + c * other.history
        parts = tuple(self.parts) + tuple((c * k, p) for k, p in other.parts)
        return WaveField(self.grid, self.eps, None, self.sigma_u + c * other.sigma_u,
                         self.sigma_grad + c * other.sigma_grad, self.u_T + c * other.u_T,
                         self.ut_T + c * other.ut_T, gam, hist, parts)

    def __sub__(self, other: "WaveField") -> "WaveField":
        return self._combine(other, -1.0)

    def __add__(self, other: "WaveField") -> "WaveField":
        return self._combine(other, 1.0)

    def scaled(self, c: float) -> "WaveField":
        gam = {o: GammaAccumulator(a.k1, a.tau1, c * a.G, c * a.I) for o, a in self.gamma.items()}
        return WaveField(self.grid, self.eps, None, c * self.sigma_u, c * self.sigma_grad, c * self.u_T,
                         c * self.ut_T, gam, None if self.history is None else c * self.history,
                         tuple((c * k, p) for k, p in self.parts))


@njit(cache=True)
def _leapfrog2(u, um, c, vdt2, b, inva):
    nx, ny = u.shape
    for i in range(nx):
        for j in range(ny):
            lap = 0.0
            if 0 < i < nx - 1 and 0 < j < ny - 1:
                lap = u[i - 1, j] + u[i + 1, j] + u[i, j - 1] + u[i, j + 1] - 4.0 * u[i, j]
            um[i, j] = (2.0 * u[i, j] - b[i, j] * um[i, j] + c * lap - vdt2[i, j] * u[i, j]) * inva[i, j]


@njit(cache=True)
def _leapfrog3(u, um, c, vdt2, b, inva):
    nx, ny, nz = u.shape
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                lap = 0.0
                if 0 < i < nx - 1 and 0 < j < ny - 1 and 0 < k < nz - 1:
                    lap = (u[i - 1, j, k] + u[i + 1, j, k] + u[i, j - 1, k] + u[i, j + 1, k]
                           + u[i, j, k - 1] + u[i, j, k + 1] - 6.0 * u[i, j, k])
                um[i, j, k] = (2.0 * u[i, j, k] - b[i, j, k] * um[i, j, k] + c * lap
                               - vdt2[i, j, k] * u[i, j, k]) * inva[i, j, k]


class _Stepper:
    """Leapfrog for u_tt + sig u_t = Lap u - V u + f, in place:

        u_next = (2u - b u_prev + dt^2 (Lap u - V u + f)) / a,  a, b = 1 +- sig dt/2,

    with the Laplacian set to zero on the outermost node layer.  Sources are
    given on a fixed set of flat indices (or as full arrays)."""

    def __init__(self, grid: SpaceTimeGrid, Vs: Array, sigma_max: float, support: NDArray[np.int64] | None):
        dt = grid.dt
        sig = sigma_max * grid.sponge_profile
        self.c = (dt / grid.h) ** 2
        self.dt2 = dt * dt
        self.vdt2 = np.ascontiguousarray(self.dt2 * Vs, dtype=float)
        self.b = 1.0 - 0.5 * dt * sig
        self.inva = 1.0 / (1.0 + 0.5 * dt * sig)
        self.kernel = _leapfrog2 if grid.n == 2 else _leapfrog3
        self.support = support
        self.f_scale = self.dt2 * (self.inva.ravel()[support] if support is not None else self.inva)

    def __call__(self, u: Array, um: Array, f: Array | None) -> Array:
        """Overwrite um with the next level and return it."""
        self.kernel(u, um, self.c, self.vdt2, self.b, self.inva)
        if f is not None:
            if self.support is None:
                um += self.f_scale * f
            else:
                um.reshape(-1)[self.support] += self.f_scale * f
        return um


def _run(grid, Vs, sigma_max, source, u0, u1, recorder: Recorder, support=None) -> None:
    step = _Stepper(grid, Vs, sigma_max, support)
    um, u = u0.copy(), u1.copy()
    recorder.record(0, um)
    recorder.record(1, u)
    for i in range(1, grid.nt):
        if i + 1 < grid.nt:
            up = step(u, um, source(i))
            recorder.record(i + 1, up)
            um, u = u, up
        else:
            prev = um.copy()
            up = step(u, um, source(i))
            recorder.finish(u.copy(), (up - prev) / (2 * grid.dt))


def solve_scattered(
    V: Potential,
    grid: SpaceTimeGrid,
    eps: float | None = None,
    *,
    sigma_max: float = 40.0,
    offsets: Sequence[float] = (4.0, 8.0),
    keep_history: bool = False,
    source_scale: float = 1.0,
) -> WaveField:
    """Leapfrog solve of (d_t^2 - Lap + V) u_s = -V delta_eps(t - x_n)."""
    if eps is None:
        eps = 4 * grid.h
    if grid.dt > grid.h / math.sqrt(grid.n) + 1e-15:
        raise SolverError("CFL violated: dt > h/sqrt(n)")
    if eps < 2 * grid.dt - 1e-15:
        raise SolverError(f"pulse width eps={eps} under-resolved (needs eps >= 2 dt = {2 * grid.dt})")
    if grid.t0 > -1 - 5 * eps + 1e-12:
        raise SolverError(f"t0={grid.t0} must be <= -1 - 5 eps = {-1 - 5 * eps}")
    Vs = V.on(grid)
    support = np.flatnonzero(Vs.ravel() != 0)
    amp = -source_scale * Vs.ravel()[support]
    xn_s = grid.xn.ravel()[support] if support.size else np.zeros(0)
    times = grid.times
    live = bool(support.size) and source_scale != 0

    def source(i: int):
        if not live:
            return None
        g = gaussian_pulse(times[i] - xn_s, eps)
        if g.max() < 1e-300:
            return None
        return amp * g

    rec = Recorder(grid, eps, offsets, keep_history)
    z = np.zeros(grid.shape)
    _run(grid, Vs, sigma_max, source, z, z, rec, support)
    return WaveField(grid, eps, V, rec.sig_u, rec.sig_grad, rec.u_T, rec.ut_T, rec.acc, rec.history)


def field_from_history(grid: SpaceTimeGrid, history: Array, eps: float = 0.0,
                       ut_T: Array | None = None, potential: Potential | None = None,
                       offsets: Sequence[float] = (0.0,)) -> WaveField:
    """Wrap an externally supplied space-time field (nt, *shape) as a WaveField.

    With eps = 0 the Gamma accumulators hold the exact values on t = x_n.
    """
    if history.shape != (grid.nt,) + grid.shape:
        raise SolverError(f"history shape {history.shape} does not match grid")
    rec = Recorder(grid, eps, offsets, keep_history=True)
    for i in range(grid.nt):
        rec.record(i, history[i])
    if ut_T is None:
        ut_T = (3 * history[-1] - 4 * history[-2] + history[-3]) / (2 * grid.dt)
    return WaveField(grid, eps, potential, rec.sig_u, rec.sig_grad, history[-1].copy(), ut_T, rec.acc,
                     rec.history, parts=((1.0, potential),) if potential is not None else ())


# -- traces -----------------------------------------------------------------------

@dataclass
class GammaTrace:
    """Values of w, d_t w and grad w on t = x_n at the spatial nodes."""

    w: Array
    wt: Array
    grad: Array  # (n, *shape)
    valid: NDArray[np.bool_]
    tau1: float
    method: str

    @property
    def characteristic_derivative(self) -> Array:
        """(d_t + d_{x_n}) w along Gamma."""
        return self.wt + self.grad[-1]


def _cumint_xn(f: Array, h: float) -> Array:
    return cumulative_trapezoid(f, dx=h, axis=-1, initial=0.0)


def _gather_gamma(hist: Array, idx: NDArray[np.int64]) -> Array:
    """Values hist[idx[j], ..., j] per x_n column j."""
    g = np.moveaxis(hist, -1, 1)
    out = g[idx, np.arange(len(idx))]
    return np.moveaxis(out, 0, -1)


def _potential_times(fld: WaveField, f: Array) -> Array:
    if fld.potential is None:
        raise SolverError(
            "this trace needs the field's potential; trace each constituent field and combine "
            "with characteristic_trace_parts"
        )
    return fld.potential.on(fld.grid) * f


def characteristic_trace(fld: WaveField, offset: float = 4.0, method: str = "integral") -> GammaTrace:
    """Trace of the smooth field on Gamma from data with t - x_n <= offset*eps.

    method='integral' applies the exact integrated characteristic identity
    (needs the field's potential); method='raw' returns u_s(x, x_n + tau1)
    unchanged, with derivatives differenced from the stored history when
    available.  Nodes with x_n + tau1 > T are marked invalid.
    """
    g = fld.grid
    key = float(offset)
    if key not in fld.gamma:
        raise SolverError(f"offset {offset} was not recorded; available {sorted(fld.gamma)}")
    acc = fld.gamma[key]
    valid = g.inside_ball & (g.xn + acc.tau1 <= g.T + 1e-12)
    if method == "raw" or fld.eps == 0:
        c0 = acc.G.copy()
        if fld.history is not None:
            idx = np.clip(g.gamma_time_index + acc.k1, 0, g.nt - 1)
            wt = _gather_gamma(np.gradient(fld.history, g.dt, axis=0, edge_order=2), idx)
            grad = np.stack([_gather_gamma(np.gradient(fld.history, g.h, axis=k + 1, edge_order=2), idx)
                             for k in range(g.n)])
            return GammaTrace(c0, wt, grad, valid, acc.tau1, "raw")
        wt = 0.5 * _cumint_xn(laplacian(c0, g.h) - _potential_times(fld, c0), g.h)
    elif method == "integral":
        phi = float(ndtr(acc.tau1 / fld.eps))
        c0 = (acc.G - 0.5 * _cumint_xn(laplacian(acc.I, g.h) - _potential_times(fld, acc.I), g.h)) / phi
        wt = 0.5 * _cumint_xn(laplacian(c0, g.h) - _potential_times(fld, c0), g.h)
    else:
        raise SolverError(f"unknown method {method!r}")
    grad = np.stack([np.gradient(c0, g.h, axis=k, edge_order=2) for k in range(g.n)])
    # the x_n-derivative along Gamma is (d_t + d_n) w; split off d_t w
    grad[-1] = grad[-1] - wt
    return GammaTrace(c0, wt, grad, valid, acc.tau1, method)


def characteristic_trace_parts(fields: Sequence[tuple[float, WaveField]], offset: float = 4.0,
                               method: str = "integral") -> GammaTrace:
    """Linear combination of per-field characteristic traces."""
    out = None
    for c, f in fields:
        t = characteristic_trace(f, offset, method)
        if out is None:
            out = GammaTrace(c * t.w, c * t.wt, c * t.grad, t.valid, t.tau1, method)
        else:
            out = GammaTrace(out.w + c * t.w, out.wt + c * t.wt, out.grad + c * t.grad,
                             out.valid & t.valid, t.tau1, method)
    if out is None:
        raise SolverError("empty combination")
    return out


@dataclass
class BoundaryTrace:
    """Traces on Sigma (time series at sphere samples), Gamma and the top slice."""

    times: Array
    sphere: SphereSamples
    sigma_w: Array
    sigma_wt: Array
    sigma_grad: Array
    gamma: GammaTrace | None
    top_w: Array | None
    top_wt: Array | None
    top_grad: Array | None
    eps: float = 0.0

    @property
    def sigma_dnu(self) -> Array:
        return np.einsum("tmi,mi->tm", self.sigma_grad, self.sphere.normals)

    def __sub__(self, other: "BoundaryTrace") -> "BoundaryTrace":
        def sub(a, b):
            return None if a is None or b is None else a - b

        gam = None
        if self.gamma is not None and other.gamma is not None:
            gam = GammaTrace(self.gamma.w - other.gamma.w, self.gamma.wt - other.gamma.wt,
                             self.gamma.grad - other.gamma.grad, self.gamma.valid & other.gamma.valid,
                             self.gamma.tau1, self.gamma.method)
        return BoundaryTrace(self.times, self.sphere, self.sigma_w - other.sigma_w, self.sigma_wt - other.sigma_wt,
                             self.sigma_grad - other.sigma_grad, gam, sub(self.top_w, other.top_w),
                             sub(self.top_wt, other.top_wt), sub(self.top_grad, other.top_grad), self.eps)

    def scaled(self, c: float) -> "BoundaryTrace":
        gam = None
        if self.gamma is not None:
            gm = self.gamma
            gam = GammaTrace(c * gm.w, c * gm.wt, c * gm.grad, gm.valid, gm.tau1, gm.method)
        sc = lambda a: None if a is None else c * a  # noqa: E731
        return BoundaryTrace(self.times, self.sphere, c * self.sigma_w, c * self.sigma_wt, c * self.sigma_grad,
                             gam, sc(self.top_w), sc(self.top_wt), sc(self.top_grad), self.eps)


def boundary_trace(fld: WaveField, offset: float = 4.0, method: str = "integral") -> BoundaryTrace:
    """Sigma, Gamma and top-slice traces of a solved field."""
    g = fld.grid
    wt = np.gradient(fld.sigma_u, g.dt, axis=0, edge_order=2)
    # combination fields carry no single potential: trace parts separately and subtract
    traceable = float(offset) in fld.gamma and (fld.potential is not None or fld.eps == 0)
    gam = characteristic_trace(fld, offset, method) if traceable else None
    top_grad = np.stack([np.gradient(fld.u_T, g.h, axis=k, edge_order=2) for k in range(g.n)])
    return BoundaryTrace(g.times, g.sphere, fld.sigma_u, wt, fld.sigma_grad, gam,
                         fld.u_T, fld.ut_T, top_grad, fld.eps)


def settled_sigma(trace: BoundaryTrace, offset: float = 4.0) -> tuple[Array, Array, Array]:
    """Sigma series with the smeared front strip t - x_n < offset*eps replaced by
    a quadratic least-squares extrapolation of the settled record behind it."""
    w, wt, gr = trace.sigma_w.copy(), trace.sigma_wt.copy(), trace.sigma_grad.copy()
    if trace.eps <= 0:
        return w, wt, gr
    tc = offset * trace.eps
    t = trace.times
    xn = trace.sphere.points[:, -1]
    for m in range(len(xn)):
        tau = t - xn[m]
        strip = (tau >= -tc) & (tau < tc)
        fit = (tau >= tc) & (tau <= 3 * tc)
        if not strip.any() or fit.sum() < 4:
            continue
        A = np.vander(tau[fit], 3)
        Ap = np.vander(tau[strip], 3)
        pinv = np.linalg.pinv(A)
        w[strip, m] = Ap @ (pinv @ w[fit, m])
        wt[strip, m] = Ap @ (pinv @ wt[fit, m])
        gr[strip, m, :] = Ap @ (pinv @ gr[fit, m, :])
    return w, wt, gr


def h1_sigma_norm(trace: BoundaryTrace, grid: SpaceTimeGrid, offset: float = 4.0) -> float:
    """sqrt of the Sigma integral of |grad w|^2 + |d_t w|^2 + |w|^2 over x_n <= t <= T.

    The norm concerns the smooth field on t >= x_n; the pulse-smeared strip is
    replaced through `settled_sigma` before integration.
    """
    w, wt, gr = settled_sigma(trace, offset)
    dens = np.sum(gr**2, axis=-1) + wt**2 + w**2
    return math.sqrt(max(quad(dens, "Sigma", grid), 0.0))


def slice_energy(u: Array, ut: Array, grid: SpaceTimeGrid) -> float:
    """Integral over B of |grad u|^2 + |u_t|^2 + |u|^2 at one time level."""
    gr = [np.gradient(u, grid.h, axis=k, edge_order=2) for k in range(grid.n)]
    return quad(sum(g**2 for g in gr) + ut**2 + u**2, "B", grid)


# -- verification helpers ------------------------------------------------------------

def _gaussian_and_laplacian(coords, center, w):
    q = sum((c - x0) ** 2 for c, x0 in zip(coords, center))
    val = np.exp(-0.5 * q / w**2)
    return val, val * (q / w**4 - len(coords) / w**2)


def manufactured_error(grid: SpaceTimeGrid, V: Potential | None = None, center=None, width: float = 0.2,
                       sigma_max: float = 40.0) -> float:
    """Max nodal error at t = T for the manufactured solution cos(t) * G(x), with
    G a Gaussian narrow enough to be negligible inside the sponge."""
    center = center if center is not None else (0.0,) * grid.n
    beta, lap_beta = _gaussian_and_laplacian(grid.coords, center, width)
    Vs = V.on(grid) if V is not None else np.zeros(grid.shape)
    spatial = -beta - lap_beta + Vs * beta
    times = grid.times

    class _Last(Recorder):
        def __init__(self):
            self.u_T = None

        def record(self, i, u):
            pass

        def finish(self, u_T, ut_T):
            self.u_T = u_T

    rec = _Last()
    u0 = math.cos(times[0]) * beta
    u1 = math.cos(times[1]) * beta
    _run(grid, Vs, sigma_max, lambda i: math.cos(times[i]) * spatial, u0, u1, rec)
    return float(np.abs(rec.u_T - math.cos(times[-1]) * beta).max())


def mms_order(hs: Sequence[float], T: float = 1.5, n: int = 2, V: Potential | None = None) -> tuple[list[float], list[float]]:
    """Errors and observed orders of the manufactured solution under refinement."""
    errs = []
    for h in hs:
        g = build_grid(n=n, L=2.0, h=h, dt_factor=0.5, t0=-1.5, T=T, sponge_width=0.5)
        errs.append(manufactured_error(g, V))
    orders = [math.log(errs[i] / errs[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(len(hs) - 1)]
    return errs, orders


def calibrate_sponge(V: Potential, grid: SpaceTimeGrid, eps: float | None = None, T_cal: float | None = None,
                     sigma_max: float = 40.0, threshold: float | None = 0.05) -> float:
    """Relative Sigma-trace discrepancy on [t0, T_cal] against an enlarged box
    whose edge no reflected wave can reach and return from before T_cal."""
    T_cal = grid.T if T_cal is None else T_cal
    dtf = grid.dt / grid.h
    g_small = grid if T_cal == grid.T else build_grid(grid.n, grid.L, grid.h, dtf, grid.t0, T_cal, grid.sponge_width)
    L_big = 1.0 + (T_cal - grid.t0) + grid.sponge_width + 2 * grid.h
    g_big = build_grid(grid.n, L_big, grid.h, dtf, grid.t0, T_cal, grid.sponge_width)
    a = solve_scattered(V, g_small, eps, sigma_max=sigma_max, offsets=())
    b = solve_scattered(V, g_big, eps, sigma_max=sigma_max, offsets=())
    scale = float(np.abs(b.sigma_u).max())
    ratio = float(np.abs(a.sigma_u - b.sigma_u).max() / scale) if scale > 0 else 0.0
    if threshold is not None and ratio > threshold:
        raise SolverError(f"sponge reflection {ratio:.3g} exceeds threshold {threshold}")
    return ratio
