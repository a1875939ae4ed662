"""End-to-end studies: the stability inequality over potential ensembles,
recovery of V1 - V2 from characteristic traces, and uniqueness sanity checks.

Recovery.  For one field the integrated characteristic identity reads

    2 d_n S(., tau1) = Lap I - V I - V Phi(tau1/eps),

so for the difference w of two fields (G_w = S1 - S2, I_w = I1 - I2)

    (V1 - V2) Phi(tau1/eps) = Lap I_w - 2 d_n G_w - (V1 I_w + (V1 - V2) I_2).

The data-only estimate drops the last bracket, which is O(eps) because I
integrates over a strip of width ~ tau1.  In the limit eps -> 0 this is the
trace law V1 - V2 = -2 (d_t + d_n) w on t = x_n, which follows from
w(x, x_n) = -1/2 int_{-inf}^{x_n} (V1 - V2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .grid import SpaceTimeGrid, build_grid, quad
from .potential import Potential, halfline_integral_grid, l2_norm_B, make_potential, random_ensemble
from .wavesolver import (WaveField, boundary_trace, characteristic_trace, characteristic_trace_parts,
                         h1_sigma_norm, laplacian, solve_scattered)


class ExperimentError(RuntimeError):
    pass


def _key(V: Potential) -> tuple:
    return (V.n,) + tuple((b.center, b.radius, b.amplitude) for b in V.bumps)


class _SolveCache:
    """Solve each distinct potential once per grid."""

    def __init__(self, grid: SpaceTimeGrid, eps: float | None, sigma_max: float, offsets: Sequence[float]):
        self.grid, self.eps, self.sigma_max, self.offsets = grid, eps, sigma_max, tuple(offsets)
        self.store: dict[tuple, WaveField] = {}

    def __call__(self, V: Potential) -> WaveField:
        k = _key(V)
        if k not in self.store:
            self.store[k] = solve_scattered(V, self.grid, self.eps, sigma_max=self.sigma_max, offsets=self.offsets)
        return self.store[k]


# -- stability --------------------------------------------------------------------------

@dataclass
class PairRecord:
    v1: str
    v2: str
    dV: float
    w_norm: float
    ratio: float
    skipped: str = ""

    def as_row(self) -> dict:
        return {"V1": self.v1, "V2": self.v2, "dV_L2B": self.dV, "w_H1Sigma": self.w_norm,
                "ratio": self.ratio, "skipped": self.skipped}


@dataclass
class StabilityReport:
    records: list[PairRecord]
    summary: dict
    provenance: dict = field(default_factory=dict)


def run_stability(pairs: Sequence[tuple[Potential, Potential]], grid: SpaceTimeGrid, eps: float | None = None,
                  *, offset: float = 4.0, sigma_max: float = 40.0, rel_floor: float = 1e-3,
                  w_floor: float = 1e-10) -> StabilityReport:
    """||V1 - V2||_{L2(B)} / ||w||_{H1(Sigma)} for each pair.

    Pairs are skipped when ||V1 - V2|| < rel_floor * max(||V1||, ||V2||) or the
    Sigma norm is at the solver floor."""
    if grid.T <= 6:
        raise ExperimentError(f"stability needs T > 6, grid has T = {grid.T}")
    eps = 4 * grid.h if eps is None else eps
    solve = _SolveCache(grid, eps, sigma_max, offsets=())
    recs = []
    for V1, V2 in pairs:
        dV = l2_norm_B(V1.minus(V2), grid)
        scale = max(l2_norm_B(V1, grid), l2_norm_B(V2, grid))
        if scale == 0 or dV < rel_floor * scale:
            recs.append(PairRecord(V1.label, V2.label, dV, 0.0, math.nan, "potentials coincide"))
            continue
        w = solve(V1) - solve(V2)
        wn = h1_sigma_norm(boundary_trace(w, offset), grid, offset)
        if wn <= w_floor:
            recs.append(PairRecord(V1.label, V2.label, dV, wn, math.nan, "trace at solver floor"))
            continue
        recs.append(PairRecord(V1.label, V2.label, dV, wn, dV / wn))
    ratios = [r.ratio for r in recs if not r.skipped]
    summary = {"pairs": len(recs), "used": len(ratios)}
    if ratios:
        summary.update({"C_emp": max(ratios), "min_ratio": min(ratios),
                        "spread": max(ratios) / min(ratios),
                        "all_finite": all(math.isfinite(r) and r > 0 for r in ratios)})
    prov = {"h": grid.h, "dt": grid.dt, "L": grid.L, "T": grid.T, "t0": grid.t0, "n": grid.n, "eps": eps,
            "offset": offset, "sigma_max": sigma_max}
    return StabilityReport(recs, summary, prov)


def ensemble_pairs(count: int, seed: int, n: int = 2, **kw) -> list[tuple[Potential, Potential]]:
    """count disjoint pairs (E0, E1), (E2, E3), ... from a seeded ensemble."""
    ens = random_ensemble(2 * count, seed, n=n, **kw)
    return [(ens[2 * i], ens[2 * i + 1]) for i in range(count)]


def stability_refinement(count: int = 10, seed: int = 0, hs: Sequence[float] = (1 / 32, 1 / 64), T: float = 6.5,
                         n: int = 2, **kw) -> dict:
    """C_emp at each h and the relative change between the last two."""
    pairs = ensemble_pairs(count, seed, n=n)
    reps = {}
    for h in hs:
        reps[h] = run_stability(pairs, build_grid(n=n, h=h, T=T), **kw)
    C = [reps[h].summary.get("C_emp", math.nan) for h in hs]
    return {"h": list(hs), "C_emp": C, "rel_change": abs(C[-1] - C[-2]) / C[-2] if len(C) > 1 else 0.0,
            "reports": reps}


def stability_T_dependence(count: int = 10, seed: int = 0, Ts: Sequence[float] = (6.5, 8.0), h: float = 1 / 32,
                           n: int = 2, **kw) -> dict:
    """C_emp(T) for the same ensemble; recorded, not asserted."""
    pairs = ensemble_pairs(count, seed, n=n)
    out = {}
    for T in Ts:
        out[T] = run_stability(pairs, build_grid(n=n, h=h, T=T), **kw).summary.get("C_emp", math.nan)
    return out


# -- characteristic data law -----------------------------------------------------------

def characteristic_law_check(V: Potential, grid: SpaceTimeGrid, eps: float | None = None, *,
                             offset: float = 8.0, method: str = "integral", datum_frac: float = 0.1,
                             sigma_max: float = 40.0) -> dict:
    """Solver trace on t = x_n against the exact datum -1/2 int_{-inf}^{x_n} V.

    Errors are taken over nodes of B where |datum| exceeds datum_frac of its
    max: the pointwise relative error and the max error scaled by max |datum|."""
    eps = 4 * grid.h if eps is None else eps
    f = solve_scattered(V, grid, eps, sigma_max=sigma_max, offsets=(offset,))
    tr = characteristic_trace(f, offset, method)
    datum = -0.5 * halfline_integral_grid(V, grid)
    peak = float(np.abs(datum[grid.inside_ball]).max()) if V.bumps else 0.0
    sel = grid.inside_ball & tr.valid & (np.abs(datum) > datum_frac * peak)
    if peak == 0 or not sel.any():
        return {"offset": offset, "method": method, "nodes": 0, "rel_error": math.nan,
                "scaled_error": float(np.abs(tr.w[grid.inside_ball]).max()), "trace": tr.w, "datum": datum}
    err = np.abs(tr.w - datum)[sel]
    return {"offset": offset, "method": method, "nodes": int(sel.sum()), "tau1": tr.tau1,
            "rel_error": float(np.max(err / np.abs(datum[sel]))), "scaled_error": float(err.max() / peak),
            "trace": tr.w, "datum": datum}


# -- trace recovery ---------------------------------------------------------------------

@dataclass
class TraceRecovery:
    dV_rec: np.ndarray
    dV_true: np.ndarray
    rel_error: float
    abs_error: float
    rel_error_alt: float
    alt_consistency: float
    rel_error_literal_sign: float
    offset: float
    tau1: float


def _rel_l2(a: np.ndarray, b: np.ndarray, grid: SpaceTimeGrid) -> tuple[float, float]:
    err = math.sqrt(max(quad((a - b) ** 2, "B", grid), 0.0))
    ref = math.sqrt(max(quad(b**2, "B", grid), 0.0))
    return (err / ref if ref > 0 else math.nan), err


def recover_difference(w: WaveField, offset: float = 4.0) -> tuple[np.ndarray, float]:
    """Data-only estimate of V1 - V2 from the Gamma accumulators of w."""
    g = w.grid
    acc = w.gamma[float(offset)]
    phi = float(ndtr(acc.tau1 / w.eps))
    dn = np.gradient(acc.G, g.h, axis=-1, edge_order=2)
    return (laplacian(acc.I, g.h) - 2.0 * dn) / phi, acc.tau1


def run_trace_recovery(V1: Potential, V2: Potential, grid: SpaceTimeGrid, eps: float | None = None, *,
                       offset: float = 4.0, sigma_max: float = 40.0) -> TraceRecovery:
    """Recover V1 - V2 on B from characteristic-surface data of w = u1 - u2."""
    eps = 4 * grid.h if eps is None else eps
    solve = _SolveCache(grid, eps, sigma_max, offsets=(offset,))
    f1 = solve(V1)
    f2 = solve(V2)
    w = f1 - f2
    rec, tau1 = recover_difference(w, offset)
    true = V1.minus(V2).on(grid)
    mask = grid.inside_ball
    rec = np.where(mask, rec, 0.0)
    rel, err = _rel_l2(rec, true, grid)
    # second path: -2 d/dx_n of the combined characteristic trace
    tr = characteristic_trace_parts([(1.0, f1), (-1.0, f2)], offset, "integral")
    alt = np.where(mask, -2.0 * np.gradient(tr.w, grid.h, axis=-1, edge_order=2), 0.0)
    rel_alt, _ = _rel_l2(alt, true, grid)
    cons, _ = _rel_l2(alt, rec, grid) if np.any(rec) else (math.nan, 0.0)
    rel_lit, _ = _rel_l2(-rec, true, grid)
    return TraceRecovery(rec, true, rel, err, rel_alt, cons, rel_lit, offset, tau1)


def recovery_scaling(V: Potential, grid: SpaceTimeGrid, factors: Sequence[float] = (0.5, 1.0, 2.0), **kw) -> dict:
    """Recovered ||dV_rec|| / (factor * ||V||) for scaled copies of V against 0."""
    zero = make_potential([], n=V.n, label="0")
    out = {}
    base = l2_norm_B(V, grid)
    for c in factors:
        r = run_trace_recovery(V.scaled(c), zero, grid, **kw)
        out[c] = math.sqrt(max(quad(r.dV_rec**2, "B", grid), 0.0)) / (abs(c) * base)
    return out


# -- uniqueness sanity -------------------------------------------------------------------

def run_uniqueness_sanity(V: Potential, grid: SpaceTimeGrid, eps: float | None = None, *,
                          rotation: float = 0.37, offset: float = 4.0, sigma_max: float = 40.0) -> dict:
    """Identical potentials give identical data.

    - two solves on the same grid: Sigma traces must agree exactly
    - a second solve read out on rotated probe points: probe-independent
      quantities (H1(Sigma) norm, per-time sphere L2 norms) must agree to
      interpolation accuracy
    """
    eps = 4 * grid.h if eps is None else eps
    a = solve_scattered(V, grid, eps, sigma_max=sigma_max, offsets=())
    b = solve_scattered(V, grid, eps, sigma_max=sigma_max, offsets=())
    det = float(np.abs(a.sigma_u - b.sigma_u).max())
    g_rot = build_grid(grid.n, grid.L, grid.h, grid.dt / grid.h, grid.t0, grid.T, grid.sponge_width,
                       sphere_rotation=rotation)
    c = solve_scattered(V, g_rot, eps, sigma_max=sigma_max, offsets=())
    na = h1_sigma_norm(boundary_trace(a, offset), grid, offset)
    nc = h1_sigma_norm(boundary_trace(c, offset), g_rot, offset)
    wa, wc = grid.sphere.weights, g_rot.sphere.weights
    sa = np.sqrt(np.maximum(a.sigma_u**2 @ wa, 0))
    sc = np.sqrt(np.maximum(c.sigma_u**2 @ wc, 0))
    scale = float(sa.max())
    return {
        "determinism_max_diff": det,
        "h1_norm": na, "h1_norm_rotated": nc,
        "h1_rel_diff": abs(na - nc) / na if na > 0 else 0.0,
        "sphere_norm_rel_diff": float(np.abs(sa - sc).max() / scale) if scale > 0 else 0.0,
    }


def eps_sensitivity(V: Potential, grid: SpaceTimeGrid, eps_factors: tuple[float, float] = (4.0, 8.0), *,
                    sigma_max: float = 40.0, settle: float = 4.0) -> dict:
    """Sigma-trace change between two pulse widths against the O(eps^2) estimate
    (eps2^2 - eps1^2)/2 * max |u_tt| on the settled region t - x_n >= settle*eps2."""
    e1, e2 = (f * grid.h for f in eps_factors)
    a = solve_scattered(V, grid, e1, sigma_max=sigma_max, offsets=())
    b = solve_scattered(V, grid, e2, sigma_max=sigma_max, offsets=())
    tau = grid.times[:, None] - grid.sphere.points[None, :, -1]
    settled = tau >= settle * e2
    if not settled.any():
        raise ExperimentError("no settled Sigma samples for this eps pair")
    utt = np.gradient(np.gradient(a.sigma_u, grid.dt, axis=0), grid.dt, axis=0)
    diff = float(np.abs(a.sigma_u - b.sigma_u)[settled].max())
    bound = 0.5 * (e2**2 - e1**2) * float(np.abs(utt)[settled].max())
    return {"eps": [e1, e2], "max_diff": diff, "bound": bound, "ratio": diff / bound if bound > 0 else math.nan}
