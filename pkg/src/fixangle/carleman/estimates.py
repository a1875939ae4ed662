"""Quadrature of the Carleman inequality, the integration-by-parts identity,
the J-decomposition and the two energy estimates.

All weighted integrals share the exponent offset off = 2 s max_Q phi: the
weight is evaluated as exp(2 s phi - off) and the offset is stored next to
the scaled value, so log(integral) = log(scaled) + off.  Ratios never need
the unscaled numbers.

Surface conventions: Gamma = {t = x_n} carries dS = sqrt(2) dx, the top
slice {t = T} carries dx, e = e_n.  The Gamma-boundary term D0 is computed
twice: as printed in the appendix (19 terms) and in the corrected form that
the divergence theorem produces (terms 1, 2 and 14 differ).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from numpy.typing import NDArray

from .operators import Derivs, apply_P, apply_Ps_minus, apply_Ps_plus, weight_jet
from .quadrature import AnalyticRules
from .testfunc import TestFunction
from .weight import CarlemanWeight, WeightEval, eval_weight

Array = NDArray[np.float64]

SQ2 = math.sqrt(2.0)


class EstimateError(RuntimeError):
    pass


@dataclass
class EstimateReport:
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def _split(points: Array, n: int) -> tuple[Array, Array]:
    return points[:, :n], points[:, n]


def _v_derivs(tf: TestFunction, points: Array) -> Derivs:
    return Derivs.from_jet(tf.jet(points))


def _grad_phi_rate(W: WeightEval) -> Array:
    return np.sqrt(np.sum(W.dphi**2, axis=-1))


# --------------------------------------------------------------------------
# Carleman inequality

_SIDE_KEYS = ("lhs", "vol", "sigma", "top", "vol_V", "mass")


def carleman_sides_multi(tf: TestFunction, wt: CarlemanWeight, s_values: Iterable[float],
                         rules: AnalyticRules, potential: Callable[[Array], Array] | None = None,
                         potential_sup: float = 1.0, resolution_limit: float = 8.0) -> list[dict]:
    """Both sides of the Carleman inequality for several s in one pass.

    LHS   s int_Q w (|grad v|^2 + v_t^2 + s^2 v^2)
    vol   int_Q w |Pv|^2
    sigma s int_Sigma w (|grad v|^2 + v_t^2 + s^2 v^2)
    top   s int_B w(x,T) (same energy at t = T)

    with w = exp(2 s phi - off).  With a potential V the extra volume term
    int_Q w |Pv + V v|^2 is returned as vol_V.
    """
    s_values = [float(s) for s in s_values]
    n = wt.n
    offs = [wt.with_s(s).exponent_offset for s in s_values]
    acc = [dict.fromkeys(_SIDE_KEYS, 0.0) for _ in s_values]
    max_rate = 0.0

    def energy(d: Derivs, s: float) -> Array:
        return np.sum(d.grad**2, axis=-1) + d.vt**2 + s**2 * d.v**2

    for pts, w in rules.q_chunks():
        x, t = _split(pts, n)
        W = eval_weight(wt, x, t)
        d = _v_derivs(tf, pts)
        Pv = apply_P(d)
        PVv = Pv + potential(x) * d.v if potential is not None else None
        max_rate = max(max_rate, float(np.max(_grad_phi_rate(W))))
        for k, s in enumerate(s_values):
            ew = w * np.exp(2 * s * W.phi - offs[k])
            acc[k]["lhs"] += s * float(np.sum(ew * energy(d, s)))
            acc[k]["vol"] += float(np.sum(ew * Pv**2))
            acc[k]["mass"] += float(np.sum(ew * d.v**2))
            if PVv is not None:
                acc[k]["vol_V"] += float(np.sum(ew * PVv**2))
    for pts, w, _nu in rules.sigma_chunks():
        x, t = _split(pts, n)
        W = eval_weight(wt, x, t)
        d = _v_derivs(tf, pts)
        for k, s in enumerate(s_values):
            ew = w * np.exp(2 * s * W.phi - offs[k])
            acc[k]["sigma"] += s * float(np.sum(ew * energy(d, s)))
    pts, w = rules.top
    x, t = _split(pts, n)
    W = eval_weight(wt, x, t)
    d = _v_derivs(tf, pts)
    for k, s in enumerate(s_values):
        ew = w * np.exp(2 * s * W.phi - offs[k])
        acc[k]["top"] += s * float(np.sum(ew * energy(d, s)))

    rows = []
    for k, s in enumerate(s_values):
        a = acc[k]
        rhs = a["vol"] + a["sigma"] + a["top"]
        if rhs == 0.0 and a["lhs"] > 0.0:
            raise EstimateError(f"{tf.name}: RHS vanishes with LHS > 0 at s={s} (inequality violation candidate)")
        cell_factor = 2 * s * max_rate * rules.h
        row = {
            "function": tf.name, "s": s, "offset": offs[k],
            "lhs": a["lhs"], "vol": a["vol"], "sigma": a["sigma"], "top": a["top"], "rhs": rhs,
            "ratio": a["lhs"] / rhs if rhs > 0 else math.nan,
            "log_lhs": _log(a["lhs"]) + offs[k], "log_rhs": _log(rhs) + offs[k],
            "log_cell_variation": cell_factor,
            "underresolved": bool(cell_factor > resolution_limit),
        }
        if potential is not None:
            bound = 2 * (a["vol"] + potential_sup**2 * a["mass"])
            rhs_V = a["vol_V"] + a["sigma"] + a["top"]
            row.update({"vol_V": a["vol_V"], "vol_V_bound": bound,
                        "vol_V_within_bound": bool(a["vol_V"] <= bound * (1 + 1e-12)),
                        "ratio_V": a["lhs"] / rhs_V if rhs_V > 0 else math.nan})
        rows.append(row)
    return rows


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def carleman_sides(tf: TestFunction, wt: CarlemanWeight, rules: AnalyticRules, **kw) -> dict:
    return carleman_sides_multi(tf, wt, [wt.s], rules, **kw)[0]


def carleman_sweep(suite: list[TestFunction], wt: CarlemanWeight, s_values: Iterable[float],
                   rules: AnalyticRules, spread_limit: float = 2.0, **kw) -> EstimateReport:
    """Per-s max ratio over the suite and its spread max/min across s."""
    s_values = _ascending(s_values)
    rows = [row for tf in suite for row in carleman_sides_multi(tf, wt, s_values, rules, **kw)]
    return summarize_sweep(rows, s_values, spread_limit)


def _ascending(s_values: Iterable[float]) -> list[float]:
    s_values = [float(s) for s in s_values]
    if any(b <= a for a, b in zip(s_values, s_values[1:])):
        raise EstimateError("s_values must be strictly ascending")
    return s_values


def summarize_sweep(rows: list[dict], s_values: Iterable[float], spread_limit: float = 2.0) -> EstimateReport:
    """Drop 0/0 rows and reduce to the per-s maxima, C_emp and the spread."""
    s_values = _ascending(s_values)
    rep = EstimateReport([r for r in rows if not (r["lhs"] == 0.0 and r["rhs"] == 0.0)])
    per_s = {}
    for s in s_values:
        r = [row["ratio"] for row in rep.rows if row["s"] == s]
        if r:
            per_s[s] = float(max(r))
    summary = {"per_s_max_ratio": per_s, "underresolved": any(r["underresolved"] for r in rep.rows)}
    if per_s:
        vals = list(per_s.values())
        summary.update({
            "C_emp": max(vals),
            "spread": max(vals) / min(vals) if min(vals) > 0 else math.inf,
            "finite": all(math.isfinite(v) and v > 0 for v in vals),
        })
        summary["uniform"] = bool(summary["finite"] and summary["spread"] <= spread_limit)
    if any("ratio_V" in r for r in rep.rows):
        summary["per_s_max_ratio_V"] = {s: float(max(row["ratio_V"] for row in rep.rows if row["s"] == s))
                                        for s in per_s}
        summary["vol_V_within_bound"] = all(r["vol_V_within_bound"] for r in rep.rows)
    rep.summary = summary
    return rep


# --------------------------------------------------------------------------
# conjugated quantities

@dataclass
class _Conj:
    """z = exp(s phi - off/2) v and the weight at a set of points."""

    W: WeightEval
    z: Derivs

    @property
    def m(self) -> Array:
        return self.W.phi_t**2 - np.sum(self.W.grad_phi**2, axis=-1)


def _conj(tf: TestFunction, wt: CarlemanWeight, pts: Array, off: float) -> _Conj:
    x, t = _split(pts, wt.n)
    W = eval_weight(wt, x, t)
    zj = weight_jet(wt, W, wt.s, 0.5 * off) * tf.jet(pts)
    return _Conj(W, Derivs.from_jet(zj))


def _dot(a: Array, b: Array) -> Array:
    return np.sum(a * b, axis=-1)


def _quad_form(M: Array, a: Array, b: Array) -> Array:
    return np.einsum("...i,...ij,...j->...", a, M, b)


def _volume_terms(c: _Conj, wt: CarlemanWeight, eta: float) -> dict[str, Array]:
    s, lam = wt.s, wt.lam
    W, z = c.W, c.z
    n = wt.n
    Pp = apply_Ps_plus(z, W, s)
    Pm = apply_Ps_minus(z, W, s)
    gphi, gphit = W.grad_phi, W.grad_phi_t
    Hx = W.hess_phi_x
    J1 = 2 * s * (W.phi_tt * z.vt**2 - 2 * z.vt * _dot(z.grad, gphit) + _quad_form(Hx, z.grad, z.grad))
    J2 = 2 * s**3 * z.v**2 * (W.phi_t**2 * W.phi_tt + _quad_form(Hx, gphi, gphi)
                               - 2 * W.phi_t * _dot(gphi, gphit))
    J3 = -0.5 * s * z.v**2 * W.box2_phi

    pt, gp = W.psi_t, W.grad_psi
    ptt = W.psi_tt
    Hpsi = W.hess_psi_x
    gpt = np.zeros(n)
    gpt[-1] = W.psi_tn  # grad_x psi_t
    sl = s * lam * W.phi
    gz_gp = _dot(z.grad, gp)
    gp2 = _dot(gp, gp)
    # J1 as expanded in the appendix (mixed psi_tn term absent) and with it
    J1_printed = 2 * sl * ((ptt + lam * pt**2) * z.vt**2 - 2 * lam * pt * z.vt * gz_gp
                           + _quad_form(Hpsi, z.grad, z.grad) + lam * gz_gp**2)
    J1_full = J1_printed - 4 * sl * z.vt * _dot(z.grad, np.broadcast_to(gpt, z.grad.shape))
    b = W.b
    J2_printed = (2 * sl**3 * (ptt * pt**2 + _quad_form(Hpsi, gp, gp)) * z.v**2
                  + 2 * lam * sl**3 * b**2 * z.v**2)
    J2_printed_first = (2 * s**3 * (s * lam**2 * W.phi) ** 3 * pt**2 * (ptt + lam * pt**2) * z.v**2
                        - 4 * s**3 * lam**4 * W.phi**3 * pt**2 * gp2 * z.v**2
                        + 2 * s**3 * lam**3 * W.phi**3 * (_quad_form(Hpsi, gp, gp) + lam * gp2**2) * z.v**2)
    J2_full = J2_printed - 4 * sl**3 * pt * (gp[..., -1] * W.psi_tn) * z.v**2
    return {
        "lhs": Pp * Pm, "J1": J1, "J2": J2, "J3": J3,
        "J1_printed": J1_printed, "J1_expanded_full": J1_full,
        "J2_printed": J2_printed, "J2_printed_first": J2_printed_first, "J2_expanded_full": J2_full,
        "J2_lower": 2 * lam * sl**3 * b**2 * z.v**2,
        "A_grad": sl * _dot(z.grad, z.grad), "A_t": sl * z.vt**2,
        "sl_z2": sl * z.v**2, "sl2_z2": sl**2 * z.v**2,
        "Pplus2": Pp**2,
        "measure": np.ones_like(b), "Q_eta": (np.abs(b) <= eta * gp2).astype(float),
        "J3_C": np.abs(W.box2_phi) / (2 * lam**3 * W.phi),
    }


_MAX_KEYS = ("J3_C",)


def _surface_terms_sigma(c: _Conj, nu: Array, wt: CarlemanWeight) -> Array:
    s = wt.s
    W, z = c.W, c.z
    dnu_phi = _dot(W.grad_phi, nu)
    dnu_z = _dot(z.grad, nu)
    gz2 = _dot(z.grad, z.grad)
    cc = W.box_phi
    dnu_c = _dot(W.grad_box_phi, nu)
    first = dnu_phi * gz2 - 2 * _dot(z.grad, W.grad_phi) * dnu_z + (2 * W.phi_t * z.vt * dnu_z - z.vt**2 * dnu_phi)
    second = z.v * dnu_z * cc + s**2 * dnu_phi * z.v**2 * c.m - 0.5 * z.v**2 * dnu_c
    return s * (first + second)


def _d0_terms(top: _Conj, gam: _Conj, wt: CarlemanWeight) -> tuple[list[Array], list[Array], list[Array], list[Array]]:
    """Pointwise D0 integrands (top list, Gamma list) as printed and corrected.

    Gamma integrands are to be integrated against dS."""
    s = wt.s

    def parts(c: _Conj):
        W, z = c.W, c.z
        return dict(zt=z.vt, z=z.v, gz=z.grad, zn=z.grad[..., -1], pt=W.phi_t, gphi=W.grad_phi,
                    gn=W.grad_phi[..., -1], cc=W.box_phi, ct=W.box_phi_t, cn=W.grad_box_phi[..., -1],
                    m=c.m, phi=W.phi)

    T = parts(top)
    G = parts(gam)
    gz2_T = _dot(T["gz"], T["gz"])
    gz2_G = _dot(G["gz"], G["gz"])
    top_terms = {
        2: -(1 / SQ2) * s * T["zt"] ** 2 * T["pt"],
        3: 2 * s * T["zt"] * _dot(T["gphi"], T["gz"]),
        7: -s * T["zt"] * T["cc"] * T["z"],
        8: 0.5 * s * T["z"] ** 2 * T["ct"],
        11: -s * gz2_T * T["pt"],
        17: -s**3 * T["m"] * T["pt"] * T["z"] ** 2,
    }
    gam_terms = {
        1: s * G["zt"] ** 2 * G["pt"],
        4: -(2 * s / SQ2) * G["zt"] * _dot(G["gphi"], G["gz"]),
        5: -(s / SQ2) * G["zt"] ** 2 * G["gn"],
        6: (s / SQ2) * G["zt"] * G["cc"] * G["z"],
        9: -(s / (2 * SQ2)) * G["z"] ** 2 * G["ct"],
        10: (2 * s / SQ2) * G["zn"] * G["zt"] * G["pt"],
        12: (s / SQ2) * gz2_G * G["pt"],
        13: -(2 * s / SQ2) * G["zn"] * _dot(G["gz"], G["gphi"]),
        14: -(s / SQ2) * G["zn"] * G["phi"] ** 2,
        15: (s / SQ2) * G["zn"] * G["cc"] * G["z"],
        16: -(s / (2 * SQ2)) * G["z"] ** 2 * G["cn"],
        18: (s**3 / SQ2) * G["m"] * G["pt"] * G["z"] ** 2,
        19: (s**3 / SQ2) * G["m"] * G["gn"] * G["z"] ** 2,
    }
    top_fix = dict(top_terms)
    gam_fix = dict(gam_terms)
    gam_fix[1] = (s / SQ2) * G["zt"] ** 2 * G["pt"]
    top_fix[2] = -s * T["zt"] ** 2 * T["pt"]
    gam_fix[14] = (s / SQ2) * gz2_G * G["gn"]
    return top_terms, gam_terms, top_fix, gam_fix


def _rel_residual(lhs: float, rhs: float, floor: float) -> float:
    return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + floor)


def ibp_identity_check(tf: TestFunction, wt: CarlemanWeight, rules: AnalyticRules,
                       eta: float = 0.1, floor: float = 1e-300, resolution_limit: float = 8.0) -> dict:
    """(P_s^+ z, P_s^- z) against J1 + J2 + J3 + B0 + D0 by quadrature.

    Returns every volume and boundary term, D0 per term (as printed and
    corrected), both residuals, and the J-decomposition diagnostics."""
    off = wt.exponent_offset
    vol: dict[str, float] = {}
    vmax: dict[str, float] = {}
    max_rate = 0.0
    for pts, w in rules.q_chunks():
        c = _conj(tf, wt, pts, off)
        max_rate = max(max_rate, float(np.max(_grad_phi_rate(c.W))))
        for k, arr in _volume_terms(c, wt, eta).items():
            if k in _MAX_KEYS:
                vmax[k] = max(vmax.get(k, 0.0), float(np.max(arr)))
            else:
                vol[k] = vol.get(k, 0.0) + float(np.sum(w * arr))
    B0 = 0.0
    for pts, w, nu in rules.sigma_chunks():
        B0 += float(np.sum(w * _surface_terms_sigma(_conj(tf, wt, pts, off), nu, wt)))
    tp, tw = rules.top
    gp, gw = rules.gamma
    top_terms, gam_terms, top_fix, gam_fix = _d0_terms(_conj(tf, wt, tp, off), _conj(tf, wt, gp, off), wt)

    def integrate(tt, gg):
        out = {k: float(np.sum(tw * v)) for k, v in tt.items()}
        out.update({k: float(np.sum(gw * v)) for k, v in gg.items()})
        return dict(sorted(out.items()))

    d0_printed = integrate(top_terms, gam_terms)
    d0_fixed = integrate(top_fix, gam_fix)
    D0p = sum(d0_printed.values())
    D0 = sum(d0_fixed.values())
    lhs = vol["lhs"]
    J = vol["J1"] + vol["J2"] + vol["J3"]
    rhs = J + B0 + D0
    rhs_p = J + B0 + D0p
    cell_factor = 2 * wt.s * max_rate * rules.h
    return {
        "function": tf.name, "s": wt.s, "lam": wt.lam, "h": rules.h, "offset": off,
        "lhs": lhs, "J1": vol["J1"], "J2": vol["J2"], "J3": vol["J3"], "B0": B0,
        "D0": D0, "D0_printed": D0p, "rhs": rhs, "rhs_printed": rhs_p,
        "residual": _rel_residual(lhs, rhs, floor),
        "residual_printed": _rel_residual(lhs, rhs_p, floor),
        "d0_terms": d0_fixed, "d0_terms_printed": d0_printed,
        "j": {k: vol[k] for k in ("J1_printed", "J1_expanded_full", "J2_printed", "J2_printed_first",
                                  "J2_expanded_full", "J2_lower", "A_grad", "A_t", "sl_z2", "sl2_z2",
                                  "Pplus2", "measure", "Q_eta")},
        "J3_C": vmax["J3_C"],
        "log_cell_variation": cell_factor,
        "underresolved": bool(cell_factor > resolution_limit),
    }


def b_psi(wt: CarlemanWeight, x: Array, t: Array) -> Array:
    """b(psi) = psi_t^2 - |grad_x psi|^2."""
    return eval_weight(wt, np.asarray(x, float), np.asarray(t, float)).b


def j_terms(tf: TestFunction, wt: CarlemanWeight, rules: AnalyticRules, eta: float = 0.1,
            ibp: dict | None = None) -> dict:
    """J1, J2, J3 with the printed expansions, b(psi) statistics, the Q^eta
    fraction and the J3 magnitude bound."""
    r = ibp if ibp is not None else ibp_identity_check(tf, wt, rules, eta=eta)
    j = r["j"]
    lam = wt.lam
    n = wt.n
    bs = []
    for pts, _w in rules.q_chunks():
        x, t = _split(pts, n)
        bs.append((float(b_psi(wt, x, t).min()), float(b_psi(wt, x, t).max())))
    C = r["J3_C"]
    J3_bound = C * lam**2 * j["sl_z2"]
    denom = 4 * j["A_t"]
    return {
        "function": tf.name, "s": wt.s,
        "J1": r["J1"], "J2": r["J2"], "J3": r["J3"],
        "J1_printed": j["J1_printed"], "J1_expanded_full": j["J1_expanded_full"],
        "J1_printed_gap": r["J1"] - j["J1_printed"],
        "J2_printed": j["J2_printed"], "J2_printed_first": j["J2_printed_first"],
        "J2_expanded_full": j["J2_expanded_full"], "J2_printed_gap": r["J2"] - j["J2_printed"],
        "J2_lower": j["J2_lower"], "J2_above_lower": bool(r["J2"] >= j["J2_lower"]),
        "b_min": min(b[0] for b in bs), "b_max": max(b[1] for b in bs),
        "Q_eta_fraction": j["Q_eta"] / j["measure"] if j["measure"] else math.nan,
        "eta": eta,
        "J3_C": C, "J3_bound": J3_bound, "J3_within_bound": bool(abs(r["J3"]) <= J3_bound * (1 + 1e-12)),
        "beta_needed": (4 * j["A_grad"] - r["J1"]) / denom if denom > 0 else math.nan,
    }


def beta_fit(rows: list[dict]) -> float:
    """Smallest beta making J1 >= 4 int s lam phi |grad z|^2 - 4 beta int s lam phi |z'|^2
    over all rows."""
    vals = [r["beta_needed"] for r in rows if math.isfinite(r["beta_needed"])]
    return max(vals) if vals else math.nan


# --------------------------------------------------------------------------
# energy estimates

def _energy(d: Derivs, s: float = 1.0) -> Array:
    return np.sum(d.grad**2, axis=-1) + d.vt**2 + s**2 * d.v**2


def energy_check_T(tf: TestFunction, rules: AnalyticRules, tau: float | None = None) -> dict:
    """Slice energy at t = tau (default T) against Gamma + volume + Sigma terms."""
    tau = rules.T if tau is None else float(tau)
    if not 1.0 < tau <= rules.T:
        raise EstimateError(f"tau must lie in (1, T], got {tau}")
    pts, w = rules.slice(tau)
    lhs = float(np.sum(w * _energy(_v_derivs(tf, pts))))
    gp, gw = rules.gamma
    gam = float(np.sum(gw * _energy(_v_derivs(tf, gp))))
    vol = sum(float(np.sum(w * apply_P(_v_derivs(tf, p)) ** 2)) for p, w in rules.q_chunks())
    sig = sum(float(np.sum(w * _energy(_v_derivs(tf, p)))) for p, w, _ in rules.sigma_chunks())
    return _energy_row(tf.name, lhs, {"gamma": gam, "vol": vol, "sigma": sig}, tau=tau)


def energy_check_char(tf: TestFunction, wt: CarlemanWeight, rules: AnalyticRules) -> dict:
    """Weighted Gamma energy against weighted volume and Sigma terms."""
    s = wt.s
    n = wt.n
    off = wt.exponent_offset

    def weight(p):
        x, t = _split(p, n)
        return np.exp(2 * s * eval_weight(wt, x, t).phi - off)

    gp, gw = rules.gamma
    lhs = float(np.sum(gw * weight(gp) * _energy(_v_derivs(tf, gp), s)))
    vol_e = vol_p = 0.0
    for p, w in rules.q_chunks():
        d = _v_derivs(tf, p)
        ew = w * weight(p)
        vol_e += s * float(np.sum(ew * _energy(d, s)))
        vol_p += float(np.sum(ew * apply_P(d) ** 2))
    sig_e = sig_n = 0.0
    for p, w, nu in rules.sigma_chunks():
        d = _v_derivs(tf, p)
        ew = w * weight(p)
        sig_e += s * float(np.sum(ew * (np.sum(d.grad**2, axis=-1) + s**2 * d.v**2)))
        sig_n += float(np.sum(ew * _dot(d.grad, nu) ** 2))
    return _energy_row(tf.name, lhs, {"vol_energy": vol_e, "vol_P": vol_p, "sigma": sig_e, "sigma_dnu": sig_n},
                       s=s, offset=off)


def _energy_row(name: str, lhs: float, parts: dict, **extra) -> dict:
    rhs = sum(parts.values())
    if rhs == 0.0 and lhs > 0.0:
        raise EstimateError(f"{name}: zero RHS with nonzero LHS")
    row = {"function": name, "lhs": lhs, **parts, "rhs": rhs,
           "ratio": lhs / rhs if rhs > 0 else math.nan}
    row.update(extra)
    return row
