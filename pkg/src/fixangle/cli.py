"""Command-line front end.

    fixangle <command> [--config FILE] [--out DIR] [--jobs N]

Artifacts go to <root>/<name>/<command>/ where root comes from --out, then
$FIXANGLE_OUTPUT_ROOT, then output.root in the config.  Exit codes: 0 success,
2 config error, 3 numerical-check failure, 4 runtime error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import carleman as cm
from . import io
from .config import ConfigError, ExperimentConfig, load_config
from .experiments import (characteristic_law_check, ensemble_pairs, run_stability, run_trace_recovery,
                          run_uniqueness_sanity)
from .freqbridge import born_far_field, directions, far_field, time_to_frequency
from .grid import SpaceTimeGrid, build_grid
from .potential import Potential, make_potential, random_ensemble
from .wavesolver import boundary_trace, solve_scattered

ENV_ROOT = "FIXANGLE_OUTPUT_ROOT"
COMMANDS = ("gen-potential", "solve", "stability", "carleman-verify", "ibp-check", "energy-check",
            "recover-trace", "hs-decay", "farfield", "report")
IBP_TOL = 0.05
HS_DROP = 0.1

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_RUNTIME = 0, 2, 3, 4


class CheckFailed(RuntimeError):
    """A numerical check did not hold; artifacts are still written."""


class Context:
    def __init__(self, cfg: ExperimentConfig, command: str, out: str | None, jobs: int, quiet: bool):
        self.cfg, self.command, self.jobs, self.quiet = cfg, command, max(1, jobs), quiet
        root = out or os.environ.get(ENV_ROOT) or cfg["output"]["root"]
        self.base = Path(root) / cfg["output"]["name"]
        self.dir = self.base / command
        self._grid: SpaceTimeGrid | None = None

    @property
    def grid(self) -> SpaceTimeGrid:
        if self._grid is None:
            self._grid = build_grid(**self.cfg["grid"])
        return self._grid

    @property
    def eps(self) -> float:
        return self.cfg["solver"]["eps_factor"] * self.grid.h

    def meta(self, with_grid: bool = True, **extra) -> dict:
        g = io.grid_meta(self.grid) if with_grid else {}
        return io.metadata(self.cfg.digest, self.command, g, seed=self.cfg["seed"], config_source=self.cfg.source,
                           **extra)

    def log(self, msg: str) -> None:
        if not self.quiet:
            print(msg, flush=True)

    def potential(self) -> Potential:
        p = self.cfg["potential"]
        return make_potential(p["bumps"], n=self.cfg["grid"]["n"], label=p["label"])

    def ensemble_kw(self) -> dict:
        e = self.cfg["ensemble"]
        return {"n_bumps": tuple(int(c) for c in e["count_range"]), "center_radius": e["center_radius"],
                "radius": tuple(e["radius_range"]), "amplitude": tuple(e["amplitude_range"])}

    def weight(self, s: float = 1.0) -> cm.CarlemanWeight:
        c = self.cfg["carleman"]
        return cm.CarlemanWeight(n=self.cfg["grid"]["n"], lam=c["lam"], a=c["a"], T=c["T"], s=s)

    def suite(self) -> list[cm.TestFunction]:
        c = self.cfg["carleman"]
        return cm.random_suite(int(c["suite_size"]), int(c["suite_seed"]), n=self.cfg["grid"]["n"], T=c["T"])

    def rules(self, h: float, p: int) -> cm.AnalyticRules:
        return cm.AnalyticRules(n=self.cfg["grid"]["n"], h=h, p=int(p), T=self.cfg["carleman"]["T"])

    def pmap(self, fn: Callable, items: Sequence) -> list:
        """Order-preserving map over at most --jobs worker processes."""
        if self.jobs <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ProcessPoolExecutor(max_workers=min(self.jobs, len(items))) as ex:
            return list(ex.map(fn, items))


# -- workers (top level so they pickle) ----------------------------------------------

def _sides_task(args):
    tf, wt, s_values, rules = args
    return cm.carleman_sides_multi(tf, wt, s_values, rules)


def _ibp_task(args):
    tf, wt, rules, eta = args
    r = cm.ibp_identity_check(tf, wt, rules, eta=eta)
    return r, cm.j_terms(tf, wt, rules, eta, ibp=r)


def _energy_task(args):
    tf, wt, rules = args
    return cm.energy_check_T(tf, rules), cm.energy_check_char(tf, wt, rules)


# -- commands --------------------------------------------------------------------------

def cmd_gen_potential(ctx: Context) -> None:
    g = ctx.grid
    V = ctx.potential()
    e = ctx.cfg["ensemble"]
    ens = random_ensemble(2 * int(e["pairs"]), int(e["seed"]), n=g.n, **ctx.ensemble_kw())
    desc = {"potential": {"label": V.label, "bumps": V.descriptor()},
            "ensemble": [{"label": p.label, "bumps": p.descriptor()} for p in ens]}
    io.write_json(ctx.dir / "potentials.json", desc, ctx.meta())
    io.write_arrays(ctx.dir / "potential", {"V": V.on(g), "x": g.x}, ctx.meta(), axes={"V": [f"x{i}" for i in range(g.n)]})
    rows = [{"label": p.label, "bump": i, "center": b["center"], "radius": b["radius"], "amplitude": b["amplitude"]}
            for p in [V] + ens for i, b in enumerate(p.descriptor())]
    io.write_csv(ctx.dir / "potentials.csv", rows, ctx.meta())
    ctx.log(f"{len(ens) + 1} potentials -> {ctx.dir}")


def cmd_solve(ctx: Context) -> None:
    g, V = ctx.grid, ctx.potential()
    off = ctx.cfg["solver"]["offset"]
    t = time.perf_counter()
    f = solve_scattered(V, g, ctx.eps, sigma_max=ctx.cfg["solver"]["sigma_max"], offsets=(off,))
    tr = boundary_trace(f, off)
    elapsed = time.perf_counter() - t
    meta = ctx.meta(eps=ctx.eps, offset=off)
    io.write_arrays(ctx.dir / "sigma_trace", {"times": tr.times, "points": tr.sphere.points,
                                               "weights": tr.sphere.weights, "w": tr.sigma_w, "wt": tr.sigma_wt,
                                               "grad": tr.sigma_grad},
                    meta, axes={"w": ["t", "sample"], "grad": ["t", "sample", "component"]})
    arrays = {"u_T": f.u_T, "ut_T": f.ut_T, "x": g.x}
    if tr.gamma is not None:
        arrays.update({"gamma_w": tr.gamma.w, "gamma_wt": tr.gamma.wt, "gamma_valid": tr.gamma.valid})
    io.write_arrays(ctx.dir / "fields", arrays, meta, axes={"u_T": [f"x{i}" for i in range(g.n)]})
    law = characteristic_law_check(V, g, ctx.eps, offset=2 * off,
                                   sigma_max=ctx.cfg["solver"]["sigma_max"]) if V.bumps else None
    summary = {"elapsed_s": elapsed, "max_abs_sigma": float(np.abs(tr.sigma_w).max()),
               "max_abs_u_T": float(np.abs(f.u_T).max())}
    if law is not None:
        summary["characteristic_law"] = {k: law[k] for k in ("offset", "method", "nodes", "rel_error", "scaled_error")}
    io.write_json(ctx.dir / "solve.json", summary, meta)
    rows = [{"t": float(tr.times[i]), "sigma_l2": float(np.sqrt(tr.sigma_w[i] ** 2 @ tr.sphere.weights))}
            for i in range(len(tr.times))]
    io.write_csv(ctx.dir / "sigma_norm.csv", rows, meta)
    ctx.log(f"solve: {elapsed:.1f}s, max|w| on Sigma {summary['max_abs_sigma']:.3e}")


def cmd_stability(ctx: Context) -> None:
    g = ctx.grid
    if g.T <= 6:
        raise ConfigError(f"grid.T: stability requires T > 6, got {g.T}")
    e = ctx.cfg["ensemble"]
    pairs = ensemble_pairs(int(e["pairs"]), int(e["seed"]), n=g.n, **ctx.ensemble_kw())
    rep = run_stability(pairs, g, ctx.eps, offset=ctx.cfg["solver"]["offset"],
                        sigma_max=ctx.cfg["solver"]["sigma_max"])
    meta = ctx.meta(**{"provenance": rep.provenance})
    io.write_csv(ctx.dir / "stability.csv", io.rows_from_records(rep.records), meta)
    io.write_json(ctx.dir / "stability.json", rep.summary, meta)
    ctx.log(f"stability: {rep.summary}")
    if rep.summary.get("used") and not rep.summary.get("all_finite"):
        raise CheckFailed("non-finite or non-positive stability ratio")


_SWEEP_COLS = ("function", "s", "offset", "lhs", "vol", "sigma", "top", "rhs", "ratio", "log_lhs", "log_rhs",
               "log_cell_variation", "underresolved")


def cmd_carleman_verify(ctx: Context) -> None:
    c = ctx.cfg["carleman"]
    geo = cm.geometry_check(c["T"], c["a"], c["lam"])
    s_values = sorted(float(s) for s in c["s"])
    suite = ctx.suite()
    wt = ctx.weight(s_values[0])
    rules = ctx.rules(c["h"], c["p"])
    rows = [r for rs in ctx.pmap(_sides_task, [(tf, wt, s_values, rules) for tf in suite]) for r in rs]
    rep = cm.summarize_sweep(rows, s_values, c["spread_limit"])
    rng = np.random.default_rng(int(ctx.cfg["seed"]))
    pts = cm.random_points_Q(rng, 2000, ctx.cfg["grid"]["n"], c["T"])
    conj = {s: max(cm.conjugation_residual(tf, ctx.weight(s), pts) for tf in suite[:10]) for s in s_values}
    summary = dict(rep.summary)
    summary.update({"geometry": {"ok": geo.ok, "alpha": geo.alpha, "threshold_gap": geo.threshold_gap},
                    "conjugation_residual": conj, "suite_size": len(suite), "s": s_values})
    meta = ctx.meta(with_grid=False, carleman=c)
    io.write_csv(ctx.dir / "carleman_sweep.csv", rep.rows, meta, columns=_SWEEP_COLS)
    io.write_json(ctx.dir / "carleman_summary.json", summary, meta)
    ctx.log(f"carleman sweep: per-s max {rep.summary.get('per_s_max_ratio')}, spread {rep.summary.get('spread')}")
    if not geo.ok:
        raise CheckFailed(f"geometry condition fails for T={c['T']}, a={c['a']}")
    if rep.summary.get("per_s_max_ratio") and not rep.summary["uniform"]:
        raise CheckFailed(f"per-s max ratio spread {rep.summary['spread']:.3g} > {c['spread_limit']}")


def cmd_ibp_check(ctx: Context) -> None:
    c = ctx.cfg["carleman"]
    suite = ctx.suite()[:10]
    wt = ctx.weight(1.0)
    rules = ctx.rules(c["ibp_h"], c["ibp_p"])
    res = ctx.pmap(_ibp_task, [(tf, wt, rules, c["eta"]) for tf in suite])
    rows, jrows, d0rows = [], [], []
    for r, j in res:
        rows.append({k: r[k] for k in ("function", "s", "lam", "h", "lhs", "J1", "J2", "J3", "B0", "D0", "D0_printed",
                                       "rhs", "rhs_printed", "residual", "residual_printed", "underresolved")})
        jrows.append(j)
        for k in r["d0_terms"]:
            d0rows.append({"function": r["function"], "term": k, "corrected": r["d0_terms"][k],
                           "printed": r["d0_terms_printed"].get(k)})
    summary = {"max_residual": max(r["residual"] for r in rows),
               "max_residual_printed": max(r["residual_printed"] for r in rows),
               "tolerance": IBP_TOL, "beta_fit": cm.beta_fit(jrows),
               "J2_above_lower": all(j["J2_above_lower"] for j in jrows),
               "J3_within_bound": all(j["J3_within_bound"] for j in jrows)}
    meta = ctx.meta(with_grid=False, carleman=c)
    io.write_csv(ctx.dir / "ibp_identity.csv", rows, meta)
    io.write_csv(ctx.dir / "j_terms.csv", jrows, meta)
    io.write_csv(ctx.dir / "d0_terms.csv", d0rows, meta)
    io.write_json(ctx.dir / "ibp_summary.json", summary, meta)
    ctx.log(f"ibp: max residual {summary['max_residual']:.3e} (printed D0 form {summary['max_residual_printed']:.3e})")
    if summary["max_residual"] > IBP_TOL:
        raise CheckFailed(f"identity residual {summary['max_residual']:.3g} > {IBP_TOL}")


def cmd_energy_check(ctx: Context) -> None:
    c = ctx.cfg["carleman"]
    suite = ctx.suite()
    wt = ctx.weight(1.0)
    rules = ctx.rules(c["h"], c["p"])
    res = ctx.pmap(_energy_task, [(tf, wt, rules) for tf in suite])
    rows = []
    for a, b in res:
        rows.append({"function": a["function"], "estimate": "near_T", **{k: v for k, v in a.items() if k != "function"}})
        rows.append({"function": b["function"], "estimate": "near_Gamma", **{k: v for k, v in b.items() if k != "function"}})
    ok = all(math.isfinite(r["ratio"]) for r in rows)
    summary = {"max_ratio_T": max(a["ratio"] for a, _ in res), "max_ratio_Gamma": max(b["ratio"] for _, b in res),
               "finite": ok}
    meta = ctx.meta(with_grid=False, carleman=c)
    io.write_csv(ctx.dir / "energy.csv", rows, meta)
    io.write_json(ctx.dir / "energy_summary.json", summary, meta)
    ctx.log(f"energy: {summary}")
    if not ok:
        raise CheckFailed("non-finite energy ratio")


def cmd_recover_trace(ctx: Context) -> None:
    g, V = ctx.grid, ctx.potential()
    zero = make_potential([], n=g.n, label="0")
    off = ctx.cfg["solver"]["offset"]
    r = run_trace_recovery(V, zero, g, ctx.eps, offset=off, sigma_max=ctx.cfg["solver"]["sigma_max"])
    uni = run_uniqueness_sanity(V, g, ctx.eps, offset=off, sigma_max=ctx.cfg["solver"]["sigma_max"])
    meta = ctx.meta(eps=ctx.eps, offset=off)
    io.write_arrays(ctx.dir / "recovered", {"dV_rec": r.dV_rec, "dV_true": r.dV_true, "x": g.x}, meta,
                    axes={"dV_rec": [f"x{i}" for i in range(g.n)]})
    summary = {"rel_error": r.rel_error, "abs_error": r.abs_error, "rel_error_alt": r.rel_error_alt,
               "alt_consistency": r.alt_consistency, "rel_error_literal_sign": r.rel_error_literal_sign,
               "tau1": r.tau1, "uniqueness": uni}
    io.write_json(ctx.dir / "recovery.json", summary, meta)
    xs = g.x
    mid = int(np.argmin(np.abs(xs)))
    line = r.dV_rec[mid] if g.n == 2 else r.dV_rec[mid, mid]
    true = r.dV_true[mid] if g.n == 2 else r.dV_true[mid, mid]
    io.write_csv(ctx.dir / "recovery_line.csv",
                 [{"x_n": float(x), "recovered": float(a), "true": float(b)} for x, a, b in zip(xs, line, true)
                  if abs(x) <= 1], meta)
    ctx.log(f"recovery: rel L2 error {r.rel_error:.3e}")


def cmd_hs_decay(ctx: Context) -> None:
    c, hs = ctx.cfg["carleman"], ctx.cfg["hs"]
    s = sorted(float(v) for v in hs["s"])
    d = cm.h_s_decay(ctx.weight(1.0), s, samples=int(hs["samples"]), nt=int(hs["nt"]))
    rows = []
    for sv, v, (rho, xn) in zip(d.s_values, d.values, d.argmax):
        rows.append({"s": sv, "h_s": v, "argmax_rho": rho, "argmax_xn": xn,
                     "laplace": cm.laplace_estimate(ctx.weight(1.0), sv, rho, xn) if 0 < xn < c["T"] else None})
    drop = d.values[-1] / d.values[0]
    summary = {"monotone": d.monotone, "last_over_first": drop, "required": HS_DROP}
    meta = ctx.meta(with_grid=False, carleman=c)
    io.write_csv(ctx.dir / "hs_decay.csv", rows, meta)
    io.write_json(ctx.dir / "hs_summary.json", summary, meta)
    ctx.log(f"h(s): {d.values}; last/first {drop:.3f}")
    if not d.monotone or drop > HS_DROP:
        raise CheckFailed(f"h(s) decay: monotone={d.monotone}, last/first={drop:.3g} (needs <= {HS_DROP})")


def cmd_farfield(ctx: Context) -> None:
    g, V = ctx.grid, ctx.potential()
    fq = ctx.cfg["frequency"]
    ks = [float(k) for k in fq["k"]]
    f = solve_scattered(V, g, ctx.eps, sigma_max=ctx.cfg["solver"]["sigma_max"], offsets=())
    ft = time_to_frequency(boundary_trace(f), ks, taper=fq["taper"])
    th = directions(g.n, int(fq["n_theta"]))
    rows = []
    for k in ks:
        u = far_field(ft, k, th, fq["min_ppw"])
        born = born_far_field(V, k, th)
        for i in range(len(th)):
            ang = float(np.arctan2(th[i, 1], th[i, 0]) % (2 * np.pi)) if g.n == 2 else None
            rows.append({"theta_index": i, "theta": ang, "direction": th[i].tolist(), "k": k,
                         "re": float(u[i].real), "im": float(u[i].imag),
                         "born_re": float(born[i].real), "born_im": float(born[i].imag)})
    meta = ctx.meta(eps=ctx.eps, taper=fq["taper"])
    io.write_csv(ctx.dir / "far_field.csv", rows, meta)
    ctx.log(f"far field: {len(rows)} samples")


# -- report ----------------------------------------------------------------------------

def cmd_report(ctx: Context) -> None:
    """Render figures from whatever artifacts exist under the run directory."""
    from . import plotting

    base = ctx.base
    made = []
    summaries = {}
    p = base / "carleman-verify" / "carleman_summary.json"
    if p.exists():
        s = io.read_json(p)["data"]
        summaries["carleman-verify"] = s
        _, rows = io.read_csv(base / "carleman-verify" / "carleman_sweep.csv")
        rr = [{"s": float(r["s"]), "ratio": float(r["ratio"])} for r in rows]
        per = {float(k): v for k, v in s.get("per_s_max_ratio", {}).items()}
        if per:
            made.append(plotting.sweep_ratios(list(per), list(per.values()), ctx.dir / "carleman_ratios.png", rr))
    p = base / "stability" / "stability.csv"
    if p.exists():
        _, rows = io.read_csv(p)
        used = [r for r in rows if not r["skipped"]]
        summaries["stability"] = io.read_json(base / "stability" / "stability.json")["data"]
        if used:
            made.append(plotting.stability_ratios([f"{r['V1']}/{r['V2']}" for r in used],
                                                  [float(r["ratio"]) for r in used],
                                                  summaries["stability"].get("C_emp"), ctx.dir / "stability.png"))
    p = base / "hs-decay" / "hs_decay.csv"
    if p.exists():
        _, rows = io.read_csv(p)
        summaries["hs-decay"] = io.read_json(base / "hs-decay" / "hs_summary.json")["data"]
        made.append(plotting.hs_curve([float(r["s"]) for r in rows], [float(r["h_s"]) for r in rows],
                                      ctx.dir / "hs_decay.png"))
    p = base / "recover-trace" / "recovered.npz"
    if p.exists():
        z = np.load(p)
        summaries["recover-trace"] = io.read_json(base / "recover-trace" / "recovery.json")["data"]
        if z["dV_rec"].ndim == 2:
            keep = np.abs(z["x"]) <= 1.0
            crop = np.ix_(keep, keep)
            made.append(plotting.field_pair(z["dV_rec"][crop], z["dV_true"][crop], float(z["x"][keep][-1]),
                                            ("recovered", "true"), ctx.dir / "recovery.png"))
    p = base / "farfield" / "far_field.csv"
    if p.exists():
        _, rows = io.read_csv(p)
        if rows and rows[0]["theta"]:
            vals, ref = {}, {}
            for r in rows:
                k = float(r["k"])
                vals.setdefault(k, []).append(complex(float(r["re"]), float(r["im"])))
                ref.setdefault(k, []).append(complex(float(r["born_re"]), float(r["born_im"])))
            th = np.array([float(r["theta"]) for r in rows if float(r["k"]) == next(iter(vals))])
            made.append(plotting.far_field_curves(th, {k: np.array(v) for k, v in vals.items()},
                                                  ctx.dir / "far_field.png", {k: np.array(v) for k, v in ref.items()}))
    p = base / "energy-check" / "energy.csv"
    if p.exists():
        _, rows = io.read_csv(p)
        summaries["energy-check"] = io.read_json(base / "energy-check" / "energy_summary.json")["data"]
        names = [r["function"] for r in rows if r["estimate"] == "near_T"]
        ser = {e: [float(r["ratio"]) for r in rows if r["estimate"] == e] for e in ("near_T", "near_Gamma")}
        made.append(plotting.energy_ratios(names, ser, ctx.dir / "energy.png"))
    p = base / "ibp-check" / "ibp_identity.csv"
    if p.exists():
        _, rows = io.read_csv(p)
        summaries["ibp-check"] = io.read_json(base / "ibp-check" / "ibp_summary.json")["data"]
        made.append(plotting.residual_bars([r["function"] for r in rows],
                                           {"corrected D0": [float(r["residual"]) for r in rows],
                                            "printed D0": [float(r["residual_printed"]) for r in rows]},
                                           ctx.dir / "ibp_residuals.png", IBP_TOL))
    p = base / "solve" / "sigma_trace.npz"
    if p.exists():
        z = np.load(p)
        made.append(plotting.trace_series(z["times"], z["w"][:, :: max(1, z["w"].shape[1] // 8)],
                                          ctx.dir / "sigma_trace.png"))
    io.write_json(ctx.dir / "report.json", {"figures": [str(m.name) for m in made], "summaries": summaries},
                  ctx.meta(with_grid=False))
    ctx.log(f"report: {len(made)} figures -> {ctx.dir}")


HANDLERS: dict[str, Callable[[Context], None]] = {
    "gen-potential": cmd_gen_potential, "solve": cmd_solve, "stability": cmd_stability,
    "carleman-verify": cmd_carleman_verify, "ibp-check": cmd_ibp_check, "energy-check": cmd_energy_check,
    "recover-trace": cmd_recover_trace, "hs-decay": cmd_hs_decay, "farfield": cmd_farfield, "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fixangle", description=__doc__.split("\n")[0])
    ap.add_argument("command", help=f"one of: {', '.join(COMMANDS)}")
    ap.add_argument("-c", "--config", help="YAML experiment config (defaults when omitted)")
    ap.add_argument("-o", "--out", help=f"output root (overrides ${ENV_ROOT} and output.root)")
    ap.add_argument("-j", "--jobs", type=int, default=1, help="max worker processes")
    ap.add_argument("-q", "--quiet", action="store_true")
    return ap


def run(config_path: str | None, command: str, out: str | None = None, jobs: int = 1, quiet: bool = False) -> int:
    if command not in HANDLERS:
        print(f"error: unknown command {command!r} (expected one of {', '.join(COMMANDS)})", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(config_path)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    ctx = Context(cfg, command, out, jobs, quiet)
    try:
        HANDLERS[command](ctx)
    except ConfigError as e:
        print(f"config error [{command}]: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailed as e:
        print(f"check failed [{command}]: {e}", file=sys.stderr)
        return EXIT_CHECK
    except Exception as e:  # surfaced with context, not swallowed
        print(f"runtime error [{command}]: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.config, args.command, args.out, args.jobs, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
