import pytest

from fixangle import io
from fixangle.cli import main, run

SMALL = """
grid: {h: 0.0625}
ensemble: {pairs: 2}
carleman: {suite_size: 2, h: 0.125, ibp_h: 0.125, s: [0.5, 1.0]}
hs: {samples: 21, nt: 1001}
frequency: {k: [2.0], n_theta: 8}
output: {name: t}
"""


@pytest.fixture()
def cfg(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL)
    return p


def test_unknown_command_and_bad_config(tmp_path, cfg):
    assert run(str(cfg), "nope", out=str(tmp_path)) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("grid: {n: 7}")
    assert run(str(bad), "solve", out=str(tmp_path)) == 2
    assert not (tmp_path / "t").exists()  # nothing done for invalid input


def test_carleman_verify_format(tmp_path, cfg):
    code = main(["carleman-verify", "-c", str(cfg), "-o", str(tmp_path), "-q"])
    assert code in (0, 3)
    meta, rows = io.read_csv(tmp_path / "t" / "carleman-verify" / "carleman_sweep.csv")
    assert {"function", "s", "lhs", "vol", "sigma", "top", "rhs", "ratio"} <= set(rows[0])
    assert meta["config_hash"] and meta["versions"]
    summ = io.read_json(tmp_path / "t" / "carleman-verify" / "carleman_summary.json")["data"]
    assert summ["geometry"]["ok"] and "per_s_max_ratio" in summ


def test_stability_two_pairs_and_determinism(tmp_path, cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(str(cfg), "stability", out=str(a), quiet=True) == 0
    assert run(str(cfg), "stability", out=str(b), quiet=True) == 0
    pa = a / "t" / "stability" / "stability.csv"
    _, rows = io.read_csv(pa)
    assert len(rows) == 2 and all(float(r["ratio"]) > 0 for r in rows)
    assert io.csv_body(pa) == io.csv_body(b / "t" / "stability" / "stability.csv")


def test_env_output_root(tmp_path, cfg, monkeypatch):
    monkeypatch.setenv("FIXANGLE_OUTPUT_ROOT", str(tmp_path / "env"))
    assert run(str(cfg), "gen-potential", quiet=True) == 0
    assert (tmp_path / "env" / "t" / "gen-potential" / "potentials.json").exists()


def test_hs_decay_reports_check_failure(tmp_path, cfg):
    # h(s) falls like s^{-1/2}: the ten-fold drop over [0.5, 8] is not reached
    assert run(str(cfg), "hs-decay", out=str(tmp_path), quiet=True) == 3
    assert (tmp_path / "t" / "hs-decay" / "hs_decay.csv").exists()


def test_jobs_match_serial(tmp_path, cfg):
    assert run(str(cfg), "energy-check", out=str(tmp_path / "s"), quiet=True) == 0
    assert run(str(cfg), "energy-check", out=str(tmp_path / "p"), jobs=2, quiet=True) == 0
    body = lambda r: io.csv_body(r / "t" / "energy-check" / "energy.csv")
    assert body(tmp_path / "s") == body(tmp_path / "p")


def test_report_renders_figures(tmp_path, cfg):
    for c in ("solve", "recover-trace", "farfield", "report"):
        assert run(str(cfg), c, out=str(tmp_path), quiet=True) == 0
    rep = io.read_json(tmp_path / "t" / "report" / "report.json")["data"]
    assert {"recovery.png", "far_field.png", "sigma_trace.png"} <= set(rep["figures"])
    for f in rep["figures"]:
        assert (tmp_path / "t" / "report" / f).stat().st_size > 1000
