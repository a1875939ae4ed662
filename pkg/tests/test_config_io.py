import json

import numpy as np
import pytest

from fixangle import io
from fixangle.config import ConfigError, load_config


def _write(tmp_path, text):
    p = tmp_path / "c.yaml"
    p.write_text(text)
    return p


def test_defaults_validate():
    cfg = load_config()
    assert cfg["grid"]["h"] == 1 / 32 and len(cfg.digest) == 16


@pytest.mark.parametrize("text,field", [
    ("grid: {n: 4}", "grid.n"),
    ("grid: {dt_factor: 0.9}", "grid.dt_factor"),
    ("grid: {h: -1}", "grid.h"),
    ("grid: {bogus: 1}", "grid.bogus"),
    ("carleman: {a: 1.0}", "carleman.a"),
    ("carleman: {s: []}", "carleman.s"),
    ("potential: {bumps: [{center: [0.5, 0.5], radius: 0.6}]}", "potential.bumps[0]"),
    ("potential: {bumps: [{center: [0.0], radius: 0.2}]}", "potential.bumps[0].center"),
    ("frequency: {taper: 1.5}", "frequency.taper"),
    ("seed: 1.5", "seed"),
    ("grid: [1, 2]", "grid"),
])
def test_field_level_errors(tmp_path, text, field):
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        load_config(_write(tmp_path, text))


def test_bad_yaml(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "grid: {h: [1,"))


def test_digest_tracks_content(tmp_path):
    a = load_config(_write(tmp_path, "seed: 1"))
    b = load_config(_write(tmp_path, "seed: 2"))
    assert a.digest != b.digest
    assert load_config(_write(tmp_path, "seed: 1")).digest == a.digest


def test_csv_roundtrip_and_body(tmp_path):
    meta = io.metadata("abc", "test", {"h": 0.5})
    rows = [{"a": 1, "b": 0.1, "c": True}, {"a": 2, "b": float("nan"), "c": False}]
    p = io.write_csv(tmp_path / "x.csv", rows, meta)
    m, back = io.read_csv(p)
    assert m["config_hash"] == "abc" and m["grid"] == {"h": 0.5} and "numpy" in m["versions"]
    assert back[0] == {"a": "1", "b": "0.1", "c": "True"}
    assert io.csv_body(p).splitlines()[0] == "a,b,c"


def test_json_and_arrays(tmp_path):
    meta = io.metadata("abc", "test")
    p = io.write_json(tmp_path / "x.json", {"v": np.float64(np.inf), "k": np.arange(3)}, meta)
    d = json.loads(p.read_text())
    assert d["data"] == {"v": "inf", "k": [0, 1, 2]}
    q = io.write_arrays(tmp_path / "arr", {"u": np.ones((2, 3))}, meta, axes={"u": ["t", "m"]})
    assert np.load(q)["u"].shape == (2, 3)
    assert io.read_json(q.with_suffix(".json"))["data"]["arrays"]["u"]["shape"] == [2, 3]
