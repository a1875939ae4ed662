import math

import pytest

from fixangle.experiments import (ExperimentError, characteristic_law_check, ensemble_pairs, eps_sensitivity,
                                  recovery_scaling, run_stability, run_trace_recovery, run_uniqueness_sanity)
from fixangle.grid import build_grid
from fixangle.potential import make_potential

V = make_potential([{"center": (0.1, -0.2), "radius": 0.4, "amplitude": 1.0}], label="V")
ZERO = make_potential([], label="0")


@pytest.fixture(scope="module")
def g16():
    return build_grid(h=1 / 16)


def test_stability_pairs_and_skips(g16):
    pairs = ensemble_pairs(2, 0) + [(V, V), (V, ZERO)]
    rep = run_stability(pairs, g16)
    assert rep.summary["pairs"] == 4 and rep.summary["used"] == 3
    assert rep.records[2].skipped == "potentials coincide"
    used = [r.ratio for r in rep.records if not r.skipped]
    assert all(math.isfinite(r) and r > 0 for r in used)
    assert rep.summary["C_emp"] == max(used)


def test_stability_needs_T_above_6():
    with pytest.raises(ExperimentError):
        run_stability([(V, ZERO)], build_grid(h=1 / 16, T=6.0))


def test_trace_recovery_and_sign(g16):
    r = run_trace_recovery(V, ZERO, g16)
    assert r.rel_error < 0.1
    assert r.rel_error_literal_sign > 1.5  # the opposite sign is far off
    assert r.alt_consistency < 0.1


def test_recovery_of_equal_potentials_is_zero(g16):
    r = run_trace_recovery(V, V, g16)
    assert math.isnan(r.rel_error) and r.abs_error == 0.0


def test_recovery_bias_grows_with_amplitude(g16):
    # the dropped term V1 I_w is quadratic in V, so the error shrinks for weak potentials
    out = recovery_scaling(V, g16, factors=(0.5, 2.0))
    assert abs(1 - out[0.5]) < abs(1 - out[2.0]) < 0.1


def test_uniqueness_sanity(g16):
    u = run_uniqueness_sanity(V, g16)
    assert u["determinism_max_diff"] == 0.0
    assert u["h1_rel_diff"] < 0.02


def test_eps_sensitivity_within_estimate():
    r = eps_sensitivity(V, build_grid(h=1 / 32))
    assert r["ratio"] < 2.0


def test_characteristic_law_zero_potential(g16):
    r = characteristic_law_check(ZERO, g16)
    assert r["nodes"] == 0 and r["scaled_error"] == 0.0
