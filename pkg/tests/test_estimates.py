import math

import pytest

from fixangle.carleman import (AnalyticRules, CarlemanWeight, EstimateError, beta_fit, carleman_sweep,
                               constant_function, energy_check_T, ibp_identity_check, j_terms, random_suite,
                               summarize_sweep)

R8 = AnalyticRules(h=1 / 8, p=2)


def test_zero_function_sweep_is_empty_but_valid():
    zero = constant_function(2, 0.0)
    rep = carleman_sweep([zero], CarlemanWeight(), [0.5, 1.0], R8)
    assert rep.rows == [] and rep.summary["per_s_max_ratio"] == {}


def test_sweep_rows_and_summary():
    suite = random_suite(2, 7)
    rep = carleman_sweep(suite, CarlemanWeight(), [0.5, 1.0], R8)
    assert len(rep.rows) == 4
    for r in rep.rows:
        assert r["rhs"] > 0 and math.isfinite(r["ratio"]) and r["ratio"] > 0
        assert r["rhs"] == pytest.approx(r["vol"] + r["sigma"] + r["top"])
    assert set(rep.summary["per_s_max_ratio"]) == {0.5, 1.0}
    assert rep.summary["C_emp"] == max(rep.summary["per_s_max_ratio"].values())


def test_s_values_must_ascend():
    with pytest.raises(EstimateError):
        summarize_sweep([], [1.0, 0.5])


def test_ibp_residual_shrinks_with_h():
    tf = random_suite(1, 7)[0]
    wt = CarlemanWeight(s=1.0)
    r1 = ibp_identity_check(tf, wt, AnalyticRules(h=1 / 8, p=1))
    r2 = ibp_identity_check(tf, wt, AnalyticRules(h=1 / 16, p=1))
    assert r2["residual"] < r1["residual"] / 1.7
    assert set(r2["d0_terms"]) == set(r2["d0_terms_printed"])
    assert r2["rhs"] == pytest.approx(r2["J1"] + r2["J2"] + r2["J3"] + r2["B0"] + r2["D0"])


def test_j_terms_diagnostics():
    tf = random_suite(1, 7)[0]
    wt = CarlemanWeight(s=1.0)
    j = j_terms(tf, wt, AnalyticRules(h=1 / 8, p=2))
    assert j["J2_above_lower"] and j["J3_within_bound"]
    assert 0 <= j["Q_eta_fraction"] <= 1
    assert j["b_min"] <= j["b_max"]
    assert beta_fit([j]) == j["beta_needed"]


def test_energy_check_tau_range():
    tf = random_suite(1, 7)[0]
    with pytest.raises(EstimateError):
        energy_check_T(tf, R8, tau=0.5)
    r = energy_check_T(tf, R8)
    assert math.isfinite(r["ratio"]) and r["ratio"] >= 0
