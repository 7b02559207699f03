import math

import pytest

import horseshoe_pressure as hp


def test_bowen_root_plastic():
    assert hp.bowen_root([2, 3], [0.0, 0.0]) == pytest.approx(0.2811995743, abs=1e-9)


def test_pressure_two_shift():
    est = hp.pressure_periodic([1, 1], [0.0, 0.0], 40)
    assert est["value"] == pytest.approx(math.log(2.0), abs=1e-9)
    assert est["method"] == "periodic_sum"


def test_log_counts_padovan():
    counts = [round(math.exp(v)) if v != -math.inf else 0 for v in hp.log_counts([2, 3], [0.0, 0.0], 12)]
    assert counts == [1, 0, 1, 1, 1, 2, 2, 3, 4, 5, 7, 9, 12]


def test_periods_and_bounds():
    assert hp.admissible_periods([2, 3], 2) == [4, 5, 6]
    assert hp.word_count_bounds(12, 2, 0.5) == (4, 6)
    with pytest.raises(hp.InfeasiblePeriod):
        hp.word_count_bounds(7, 4, 0.1)


def test_cat_lyapunov():
    rep = hp.lyapunov("cat", (0.1, 0.2), 50)
    lam = math.log((3 + math.sqrt(5)) / 2)
    assert rep["exponents"][1] == pytest.approx(lam, abs=1e-6)
    assert rep["exponents"][0] == pytest.approx(-lam, abs=1e-6)


def test_orbit_escape():
    with pytest.raises(hp.OrbitEscaped):
        hp.orbit("henon", (10.0, 10.0), 100)
    assert hp.orbit("cat", (0.0, 0.0), 3) == [(0.0, 0.0)] * 3


def test_validate_budget():
    checks = {c["name"]: c for c in hp.validate_constants(20, 0.3, rectangles=100)}
    assert checks["rectangle_count_budget"]["passed"]
    checks = {c["name"]: c for c in hp.validate_constants(5, 0.1, rectangles=100)}
    assert not checks["rectangle_count_budget"]["passed"]


def test_small_run():
    cfg = {
        "schema_version": 1,
        "system": "horseshoe",
        "measure": {"kind": "bernoulli", "p": 0.5},
        "schedule": [{"rho": 0.4, "s": 1, "n": 6}],
        "sample_size": 2000,
        "spanning_sample_size": 2000,
    }
    rep = hp.run_theorem_a(cfg)
    assert rep["stages"][0]["status"] == "ok"
    assert rep == hp.run_theorem_a(cfg)
    with pytest.raises(hp.ConfigError):
        hp.run_theorem_a({"system": "horseshoe"})
