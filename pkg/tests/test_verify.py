import math
from dataclasses import replace

import numpy as np
import pytest

from leafpress.config import ExperimentConfig
from leafpress.dynamics import TorusPoint, iterate, sample_leaf_patch
from leafpress.errors import FixtureTooLarge
from leafpress.potentials import (
    add_constant_rate,
    birkhoff_potential,
    custom_potential,
    unstable_norm_potential,
    zero_potential,
)
from leafpress.verify import (
    CoverFixture,
    TheoremReport,
    default_cover_fixtures,
    metric_pressures,
    patch_from_config,
    run_checks,
    verify_cover_properties,
    verify_cover_properties_sandwich,
    verify_gamma_eta_insensitivity,
    verify_pressure_coincidence,
    verify_pressure_formula,
    verify_sup_bound,
)

from conftest import LOG_LAMBDA_U

CFG = ExperimentConfig(base=(0.1234, 0.5678), K=2**15, n_window=(4, 5, 6, 7, 8), eps_ladder=(0.125, 0.0833), gamma_ladder=(0.05,))


def test_report_verdict_rule():
    assert TheoremReport("x", {}, {"a": 0.1, "b": 0.05}, 0.1).verdict == "pass"
    assert TheoremReport("x", {}, {"a": 0.1000001}, 0.1).verdict == "fail"
    assert TheoremReport("x", {}, {}, 0.0, verdict="inapplicable").verdict == "inapplicable"


def test_formula_zero_potential(cat):
    rep = verify_pressure_formula(cat, zero_potential(), CFG)
    q = rep.quantities
    assert q["lyapunov"] == 0.0
    assert rep.discrepancies["pressure_vs_sum"] == pytest.approx(abs(q["spanning"] - q["entropy"]), abs=1e-15)
    assert rep.passed


def test_formula_t1_and_minus1(cat):
    rep = verify_pressure_formula(cat, unstable_norm_potential(cat, 1.0), CFG)
    assert rep.passed and abs(rep.quantities["spanning"] - 2 * LOG_LAMBDA_U) <= 0.10
    assert abs(rep.quantities["lyapunov"] - LOG_LAMBDA_U) <= 1e-9
    rep = verify_pressure_formula(cat, unstable_norm_potential(cat, -1.0), CFG)
    assert rep.passed and abs(rep.quantities["spanning"]) <= 0.10


def test_coincidence_and_shift(cat):
    base = zero_potential()
    patch = patch_from_config(CFG, cat)
    a = verify_pressure_coincidence(cat, base, CFG, patch)
    b = verify_pressure_coincidence(cat, add_constant_rate(base, 0.7), CFG, patch)
    assert a.passed
    for k in a.quantities:
        assert abs(a.quantities[k] - LOG_LAMBDA_U) <= 0.10
        assert abs(b.quantities[k] - a.quantities[k] - 0.7) <= 1e-9


def test_formula_and_coincidence_share_spanning(cat):
    reps = run_checks(["formula", "coincidence"], replace(CFG, potential={"flavor": "unstable-norm-power", "t": 1.0}))
    assert reps[0].quantities["spanning"] == reps[1].quantities["spanning"]


def test_reports_reproducible(cat):
    a = verify_pressure_formula(cat, zero_potential(), CFG).to_dict()
    b = verify_pressure_formula(cat, zero_potential(), CFG).to_dict()
    assert a == b


# cover properties


@pytest.mark.parametrize("kind", ["zero", "t1", "cos1"])
def test_cover_properties(cat, kind):
    pot = {"zero": zero_potential(), "t1": unstable_norm_potential(cat, 1.0), "cos1": birkhoff_potential("cos1")}[kind]
    rep = verify_cover_properties(cat, pot, default_cover_fixtures(cat))
    for k, v in rep.discrepancies.items():
        if not k.endswith(":union_max"):
            assert v <= 1e-9, k
    assert verify_cover_properties_sandwich(rep).passed


def test_union_of_equal_sets_is_exact(cat):
    p = sample_leaf_patch(cat, TorusPoint((0.2, 0.3)), 0.25, 8)
    z = np.arange(8) < 5
    fx = CoverFixture("same", p, 0.1, 1, 3, z, z.copy())
    rep = verify_cover_properties(cat, zero_potential(), [fx])
    assert rep.passed


def test_cover_union_gap_bounded_by_log2(cat):
    fx = default_cover_fixtures(cat)
    rep = verify_cover_properties(cat, zero_potential(), fx)
    for f in fx:
        assert rep.discrepancies[f"{f.name}:union_max"] <= math.log(2) / f.n_min + 1e-9


def test_cover_fixture_too_large(cat):
    p = sample_leaf_patch(cat, TorusPoint((0.2, 0.3)), 0.25, 13)
    z = np.ones(13, bool)
    with pytest.raises(FixtureTooLarge):
        verify_cover_properties(cat, zero_potential(), [CoverFixture("big", p, 0.1, 1, 3, z, z)])


# sup bound


@pytest.mark.parametrize("l", [1, 2, 4])
def test_sup_bound_unstable_norm(cat, block3, l):
    for m in (cat, block3):
        rep = verify_sup_bound(m, unstable_norm_potential(m, 1.0), l, 0.01, [0.2, 0.1, 0.05], samples=200)
        assert rep.passed and rep.quantities["C"] <= 1e-6


def test_sup_bound_constant_additive(cat):
    rep = verify_sup_bound(cat, birkhoff_potential("const:0.4"), 1, 0.01, [0.1, 0.05], samples=50)
    assert rep.quantities["C"] == pytest.approx(-0.01, abs=1e-12)


def test_sup_bound_cos_nonincreasing(cat):
    rep = verify_sup_bound(cat, birkhoff_potential("cos1"), 2, 0.01, [0.2, 0.1, 0.05], samples=200)
    cs = [rep.quantities[f"C@eps={e:g}"] for e in (0.2, 0.1, 0.05)]
    assert rep.passed and all(math.isfinite(c) for c in cs) and cs[0] >= cs[1] >= cs[2]


def test_sup_bound_inapplicable(cat):
    pot = custom_potential(lambda m, p, n: np.full(p.shape[:-1], float(n * n)))
    assert verify_sup_bound(cat, pot, 2, 0.01, [0.1], samples=20).verdict == "inapplicable"


# insensitivity


def test_insensitivity_same_gamma_twice(cat):
    rep = verify_gamma_eta_insensitivity(cat, zero_potential(), [0.05, 0.05], [TorusPoint((0.1, 0.2))] * 2, CFG)
    assert rep.discrepancies["max_pairwise"] == 0.0


def test_insensitivity_orbit_base_points(cat):
    x = TorusPoint((0.1234, 0.5678))
    rep = verify_gamma_eta_insensitivity(cat, zero_potential(), [0.2, 0.05], [x, iterate(cat, x, 1)], CFG)
    assert rep.passed and rep.discrepancies["max_pairwise"] <= 0.05


def test_metric_pressures_keys(cat):
    ests = metric_pressures(cat, zero_potential(), CFG, patch_from_config(CFG, cat))
    assert [e.kind for e in ests.values()] == ["spanning", "bowen", "capacity-lower", "capacity-upper"]
