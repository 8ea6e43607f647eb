import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridsim.errors import DomainError, RangeError
from gridsim.tco import (
    CostBreakdown,
    TcoParams,
    capital_recovery_factor,
    conventional_tco,
    cost_curve,
    long_term_cost_with_replacement,
    loss_factor,
    modified_tco_transformer,
    pec_conventional,
    pec_window,
    replacements_within,
    vr_tco,
)

P = TcoParams()
RATED_LIFE_YR = 180000 / 8760  # 20.548


def test_pec_conventional():
    assert pec_conventional(0.05, 0.05, 20) == pytest.approx(0.6231105171, abs=1e-9)
    assert pec_conventional(0.05, 0.05, 500) == pytest.approx(1.0, abs=1e-6)
    assert pec_conventional(0.0, 0.05, 20) == 0.0


def test_pec_window():
    assert pec_window(0.05, 0.05, 0, 20) == pytest.approx(0.6231105171, abs=1e-9)
    assert pec_window(0.05, 0.05, 7, 7) == 0.0
    halves = pec_window(0.05, 0.05, 0, 10) + pec_window(0.05, 0.05, 10, 20)
    assert halves == pytest.approx(pec_window(0.05, 0.05, 0, 20), rel=1e-12)
    with pytest.raises(DomainError):
        pec_window(0.05, 0.05, 3, 2)


@settings(max_examples=100)
@given(st.floats(0.001, 1.0), st.floats(0.001, 0.5), st.floats(0.1, 60))
def test_window_from_zero_equals_conventional(ec, i, t):
    assert pec_window(ec, i, 0, t) == pytest.approx(pec_conventional(ec, i, t), rel=1e-12)


@settings(max_examples=100)
@given(st.lists(st.floats(0, 40), min_size=2, max_size=12))
def test_window_additive_over_partitions(cuts):
    cuts = sorted(cuts)
    parts = math.fsum(pec_window(0.05, 0.05, a, b) for a, b in zip(cuts, cuts[1:]))
    whole = pec_window(0.05, 0.05, cuts[0], cuts[-1])
    assert parts == pytest.approx(whole, rel=1e-12, abs=1e-15)


def test_loss_factor():
    assert loss_factor(400.0, 400.0, 0.2) == 1.0
    assert loss_factor(0.5, 1.0, 0.2) == 0.3
    assert loss_factor(0.0, 1.0, 0.2) == 0.0
    with pytest.raises(DomainError):
        loss_factor(2.0, 1.0, 0.2)


@given(st.floats(0, 1), st.floats(0, 1))
def test_loss_factor_monotone(a, b):
    lo, hi = sorted((a, b))
    assert loss_factor(lo, 1.0, 0.2) <= loss_factor(hi, 1.0, 0.2)


def test_conventional_tco_table_values():
    assert 1 / capital_recovery_factor(0.05, 20) == pytest.approx(12.4622, abs=1e-4)
    assert conventional_tco(P, 1.0, 1.0) == pytest.approx(5610.3979, abs=1e-3)
    assert conventional_tco(P, 1.0, 1.0) == pytest.approx(5610.3, abs=0.5)
    no_loss = replace(P, core_loss_kw=0.0, load_loss_kw=0.0)
    assert conventional_tco(no_loss, 1.0, 1.0) == pytest.approx(367.1, abs=0.05)
    free_energy = replace(P, energy_cost=0.0)
    assert conventional_tco(free_energy, 1.0, 1.0) == pytest.approx(4575 * capital_recovery_factor(0.05, 20))


def test_load_loss_hours_option():
    with_n = replace(P, load_loss_hours=True)
    diff = conventional_tco(with_n, 1.0, 1.0) - conventional_tco(P, 1.0, 1.0)
    assert diff == pytest.approx(5.1 * 0.6231105171 * 8759, rel=1e-9)


def test_modified_core_only_when_idle():
    cb = modified_tco_transformer(0.0, P, np.zeros(24), 0.0, 1.0)
    assert cb.capital == 0.0 and cb.load == 0.0
    assert cb.core == pytest.approx(0.96 * 8760 * pec_window(0.05, 0.05, 0, 1))


def test_modified_capital_one_year():
    cb = modified_tco_transformer(1 / 20.55, P, np.full(24, 500.0), 0.0, 1.0)
    assert cb.capital == pytest.approx(222.6, abs=0.05)
    assert cb.load == pytest.approx(5.1 * pec_window(0.05, 0.05, 0, 1))


def test_flat_load_matches_conventional():
    flat = np.full(240, 500.0)
    modified = modified_tco_transformer(1.0, P, flat, 0.0, RATED_LIFE_YR)
    # Same evaluation period on both sides: identical by construction.
    same = replace(P, insulation_life_years=RATED_LIFE_YR, annualize_capital=False)
    assert modified.total == pytest.approx(conventional_tco(same, 1.0, 1.0), rel=1e-12)
    # Against the 20 year evaluation period of the cost table.
    table = replace(P, annualize_capital=False)
    assert modified.total == pytest.approx(conventional_tco(table, 1.0, 1.0), rel=0.01)


def test_modified_window_selection():
    times = np.linspace(0, 2, 9)
    kva = np.array([100, 100, 100, 100, 400, 400, 400, 400, 400.0])
    cb = modified_tco_transformer(0.1, P, kva, 1.0, 2.0, times=times)
    assert cb.load == pytest.approx(5.1 * pec_window(0.05, 0.05, 1, 2) * (400 / 500) ** 2)
    with pytest.raises(RangeError):
        modified_tco_transformer(0.1, P, kva, 1.0, 3.0, times=times)
    with pytest.raises(DomainError):
        modified_tco_transformer(-0.1, P, kva, 0.0, 1.0)


def test_vr_tco():
    assert vr_tco(0.0, 10000) == 0.0
    assert vr_tco(1.0, 10000) == 10000.0
    assert vr_tco(0.3, 10000) == pytest.approx(3000.0)


@pytest.mark.parametrize("life, expected", [(25, 0), (9, 2), (10, 1), (20, 0), (math.inf, 0), (6.9, 2)])
def test_replacements(life, expected):
    assert replacements_within(life, 20) == expected


def test_long_term_cost_counts_replacements():
    daily = 1 / (365 * 9)
    cb = long_term_cost_with_replacement(daily, 300.0, 500.0, P, 20.0)
    assert cb.replacements == 2
    assert cb.capital == 3 * 4575
    assert cb.total == cb.capital + cb.core + cb.load


def test_cost_curve_steps_at_exhaustion():
    curve = cost_curve(1 / (365 * 9), 300.0, 500.0, P, 20.0)
    assert [c.t2 for c in curve] == list(range(21))
    made = [c.replacements for c in curve]
    assert made[8] == 0 and made[9] == 1 and made[18] == 2 and made[20] == 2
    totals = [c.total for c in curve]
    assert all(b >= a for a, b in zip(totals, totals[1:]))
    conv = cost_curve(1 / (365 * 9), 300.0, 500.0, P, 20.0, conventional=True)
    assert all(c.replacements == 0 for c in conv)
    assert curve[-1].total > conv[-1].total
    assert curve[-1].operating == pytest.approx(conv[-1].operating)


@settings(max_examples=100)
@given(st.floats(0, 1e-3), st.floats(0, 500), st.floats(1, 1000))
def test_terms_nonnegative_and_summed(daily, mean, extra):
    for cb in cost_curve(daily, mean, mean + extra, P, 20.0):
        assert min(cb.capital, cb.core, cb.load) >= 0
        assert cb.total == cb.capital + cb.core + cb.load


def test_breakdown_dict():
    cb = CostBreakdown(0, 1, 1.0, 2.0, 3.0, 1)
    assert cb.to_dict()["total"] == 6.0
    assert P.validate() == []
    assert len(TcoParams(interest=0, gamma=2).validate()) == 2
