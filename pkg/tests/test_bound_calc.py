import json
import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fo_lab.arith import EXACT_ARITH, MP_ARITH, parse_number
from fo_lab.bound_calc import (PRECONDITION_FAILED, BoundInputs, chebyshev_precondition, compute_bound,
                               cross_check, eps_delta_chebyshev, evaluate_formula, qrom_bound_ffpcpa,
                               qrom_main_bound, qrom_main_bound_gaussian, qrom_passive_terms, recompute,
                               rom_main_bound, spreadness_budget)
from fo_lab.errors import DomainError, InvariantError
from fo_lab.spreadness import PRESETS, gamma_floor

P2 = lambda e: Fraction(2) ** e  # noqa: E731


def _term(report, route, fid):
    return next(t for t in report.routes[route].terms if t.formula_id == fid)


def test_parse_number_forms():
    assert parse_number("2^64") == P2(64)
    assert parse_number("2**-10") == P2(-10)
    assert parse_number("3*2^60") == 3 * P2(60)
    assert parse_number("1/3") == Fraction(1, 3)
    assert parse_number(5) == 5


# ROM ---------------------------------------------------------------------------------

def test_rom_without_decryption_queries_is_passive_only():
    inp = BoundInputs(q_G=P2(20), q_D=0, gamma=100, adv_ow=P2(-80), adv_ffp_cpa=0, model="ROM")
    rep = rom_main_bound(inp)
    assert rep.routes["ow"].total == evaluate_formula("rom.ow.passive", _term(rep, "ow", "rom.ow.passive").inputs)


def test_rom_large_exponent_example_dual_path():
    inp = BoundInputs(q_G=P2(60), q_D=P2(60), gamma=10240, adv_ow=P2(-128), adv_ffp_cpa=0, model="ROM")
    rep = rom_main_bound(inp)
    expected = (P2(61) + 1) * P2(-128) + P2(61) * P2(-10240)
    exact_total = sum(t.exact_value() for t in rep.routes["ow"].terms)
    assert exact_total == expected
    with mpmath.workprec(400):
        want = mpmath.mpf(expected.numerator) / expected.denominator
        assert abs(mpmath.mpf(rep.routes["ow"].total) - want) <= want * mpmath.mpf(2) ** -120
    assert math.isclose(rep.to_dict()["routes"]["ow"]["log2_total"], math.log2(2 ** 61 + 1) - 128)
    assert cross_check(rep) < 1e-30


def test_rom_spread_term_vanishes_with_gamma():
    vals = [evaluate_formula("rom.spread", {"q_D": P2(64), "gamma": Fraction(g)}) for g in (10, 100, 1000, 10 ** 5)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < mpmath.mpf(2) ** -99000


def test_rom_needs_advantage():
    with pytest.raises(DomainError):
        rom_main_bound(BoundInputs(q_G=1, gamma=10, adv_ffp_cpa=0, model="ROM"))
    with pytest.raises(DomainError):
        rom_main_bound(BoundInputs(q_G=1, gamma=10, adv_ow=0, model="QROM", adv_ffp_cpa=0))


# QROM passive --------------------------------------------------------------------------

def test_qrom_ind_route_with_zero_advantage():
    inp = BoundInputs(q_G=P2(63), q_H=P2(63) - P2(62), q_D=P2(62), adv_ind=0, msg_space=P2(256))
    ind = qrom_passive_terms(inp)["ind"]
    assert ind[0].value == 0
    # q + q_D = 2^64 and sqrt(|M|) = 2^128: 8 * 2^64 / 2^128 = 2^-61 exactly
    assert ind[1].exact_value() == P2(-61)
    assert ind[1].value == mpmath.mpf(2) ** -61


def test_qrom_ow_route_classical_width():
    inp = BoundInputs(q_G=10, q_H=6, q_D=4, adv_ow=Fraction(1, 4))
    ow = qrom_passive_terms(inp)["ow"][0]
    assert ow.exact_value() == 8 * (16 + 4) * Fraction(1, 2)


def test_unknown_advantage_stays_symbolic():
    inp = BoundInputs(q_G=P2(64), q_D=P2(64), adv_ow="unknown", adv_ffp_cpa=0, gamma=10240)
    rep = qrom_bound_ffpcpa(inp)
    term = _term(rep, "ow", "qrom.ow.passive")
    assert term.symbolic.endswith("sqrt(Adv_OW)")
    assert "sqrt(Adv_OW)" in rep.routes["ow"].expression
    assert rep.total == 1


# QROM active ------------------------------------------------------------------------------

def test_eps_gamma_vanishes_without_decryption_queries():
    assert evaluate_formula("qrom.eps_gamma.ffp_cpa", {"q_D": 0, "q_G": P2(64), "gamma": 10}) == 0


@pytest.mark.parametrize("preset,exponent", [("frodo-640", -5055), ("hqc-128", -629)])
def test_budget_exponents(preset, exponent):
    g = gamma_floor(PRESETS[preset])
    b = spreadness_budget(g)
    assert b["exponent"] == exponent
    # the budget dominates the spreadness term at q_G = 2 q_D and beyond
    for q_G in (b["min_q_G"], 4 * b["min_q_G"], P2(100)):
        term = P2(64) * (q_G + 2 * P2(64)) * EXACT_ARITH.pow2(-Fraction(g, 2))
        assert term <= q_G * EXACT_ARITH.pow2(b["exponent"])


def test_spreadness_budget_rejects_bad_q_D():
    with pytest.raises(DomainError):
        spreadness_budget(100, 3)
    with pytest.raises(DomainError):
        spreadness_budget(100, 0)


def _ng_inputs(**kw):
    base = dict(q_G=P2(40), q_D=P2(40), gamma=10240, adv_ind=0, adv_ffp_ng=0,
                delta_ik=P2(-40), sigma=P2(-50))
    base.update(kw)
    return BoundInputs(**base)


def test_chebyshev_failure_term_with_zero_spread():
    rep = qrom_main_bound(_ng_inputs(sigma=0))
    assert _term(rep, "ind", "qrom.eps_delta.chebyshev").exact_value() == (P2(40) + 1) * P2(-40)


def test_chebyshev_precondition_diagnostic():
    rep = qrom_main_bound(_ng_inputs(sigma=P2(-20)))
    assert rep.total == 1
    assert PRECONDITION_FAILED in rep.diagnostics
    assert recompute(rep.to_dict())
    assert chebyshev_precondition(1, Fraction(1, 2) / 304 ** 0.5 * 0.999999)
    assert not chebyshev_precondition(1, Fraction(1, 34))


def test_eps_delta_hand_set_dual_path():
    delta, sigma, q_G = P2(-40), P2(-50), P2(40)
    got = eps_delta_chebyshev(MP_ARITH, delta, sigma, q_G)
    with mpmath.workdps(80):
        d = mpmath.mpf(2) ** -40
        want = d + (3 + 2 * d) * mpmath.sqrt(304) * mpmath.mpf(2) ** 40 * mpmath.mpf(2) ** -50
        assert abs(mpmath.mpf(got) - want) / want < 1e-12
    exact = eps_delta_chebyshev(EXACT_ARITH, delta, sigma, q_G)
    assert abs(float(exact) - float(got)) / float(got) < 1e-12


def test_gaussian_variant():
    thr = mpmath.e / 608
    rep = qrom_main_bound_gaussian(_ng_inputs(beta=P2(60)))
    assert 0 < rep.total <= 1
    with pytest.raises(DomainError):
        qrom_main_bound_gaussian(_ng_inputs(beta=Fraction(1, 1000)))
    edge = Fraction(int(thr * 10 ** 30) + 1, 10 ** 30)
    term = _term(qrom_main_bound_gaussian(_ng_inputs(beta=edge, q_D=0)), "ind", "qrom.eps_delta.gaussian")
    assert 0 < term.value < mpmath.inf
    one = _term(qrom_main_bound_gaussian(_ng_inputs(beta=P2(60), q_G=1, q_D=0)), "ind", "qrom.eps_delta.gaussian")
    with mpmath.workdps(60):
        want = mpmath.mpf(2) ** -40 + 2 * mpmath.mpf(2) ** -30 * mpmath.sqrt(mpmath.log(608 * mpmath.mpf(2) ** 30))
        assert abs(one.value - want) / want < 1e-30


def test_gaussian_beats_chebyshev_past_crossover():
    def eps(variant, q_G):
        rep = compute_bound(_ng_inputs(q_G=q_G, q_D=0, sigma=P2(-40), beta=P2(40)), variant)
        fid = "qrom.eps_delta.chebyshev" if variant.endswith("chebyshev") else "qrom.eps_delta.gaussian"
        return _term(rep, "ind", fid).value

    below = [eps("ffp-ng-gaussian", P2(k)) < eps("ffp-ng-chebyshev", P2(k)) for k in range(0, 34)]
    cross = below.index(True)
    assert not any(below[:cross]) and all(below[cross:]) and cross > 5


# reports -----------------------------------------------------------------------------------

def test_report_recompute_detects_tampering():
    rep = qrom_bound_ffpcpa(BoundInputs(q_G=P2(64), q_D=P2(64), adv_ind=P2(-100), adv_ffp_cpa=P2(-140),
                                        gamma=10240)).to_dict()
    assert recompute(rep)
    rep["routes"]["ind"]["terms"][0]["inputs"]["d"] = "3"
    with pytest.raises(InvariantError):
        recompute(rep)


def test_report_serializations():
    rep = compute_bound(_ng_inputs(adv_ow=P2(-128)))
    d = json.loads(rep.to_json())
    assert d["schema_version"] == 1 and d["best_route"] in ("ind", "ow")
    assert set(d["routes"]) == {"ind", "ow"}
    assert rep.total == min(r.total for r in rep.routes.values())
    assert d["total"] == d["routes"][d["best_route"]]["total"]
    lines = rep.to_csv().splitlines()
    assert lines[0].startswith("route,formula_id")
    assert sum(1 for l in lines if ",total," in l) == 2
    assert BoundInputs.from_config(rep.inputs.to_config()) == rep.inputs


def test_input_validation():
    for bad in (dict(q_G=-1), dict(q_G=1, gamma=0), dict(q_G=1, adv_ow=2), dict(q_G=1, model="XROM"),
                dict(q_G=1, sigma=-1), dict(q_G=1, delta_ik="unknown")):
        with pytest.raises(DomainError):
            BoundInputs(**bad)
    with pytest.raises(DomainError):
        BoundInputs.from_config({"q_G": 1, "qq": 2})
    with pytest.raises(DomainError):
        compute_bound(BoundInputs(q_G=1, adv_ow=0, adv_ffp_cpa=0, gamma=1, model="ROM"), "ffp-ng-chebyshev")


exps = st.integers(0, 80)


@settings(max_examples=60, deadline=None)
@given(exps, exps, exps, st.integers(1, 200), st.integers(64, 12000))
def test_total_monotone_in_budgets_and_gamma(g, h, d, adv, gamma):
    def total(**kw):
        base = dict(q_G=P2(g), q_H=P2(h), q_D=P2(d), adv_ind=P2(-adv), adv_ow=P2(-adv), adv_ffp_ng=P2(-adv - 20),
                    delta_ik=P2(-100), sigma=P2(-140), gamma=gamma)
        base.update(kw)
        return compute_bound(BoundInputs(**base)).total

    t = total()
    assert 0 <= t <= 1
    assert total(q_G=P2(g + 1)) >= t
    assert total(q_H=P2(h + 1)) >= t
    assert total(q_D=P2(d + 1)) >= t
    assert total(gamma=gamma + 64) <= t
    assert total(msg_space=P2(300)) <= t
