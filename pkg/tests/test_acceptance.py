"""The nine acceptance criteria. Each test records its criterion number and a
one-line detail; conftest prints a pass/fail line per criterion."""

import math
import random
import time
from fractions import Fraction
from functools import partial

import mpmath
import numpy as np

from fo_lab.adversaries import (BestOfQ, CiphertextGuess, ExhaustiveSearch, FailurePlanter, FcoRandomProbe,
                                PublicKeyParity, UniformMessage)
from fo_lab.bound_calc import (BoundInputs, compute_bound, cross_check, recompute)
from fo_lab.cli import budget_table, cmd_demo
from fo_lab.config import RunConfig, resolve_scheme
from fo_lab.encoding import derive_rng
from fo_lab.estimation import binomial_se, two_proportion_pvalue
from fo_lab.failure_stats import estimate_failure_stats, ffp_nk_bound_chebyshev, gaussian_beta_threshold
from fo_lab.fo_kem import FoKem
from fo_lab.games import QueryBudget, run_ffp_ng, run_ffp_nk, run_ind_cca_kem, run_many
from fo_lab.pke_core import DerandomizedPke
from fo_lab.reductions import FcoForwarder, OwnKeyRunner, reduction_pipeline
from fo_lab.spreadness import PRESETS, budget_exponent, gamma_exact_toy, gamma_floor, gamma_frodo, gamma_hqc
from fo_lab.toy_schemes import (LargeRandomnessFail, ModularBandFail, NeverFail, ParityFail, SyntheticFailurePke,
                                ThresholdFail, WeightedKeyFail, exact_failure_stats)


def _tag(record_property, n, title):
    record_property("criterion", n)
    record_property("title", title)


def _binom_by_product(n, k):
    c = 1
    for i in range(k):
        c = c * (n - i) // (i + 1)
    return c


# 1 --------------------------------------------------------------------------------

def test_criterion_1_gamma_reproduction(record_property):
    _tag(record_property, 1, "gamma reproduction for Frodo and HQC presets")
    t0 = time.perf_counter()
    frodo = {name: gamma_frodo(PRESETS[name]) for name in ("frodo-640", "frodo-976", "frodo-1344")}
    # oracle: floor(-log2 p0) at 200-bit precision
    oracle = {}
    with mpmath.workprec(200):
        for name in frodo:
            p = PRESETS[name]
            p0 = mpmath.mpf(p.p0.numerator) / p.p0.denominator
            oracle[name] = p.m_bar * p.n * int(mpmath.floor(-mpmath.log(p0, 2)))
    hqc = {}
    for name, bits in (("hqc-128", 694), ("hqc-192", 1105), ("hqc-256", 1490)):
        p = PRESETS[name]
        g = gamma_hqc(p)
        assert g.binom == _binom_by_product(p.length, p.w)
        hqc[name] = (g.certifies(bits), g.binom > 2 ** bits, g.log2_binom_floor)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"frodo={list(frodo.values())} hqc_floor={[v[2] for v in hqc.values()]} {elapsed:.2f}s")
    assert frodo == {"frodo-640": 10240, "frodo-976": 15616, "frodo-1344": 10752}
    assert frodo == oracle
    assert all(a and b for a, b, _ in hqc.values())
    assert [v[2] for v in hqc.values()] == [694, 1105, 1490]
    assert elapsed < 5


# 2 --------------------------------------------------------------------------------

def test_criterion_2_budget_exponents(record_property):
    _tag(record_property, 2, "spreadness budget exponents at q_D = 2^64")
    t0 = time.perf_counter()
    table = {row["preset"]: int(row["budget_exponent"]) for row in budget_table(Fraction(2) ** 64)}
    expected = {"frodo-640": -5055, "frodo-976": -7743, "frodo-1344": -5311,
                "hqc-128": -629, "hqc-192": -1040, "hqc-256": -1425}
    direct = {name: budget_exponent(gamma_floor(p)) for name, p in PRESETS.items()}
    # the budget inequality q_D (q_G + 2 q_D) <= q_G 2^65 holds from q_G = 2^65 on, exactly
    q_D = 2 ** 64
    holds = [q_D * (q_G + 2 * q_D) <= q_G * 2 ** 65 for q_G in (2 ** 65, 2 ** 66, 2 ** 100)]
    fails_below = q_D * (2 ** 64 + 2 * q_D) <= 2 ** 64 * 2 ** 65
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{table} {elapsed:.3f}s")
    assert table == expected
    assert direct == {k: Fraction(v) for k, v in expected.items()}
    assert all(holds) and not fails_below
    assert elapsed < 1


# 3 --------------------------------------------------------------------------------

def test_criterion_3_correctness_round_trip(record_property):
    _tag(record_property, 3, "perfectly correct toy, 10^4 encaps/decaps")
    t0 = time.perf_counter()
    report = cmd_demo(RunConfig(command="demo", trials=10_000, scheme={"preset": "toy-perfect"}))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"mismatches={report['mismatches']} rejections={report['rejections']} {elapsed:.2f}s")
    assert report["cycles"] == 10_000
    assert report["mismatches"] == 0 and report["rejections"] == 0
    assert elapsed < 10


# 4 --------------------------------------------------------------------------------

def _guess_run(kem, adv, budget, seed):
    out = run_ind_cca_kem(kem, adv, seed, budget)
    return out.events.guess_events


def test_criterion_4_guess_bound(record_property):
    _tag(record_property, 4, "Pr[GUESS] <= q_D 2^-gamma for a no-G-query guesser")
    t0 = time.perf_counter()
    q_D, runs = 2, 10_000
    details, ok = [], True
    for gamma in (4, 6, 8):
        scheme = SyntheticFailurePke(4, 1 << gamma, 16, NeverFail())
        measured = gamma_exact_toy(scheme, scheme.keypair(3))
        assert measured == gamma
        kem = FoKem(DerandomizedPke(scheme))
        counts = run_many(partial(_guess_run, kem, CiphertextGuess(), QueryBudget(q_D=q_D)), runs, 1000 + gamma)
        hits = sum(1 for c in counts if c)
        rate = hits / runs
        bound = q_D * 2.0 ** -gamma
        se = binomial_se(hits, runs)
        details.append(f"gamma={gamma}: {rate:.4f} <= {bound:.4f}+5*{se:.4f}")
        ok &= rate <= bound + 5 * se
    elapsed = time.perf_counter() - t0
    record_property("detail", "; ".join(details) + f" {elapsed:.1f}s")
    assert ok
    assert elapsed < 60


# 5 --------------------------------------------------------------------------------

def _plantable_weighted():
    # randomness values 0..7 fail for every key, the rest never
    w = np.zeros((1, 64), dtype=np.int64)
    w[0, :8] = 16
    return SyntheticFailurePke(4, 64, 16, WeightedKeyFail(w))


REDUCTION_CONFIGS = [
    ("threshold/planter", lambda: resolve_scheme({"preset": "toy-threshold"}),
     FailurePlanter(0.1, 2, search=False), 2),
    ("weighted/planter", _plantable_weighted, FailurePlanter(0.5, 1, search=False), 1),
    ("parity/planter", lambda: resolve_scheme({"preset": "toy-parity"}), FailurePlanter(0.4, 2, search=False), 2),
    ("threshold/guesser", lambda: resolve_scheme({"preset": "toy-threshold"}), CiphertextGuess(), 3),
    ("weighted/search", _plantable_weighted, FailurePlanter(0.5, 1, search=True), 1),
]


def test_criterion_5_reduction_soundness(record_property):
    _tag(record_property, 5, "extracted plaintexts fail; win(CCA) <= win(CPA) + win(FFP-CCA) + q_D 2^-gamma")
    t0 = time.perf_counter()
    runs = 1000
    details, ok, extracted_total = [], True, 0
    for name, make, adv, q_D in REDUCTION_CONFIGS:
        scheme = make()
        gamma = gamma_exact_toy(scheme, scheme.keygen(derive_rng(0, "keygen")))
        kem = FoKem(DerandomizedPke(scheme))
        recs = run_many(partial(reduction_pipeline, kem, adv, budget=QueryBudget(q_D=q_D)), runs, 77)
        extracted = [r for r in recs if r["extracted"] is not None]
        extracted_total += len(extracted)
        ok &= all(r["extracted_fails"] for r in extracted)
        d = np.array([r["cca_won"] - r["cpa_won"] - r["ffp_won"] for r in recs], dtype=float)
        se = d.std(ddof=1) / math.sqrt(runs)
        slack = q_D * 2.0 ** -gamma
        ok &= d.mean() <= slack + 5 * se
        details.append(f"{name}: gap={d.mean():+.3f} slack={slack:.3f} se={se:.3f} extracted={len(extracted)}")
    elapsed = time.perf_counter() - t0
    record_property("detail", "; ".join(details) + f" {elapsed:.1f}s")
    assert extracted_total > 0
    assert ok
    assert elapsed < 120


# 6 --------------------------------------------------------------------------------

STATS_INSTANCES = [
    ("threshold", SyntheticFailurePke(4, 16, 16, ThresholdFail(28))),
    ("band", SyntheticFailurePke(3, 64, 16, ModularBandFail(3, 16))),
    ("parity-band", SyntheticFailurePke(3, 64, 32, ParityFail(band=32))),
    ("weighted", SyntheticFailurePke(3, 128, 32, WeightedKeyFail.from_seed(5, 8, 128, 32))),
    ("large-r", SyntheticFailurePke(4, 256, 16, LargeRandomnessFail(200))),
    ("threshold-wide", SyntheticFailurePke(2, 64, 64, ThresholdFail(100))),
]
GRID = (0.05, 0.1, 0.25, 0.5)


def test_criterion_6_statistics_oracle_equivalence(record_property):
    _tag(record_property, 6, "estimate_failure_stats within 5 SE of exact enumeration")
    t0 = time.perf_counter()
    worst, bad = 0.0, []
    for name, scheme in STATS_INSTANCES:
        exact = exact_failure_stats(scheme, GRID)
        est = estimate_failure_stats(scheme, trials=4000, seed=11, grid=GRID)
        checks = [("delta", est.delta_ik, float(exact.delta), est.standard_errors["delta_ik"]),
                  ("sigma", est.sigma, exact.sigma, est.standard_errors["sigma"])]
        checks += [(f"tau({t})", est.tail[t], float(exact.tail[t]), est.standard_errors["tail"][t]) for t in GRID]
        for stat, e, x, se in checks:
            z = abs(e - x) / se
            worst = max(worst, z)
            if not z < 5:
                bad.append(f"{name}.{stat} z={z:.2f}")
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{len(STATS_INSTANCES)} instances, worst |z|={worst:.2f} {elapsed:.1f}s {bad}")
    assert not bad
    assert elapsed < 60


# 7 --------------------------------------------------------------------------------

def _sparse_instance():
    # two randomness values (of 2^16) fail for every key: delta = 2^-15, sigma ~ 2^-7.5
    w = np.zeros((1, 1 << 16), dtype=np.int64)
    w[0, [101, 40_000]] = 16
    return SyntheticFailurePke(4, 1 << 16, 16, WeightedKeyFail(w))


def _sparse_partial():
    # 1/64 of randomness values fail for 1 of 16 keys
    w = np.zeros((1, 1 << 12), dtype=np.int64)
    w[0, ::64] = 1
    return SyntheticFailurePke(4, 1 << 12, 16, WeightedKeyFail(w))


NK_INSTANCES = [
    ("sparse", _sparse_instance),
    ("sparse-partial", _sparse_partial),
    ("threshold", lambda: SyntheticFailurePke(4, 16, 16, ThresholdFail(28))),
    ("parity", lambda: resolve_scheme({"preset": "toy-parity"})),
]
NK_SEARCHERS = [
    ("uniform", UniformMessage(), 0),
    ("best-of-1", BestOfQ(1), 1),
    ("best-of-2", BestOfQ(2), 2),
    ("best-of-8", BestOfQ(8), 8),
    ("exhaustive", ExhaustiveSearch(), 16),
    ("own-key(pk-parity)", OwnKeyRunner(PublicKeyParity()), 16),
]


def _nk_run(dpke, adv, budget, seed):
    out = run_ffp_nk(dpke, adv, seed, budget)
    return out.won, out.queries_used["q_G"]


def test_criterion_7_classical_ffp_nk_respects_bound(record_property):
    _tag(record_property, 7, "classical FFP-NK searchers stay under the Chebyshev bound")
    t0 = time.perf_counter()
    runs = 3000
    details, ok, nontrivial = [], True, 0
    for iname, make in NK_INSTANCES:
        scheme = make()
        exact = exact_failure_stats(scheme)
        delta, sigma = exact.delta, math.sqrt(exact.variance)
        dpke = DerandomizedPke(scheme)
        for aname, adv, q in NK_SEARCHERS:
            res = run_many(partial(_nk_run, dpke, adv, QueryBudget(q_G=q)), runs, 5)
            wins = sum(w for w, _ in res)
            used = max(u for _, u in res)
            assert used <= q
            bound = float(ffp_nk_bound_chebyshev(q, delta, sigma))
            nontrivial += bound < 1
            rate = wins / runs
            ok &= rate <= bound + 5 * binomial_se(wins, runs)
            details.append(f"{iname}/{aname}: {rate:.4f}<= {bound:.4f}")
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{nontrivial} non-trivial bounds; " + "; ".join(details[:8]) + f" ... {elapsed:.1f}s")
    assert nontrivial >= 6
    assert ok
    assert elapsed < 120


# 8 --------------------------------------------------------------------------------

def _random_inputs(rng: random.Random, model: str) -> dict:
    def p2(lo, hi):
        return f"2^{rng.randint(lo, hi)}"
    d = {"model": model, "q_G": p2(0, 80), "q_H": p2(0, 80), "q_D": p2(0, 70), "gamma": rng.randint(1, 20000),
         "msg_space": p2(8, 512), "adv_ow": p2(-256, 0), "adv_ind": p2(-256, 0), "adv_ffp_cpa": p2(-256, 0),
         "adv_ffp_ng": p2(-256, 0), "delta_ik": p2(-200, -1), "sigma": p2(-240, -1),
         "beta": str(Fraction(rng.randint(1, 4000), 100) + Fraction(1, 100))}
    return d


VARIANTS = [("ROM", "ffp-cpa"), ("QROM", "ffp-cpa"), ("QROM", "ffp-ng-chebyshev"), ("QROM", "ffp-ng-gaussian")]
INCREASING = ("q_G", "q_H", "q_D", "adv_ow", "adv_ind", "adv_ffp_cpa", "adv_ffp_ng")


def _total(cfg, variant):
    return compute_bound(BoundInputs.from_config(cfg), variant).total


def test_criterion_8_bound_evaluator_properties(record_property):
    _tag(record_property, 8, "monotone, clamped, dual-path agreement on 10^3 random grids")
    t0 = time.perf_counter()
    rng = random.Random(8)
    worst_gap, violations = 0.0, []
    for i in range(1000):
        model, variant = VARIANTS[i % 4]
        cfg = _random_inputs(rng, model)
        if variant == "ffp-ng-gaussian" and Fraction(cfg["beta"]) < Fraction(float(gaussian_beta_threshold())):
            cfg["beta"] = "1"
        rep = compute_bound(BoundInputs.from_config(cfg), variant)
        worst_gap = max(worst_gap, cross_check(rep))
        recompute(rep.to_dict())
        base = rep.total
        if not 0 <= base <= 1:
            violations.append(f"clamp {i}")
        key = rng.choice(INCREASING)
        up = dict(cfg)
        up[key] = str(min(Fraction(1), Fraction(2) * BoundInputs.from_config(cfg).__dict__[key])) \
            if key.startswith("adv") else f"{cfg[key]}*3"
        if _total(up, variant) < base:
            violations.append(f"{key} {i}")
        down = dict(cfg, gamma=cfg["gamma"] + rng.randint(1, 500))
        if _total(down, variant) > base:
            violations.append(f"gamma {i}")
        down = dict(cfg, msg_space=f"{cfg['msg_space']}*2")
        if _total(down, variant) > base:
            violations.append(f"msg_space {i}")
    elapsed = time.perf_counter() - t0
    record_property("detail", f"worst relative gap {worst_gap:.2e}, violations={violations[:5]} {elapsed:.1f}s")
    assert worst_gap <= 1e-12
    assert not violations
    assert elapsed < 30


# 9 --------------------------------------------------------------------------------

def _ng_run(scheme, adv, seed):
    out = run_ffp_ng(scheme, adv, seed)
    return out.info["b"], out.output


def test_criterion_9_ffp_ng_null_case(record_property):
    _tag(record_property, 9, "FFP-NG advantage indistinguishable from 0 for key-independent failures")
    t0 = time.perf_counter()
    scheme = SyntheticFailurePke(4, 256, 16, LargeRandomnessFail(192))
    details, pvals = [], []
    for name, adv in (("fco-probe", FcoRandomProbe()), ("fco-forward(best-of-4)", FcoForwarder(BestOfQ(4)))):
        res = run_many(partial(_ng_run, scheme, adv), 10_000, 9)
        x0 = sum(o for b, o in res if b == 0)
        n0 = sum(1 for b, _ in res if b == 0)
        x1 = sum(o for b, o in res if b == 1)
        n1 = len(res) - n0
        p = two_proportion_pvalue(x0, n0, x1, n1)
        pvals.append(p)
        details.append(f"{name}: p={p:.3f} ({x0}/{n0} vs {x1}/{n1})")
    elapsed = time.perf_counter() - t0
    record_property("detail", "; ".join(details) + f" {elapsed:.1f}s")
    assert all(p >= 1e-3 for p in pvals)
    assert elapsed < 60
