"""End-to-end IND-CCA bounds for the FO KEM, ROM and QROM, from query budgets,
scheme statistics and assumed advantages of the underlying PKE.

Every term is a named formula evaluated twice: in 128-bit mpmath floating
point (the reported value) and in exact rationals (the cross-check). Terms
record their exact rational inputs, so a report can be re-evaluated from its
own JSON and compared bit for bit.

An advantage may be "unknown". Its term then stays symbolic (coefficient times
Adv or sqrt(Adv)) and totals use the worst case Adv = 1.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Callable

from .arith import EXACT_ARITH, MP, MP_ARITH, as_fraction, log2_of, parse_number, relative_difference
from .errors import DomainError, InvariantError
from .failure_stats import C_SEARCH, gaussian_beta_threshold

SCHEMA_VERSION = 1
UNKNOWN = "unknown"
ROM, QROM = "ROM", "QROM"
PRECONDITION_FAILED = "chebyshev-precondition-failed"

ADVANTAGES = ("adv_ow", "adv_ind", "adv_ffp_cpa", "adv_ffp_cca", "adv_ffp_ng")
ADV_SYMBOLS = {"adv_ow": "Adv_OW", "adv_ind": "Adv_IND", "adv_ffp_cpa": "Adv_FFP-CPA",
               "adv_ffp_cca": "Adv_FFP-CCA", "adv_ffp_ng": "Adv_FFP-NG"}


def _opt(v):
    if v is None:
        return None
    if isinstance(v, str) and v.strip().lower() == UNKNOWN:
        return UNKNOWN
    return parse_number(v)


@dataclass
class BoundInputs:
    """Budgets, space sizes, scheme statistics and assumed advantages.

    Numbers are held as exact Fractions. d and w default to q_G + q_H and 1.
    """

    q_G: Fraction
    q_H: Fraction = Fraction(0)
    q_D: Fraction = Fraction(0)
    msg_space: Fraction = Fraction(2) ** 256
    gamma: Fraction | None = None
    d: Fraction | None = None
    w: Fraction | None = None
    rand_space: Fraction | None = None
    delta_ik: Fraction | None = None
    sigma: Fraction | None = None
    beta: Fraction | None = None
    adv_ow: object = None
    adv_ind: object = None
    adv_ffp_cpa: object = None
    adv_ffp_cca: object = None
    adv_ffp_ng: object = None
    model: str = QROM

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "model":
                continue
            setattr(self, f.name, _opt(v))
        self.model = str(self.model).upper()
        if self.model not in (ROM, QROM):
            raise DomainError(f"model must be ROM or QROM, got {self.model!r}")
        for name in ("q_G", "q_H", "q_D", "d", "w"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise DomainError(f"{name} must be non-negative")
        if self.msg_space < 1:
            raise DomainError("|M| must be at least 1")
        if self.gamma is not None and self.gamma <= 0:
            raise DomainError("gamma must be positive")
        for name in ADVANTAGES + ("delta_ik",):
            v = getattr(self, name)
            if v is not None and v != UNKNOWN and not 0 <= v <= 1:
                raise DomainError(f"{name} must lie in [0, 1]")
        if self.delta_ik == UNKNOWN:
            raise DomainError("delta_ik must be numeric")
        if self.sigma is not None and (self.sigma == UNKNOWN or self.sigma < 0):
            raise DomainError("sigma must be a non-negative number")
        if self.beta is not None and (self.beta == UNKNOWN or self.beta <= 0):
            raise DomainError("beta must be a positive number")

    @property
    def q_ro(self) -> Fraction:
        return self.q_G + self.q_H

    @property
    def d_eff(self) -> Fraction:
        return self.q_ro if self.d is None else self.d

    @property
    def w_eff(self) -> Fraction:
        return Fraction(1) if self.w is None else self.w

    @classmethod
    def from_config(cls, cfg: dict) -> "BoundInputs":
        known = {f.name for f in fields(cls)}
        extra = set(cfg) - known
        if extra:
            raise DomainError(f"unknown bound inputs: {sorted(extra)}")
        return cls(**cfg)

    def to_config(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            out[f.name] = v if isinstance(v, str) else _frac_str(v)
        return out


def _frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def mp_exact_str(v) -> str:
    """Exact binary representation 'man*2^exp' of an mpf."""
    v = MP.mpf(v)
    if v == 0:
        return "0"
    man, exp = v.man_exp
    return f"{int(man)}*2^{int(exp)}"


# formulas ------------------------------------------------------------------------
# Each returns the coefficient of its advantage (or the whole term if it has none).

def _f_rom_ow(ar, x):
    return ar.num(x["q_ro"] + x["q_D"] + 1)


def _f_rom_ind_adv(ar, x):
    return ar.num(3)


def _f_rom_ind_guess(ar, x):
    return ar.num(2 * (x["q_ro"] + x["q_D"]) + 1) / ar.num(x["msg_space"])


def _f_per_query(ar, x):
    return ar.num(x["q_D"] + 1)


def _f_rom_spread(ar, x):
    return ar.num(2 * x["q_D"]) * ar.pow2(-x["gamma"])


def _f_qrom_ind_adv(ar, x):
    return 4 * ar.sqrt(ar.num(x["d"] + x["q_D"]))


def _f_qrom_ind_guess(ar, x):
    return ar.num(8 * (x["q"] + x["q_D"])) / ar.sqrt(ar.num(x["msg_space"]))


def _f_qrom_ow(ar, x):
    return ar.num(8 * (x["d"] + x["q_D"])) * ar.sqrt(ar.num(x["w"]))


def _f_eps_gamma_ffpcpa(ar, x):
    return ar.num(24 * x["q_D"] * (x["q_G"] + 4 * x["q_D"])) * ar.pow2(-x["gamma"] / 2)


def _f_ffp_ng(ar, x):
    return ar.num(2 * (x["q_D"] + 1))


def _f_eps_gamma_ng(ar, x):
    q_D, q_G = x["q_D"], x["q_G"]
    return (ar.num(24 * q_D * (q_G + 2 * q_D)) * ar.pow2(-x["gamma"] / 2)
            + ar.num(4 * q_D) * ar.pow2(-x["gamma"]))


def eps_delta_chebyshev(ar, delta, sigma, q_G, C=C_SEARCH):
    delta = ar.num(delta)
    return delta + (3 + 2 * delta) * ar.sqrt(ar.num(C)) * ar.num(q_G) * ar.num(sigma)


def eps_delta_gaussian(ar, delta, beta, q_G, C=C_SEARCH):
    q = max(Fraction(q_G), Fraction(1))
    beta = ar.num(beta)
    inner = ar.ln(2 * ar.num(C) * ar.sqrt(beta) * ar.num(q * q))
    return ar.num(delta) + 2 / ar.sqrt(beta) * ar.sqrt(inner)


def _f_eps_delta_cheb(ar, x):
    return ar.num(x["q_D"] + 1) * eps_delta_chebyshev(ar, x["delta_ik"], x["sigma"], x["q_G"], x["C"])


def _f_eps_delta_gauss(ar, x):
    return ar.num(x["q_D"] + 1) * eps_delta_gaussian(ar, x["delta_ik"], x["beta"], x["q_G"], x["C"])


@dataclass(frozen=True)
class Formula:
    fn: Callable
    advantage: str | None = None
    sqrt_adv: bool = False
    text: str = ""


FORMULAS = {
    "rom.ow.passive": Formula(_f_rom_ow, "adv_ow", False, "(q_RO + q_D + 1) * Adv_OW"),
    "rom.ind.passive": Formula(_f_rom_ind_adv, "adv_ind", False, "3 * Adv_IND"),
    "rom.ind.guess": Formula(_f_rom_ind_guess, None, False, "(2 (q_RO + q_D) + 1) / |M|"),
    "rom.ffp_cpa": Formula(_f_per_query, "adv_ffp_cpa", False, "(q_D + 1) * Adv_FFP-CPA"),
    "rom.spread": Formula(_f_rom_spread, None, False, "2 q_D 2^-gamma"),
    "qrom.ind.passive": Formula(_f_qrom_ind_adv, "adv_ind", True, "4 sqrt((d + q_D) Adv_IND)"),
    "qrom.ind.guess": Formula(_f_qrom_ind_guess, None, False, "8 (q + q_D) / sqrt(|M|)"),
    "qrom.ow.passive": Formula(_f_qrom_ow, "adv_ow", True, "8 (d + q_D) sqrt(w Adv_OW)"),
    "qrom.ffp_cpa": Formula(_f_per_query, "adv_ffp_cpa", False, "(q_D + 1) * Adv_FFP-CPA"),
    "qrom.eps_gamma.ffp_cpa": Formula(_f_eps_gamma_ffpcpa, None, False, "24 q_D (q_G + 4 q_D) 2^(-gamma/2)"),
    "qrom.ffp_ng": Formula(_f_ffp_ng, "adv_ffp_ng", False, "2 (q_D + 1) * Adv_FFP-NG"),
    "qrom.eps_delta.chebyshev": Formula(_f_eps_delta_cheb, None, False,
                                        "(q_D + 1) (delta + (3 + 2 delta) sqrt(C) q_G sigma)"),
    "qrom.eps_delta.gaussian": Formula(_f_eps_delta_gauss, None, False,
                                       "(q_D + 1) (delta + 2 beta^-1/2 sqrt(ln(2 C sqrt(beta) q_G^2)))"),
    "qrom.eps_gamma.ffp_ng": Formula(_f_eps_gamma_ng, None, False,
                                     "24 q_D (q_G + 2 q_D) 2^(-gamma/2) + 4 q_D 2^-gamma"),
}


def evaluate_formula(formula_id: str, inputs: dict, ar=MP_ARITH):
    """Value of one term with its inputs; an unknown advantage counts as 1."""
    f = FORMULAS[formula_id]
    coef = f.fn(ar, inputs)
    if f.advantage is None:
        return coef
    adv = inputs[f.advantage]
    if adv == UNKNOWN:
        return coef
    a = ar.num(adv)
    return coef * (ar.sqrt(a) if f.sqrt_adv else a)


@dataclass
class Term:
    formula_id: str
    inputs: dict
    value: object
    symbolic: str | None = None

    @property
    def text(self) -> str:
        return FORMULAS[self.formula_id].text

    def exact_value(self) -> Fraction:
        return evaluate_formula(self.formula_id, self.inputs, EXACT_ARITH)

    def to_dict(self) -> dict:
        return {
            "formula_id": self.formula_id,
            "formula": self.text,
            "value": MP.nstr(self.value, 30),
            "value_exact_bits": mp_exact_str(self.value),
            "log2": log2_of(self.value),
            "symbolic": self.symbolic,
            "inputs": {k: v if isinstance(v, str) else _frac_str(v) for k, v in self.inputs.items()},
        }


def _make_term(formula_id: str, inputs: dict) -> Term:
    f = FORMULAS[formula_id]
    value = evaluate_formula(formula_id, inputs)
    symbolic = None
    if f.advantage is not None and inputs[f.advantage] == UNKNOWN:
        sym = ADV_SYMBOLS[f.advantage]
        coef = MP.nstr(value, 12)
        symbolic = f"{coef} * sqrt({sym})" if f.sqrt_adv else f"{coef} * {sym}"
    return Term(formula_id, inputs, value, symbolic)


def _clamp(x):
    return min(MP.mpf(1), max(MP.mpf(0), x))


@dataclass
class RouteReport:
    name: str
    terms: list
    diagnostics: list = field(default_factory=list)
    forced_total: object = None

    @property
    def raw_sum(self):
        return MP.fsum(t.value for t in self.terms)

    @property
    def total(self):
        if self.forced_total is not None:
            return MP.mpf(self.forced_total)
        return _clamp(self.raw_sum)

    @property
    def expression(self) -> str:
        known = MP.fsum(t.value for t in self.terms if t.symbolic is None)
        parts = [MP.nstr(known, 12)] + [t.symbolic for t in self.terms if t.symbolic]
        return " + ".join(parts)

    def to_dict(self) -> dict:
        return {
            "route": self.name,
            "total": MP.nstr(self.total, 30),
            "total_exact_bits": mp_exact_str(self.total),
            "log2_total": log2_of(self.total),
            "unclamped_log2": log2_of(self.raw_sum),
            "expression": self.expression,
            "diagnostics": list(self.diagnostics),
            "terms": [t.to_dict() for t in self.terms],
        }


@dataclass
class BoundReport:
    model: str
    variant: str
    routes: dict
    inputs: BoundInputs
    diagnostics: list = field(default_factory=list)

    @property
    def best_route(self) -> str:
        return min(self.routes, key=lambda k: (self.routes[k].total, k))

    @property
    def total(self):
        return self.routes[self.best_route].total

    @property
    def terms(self) -> list:
        return [t for r in self.routes.values() for t in r.terms]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "model": self.model,
            "variant": self.variant,
            "log_base": 2,
            "total": MP.nstr(self.total, 30),
            "total_exact_bits": mp_exact_str(self.total),
            "log2_total": log2_of(self.total),
            "best_route": self.best_route,
            "diagnostics": list(self.diagnostics),
            "inputs": self.inputs.to_config(),
            "routes": {k: r.to_dict() for k, r in self.routes.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["route", "formula_id", "formula", "value", "log2", "symbolic", "inputs"])
        for name, route in self.routes.items():
            for t in route.terms:
                d = t.to_dict()
                w.writerow([name, d["formula_id"], d["formula"], d["value"], repr(d["log2"]),
                            d["symbolic"] or "", json.dumps(d["inputs"], sort_keys=True)])
            w.writerow([name, "total", "clamp(sum)", MP.nstr(route.total, 30), repr(log2_of(route.total)), "", ""])
        return buf.getvalue()


# assembly --------------------------------------------------------------------------

def _need(inputs: BoundInputs, *names):
    missing = [n for n in names if getattr(inputs, n) is None]
    if missing:
        raise DomainError(f"missing required input(s): {', '.join(missing)}")


def _passive_routes(inputs: BoundInputs, ind_ids, ow_ids, base: dict) -> dict:
    routes = {}
    if inputs.adv_ind is not None:
        routes["ind"] = [_make_term(fid, {**base, "adv_ind": inputs.adv_ind}) for fid in ind_ids]
    if inputs.adv_ow is not None:
        routes["ow"] = [_make_term(fid, {**base, "adv_ow": inputs.adv_ow}) for fid in ow_ids]
    if not routes:
        raise DomainError("missing required advantage input: give adv_ind and/or adv_ow")
    return routes


def _require_model(inputs: BoundInputs, model: str):
    if inputs.model != model:
        raise DomainError(f"this bound needs model={model}, got {inputs.model}")


def rom_main_bound(inputs: BoundInputs) -> BoundReport:
    """Passive term + (q_D+1) Adv_FFP-CPA + 2 q_D 2^-gamma, for the OW and IND routes."""
    _require_model(inputs, ROM)
    _need(inputs, "gamma", "adv_ffp_cpa")
    base = {"q_ro": inputs.q_ro, "q_D": inputs.q_D, "msg_space": inputs.msg_space}
    passive = _passive_routes(inputs, ("rom.ind.passive", "rom.ind.guess"), ("rom.ow.passive",), base)
    shared = [
        _make_term("rom.ffp_cpa", {"q_D": inputs.q_D, "adv_ffp_cpa": inputs.adv_ffp_cpa}),
        _make_term("rom.spread", {"q_D": inputs.q_D, "gamma": inputs.gamma}),
    ]
    routes = {k: RouteReport(k, v + shared) for k, v in passive.items()}
    return BoundReport(ROM, "ffp-cpa", routes, inputs)


def qrom_passive_terms(inputs: BoundInputs) -> dict:
    """The IND-route and OW-route passive terms, keyed 'ind' / 'ow', with q_D folded into d and q."""
    _require_model(inputs, QROM)
    base = {"d": inputs.d_eff, "q": inputs.q_ro, "q_D": inputs.q_D, "w": inputs.w_eff,
            "msg_space": inputs.msg_space}
    return _passive_routes(inputs, ("qrom.ind.passive", "qrom.ind.guess"), ("qrom.ow.passive",), base)


def qrom_bound_ffpcpa(inputs: BoundInputs) -> BoundReport:
    """Passive + (q_D+1) Adv_FFP-CPA + 24 q_D (q_G + 4 q_D) 2^(-gamma/2)."""
    _need(inputs, "gamma", "adv_ffp_cpa")
    passive = qrom_passive_terms(inputs)
    shared = [
        _make_term("qrom.ffp_cpa", {"q_D": inputs.q_D, "adv_ffp_cpa": inputs.adv_ffp_cpa}),
        _make_term("qrom.eps_gamma.ffp_cpa", {"q_D": inputs.q_D, "q_G": inputs.q_G, "gamma": inputs.gamma}),
    ]
    routes = {k: RouteReport(k, v + shared) for k, v in passive.items()}
    return BoundReport(QROM, "ffp-cpa", routes, inputs)


def chebyshev_precondition(q_G, sigma, C=C_SEARCH) -> bool:
    """sqrt(C) q_G sigma <= 1/2, decided exactly."""
    return C * as_fraction(q_G) ** 2 * as_fraction(sigma) ** 2 <= Fraction(1, 4)


def _ng_assembly(inputs: BoundInputs, delta_term: Term, variant: str, precondition_ok: bool = True) -> BoundReport:
    passive = qrom_passive_terms(inputs)
    shared = [
        _make_term("qrom.ffp_ng", {"q_D": inputs.q_D, "adv_ffp_ng": inputs.adv_ffp_ng}),
        delta_term,
        _make_term("qrom.eps_gamma.ffp_ng", {"q_D": inputs.q_D, "q_G": inputs.q_G, "gamma": inputs.gamma}),
    ]
    diags = [] if precondition_ok else [PRECONDITION_FAILED]
    routes = {k: RouteReport(k, v + shared, list(diags), None if precondition_ok else 1)
              for k, v in passive.items()}
    return BoundReport(QROM, variant, routes, inputs, diags)


def qrom_main_bound(inputs: BoundInputs) -> BoundReport:
    """Passive + (q_D+1)(2 Adv_FFP-NG + eps_delta) + eps_gamma, Chebyshev eps_delta.

    If sqrt(C) q_G sigma > 1/2 the bound is reported as trivial (total 1).
    """
    _need(inputs, "gamma", "adv_ffp_ng", "delta_ik", "sigma")
    ok = chebyshev_precondition(inputs.q_G, inputs.sigma)
    term = _make_term("qrom.eps_delta.chebyshev", {"q_D": inputs.q_D, "q_G": inputs.q_G,
                                                   "delta_ik": inputs.delta_ik, "sigma": inputs.sigma,
                                                   "C": Fraction(C_SEARCH)})
    return _ng_assembly(inputs, term, "ffp-ng-chebyshev", ok)


def qrom_main_bound_gaussian(inputs: BoundInputs) -> BoundReport:
    """As qrom_main_bound with eps_delta = delta + 2 beta^-1/2 sqrt(ln(2 C sqrt(beta) q_G^2))."""
    _need(inputs, "gamma", "adv_ffp_ng", "delta_ik", "beta")
    if MP.mpf(inputs.beta.numerator) / inputs.beta.denominator < gaussian_beta_threshold():
        raise DomainError("beta must be at least e/(2C)")
    term = _make_term("qrom.eps_delta.gaussian", {"q_D": inputs.q_D, "q_G": inputs.q_G,
                                                  "delta_ik": inputs.delta_ik, "beta": inputs.beta,
                                                  "C": Fraction(C_SEARCH)})
    return _ng_assembly(inputs, term, "ffp-ng-gaussian")


VARIANTS = {
    (ROM, "ffp-cpa"): rom_main_bound,
    (QROM, "ffp-cpa"): qrom_bound_ffpcpa,
    (QROM, "ffp-ng-chebyshev"): qrom_main_bound,
    (QROM, "ffp-ng-gaussian"): qrom_main_bound_gaussian,
}


def compute_bound(inputs: BoundInputs, variant: str | None = None) -> BoundReport:
    if variant is None:
        variant = "ffp-cpa" if inputs.model == ROM else "ffp-ng-chebyshev"
    try:
        fn = VARIANTS[(inputs.model, variant)]
    except KeyError:
        raise DomainError(f"no variant {variant!r} for model {inputs.model}; "
                          f"known: {sorted(v for m, v in VARIANTS if m == inputs.model)}") from None
    return fn(inputs)


# verification ---------------------------------------------------------------------

def _parse_inputs(d: dict) -> dict:
    return {k: v if v == UNKNOWN else parse_number(v) for k, v in d.items()}


def recompute(report: dict) -> bool:
    """Re-evaluate every term of a serialized report from its recorded inputs.

    Raises InvariantError on the first mismatch in exact binary value, or if a
    route total is not clamp(sum of terms).
    """
    for name, route in report["routes"].items():
        values = []
        for t in route["terms"]:
            v = evaluate_formula(t["formula_id"], _parse_inputs(t["inputs"]))
            if mp_exact_str(v) != t["value_exact_bits"]:
                raise InvariantError(f"term {t['formula_id']} in route {name} does not recompute")
            values.append(v)
        if PRECONDITION_FAILED in route["diagnostics"]:
            expected = MP.mpf(1)
        else:
            expected = _clamp(MP.fsum(values))
        if mp_exact_str(expected) != route["total_exact_bits"]:
            raise InvariantError(f"route {name} total does not recompute")
    return True


def cross_check(report: BoundReport) -> float:
    """Largest relative gap between the mpmath and exact-rational evaluations
    over all terms and route totals."""
    worst = 0.0
    for route in report.routes.values():
        exact_sum = Fraction(0)
        for t in route.terms:
            ex = t.exact_value()
            exact_sum += ex
            worst = max(worst, relative_difference(t.value, ex))
        if route.forced_total is None:
            exact_total = min(Fraction(1), exact_sum)
            worst = max(worst, relative_difference(route.total, exact_total))
    return worst


def spreadness_budget(gamma, q_D=Fraction(2) ** 64) -> dict:
    """Exponent e with q_D (q_G + 2 q_D) 2^(-gamma/2) <= q_G 2^e once q_G >= 2 q_D.

    For q_D = 2^64 this is 65 - gamma/2. The exponent is exact.
    """
    gamma, q_D = as_fraction(gamma), as_fraction(q_D)
    if q_D <= 0:
        raise DomainError("q_D must be positive")
    # q_D (q_G + 2 q_D) <= 2 q_D q_G when q_G >= 2 q_D; 2 q_D = 2^(1 + log2 q_D)
    lg = q_D.numerator.bit_length() - 1
    if q_D != Fraction(2) ** lg:
        raise DomainError("q_D must be a power of two for an exact exponent")
    return {"gamma": gamma, "q_D": q_D, "exponent": Fraction(lg + 1) - gamma / 2, "min_q_G": 2 * q_D}
