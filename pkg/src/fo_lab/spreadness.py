"""Gamma-spreadness: exact values for Frodo/HQC-style parameters and toy enumeration."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import ConfigError, DomainError
from .pke_core import KeyPair, PkeScheme

TOY_ENUMERATION_LIMIT = 1 << 20


@dataclass(frozen=True)
class FrodoParams:
    """m_bar x n matrix B' whose entries are zero with probability p0."""

    m_bar: int
    n: int
    p0: Fraction
    family = "frodo"

    def __post_init__(self):
        object.__setattr__(self, "p0", Fraction(self.p0))


@dataclass(frozen=True)
class HqcParams:
    """Block length n1*n2 and weight w of both the randomness and error vectors."""

    n1: int
    n2: int
    w: int
    family = "hqc"

    @property
    def length(self) -> int:
        return self.n1 * self.n2


def floor_neg_log2(p: Fraction) -> int:
    """Largest integer j with p <= 2^-j, for a rational p in (0, 1)."""
    p = Fraction(p)
    if not 0 < p < 1:
        raise DomainError(f"probability {p} outside (0, 1)")
    num, den = p.numerator, p.denominator
    j = den.bit_length() - num.bit_length()
    # adjust so that num * 2^j <= den < num * 2^(j+1)
    while (num << j) > den:
        j -= 1
    while (num << (j + 1)) <= den:
        j += 1
    return j


def gamma_frodo(params: FrodoParams) -> int:
    """m_bar * n * floor(-log2 p0): each coordinate of B' is zero w.p. p0."""
    if params.m_bar < 1 or params.n < 1:
        raise DomainError("m_bar and n must be positive")
    return params.m_bar * params.n * floor_neg_log2(params.p0)


@dataclass(frozen=True)
class HqcGamma:
    gamma_exact: float
    gamma_floor: int
    log2_binom_floor: int
    binom: int

    def certifies(self, bits: int) -> bool:
        """True iff log2 C(n1 n2, w) > bits, decided with exact integers."""
        return self.binom > (1 << bits)


def gamma_hqc(params: HqcParams) -> HqcGamma:
    """2 log2 C(n1 n2, w): randomness and error are independent weight-w vectors."""
    n = params.length
    if not 0 < params.w <= n:
        raise DomainError("need 0 < w <= n1*n2")
    c = math.comb(n, params.w)
    lg = c.bit_length() - 1
    return HqcGamma(2 * math.log2(c), 2 * lg, lg, c)


def gamma_floor(params) -> int:
    if isinstance(params, FrodoParams):
        return gamma_frodo(params)
    if isinstance(params, HqcParams):
        return gamma_hqc(params).gamma_floor
    raise DomainError(f"unknown parameter family {params!r}")


def budget_exponent(gamma: int) -> Fraction:
    """65 - gamma/2: with q_D <= 2^64 and q_G >= 2^65 the spreadness term
    q_D (q_G + 2 q_D) 2^(-gamma/2) is at most q_G * 2^(65 - gamma/2)."""
    e = Fraction(65) - Fraction(gamma, 2)
    return e


PRESETS = {
    "frodo-640": FrodoParams(8, 640, Fraction(9288, 1 << 16)),
    "frodo-976": FrodoParams(8, 976, Fraction(11278, 1 << 16)),
    "frodo-1344": FrodoParams(8, 1344, Fraction(18286, 1 << 16)),
    "hqc-128": HqcParams(46, 384, 75),
    "hqc-192": HqcParams(56, 640, 114),
    "hqc-256": HqcParams(90, 640, 149),
}


def params_from_config(cfg: dict):
    """Build parameters from a mapping, e.g. {family: frodo, m_bar: 8, n: 640, p0: "9288/65536"}."""
    cfg = dict(cfg)
    if "preset" in cfg:
        name = cfg["preset"]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
        return PRESETS[name]
    family = cfg.pop("family", None)
    try:
        if family == "frodo":
            return FrodoParams(int(cfg["m_bar"]), int(cfg["n"]), Fraction(str(cfg["p0"])))
        if family == "hqc":
            return HqcParams(int(cfg["n1"]), int(cfg["n2"]), int(cfg["w"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad spreadness parameters: {exc}") from None
    raise ConfigError(f"unknown parameter family {family!r}")


def params_to_config(params) -> dict:
    if isinstance(params, FrodoParams):
        return {"family": "frodo", "m_bar": params.m_bar, "n": params.n, "p0": str(params.p0)}
    return {"family": "hqc", "n1": params.n1, "n2": params.n2, "w": params.w}


def _codes(scheme: PkeScheme, pk, m: int, r: np.ndarray) -> np.ndarray:
    if hasattr(scheme, "ciphertext_codes"):
        return scheme.ciphertext_codes(pk, m, r)
    if hasattr(scheme, "ciphertext_rows"):
        rows = scheme.ciphertext_rows(pk, m, r)
        radix = int(rows.max()) + 1 if rows.size else 1
        if radix ** rows.shape[1] < (1 << 62):
            weights = radix ** np.arange(rows.shape[1], dtype=np.int64)
            return rows @ weights
        _, inverse = np.unique(rows, axis=0, return_inverse=True)
        return inverse.ravel().astype(np.int64)
    index: dict = {}
    return np.array([index.setdefault(scheme.encrypt(pk, m, int(x)), len(index)) for x in r], dtype=np.int64)


def gamma_exact_toy(scheme: PkeScheme, keys: KeyPair) -> float:
    """-log2 of max over (m, c) of Pr_r[Enc(pk, m; r) = c], by exhaustive enumeration."""
    M, R = scheme.message_space_size, scheme.randomness_space_size
    if M * R > TOY_ENUMERATION_LIMIT:
        raise DomainError(f"|M|*|R| = {M}*{R} = {M * R} exceeds the enumeration limit {TOY_ENUMERATION_LIMIT}")
    r = np.arange(R, dtype=np.int64)
    worst = max(_kernels.max_multiplicity(_codes(scheme, keys.pk, m, r)) for m in range(M))
    return math.log2(R) - math.log2(worst) if worst > 1 else math.log2(R)
