"""Toy PKE schemes with controllable or tiny-scale decryption failures.

``SyntheticFailurePke`` carries its randomness in the clear and decides
failures with an explicit predicate fail(m, r, key), so every failure
statistic can be computed exactly by enumerating (key, r).
``MicroLwePke`` is a miniature Frodo-shaped LWE scheme whose failures come
from accumulated noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import ConfigError, DomainError
from .pke_core import KeyPair, PkeScheme

ENUMERATION_LIMIT = 1 << 26


# failure predicates ------------------------------------------------------------

class FailurePredicate:
    """fail(m, r, key) -> bool, vectorized over numpy arrays of r and key."""

    kind = "base"
    key_independent = False

    def evaluate(self, m, r, k):
        raise NotImplementedError

    def __call__(self, m, r, k) -> bool:
        return bool(self.evaluate(int(m), np.int64(r), np.int64(k)))

    def params(self) -> dict:
        return {}

    def to_config(self) -> dict:
        return {"kind": self.kind, **self.params()}

    def __eq__(self, other):
        return type(self) is type(other) and self.params() == other.params()

    def __hash__(self):
        return hash((self.kind, repr(sorted(self.params().items()))))

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class NeverFail(FailurePredicate):
    kind = "never"
    key_independent = True

    def evaluate(self, m, r, k):
        return np.zeros(np.broadcast(r, k).shape, dtype=bool)


class ThresholdFail(FailurePredicate):
    """Fails iff r + key >= threshold."""

    kind = "threshold"

    def __init__(self, threshold: int):
        self.threshold = int(threshold)

    def evaluate(self, m, r, k):
        return (r + k) >= self.threshold

    def params(self):
        return {"threshold": self.threshold}


class ModularBandFail(FailurePredicate):
    """Fails iff (r + key) mod modulus < width; with modulus = |K| every r fails for width/|K| of keys."""

    kind = "band"

    def __init__(self, width: int, modulus: int):
        self.width = int(width)
        self.modulus = int(modulus)

    def evaluate(self, m, r, k):
        return ((r + k) % self.modulus) < self.width

    def params(self):
        return {"width": self.width, "modulus": self.modulus}


class LargeRandomnessFail(FailurePredicate):
    """Fails iff r >= cut, whatever the key."""

    kind = "large-r"
    key_independent = True

    def __init__(self, cut: int):
        self.cut = int(cut)

    def evaluate(self, m, r, k):
        return np.broadcast_to(r >= self.cut, np.broadcast(r, k).shape)

    def params(self):
        return {"cut": self.cut}


class ParityFail(FailurePredicate):
    """Fails iff key and r have equal parity (and r < band when a band is set)."""

    kind = "parity"

    def __init__(self, band: int | None = None):
        self.band = None if band is None else int(band)

    def evaluate(self, m, r, k):
        hit = ((r ^ k) & 1) == 0
        if self.band is not None:
            hit = hit & (r < self.band)
        return hit

    def params(self):
        return {"band": self.band}


class WeightedKeyFail(FailurePredicate):
    """Fails iff key < weights[m, r]; the key-averaged rate of (m, r) is weights[m, r]/|K|."""

    kind = "weighted"

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.int64)
        if w.ndim == 1:
            w = w[None, :]
        self.weights = w

    @classmethod
    def from_seed(cls, seed: int, msg_space: int, rand_space: int, max_weight: int,
                  message_dependent: bool = True):
        rng = np.random.default_rng(seed)
        rows = msg_space if message_dependent else 1
        return cls(rng.integers(0, max_weight + 1, size=(rows, rand_space)))

    def evaluate(self, m, r, k):
        row = self.weights[m % self.weights.shape[0]]
        return k < row[r]

    def params(self):
        return {"weights": self.weights.tolist()}


PREDICATES = {cls.kind: cls for cls in
              (NeverFail, ThresholdFail, ModularBandFail, LargeRandomnessFail, ParityFail, WeightedKeyFail)}


def predicate_from_config(cfg: dict) -> FailurePredicate:
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    if kind not in PREDICATES:
        raise ConfigError(f"unknown failure predicate {kind!r}; known: {sorted(PREDICATES)}")
    if kind == "weighted" and "seed" in cfg:
        return WeightedKeyFail.from_seed(**cfg)
    try:
        return PREDICATES[kind](**cfg)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for predicate {kind!r}: {exc}") from None


# synthetic scheme ---------------------------------------------------------------

def _pad(pk, r, mask):
    h = (r * 2654435761 + (pk + 1) * 40503) & 0xFFFFFFFF
    h = h ^ (h >> 13)
    return h & mask


class SyntheticFailurePke(PkeScheme):
    """Ciphertext (m XOR pad(pk, r), r); decryption is exact unless fail(m, r, key).

    The public key is ``key & leak_mask``, so ``leak_mask`` controls how much
    of the key an adversary sees. On a failing triple decryption returns
    ``m ^ 1`` (``failure_mode="flip"``) or rejects (``"reject"``).
    """

    name = "synthetic"

    def __init__(self, msg_bits: int, rand_space_size: int, key_space_size: int,
                 predicate: FailurePredicate | None = None, leak_mask: int = 0,
                 failure_mode: str = "flip"):
        if not 1 <= msg_bits <= 8:
            raise DomainError("msg_bits must lie in 1..8")
        if rand_space_size < 1 or rand_space_size > 1 << 16 or rand_space_size & (rand_space_size - 1):
            raise DomainError("rand_space_size must be a power of two <= 2^16")
        if key_space_size < 1:
            raise DomainError("key_space_size must be positive")
        if failure_mode not in ("flip", "reject"):
            raise DomainError("failure_mode must be 'flip' or 'reject'")
        self.msg_bits = int(msg_bits)
        self.message_space_size = 1 << self.msg_bits
        self.randomness_space_size = int(rand_space_size)
        self.key_space_size = int(key_space_size)
        self.predicate = predicate if predicate is not None else NeverFail()
        self.leak_mask = int(leak_mask)
        self.failure_mode = failure_mode
        self._mask = self.message_space_size - 1
        self._tables: dict = {}
        self._counts: dict = {}

    def __repr__(self):
        return (f"SyntheticFailurePke(msg_bits={self.msg_bits}, rand_space_size={self.randomness_space_size}, "
                f"key_space_size={self.key_space_size}, predicate={self.predicate!r}, "
                f"leak_mask={self.leak_mask}, failure_mode={self.failure_mode!r})")

    def __eq__(self, other):
        return isinstance(other, SyntheticFailurePke) and self.to_config() == other.to_config()

    def __hash__(self):
        return hash(repr(self))

    def keypair(self, k: int) -> KeyPair:
        return KeyPair(pk=int(k) & self.leak_mask, sk=int(k))

    def keygen(self, rng) -> KeyPair:
        return self.keypair(int(rng.integers(self.key_space_size)))

    def encrypt(self, pk, m, r):
        m = self.check_message(m)
        r = self.check_randomness(r)
        return (m ^ _pad(pk, r, self._mask), r)

    def decrypt(self, sk, c):
        if not (isinstance(c, tuple) and len(c) == 2):
            return None
        c0, r = c
        if not (_is_int(c0) and _is_int(r)):
            return None
        c0, r = int(c0), int(r)
        if not (0 <= c0 < self.message_space_size and 0 <= r < self.randomness_space_size):
            return None
        m = c0 ^ _pad(sk & self.leak_mask, r, self._mask)
        if self.predicate(m, r, sk):
            return None if self.failure_mode == "reject" else m ^ 1
        return m

    def fail_table(self, m: int) -> np.ndarray:
        """Boolean (|R|, |K|) table of fail(m, r, key)."""
        m = int(m)
        t = self._tables.get(m)
        if t is None:
            t = _fail_table(self, m)
            if len(self._tables) >= 16:
                self._tables.clear()
            self._tables[m] = t
        return t

    def fail_counts(self, m: int) -> np.ndarray:
        """Number of failing keys for every r."""
        m = int(m)
        c = self._counts.get(m)
        if c is None:
            c = self.fail_table(m).sum(axis=1).astype(np.int64)
            c.setflags(write=False)
            self._counts[m] = c
        return c

    def failure_proxy(self, m, r) -> float:
        return float(self.fail_counts(m)[int(r)]) / self.key_space_size

    def key_batch_failures(self, m: int, r_idx, keys_per_r: int, rng) -> np.ndarray:
        k_idx = rng.integers(self.key_space_size, size=(len(r_idx), keys_per_r))
        return _kernels.key_batch_fail_counts(self.fail_table(m), np.asarray(r_idx), k_idx)

    def ciphertext_codes(self, pk, m: int, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.int64)
        pad = _pad(int(pk), r, self._mask)
        return (m ^ pad) * self.randomness_space_size + r

    def to_config(self) -> dict:
        return {"kind": "synthetic", "msg_bits": self.msg_bits, "rand_space_size": self.randomness_space_size,
                "key_space_size": self.key_space_size, "failure": self.predicate.to_config(),
                "leak_mask": self.leak_mask, "failure_mode": self.failure_mode}


def _fail_table(scheme: SyntheticFailurePke, m: int) -> np.ndarray:
    if scheme.randomness_space_size * scheme.key_space_size > ENUMERATION_LIMIT:
        raise DomainError(f"|R|*|K| = {scheme.randomness_space_size * scheme.key_space_size} too large to tabulate")
    r = np.arange(scheme.randomness_space_size, dtype=np.int64)[:, None]
    k = np.arange(scheme.key_space_size, dtype=np.int64)[None, :]
    t = np.broadcast_to(scheme.predicate.evaluate(m, r, k), (r.shape[0], k.shape[1]))
    t = np.ascontiguousarray(t, dtype=bool)
    t.setflags(write=False)
    return t


def perfect_toy(msg_bits: int = 4, rand_space_size: int = 256, key_space_size: int = 16) -> SyntheticFailurePke:
    """Perfectly correct instance of the synthetic scheme."""
    return SyntheticFailurePke(msg_bits, rand_space_size, key_space_size, NeverFail())


# exact failure statistics -------------------------------------------------------

@dataclass(frozen=True)
class ExactFailure:
    """Distribution of the key-averaged failure probability p(r) for one message."""

    mean: Fraction
    variance: Fraction
    values: tuple      # distinct p values (Fractions), ascending
    weights: tuple     # number of r attaining each value
    rand_space_size: int

    def tail(self, t) -> Fraction:
        t = Fraction(t)
        hits = sum(w for v, w in zip(self.values, self.weights) if v >= t)
        return Fraction(hits, self.rand_space_size)


def analytic_failure_prob(scheme: SyntheticFailurePke, m: int) -> ExactFailure:
    """Exact E_r, V_r and tail of Pr_key[fail(m, r, key)] by enumeration."""
    if not isinstance(scheme, SyntheticFailurePke):
        raise DomainError("exact enumeration needs a SyntheticFailurePke")
    m = scheme.check_message(m)
    counts = scheme.fail_counts(m)
    R, K = scheme.randomness_space_size, scheme.key_space_size
    vals, mult = np.unique(counts, return_counts=True)
    total = sum(int(v) * int(w) for v, w in zip(vals, mult))
    total_sq = sum(int(v) ** 2 * int(w) for v, w in zip(vals, mult))
    mean = Fraction(total, R * K)
    variance = Fraction(total_sq, R * K * K) - mean * mean
    return ExactFailure(mean, variance, tuple(Fraction(int(v), K) for v in vals),
                        tuple(int(w) for w in mult), R)


@dataclass(frozen=True)
class ExactWorstCase:
    delta: Fraction
    variance: Fraction
    tail: dict

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)


def exact_failure_stats(scheme: SyntheticFailurePke, grid=()) -> ExactWorstCase:
    """Worst case over all messages: max mean, max variance and max tail per grid point."""
    per_m = [analytic_failure_prob(scheme, m) for m in range(scheme.message_space_size)]
    tail = {float(t): max(e.tail(t) for e in per_m) for t in grid}
    return ExactWorstCase(max(e.mean for e in per_m), max(e.variance for e in per_m), tail)


# micro LWE ------------------------------------------------------------------------

class LwePublicKey(NamedTuple):
    A: tuple
    B: tuple


class LweSecretKey(NamedTuple):
    S: tuple
    E: tuple
    pk: LwePublicKey


class MicroLwePke(PkeScheme):
    """Frodo-shaped LWE encryption of msg_bits bits, each at 0 or floor(q/2).

    keygen: B = A S + E with A uniform n x n, S, E drawn from chi (n x ell).
    encrypt: r indexes the noise (s', e', e'') in mixed radix |chi|;
    B' = s' A + e', V = s' B + e'' + floor(q/2) m.
    decrypt: coordinate j of V - B' S decodes to 1 iff q <= 4x < 3q.
    The residual noise s' E - e' S + e'' is what causes failures.
    """

    name = "micro-lwe"

    def __init__(self, n: int = 2, q: int = 17, chi=(-1, 0, 1), msg_bits: int = 1):
        if not 1 <= n <= 8:
            raise DomainError("n must lie in 1..8")
        if not 3 <= q <= 257:
            raise DomainError("q must lie in 3..257")
        if not 1 <= msg_bits <= 4:
            raise DomainError("msg_bits must lie in 1..4")
        self.n, self.q, self.ell = int(n), int(q), int(msg_bits)
        self.chi = tuple(int(v) for v in chi)
        if not self.chi:
            raise DomainError("chi table must be non-empty")
        self.message_space_size = 1 << self.ell
        self.randomness_space_size = len(self.chi) ** (2 * self.n + self.ell)
        self._chi_arr = np.array(self.chi, dtype=np.int64)

    def __repr__(self):
        return f"MicroLwePke(n={self.n}, q={self.q}, chi={self.chi}, msg_bits={self.ell})"

    def __eq__(self, other):
        return isinstance(other, MicroLwePke) and repr(self) == repr(other)

    def __hash__(self):
        return hash(repr(self))

    def keygen(self, rng) -> KeyPair:
        n, ell, q = self.n, self.ell, self.q
        A = rng.integers(q, size=(n, n))
        S = self._chi_arr[rng.integers(len(self.chi), size=(n, ell))]
        E = self._chi_arr[rng.integers(len(self.chi), size=(n, ell))]
        B = (A @ S + E) % q
        pk = LwePublicKey(_tup(A), _tup(B))
        return KeyPair(pk=pk, sk=LweSecretKey(_tup(S), _tup(E), pk))

    def noise_digits(self, r: int):
        base = len(self.chi)
        digits = []
        for _ in range(2 * self.n + self.ell):
            r, d = divmod(r, base)
            digits.append(self.chi[d])
        n = self.n
        return digits[:n], digits[n:2 * n], digits[2 * n:]

    def message_bits(self, m: int):
        return [(m >> j) & 1 for j in range(self.ell)]

    def encrypt(self, pk, m, r):
        m = self.check_message(m)
        r = self.check_randomness(r)
        sp, ep, epp = self.noise_digits(r)
        A, B = pk
        n, q, half = self.n, self.q, self.q // 2
        Bp = tuple((sum(sp[i] * A[i][k] for i in range(n)) + ep[k]) % q for k in range(n))
        bits = self.message_bits(m)
        V = tuple((sum(sp[i] * B[i][j] for i in range(n)) + epp[j] + half * bits[j]) % q
                  for j in range(self.ell))
        return Bp + V

    def decode(self, x: int) -> int:
        return 1 if self.q <= 4 * x < 3 * self.q else 0

    def decrypt(self, sk, c):
        if not (isinstance(c, tuple) and len(c) == self.n + self.ell):
            return None
        if not all(_is_int(v) and 0 <= v < self.q for v in c):
            return None
        c = tuple(int(v) for v in c)
        S = sk.S
        Bp, V = c[:self.n], c[self.n:]
        m = 0
        for j in range(self.ell):
            x = (V[j] - sum(Bp[k] * S[k][j] for k in range(self.n))) % self.q
            m |= self.decode(x) << j
        return m

    def noise(self, sk, r: int):
        """Residual noise s'E - e'S + e'' per message coordinate."""
        sp, ep, epp = self.noise_digits(int(r))
        S, E = sk.S, sk.E
        return [sum(sp[k] * E[k][j] - ep[k] * S[k][j] for k in range(self.n)) + epp[j]
                for j in range(self.ell)]

    def _digits_array(self, r_idx):
        base = len(self.chi)
        r = np.asarray(r_idx, dtype=np.int64).copy()
        cols = []
        for _ in range(2 * self.n + self.ell):
            cols.append(r % base)
            r //= base
        d = self._chi_arr[np.stack(cols, axis=1)]
        n = self.n
        return d[:, :n], d[:, n:2 * n], d[:, 2 * n:]

    def key_batch_failures(self, m: int, r_idx, keys_per_r: int, rng) -> np.ndarray:
        r_idx = np.asarray(r_idx, dtype=np.int64)
        N = len(r_idx) * keys_per_r
        k = len(self.chi)
        S = self._chi_arr[rng.integers(k, size=(N, self.n, self.ell))]
        E = self._chi_arr[rng.integers(k, size=(N, self.n, self.ell))]
        sp, ep, epp = self._digits_array(np.repeat(r_idx, keys_per_r))
        mbits = np.array(self.message_bits(m), dtype=np.int64)
        fails = _kernels.lwe_fail(S, E, sp, ep, epp, mbits, self.q)
        return fails.reshape(len(r_idx), keys_per_r).sum(axis=1).astype(np.int64)

    def ciphertext_rows(self, pk, m: int, r) -> np.ndarray:
        sp, ep, epp = self._digits_array(r)
        A = np.array(pk.A, dtype=np.int64)
        B = np.array(pk.B, dtype=np.int64)
        bits = np.array(self.message_bits(m), dtype=np.int64)
        Bp = (sp @ A + ep) % self.q
        V = (sp @ B + epp + (self.q // 2) * bits[None, :]) % self.q
        return np.concatenate([Bp, V], axis=1)

    def to_config(self) -> dict:
        return {"kind": "micro-lwe", "n": self.n, "q": self.q, "chi": list(self.chi), "msg_bits": self.ell}


def _is_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, (bool, np.bool_))


def _tup(a) -> tuple:
    return tuple(tuple(int(v) for v in row) for row in np.asarray(a))


SCHEME_KINDS = ("synthetic", "micro-lwe")


def scheme_from_config(cfg: dict) -> PkeScheme:
    cfg = dict(cfg)
    kind = cfg.pop("kind", "synthetic")
    try:
        if kind == "synthetic":
            pred = predicate_from_config(cfg.pop("failure", {"kind": "never"}))
            return SyntheticFailurePke(predicate=pred, **cfg)
        if kind == "micro-lwe":
            if "chi" in cfg:
                cfg["chi"] = tuple(cfg["chi"])
            return MicroLwePke(**cfg)
    except TypeError as exc:
        raise ConfigError(f"bad scheme parameters: {exc}") from None
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown scheme kind {kind!r}; known: {list(SCHEME_KINDS)}")
