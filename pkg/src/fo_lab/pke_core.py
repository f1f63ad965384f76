"""PKE abstraction, lazily sampled random oracles and the derandomizing transform.

Messages are integers in ``range(message_space_size)``, randomness values are
integers in ``range(randomness_space_size)`` and ciphertexts are hashable
tuples. ``None`` plays the role of the rejection symbol.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Any, Hashable

import numpy as np

from .encoding import XofStream, derive_seed, encode, sample_below
from .errors import DomainError

Message = int
Ciphertext = Hashable


@dataclass(frozen=True)
class KeyPair:
    pk: Any
    sk: Any
    prf_key: bytes | None = None


class PkeScheme(abc.ABC):
    """Randomized PKE with enumerable message and randomness spaces."""

    name = "pke"
    message_space_size: int
    randomness_space_size: int

    @abc.abstractmethod
    def keygen(self, rng: np.random.Generator) -> KeyPair: ...

    @abc.abstractmethod
    def encrypt(self, pk, m: Message, r: int) -> Ciphertext:
        """Deterministic in (pk, m, r)."""

    @abc.abstractmethod
    def decrypt(self, sk, c) -> Message | None:
        """Never raises on malformed input; returns None instead."""

    def failure_proxy(self, m: Message, r: int) -> float | None:
        """Key-averaged failure probability of (m, r) if it is public knowledge.

        Schemes whose failure structure is part of the public description
        (the synthetic testbed) return it; others return None.
        """
        return None

    def check_message(self, m) -> int:
        if isinstance(m, (bool, np.bool_)) or not isinstance(m, (int, np.integer)):
            raise DomainError(f"message must be an integer, got {m!r}")
        m = int(m)
        if not 0 <= m < self.message_space_size:
            raise DomainError(f"message {m} outside range({self.message_space_size})")
        return m

    def check_randomness(self, r) -> int:
        if isinstance(r, (bool, np.bool_)) or not isinstance(r, (int, np.integer)):
            raise DomainError(f"randomness must be an integer, got {r!r}")
        r = int(r)
        if not 0 <= r < self.randomness_space_size:
            raise DomainError(f"randomness {r} outside range({self.randomness_space_size})")
        return r


class RandomOracle:
    """Lazily sampled uniform function from range(input_size) to range(output_size).

    A fresh input x is answered with a value drawn from a generator seeded by
    (tag, seed, x): the XOF stream SHAKE-256(encode(("fo-lab/ro", tag, seed, x)))
    read through :func:`sample_below`. Answers therefore do not depend on the
    order of queries, which lets coupled games share oracle values.
    """

    def __init__(self, tag: str, input_size: int | None, output_size: int, seed: int):
        self.tag = tag
        self.input_size = input_size
        self.output_size = int(output_size)
        self.seed = int(seed)
        self.table: dict = {}
        self.transcript: list = []

    def __call__(self, x):
        return ro_eval(self, x)

    def _check(self, x):
        if self.input_size is None:
            return x
        if isinstance(x, (bool, np.bool_)) or not isinstance(x, (int, np.integer)):
            raise DomainError(f"oracle {self.tag} input must be an integer, got {x!r}")
        x = int(x)
        if not 0 <= x < self.input_size:
            raise DomainError(f"oracle {self.tag} input {x} outside range({self.input_size})")
        return x

    def fresh_value(self, x) -> int:
        stream = XofStream(encode(("fo-lab/ro", self.tag, self.seed, x)))
        return sample_below(stream, self.output_size)

    def program(self, x, y) -> None:
        x = self._check(x)
        if not 0 <= y < self.output_size:
            raise DomainError("programmed value outside the output space")
        self.table[x] = int(y)


def ro_eval(oracle: RandomOracle, x):
    x = oracle._check(x)
    oracle.transcript.append(x)
    y = oracle.table.get(x)
    if y is None:
        y = oracle.fresh_value(x)
        oracle.table[x] = y
    return y


class PreimageList:
    """Ordered set of (m, c) pairs with first-preimage lookup.

    The order on messages is the canonical byte order of ``encode(m)``,
    which for non-negative integers is the numeric order.
    """

    def __init__(self):
        self.entries: list[tuple] = []
        self._seen: set = set()
        self._first: dict = {}

    def add(self, m, c) -> None:
        if (m, c) in self._seen:
            return
        self._seen.add((m, c))
        self.entries.append((m, c))
        cur = self._first.get(c)
        if cur is None or encode(m) < encode(cur):
            self._first[c] = m

    def preimage(self, c):
        try:
            return self._first.get(c)
        except TypeError:
            return None

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def list_preimage(preimages: PreimageList, c) -> Message | None:
    return preimages.preimage(c)


@dataclass
class OracleState:
    """The two oracles of one game execution plus the G' bookkeeping list."""

    G: Any
    H: Any
    L_G: PreimageList = field(default_factory=PreimageList)

    @classmethod
    def for_game(cls, seed: int, scheme: PkeScheme, key_len: int = 128,
                 g_tag: str = "G", h_tag: str = "H") -> "OracleState":
        g = RandomOracle(g_tag, scheme.message_space_size, scheme.randomness_space_size,
                         derive_seed(seed, "oracle", g_tag))
        h = RandomOracle(h_tag, scheme.message_space_size, 1 << key_len,
                         derive_seed(seed, "oracle", h_tag))
        return cls(G=g, H=h)


def ro_logged_eval(state: OracleState, pk, m, scheme: PkeScheme) -> int:
    """G': answer G(m) and log (m, Enc(pk, m; G(m))) in L_G."""
    r = state.G(m)
    state.L_G.add(int(m), scheme.encrypt(pk, m, r))
    return r


@dataclass(frozen=True)
class DerandomizedPke:
    base: PkeScheme
    oracle_tag: str = "G"

    @property
    def message_space_size(self) -> int:
        return self.base.message_space_size

    def encrypt(self, state: OracleState, pk, m) -> Ciphertext:
        return derandomized_encrypt(self, state, pk, m)

    def decrypt(self, state: OracleState, keys: KeyPair, c) -> Message | None:
        return derandomized_decrypt(self, state, keys, c)

    def fails(self, state: OracleState, keys: KeyPair, m) -> bool:
        """True iff Dec1(Enc1(m)) != m under the given keys."""
        return self.decrypt(state, keys, self.encrypt(state, keys.pk, m)) != m


def derandomized_encrypt(dpke: DerandomizedPke, state: OracleState, pk, m) -> Ciphertext:
    m = dpke.base.check_message(m)
    return dpke.base.encrypt(pk, m, state.G(m))


def derandomized_decrypt(dpke: DerandomizedPke, state: OracleState, keys: KeyPair, c):
    m = dpke.base.decrypt(keys.sk, c)
    if m is None:
        return None
    if dpke.base.encrypt(keys.pk, m, state.G(m)) != c:
        return None
    return m
