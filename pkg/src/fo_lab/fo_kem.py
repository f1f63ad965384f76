"""FO KEM with explicit rejection, the implicit-rejection variant, and the
simulated decapsulation / decryption oracles that need no secret key.

Production mode replaces the game oracles with fixed XOF instantiations:

    G(m)      = SHAKE256(0x01 || SHA3-256(encode(pk)) || encode(m)), read by sample_below(|R|)
    H(m)      = SHAKE256(0x02 || SHA3-256(encode(pk)) || encode(m)), read by sample_below(2^key_len)
    PRF(k, c) = SHAKE256(0x03 || encode(k) || encode(c)),            read by sample_below(2^key_len)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoding import XofStream, encode, hash_bytes, random_bits, sample_below
from .errors import DomainError, ForbiddenQuery
from .pke_core import (DerandomizedPke, KeyPair, OracleState, derandomized_decrypt,
                       derandomized_encrypt, list_preimage)

EXPLICIT = "explicit"
IMPLICIT = "implicit"


class XofOracle:
    """Fixed hash-based oracle for production mode. Not programmable."""

    def __init__(self, domain: int, pk, output_size: int, input_size: int | None = None):
        self.domain = int(domain)
        self.output_size = int(output_size)
        self.input_size = input_size
        self._prefix = bytes([self.domain]) + hash_bytes(encode(pk))
        self.transcript: list = []

    def __call__(self, m):
        if self.input_size is not None and not 0 <= int(m) < self.input_size:
            raise DomainError(f"input {m} outside range({self.input_size})")
        self.transcript.append(m)
        return sample_below(XofStream(self._prefix + encode(m)), self.output_size)


def production_state(pk, dpke: DerandomizedPke, key_len: int = 128) -> OracleState:
    base = dpke.base
    return OracleState(G=XofOracle(0x01, pk, base.randomness_space_size, base.message_space_size),
                       H=XofOracle(0x02, pk, 1 << key_len, base.message_space_size))


def prf(key: bytes, c, key_len: int) -> int:
    return sample_below(XofStream(bytes([0x03]) + encode(key) + encode(c)), 1 << key_len)


@dataclass(frozen=True)
class FoKem:
    dpke: DerandomizedPke
    key_len: int = 128
    variant: str = EXPLICIT

    def __post_init__(self):
        if self.variant not in (EXPLICIT, IMPLICIT):
            raise DomainError(f"variant must be {EXPLICIT!r} or {IMPLICIT!r}")
        if self.key_len < 1:
            raise DomainError("key_len must be positive")

    @property
    def scheme(self):
        return self.dpke.base

    def keygen(self, rng: np.random.Generator) -> KeyPair:
        kp = self.scheme.keygen(rng)
        if self.variant == IMPLICIT:
            return KeyPair(kp.pk, kp.sk, bytes(rng.bytes(32)))
        return kp

    def oracle_state(self, seed: int) -> OracleState:
        return OracleState.for_game(seed, self.scheme, self.key_len, g_tag=self.dpke.oracle_tag)

    def random_key(self, rng) -> int:
        return random_bits(rng, self.key_len)


def encaps(kem: FoKem, state: OracleState, pk, rng):
    k, c, _ = encaps_with_message(kem, state, pk, rng)
    return k, c


def encaps_with_message(kem: FoKem, state: OracleState, pk, rng):
    """encaps that also returns the sampled message (for the game harness)."""
    m = int(rng.integers(kem.scheme.message_space_size))
    c = derandomized_encrypt(kem.dpke, state, pk, m)
    return state.H(m), c, m


def decaps(kem: FoKem, state: OracleState, keys: KeyPair, c):
    m = derandomized_decrypt(kem.dpke, state, keys, c)
    if m is None:
        if kem.variant == IMPLICIT:
            return prf(keys.prf_key, c, kem.key_len)
        return None
    return state.H(m)


@dataclass
class DecapsEventLog:
    """DIFF/GUESS counters and the failing-plaintext list of one game run."""

    fail_list: list = field(default_factory=list)
    guess_events: int = 0
    diff_events: int = 0
    queries: int = 0

    def observe(self, real, simulated) -> None:
        """Compare the real (explicit-rejection) answer with the simulated one."""
        self.queries += 1
        if real != simulated:
            self.diff_events += 1
            if simulated is None:
                self.guess_events += 1

    def add_failure(self, m) -> None:
        if m not in self.fail_list:
            self.fail_list.append(m)

    def to_dict(self) -> dict:
        return {"fail_list": list(self.fail_list), "guess_events": self.guess_events,
                "diff_events": self.diff_events, "queries": self.queries}


def _check_challenge(c, challenge):
    if challenge is not None and c == challenge:
        raise ForbiddenQuery("query on the challenge ciphertext")


def sim_decaps_prime(state: OracleState, c, challenge=None):
    """H(L_G^-1(c)), or None if c has no logged preimage."""
    _check_challenge(c, challenge)
    m = list_preimage(state.L_G, c)
    return None if m is None else state.H(m)


def sim_decaps_double_prime(state: OracleState, c, decrypt_oracle, log: DecapsEventLog, challenge=None):
    """As sim_decaps_prime, and log m in L_FAIL when m differs from decrypt_oracle(c)."""
    _check_challenge(c, challenge)
    m = list_preimage(state.L_G, c)
    if m is not None and m != decrypt_oracle(c):
        log.add_failure(m)
    return None if m is None else state.H(m)


def sim_decrypt_prime(state: OracleState, c):
    return list_preimage(state.L_G, c)
