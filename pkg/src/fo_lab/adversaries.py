"""Built-in adversaries, registered by name for the CLI."""

from __future__ import annotations

from .errors import ConfigError
from .games import Adversary, GameContext


def _find_challenge_message(ctx: GameContext):
    """Query G on every message and return the one whose re-encryption is the challenge."""
    for m in range(ctx.scheme.message_space_size):
        if ctx.scheme.encrypt(ctx.pk, m, ctx.oracles.G(m)) == ctx.challenge:
            return m
    return None


def _search_randomness(scheme, pk, m, c) -> bool:
    return any(scheme.encrypt(pk, m, r) == c for r in range(scheme.randomness_space_size))


class FixedBit(Adversary):
    """Outputs a constant, ignoring every input."""

    name = "fixed-bit"

    def __init__(self, bit: int = 0):
        self.bit = int(bit)

    def ind_kem(self, ctx):
        return self.bit

    def ow_cpa(self, ctx):
        return 0

    def ind_cpa_choose(self, ctx):
        return 0, 1

    def ind_cpa_guess(self, ctx, c):
        return self.bit

    def ffp_ng(self, ctx):
        return self.bit


class RandomGuess(FixedBit):
    """Uniform guesses from the adversary coins; never touches an oracle."""

    name = "random-guess"

    def ind_kem(self, ctx):
        return int(ctx.rng.integers(2))

    def ow_cpa(self, ctx):
        return int(ctx.rng.integers(ctx.scheme.message_space_size))

    def ind_cpa_guess(self, ctx, c):
        return int(ctx.rng.integers(2))

    def ffp_ng(self, ctx):
        return int(ctx.rng.integers(2))


class ExhaustiveSearch(Adversary):
    """Brute force over the (small) message and randomness spaces."""

    name = "exhaustive-search"

    def ind_kem(self, ctx):
        m = _find_challenge_message(ctx)
        if m is None:
            return int(ctx.rng.integers(2))
        return 0 if ctx.oracles.H(m) == ctx.key else 1

    def ow_cpa(self, ctx):
        for m in range(ctx.scheme.message_space_size):
            if _search_randomness(ctx.scheme, ctx.pk, m, ctx.challenge):
                return m
        return 0

    def ind_cpa_choose(self, ctx):
        return 0, 1

    def ind_cpa_guess(self, ctx, c):
        return 0 if _search_randomness(ctx.scheme, ctx.pk, 0, c) else 1

    def ffp(self, ctx):
        return _best_by_proxy(ctx, range(ctx.scheme.message_space_size))

    def ffp_nk(self, ctx):
        return _best_by_proxy(ctx, range(ctx.scheme.message_space_size))


def _best_by_proxy(ctx: GameContext, messages):
    """Message whose oracle randomness has the largest public failure score."""
    best, best_score = None, -1.0
    for m in messages:
        score = ctx.scheme.failure_proxy(m, ctx.oracles.G(m))
        if score is None:
            score = 0.0
        if score > best_score:
            best, best_score = m, score
    return best


class CiphertextGuess(Adversary):
    """Submits Enc(pk, m; r) for uniform m and r, never asking G about m.

    A query is answered by a key only if r happens to equal G(m), which is
    exactly the event the spreadness term pays for.
    """

    name = "ciphertext-guess"

    def __init__(self, queries: int | None = None):
        self.queries = queries

    def _count(self, ctx):
        n = self.queries if self.queries is not None else ctx.q_D
        return 0 if n is None else int(n)

    def _submit(self, ctx, oracle):
        s = ctx.scheme
        for _ in range(self._count(ctx)):
            m = int(ctx.rng.integers(s.message_space_size))
            r = int(ctx.rng.integers(s.randomness_space_size))
            c = s.encrypt(ctx.pk, m, r)
            if c == ctx.challenge:
                continue
            oracle(c)

    def ind_kem(self, ctx):
        self._submit(ctx, ctx.oracles.decaps)
        return int(ctx.rng.integers(2))

    def ffp(self, ctx):
        self._submit(ctx, ctx.oracles.decrypt)
        return None


class FailurePlanter(Adversary):
    """Finds messages whose G-randomness fails for many keys (public score) and
    submits their honest ciphertexts to the decapsulation oracle.

    With search=True it then runs the exhaustive challenge search. With
    search=False it guesses b' = 0 iff some planted query was rejected and
    flips a coin otherwise, so its output depends on decapsulation answers.
    """

    name = "failure-planter"

    def __init__(self, threshold: float = 0.5, plants: int = 1, search: bool = True):
        self.threshold = float(threshold)
        self.plants = int(plants)
        self.search = bool(search)

    def _plant(self, ctx, oracle) -> int:
        planted = rejected = 0
        for m in range(ctx.scheme.message_space_size):
            if planted >= self.plants:
                break
            r = ctx.oracles.G(m)
            score = ctx.scheme.failure_proxy(m, r) or 0.0
            if score >= self.threshold:
                c = ctx.scheme.encrypt(ctx.pk, m, r)
                if c == ctx.challenge:
                    continue
                if oracle(c) is None:
                    rejected += 1
                planted += 1
        return rejected

    def ind_kem(self, ctx):
        rejected = self._plant(ctx, ctx.oracles.decaps)
        if self.search:
            return ExhaustiveSearch.ind_kem(self, ctx)
        coin = int(ctx.rng.integers(2))
        return 0 if rejected else coin

    def ffp(self, ctx):
        found = []
        for m in range(ctx.scheme.message_space_size):
            if len(found) >= self.plants:
                break
            r = ctx.oracles.G(m)
            if (ctx.scheme.failure_proxy(m, r) or 0.0) >= self.threshold:
                ctx.oracles.decrypt(ctx.scheme.encrypt(ctx.pk, m, r))
                found.append(m)
        return found[0] if found else None


class DecryptProbe(Adversary):
    """FFP-CCA: re-encrypts every message honestly and asks the decryption
    oracle; the first message that does not come back fails."""

    name = "decrypt-probe"

    def ffp(self, ctx):
        for m in range(ctx.scheme.message_space_size):
            c = ctx.scheme.encrypt(ctx.pk, m, ctx.oracles.G(m))
            if ctx.oracles.decrypt(c) != m:
                return m
        return None


class UniformMessage(Adversary):
    """Outputs a uniform message without any oracle query."""

    name = "uniform-message"

    def ffp(self, ctx):
        return int(ctx.rng.integers(ctx.scheme.message_space_size))

    def ffp_nk(self, ctx):
        return int(ctx.rng.integers(ctx.scheme.message_space_size))


class BestOfQ(Adversary):
    """Queries G on q distinct random messages and outputs the one with the
    highest public failure score."""

    name = "best-of-q"

    def __init__(self, q: int = 4):
        self.q = int(q)

    def _pick(self, ctx):
        M = ctx.scheme.message_space_size
        msgs = ctx.rng.permutation(M)[: min(self.q, M)]
        return _best_by_proxy(ctx, (int(m) for m in msgs))

    def ffp(self, ctx):
        return self._pick(ctx)

    def ffp_nk(self, ctx):
        return self._pick(ctx)


class PublicKeyParity(Adversary):
    """For schemes that fail when key and randomness parities agree and whose
    public key leaks the key parity."""

    name = "pk-parity"

    def ffp(self, ctx):
        parity = int(ctx.pk) & 1
        for m in range(ctx.scheme.message_space_size):
            if ctx.oracles.G(m) & 1 == parity:
                return m
        return 0

    def ffp_ng(self, ctx):
        parity = int(ctx.pk) & 1
        return 0 if ctx.oracles.fco(0, parity) else 1


class FcoRandomProbe(Adversary):
    """Queries FCO on a uniform (m, r) and guesses b' = 0 iff it fails."""

    name = "fco-probe"

    def ffp_ng(self, ctx):
        s = ctx.scheme
        m = int(ctx.rng.integers(s.message_space_size))
        r = int(ctx.rng.integers(s.randomness_space_size))
        return 0 if ctx.oracles.fco(m, r) else 1


class ForbiddenProber(Adversary):
    """Submits the challenge itself; used to exercise the policy error."""

    name = "challenge-query"

    def ind_kem(self, ctx):
        ctx.oracles.decaps(ctx.challenge)
        return 0


CATALOG = {cls.name: cls for cls in (
    FixedBit, RandomGuess, ExhaustiveSearch, CiphertextGuess, FailurePlanter, DecryptProbe,
    UniformMessage, BestOfQ, PublicKeyParity, FcoRandomProbe, ForbiddenProber,
)}


def make_adversary(name: str, **params) -> Adversary:
    if name not in CATALOG:
        raise ConfigError(f"unknown adversary {name!r}; known: {sorted(CATALOG)}")
    try:
        return CATALOG[name](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for adversary {name!r}: {exc}") from None
