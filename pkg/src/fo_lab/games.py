"""Executable security games with scoped oracle handles and query budgets.

Every game run is a pure function of (game, scheme, adversary, seed). All
coins are derived from the run seed with fixed labels:

    "keygen", "keygen-1"   key pairs
    "oracle", tag          random oracle seeds (see OracleState.for_game)
    "challenge"            challenge bit, challenge message and random key
    "adversary"            adversary coins (ctx.rng)

Games that share labels share coins, so running two games with the same seed
couples them (same keys, same oracles, same challenge). The reductions rely on
that coupling to make paired comparisons.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .encoding import derive_rng, derive_seed, random_bits
from .errors import BudgetExceeded, DomainError, ForbiddenQuery, OracleAccessError, OracleViolation
from .estimation import WinRate
from .fo_kem import DecapsEventLog, FoKem, decaps, encaps_with_message, sim_decaps_prime
from .pke_core import (DerandomizedPke, OracleState, PkeScheme, derandomized_decrypt, list_preimage,
                       ro_logged_eval)

ORACLE_NAMES = ("G", "H", "decaps", "decrypt", "fco")


@dataclass
class QueryBudget:
    """Query ceilings (None = unlimited) and counters for one run."""

    q_G: int | None = None
    q_H: int | None = None
    q_D: int | None = None
    used_G: int = 0
    used_H: int = 0
    used_D: int = 0

    def fresh(self) -> "QueryBudget":
        return QueryBudget(self.q_G, self.q_H, self.q_D)

    def charge(self, which: str) -> None:
        used = getattr(self, "used_" + which) + 1
        cap = getattr(self, "q_" + which)
        if cap is not None and used > cap:
            raise BudgetExceeded(f"query budget q_{which}={cap} exceeded")
        setattr(self, "used_" + which, used)

    @property
    def depth(self) -> int:
        """Classical runs are sequential: depth = total number of queries."""
        return self.used_G + self.used_H + self.used_D

    width = 1

    def snapshot(self) -> dict:
        return {"q_G": self.used_G, "q_H": self.used_H, "q_D": self.used_D,
                "d": self.depth, "w": self.width}


class OracleHandles:
    """Attribute access to the oracles granted by the current game only."""

    def __init__(self, **oracles: Callable):
        self._oracles = oracles

    def __getattr__(self, name):
        oracles = self.__dict__.get("_oracles", {})
        if name in oracles:
            return oracles[name]
        raise OracleAccessError(f"oracle {name!r} is not granted in this game (granted: {sorted(oracles)})")

    def granted(self) -> tuple:
        return tuple(sorted(self._oracles))


@dataclass
class GameContext:
    game: str
    scheme: PkeScheme
    oracles: OracleHandles
    seed: int
    rng: np.random.Generator
    pk: Any = None
    challenge: Any = None
    key: Any = None
    q_D: int | None = None
    state: dict = field(default_factory=dict)


@dataclass
class GameOutcome:
    game: str
    adversary: str
    won: bool
    seed: int
    events: DecapsEventLog
    queries_used: dict
    output: Any = None
    info: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"game": self.game, "adversary": self.adversary, "seed": self.seed, "won": bool(self.won),
                "output": _jsonable(self.output), "events": self.events.to_dict(),
                "queries_used": self.queries_used, "info": {k: _jsonable(v) for k, v in self.info.items()}}


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    return repr(v)


class Adversary:
    """Base adversary. Subclasses implement the callbacks of the games they play.

    Adversary objects must not keep per-run state on ``self``; use ``ctx.state``.
    """

    name = "adversary"

    def ind_kem(self, ctx: GameContext) -> int:
        raise NotImplementedError(f"{self.name} does not play IND-KEM games")

    def ow_cpa(self, ctx: GameContext) -> int:
        raise NotImplementedError(f"{self.name} does not play OW-CPA")

    def ind_cpa_choose(self, ctx: GameContext) -> tuple[int, int]:
        raise NotImplementedError(f"{self.name} does not play IND-CPA")

    def ind_cpa_guess(self, ctx: GameContext, c) -> int:
        raise NotImplementedError(f"{self.name} does not play IND-CPA")

    def ffp(self, ctx: GameContext):
        raise NotImplementedError(f"{self.name} does not play FFP-CPA/CCA")

    def ffp_nk(self, ctx: GameContext):
        raise NotImplementedError(f"{self.name} does not play FFP-NK")

    def ffp_ng(self, ctx: GameContext) -> int:
        raise NotImplementedError(f"{self.name} does not play FFP-NG")


def _bit(b) -> int:
    b = int(b)
    if b not in (0, 1):
        raise DomainError(f"adversary output {b!r} is not a bit")
    return b


# KEM challenge ---------------------------------------------------------------------

@dataclass
class KemChallenge:
    b: int
    m: int
    c: Any
    k0: int
    k1: int

    @property
    def key(self) -> int:
        return self.k1 if self.b else self.k0


def kem_challenge(kem: FoKem, seed: int, pk, G, H) -> KemChallenge:
    """Challenge bit, encapsulation and random key, drawn from the "challenge" coins."""
    ch = derive_rng(seed, "challenge")
    b = int(ch.integers(2))
    k0, c, m = encaps_with_message(kem, OracleState(G=G, H=H), pk, ch)
    k1 = random_bits(ch, kem.key_len)
    return KemChallenge(b, m, c, k0, k1)


def _logged_G(state: OracleState, pk, scheme, budget: QueryBudget):
    def G(m):
        budget.charge("G")
        return ro_logged_eval(state, pk, m, scheme)
    return G


def _plain_oracle(oracle, budget: QueryBudget, which: str):
    def call(x):
        budget.charge(which)
        return oracle(x)
    return call


# games -----------------------------------------------------------------------------

def run_ind_kem(kem: FoKem, adv: Adversary, seed: int, budget: QueryBudget | None = None,
                atk: str = "CCA") -> GameOutcome:
    budget = (budget or QueryBudget()).fresh()
    scheme = kem.scheme
    keys = kem.keygen(derive_rng(seed, "keygen"))
    state = kem.oracle_state(seed)
    chal = kem_challenge(kem, seed, keys.pk, state.G, state.H)
    log = DecapsEventLog()
    explicit = FoKem(kem.dpke, kem.key_len)

    oracles = {"G": _logged_G(state, keys.pk, scheme, budget), "H": _plain_oracle(state.H, budget, "H")}
    if atk == "CCA":
        def odecaps(c):
            budget.charge("D")
            if c == chal.c:
                raise ForbiddenQuery("decapsulation query on the challenge ciphertext")
            real = decaps(kem, state, keys, c)
            real_explicit = real if kem.variant == "explicit" else decaps(explicit, state, keys, c)
            log.observe(real_explicit, sim_decaps_prime(state, c))
            m = list_preimage(state.L_G, c)
            if m is not None and m != derandomized_decrypt(kem.dpke, state, keys, c):
                log.add_failure(m)
            return real
        oracles["decaps"] = odecaps
    elif atk != "CPA":
        raise DomainError("atk must be 'CPA' or 'CCA'")

    ctx = GameContext(f"IND-{atk}-KEM", scheme, OracleHandles(**oracles), seed,
                      derive_rng(seed, "adversary"), pk=keys.pk, challenge=chal.c, key=chal.key,
                      q_D=budget.q_D)
    guess = _bit(adv.ind_kem(ctx))
    return GameOutcome(ctx.game, adv.name, guess == chal.b, seed, log, budget.snapshot(), guess,
                       {"b": chal.b})


def run_ind_cca_kem(kem: FoKem, adv: Adversary, seed: int, budget: QueryBudget | None = None) -> GameOutcome:
    return run_ind_kem(kem, adv, seed, budget, "CCA")


def run_ind_cpa_kem(kem: FoKem, adv: Adversary, seed: int, budget: QueryBudget | None = None) -> GameOutcome:
    return run_ind_kem(kem, adv, seed, budget, "CPA")


def _pke_oracles(scheme: PkeScheme, seed: int, budget: QueryBudget) -> dict:
    state = OracleState.for_game(seed, scheme)
    return {"G": _plain_oracle(state.G, budget, "G"), "H": _plain_oracle(state.H, budget, "H")}


def run_ow_cpa_pke(scheme: PkeScheme, adv: Adversary, seed: int, budget: QueryBudget | None = None) -> GameOutcome:
    budget = (budget or QueryBudget()).fresh()
    keys = scheme.keygen(derive_rng(seed, "keygen"))
    ch = derive_rng(seed, "challenge")
    m_star = int(ch.integers(scheme.message_space_size))
    c_star = scheme.encrypt(keys.pk, m_star, int(ch.integers(scheme.randomness_space_size)))
    ctx = GameContext("OW-CPA", scheme, OracleHandles(**_pke_oracles(scheme, seed, budget)), seed,
                      derive_rng(seed, "adversary"), pk=keys.pk, challenge=c_star)
    guess = adv.ow_cpa(ctx)
    return GameOutcome("OW-CPA", adv.name, guess == m_star, seed, DecapsEventLog(), budget.snapshot(),
                       guess, {"m": m_star})


def run_ind_cpa_pke(scheme: PkeScheme, adv: Adversary, seed: int, budget: QueryBudget | None = None) -> GameOutcome:
    budget = (budget or QueryBudget()).fresh()
    keys = scheme.keygen(derive_rng(seed, "keygen"))
    ctx = GameContext("IND-CPA", scheme, OracleHandles(**_pke_oracles(scheme, seed, budget)), seed,
                      derive_rng(seed, "adversary"), pk=keys.pk)
    m0, m1 = adv.ind_cpa_choose(ctx)
    m0, m1 = scheme.check_message(m0), scheme.check_message(m1)
    ch = derive_rng(seed, "challenge")
    b = int(ch.integers(2))
    c_star = scheme.encrypt(keys.pk, (m0, m1)[b], int(ch.integers(scheme.randomness_space_size)))
    ctx.challenge = c_star
    guess = _bit(adv.ind_cpa_guess(ctx, c_star))
    return GameOutcome("IND-CPA", adv.name, guess == b, seed, DecapsEventLog(), budget.snapshot(),
                       guess, {"b": b})


def _valid_message(scheme: PkeScheme, m) -> bool:
    try:
        scheme.check_message(m)
        return True
    except DomainError:
        return False


def run_ffp_atk(dpke: DerandomizedPke, adv: Adversary, atk: str, seed: int,
                budget: QueryBudget | None = None) -> GameOutcome:
    budget = (budget or QueryBudget()).fresh()
    scheme = dpke.base
    keys = scheme.keygen(derive_rng(seed, "keygen"))
    state = OracleState.for_game(seed, scheme, g_tag=dpke.oracle_tag)
    log = DecapsEventLog()
    oracles = {"G": _logged_G(state, keys.pk, scheme, budget)}
    if atk == "CCA":
        def odecrypt(c):
            budget.charge("D")
            real = derandomized_decrypt(dpke, state, keys, c)
            log.observe(real, list_preimage(state.L_G, c))
            return real
        oracles["decrypt"] = odecrypt
    elif atk != "CPA":
        raise DomainError("atk must be 'CPA' or 'CCA'")
    ctx = GameContext(f"FFP-{atk}", scheme, OracleHandles(**oracles), seed, derive_rng(seed, "adversary"),
                      pk=keys.pk, q_D=budget.q_D)
    m = adv.ffp(ctx)
    won = m is not None and _valid_message(scheme, m) and dpke.fails(state, keys, int(m))
    return GameOutcome(ctx.game, adv.name, bool(won), seed, log, budget.snapshot(), m)


def run_ffp_nk(dpke: DerandomizedPke, adv: Adversary, seed: int, budget: QueryBudget | None = None) -> GameOutcome:
    budget = (budget or QueryBudget()).fresh()
    scheme = dpke.base
    state = OracleState.for_game(seed, scheme, g_tag=dpke.oracle_tag)
    ctx = GameContext("FFP-NK", scheme, OracleHandles(G=_plain_oracle(state.G, budget, "G")), seed,
                      derive_rng(seed, "adversary"))
    m = adv.ffp_nk(ctx)
    won = False
    if m is not None and _valid_message(scheme, m):
        keys = scheme.keygen(derive_rng(seed, "keygen"))  # sampled only after m is fixed
        won = dpke.fails(state, keys, int(m))
    return GameOutcome("FFP-NK", adv.name, bool(won), seed, DecapsEventLog(), budget.snapshot(), m)


def run_ffp_ng(scheme: PkeScheme, adv: Adversary, seed: int) -> GameOutcome:
    """Guess version: won iff b' = b; report |win - 1/2| as the advantage
    (a left-or-right formulation would save a factor 2 in the reduction)."""
    k0 = scheme.keygen(derive_rng(seed, "keygen"))
    k1 = scheme.keygen(derive_rng(seed, "keygen-1"))
    b = int(derive_rng(seed, "challenge").integers(2))
    kb = (k0, k1)[b]
    used = {"fco": 0}

    def fco(m, r):
        if used["fco"]:
            raise OracleViolation("FCO may be queried only once")
        used["fco"] += 1
        m = scheme.check_message(m)
        r = scheme.check_randomness(r)
        return scheme.decrypt(kb.sk, scheme.encrypt(kb.pk, m, r)) != m

    ctx = GameContext("FFP-NG", scheme, OracleHandles(fco=fco), seed, derive_rng(seed, "adversary"), pk=k0.pk)
    guess = _bit(adv.ffp_ng(ctx))
    return GameOutcome("FFP-NG", adv.name, guess == b, seed, DecapsEventLog(),
                       {"fco": used["fco"], "d": used["fco"], "w": 1}, guess, {"b": b})


# batches ---------------------------------------------------------------------------

def run_seed(master: int, i: int) -> int:
    """seed_i = first 8 bytes of XOF(master || i)."""
    return derive_seed(master, "run", i)


def _run_chunk(args):
    fn, master, lo, hi = args
    return [fn(run_seed(master, i)) for i in range(lo, hi)]


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("FO_LAB_THREADS", "1")))
    except ValueError:
        return 1


def run_many(fn: Callable[[int], GameOutcome], trials: int, master_seed: int,
             threads: int | None = None) -> list:
    """Run fn on trials derived seeds. With FO_LAB_THREADS > 1 chunks go to worker
    processes (fn must then be picklable); results keep seed order either way."""
    threads = thread_cap() if threads is None else threads
    if threads <= 1 or trials < 2 * threads:
        return [fn(run_seed(master_seed, i)) for i in range(trials)]
    bounds = np.linspace(0, trials, threads + 1).astype(int)
    chunks = [(fn, master_seed, int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    return [o for part in parts for o in part]


def win_rate(outcomes) -> WinRate:
    outcomes = list(outcomes)
    return WinRate(sum(1 for o in outcomes if o.won), len(outcomes))


def ng_split(outcomes) -> tuple[int, int, int, int]:
    """(#b'=1 | b=0, #b=0, #b'=1 | b=1, #b=1) for the two-proportion test."""
    x0 = n0 = x1 = n1 = 0
    for o in outcomes:
        if o.info["b"] == 0:
            n0 += 1
            x0 += o.output
        else:
            n1 += 1
            x1 += o.output
    return x0, n0, x1, n1


__all__ = [
    "Adversary", "GameContext", "GameOutcome", "KemChallenge", "OracleHandles", "QueryBudget",
    "kem_challenge", "ng_split", "run_ffp_atk", "run_ffp_ng",
    "run_ffp_nk", "run_ind_cca_kem", "run_ind_cpa_kem", "run_ind_cpa_pke", "run_many",
    "run_ow_cpa_pke", "run_seed", "win_rate",
]
