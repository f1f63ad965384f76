"""Reductions from IND-CCA and FFP-CCA to passive games, as executable adversary wrappers.

Each wrapper runs an inner adversary against simulated oracles. Where a
wrapper must simulate coins of the game it is replacing (the challenge and H
in the FFP-CCA wrapper, G in the FFP-NG wrapper) it derives them with the same
labels the real game uses, so a run with seed s is coupled to the real game
with seed s. This only fixes the wrapper's own randomness; it reads no secret.
"""

from __future__ import annotations

from dataclasses import replace

from .encoding import derive_rng, derive_seed
from .errors import BudgetExceeded, DomainError
from .fo_kem import DecapsEventLog, FoKem, sim_decaps_double_prime, sim_decaps_prime, sim_decrypt_prime
from .games import Adversary, GameContext, OracleHandles, kem_challenge
from .pke_core import DerandomizedPke, OracleState, RandomOracle, ro_logged_eval

SENTINEL_CIPHERTEXT = ("fo-lab", "padding-sentinel")


class _Abort(Exception):
    def __init__(self, payload):
        super().__init__("reduction stopped the inner adversary")
        self.payload = payload


def _logging_G(state: OracleState, ctx: GameContext):
    return lambda m: ro_logged_eval(state, ctx.pk, m, ctx.scheme)


class SimulatedDecapsAdversary(Adversary):
    """IND-CPA-KEM adversary: runs an IND-CCA adversary with decapsulation
    answered from the G' log (no secret key)."""

    def __init__(self, inner: Adversary):
        self.inner = inner
        self.name = f"sim-decaps({inner.name})"

    def ind_kem(self, ctx):
        state = OracleState(G=ctx.oracles.G, H=ctx.oracles.H)
        oracles = OracleHandles(G=_logging_G(state, ctx), H=ctx.oracles.H,
                                decaps=lambda c: sim_decaps_prime(state, c, challenge=ctx.challenge))
        return self.inner.ind_kem(replace(ctx, game="IND-CCA-KEM", oracles=oracles, state={}))


class FailureExtractor(Adversary):
    """FFP-CCA adversary: simulates the IND-CCA game around the inner adversary
    and returns the first logged message whose decryption disagrees with the log."""

    def __init__(self, inner: Adversary, key_len: int = 128, oracle_tag: str = "G"):
        self.inner = inner
        self.key_len = key_len
        self.oracle_tag = oracle_tag
        self.name = f"extract-failure({inner.name})"

    def ffp(self, ctx):
        scheme = ctx.scheme
        kem = FoKem(DerandomizedPke(scheme, self.oracle_tag), self.key_len)
        H = RandomOracle("H", scheme.message_space_size, 1 << self.key_len, derive_seed(ctx.seed, "oracle", "H"))
        chal = kem_challenge(kem, ctx.seed, ctx.pk, ctx.oracles.G, H)
        state = OracleState(G=ctx.oracles.G, H=H)
        log = DecapsEventLog()
        ctx.state["extraction_log"] = log

        def decaps(c):
            k = sim_decaps_double_prime(state, c, ctx.oracles.decrypt, log, challenge=chal.c)
            if log.fail_list:
                raise _Abort(log.fail_list[0])
            return k

        inner_ctx = replace(ctx, game="IND-CCA-KEM", challenge=chal.c, key=chal.key, state={},
                            oracles=OracleHandles(G=_logging_G(state, ctx), H=H, decaps=decaps))
        try:
            self.inner.ind_kem(inner_ctx)
        except _Abort as stop:
            return stop.payload
        return None


def reduction_cca_to_cpa_ffp(adv_cca: Adversary, key_len: int = 128, oracle_tag: str = "G"):
    """(IND-CPA-KEM adversary, FFP-CCA adversary) built from an IND-CCA-KEM adversary."""
    return SimulatedDecapsAdversary(adv_cca), FailureExtractor(adv_cca, key_len, oracle_tag)


class GuessedQueryAdversary(Adversary):
    """FFP-CPA adversary: picks i uniform in 1..q_D+1, answers decryption
    queries from the G' log and outputs the logged preimage of query i (or the
    inner output when i = q_D+1). Missing queries count as queries on a fixed
    sentinel ciphertext."""

    def __init__(self, inner: Adversary, q_D: int):
        if q_D < 0:
            raise DomainError("q_D must be non-negative")
        self.inner = inner
        self.q_D = int(q_D)
        self.name = f"guess-query({inner.name})"

    def ffp(self, ctx):
        i = 1 + int(derive_rng(ctx.seed, "reduction-index").integers(self.q_D + 1))
        ctx.state["query_index"] = i
        state = OracleState(G=ctx.oracles.G, H=None)
        count = [0]

        def decrypt(c):
            count[0] += 1
            if count[0] > self.q_D:
                raise BudgetExceeded(f"inner adversary exceeded q_D={self.q_D}")
            if count[0] == i:
                raise _Abort(c)
            return sim_decrypt_prime(state, c)

        inner_ctx = replace(ctx, game="FFP-CCA", q_D=self.q_D, state={},
                            oracles=OracleHandles(G=_logging_G(state, ctx), decrypt=decrypt))
        try:
            out = self.inner.ffp(inner_ctx)
        except _Abort as stop:
            return sim_decrypt_prime(state, stop.payload)
        if i == self.q_D + 1:
            return out
        return sim_decrypt_prime(state, SENTINEL_CIPHERTEXT)


def reduction_ffp_cca_to_cpa(adv: Adversary, q_D: int) -> Adversary:
    return GuessedQueryAdversary(adv, q_D)


class FcoForwarder(Adversary):
    """FFP-NG adversary: runs an FFP-CPA adversary on pk0 with its own random
    oracle, then asks FCO about (m, G(m)) and outputs the answer as its bit."""

    def __init__(self, inner: Adversary, oracle_tag: str = "G"):
        self.inner = inner
        self.oracle_tag = oracle_tag
        self.name = f"fco-forward({inner.name})"

    def ffp_ng(self, ctx):
        s = ctx.scheme
        G = RandomOracle(self.oracle_tag, s.message_space_size, s.randomness_space_size,
                         derive_seed(ctx.seed, "oracle", self.oracle_tag))
        state = OracleState(G=G, H=None)
        inner_ctx = replace(ctx, game="FFP-CPA", state={}, oracles=OracleHandles(G=_logging_G(state, ctx)))
        m = self.inner.ffp(inner_ctx)
        try:
            m = s.check_message(m)
        except DomainError:
            m = 0
        return int(bool(ctx.oracles.fco(m, G(m))))


class OwnKeyRunner(Adversary):
    """FFP-NK adversary: generates its own key pair and runs an FFP-CPA adversary on it."""

    def __init__(self, inner: Adversary):
        self.inner = inner
        self.name = f"own-key({inner.name})"

    def ffp_nk(self, ctx):
        keys = ctx.scheme.keygen(derive_rng(ctx.seed, "reduction-keygen"))
        inner_ctx = replace(ctx, game="FFP-CPA", pk=keys.pk, state={})
        state = OracleState(G=ctx.oracles.G, H=None)
        inner_ctx.oracles = OracleHandles(G=_logging_G(state, inner_ctx))
        return self.inner.ffp(inner_ctx)


def reduction_ffp_cpa_to_ng_nk(adv: Adversary, oracle_tag: str = "G"):
    """(FFP-NG adversary, FFP-NK adversary) built from an FFP-CPA adversary."""
    return FcoForwarder(adv, oracle_tag), OwnKeyRunner(adv)


def reduction_pipeline(kem: FoKem, adv: Adversary, seed: int, budget=None) -> dict:
    """One matched-seed run of the IND-CCA game, its simulated IND-CPA twin and
    the failure extractor, plus a secret-key check of whatever was extracted."""
    from .games import run_ffp_atk, run_ind_cca_kem, run_ind_cpa_kem

    a_cpa, b_ffp = reduction_cca_to_cpa_ffp(adv, kem.key_len, kem.dpke.oracle_tag)
    cca = run_ind_cca_kem(kem, adv, seed, budget)
    cpa = run_ind_cpa_kem(kem, a_cpa, seed, budget)
    ffp = run_ffp_atk(kem.dpke, b_ffp, "CCA", seed, budget)
    extracted = ffp.output
    verified = None
    if extracted is not None:
        keys = kem.scheme.keygen(derive_rng(seed, "keygen"))
        state = OracleState.for_game(seed, kem.scheme, kem.key_len, g_tag=kem.dpke.oracle_tag)
        verified = kem.dpke.fails(state, keys, int(extracted))
    return {"seed": seed, "cca_won": cca.won, "cpa_won": cpa.won, "ffp_won": ffp.won,
            "diff": cca.events.diff_events, "guess": cca.events.guess_events,
            "fail_list": list(cca.events.fail_list), "extracted": extracted,
            "extracted_fails": verified}
