"""Monte Carlo estimation of the failure statistics and the search / FFP-NK bounds.

For one message m the key-averaged failure probability is p(r) = Pr_key[fail(m, r, key)].
The statistics are

    delta  = max_m E_r[p(r)]
    sigma  = sqrt(max_m V_r[p(r)])
    tau(t) = max_m Pr_r[p(r) >= t]

The estimator samples r first and then judges p(r) on a batch of fresh keys
(or on every key when the key space is small and enumerable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .arith import MP, as_fraction, to_mp
from .encoding import derive_rng
from .errors import DomainError
from .estimation import binomial_se
from .toy_schemes import SyntheticFailurePke

C_SEARCH = 304
DEFAULT_GRID = (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0)
EXACT_KEY_LIMIT = 4096
SCHEMA_VERSION = 1


@dataclass
class MessageStats:
    message: int
    delta: float
    delta_se: float
    variance: float
    variance_se: float
    tail: np.ndarray
    tail_se: np.ndarray


@dataclass
class FailureStats:
    delta_ik: float
    sigma: float
    tail: dict
    trials_per_message: int
    messages_probed: int
    keys_per_r: int | str
    standard_errors: dict
    exhaustive_messages: bool
    seed: int
    per_message: list = field(default_factory=list, repr=False)

    @property
    def variance(self) -> float:
        return self.sigma ** 2

    def to_records(self) -> list:
        inputs = {"trials_per_message": self.trials_per_message, "messages_probed": self.messages_probed,
                  "keys_per_r": self.keys_per_r, "max_over_all_messages": self.exhaustive_messages}
        rows = [
            {"statistic": "delta_ik", "value": self.delta_ik, "stderr": self.standard_errors["delta_ik"]},
            {"statistic": "sigma_delta_ik", "value": self.sigma, "stderr": self.standard_errors["sigma"]},
        ]
        for t, v in self.tail.items():
            rows.append({"statistic": f"tau({t:g})", "value": v, "stderr": self.standard_errors["tail"][t]})
        for row in rows:
            row.update({"trials": self.trials_per_message, "seed": self.seed,
                        "formula_id": "failure_stats.monte_carlo", "inputs": inputs})
        return rows


def _mean_se(x: np.ndarray, lo: float = 0.0, hi: float = 1.0) -> float:
    """SE of the mean, with two pseudo-observations at the range ends so it
    stays positive when every sample is equal."""
    aug = np.concatenate([x, [lo, hi]])
    return float(math.sqrt(np.var(aug, ddof=1) / x.size))


def _message_stats(m: int, p: np.ndarray, batch: int | None, grid: np.ndarray) -> MessageStats:
    n = p.size
    delta = float(p.mean())
    s2 = float(np.var(p, ddof=1))
    # a batch of b keys adds binomial noise p(1-p)/b; subtract its unbiased estimate
    correction = 0.0 if batch is None else float(np.mean(p * (1 - p))) / (batch - 1)
    variance = min(max(0.0, s2 - correction), delta * (1 - delta))
    z = (p - delta) ** 2 * n / (n - 1)
    if batch is not None:
        z = z - p * (1 - p) / (batch - 1)
    var_se = _mean_se(z)
    tail = _kernels.tail_fraction(p, np.ones(n), grid)
    tail_se = np.array([binomial_se(int(round(f * n)), n) for f in tail])
    return MessageStats(m, delta, _mean_se(p), variance, var_se, tail, tail_se)


def _sigma_se(variance: float, variance_se: float) -> float:
    if variance_se == 0:
        return 0.0
    # delta method se/(2 sigma), blended into sqrt(se) as sigma -> 0
    return variance_se / (2 * math.sqrt(variance) + math.sqrt(variance_se))


def estimate_failure_stats(scheme, messages="all", trials: int = 10_000, seed: int = 0,
                           keys_per_r: int | None = None, grid=DEFAULT_GRID,
                           message_sample: int = 256) -> FailureStats:
    """Estimate delta_ik, sigma and tau on a t-grid.

    messages: "all" (default when |M| <= 256), an int sample size, or an explicit list.
    keys_per_r: keys judged per sampled r; None picks every key for a small
    enumerable key space and 64 fresh keys otherwise.
    """
    if trials < 100:
        raise DomainError("need at least 100 trials per message")
    M = scheme.message_space_size
    if isinstance(messages, str):
        if messages != "all":
            raise DomainError(f"messages must be 'all', a count or a list, got {messages!r}")
        if M <= 256:
            msgs, exhaustive = list(range(M)), True
        else:
            msgs = sorted(int(x) for x in derive_rng(seed, "stats", "messages").choice(M, message_sample, replace=False))
            exhaustive = False
    elif isinstance(messages, int):
        k = min(messages, M)
        msgs = sorted(int(x) for x in derive_rng(seed, "stats", "messages").choice(M, k, replace=False))
        exhaustive = k == M
    else:
        msgs = sorted({scheme.check_message(x) for x in messages})
        exhaustive = len(msgs) == M

    exact_keys = (isinstance(scheme, SyntheticFailurePke) and keys_per_r is None
                  and scheme.key_space_size <= EXACT_KEY_LIMIT)
    if keys_per_r is not None and keys_per_r < 2:
        raise DomainError("keys_per_r must be at least 2")
    batch = None if exact_keys else (keys_per_r or 64)
    grid = np.asarray(sorted(float(t) for t in grid), dtype=np.float64)

    per_m = []
    for m in msgs:
        rng = derive_rng(seed, "stats", m)
        r_idx = rng.integers(scheme.randomness_space_size, size=trials)
        if exact_keys:
            p = scheme.fail_counts(m)[r_idx] / scheme.key_space_size
        else:
            p = scheme.key_batch_failures(m, r_idx, batch, rng) / batch
        per_m.append(_message_stats(m, np.asarray(p, dtype=np.float64), batch, grid))

    best_delta = max(per_m, key=lambda s: s.delta)
    best_var = max(per_m, key=lambda s: s.variance)
    tail, tail_se = {}, {}
    for j, t in enumerate(grid):
        best = max(per_m, key=lambda s: s.tail[j])
        tail[float(t)] = float(best.tail[j])
        tail_se[float(t)] = float(best.tail_se[j])
    return FailureStats(
        delta_ik=best_delta.delta,
        sigma=math.sqrt(best_var.variance),
        tail=tail,
        trials_per_message=trials,
        messages_probed=len(msgs),
        keys_per_r="all" if exact_keys else batch,
        standard_errors={"delta_ik": best_delta.delta_se,
                         "sigma": _sigma_se(best_var.variance, best_var.variance_se),
                         "variance": best_var.variance_se, "tail": tail_se},
        exhaustive_messages=exhaustive,
        seed=seed,
        per_message=per_m,
    )


# bounds --------------------------------------------------------------------------

def search_success_bound(q: int, gamma_r: int, y_size: int) -> Fraction:
    """min(1, 152 (q+1)^2 Gamma_R / |Y|), exact."""
    if q < 0:
        raise DomainError("q must be non-negative")
    if gamma_r > y_size:
        raise DomainError("Gamma_R cannot exceed |Y|")
    if y_size <= 0:
        raise DomainError("|Y| must be positive")
    return min(Fraction(1), Fraction(152 * (q + 1) ** 2 * gamma_r, y_size))


def expectation_search_bound(grid, tail, q: int, C: int = C_SEARCH) -> Fraction:
    """t_k + C q^2 sum_{i>k} t_i (G(t_i) - G(t_{i+1})) with k = min{i : C q^2 G(t_i) <= 1}.

    ``tail`` is a callable t -> G(t) or a sequence aligned with ``grid``.
    Computed exactly in rationals (floats are taken at their exact binary value).
    If no grid point satisfies the condition the bound falls back to t_R, the
    largest value the searched quantity can take.
    """
    ts = [as_fraction(t) for t in grid]
    if not ts:
        raise DomainError("empty grid")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise DomainError("grid must be strictly increasing")
    if ts[0] < 0 or ts[-1] > 1:
        raise DomainError("grid must lie in [0, 1]")
    gs = [as_fraction(tail(t)) for t in grid] if callable(tail) else [as_fraction(g) for g in tail]
    if len(gs) != len(ts):
        raise DomainError("tail values and grid differ in length")
    if any(b > a for a, b in zip(gs, gs[1:])):
        raise DomainError("tail function must be non-increasing")
    cq2 = C * q * q
    kappa = next((i for i, g in enumerate(gs) if cq2 * g <= 1), None)
    if kappa is None:
        return ts[-1]
    gs_ext = gs + [Fraction(0)]
    total = sum((ts[i] * (gs_ext[i] - gs_ext[i + 1]) for i in range(kappa + 1, len(ts))), Fraction(0))
    return min(Fraction(1), ts[kappa] + cq2 * total)


def _clamp(x):
    return min(MP.mpf(1), max(MP.mpf(0), x))


def ffp_nk_bound_chebyshev(q, mu, sigma, C: int = C_SEARCH):
    """mu + 3x + 2 x^2 mu ln(1/x) with x = sqrt(C) q sigma (natural log).

    Returns 1 once x >= 1; at x = 0 the log term vanishes and the bound is mu.
    """
    if sigma < 0:
        raise DomainError("sigma must be non-negative")
    if q < 0 or not 0 <= mu <= 1:
        raise DomainError("need q >= 0 and mu in [0, 1]")
    mu_, sigma_ = to_mp(as_fraction(mu)), to_mp(as_fraction(sigma))
    x = MP.sqrt(C) * to_mp(as_fraction(q)) * sigma_
    if x >= 1:
        return MP.mpf(1)
    if x == 0:
        return _clamp(mu_)
    return _clamp(mu_ + 3 * x + 2 * x * x * mu_ * MP.log(1 / x))


def gaussian_beta_threshold(C: int = C_SEARCH):
    return MP.e / (2 * C)


def ffp_nk_bound_gaussian(q, mu, beta, C: int = C_SEARCH):
    """mu + 2 beta^(-1/2) sqrt(ln(2 C sqrt(beta)) + 2 ln q), clamped to 1."""
    beta_ = to_mp(as_fraction(beta))
    if beta_ < gaussian_beta_threshold(C):
        raise DomainError(f"beta must be at least e/(2C) = {float(gaussian_beta_threshold(C)):.6g}")
    if q < 1:
        raise DomainError("q must be at least 1")
    if not 0 <= mu <= 1:
        raise DomainError("mu must lie in [0, 1]")
    mu_, q_ = to_mp(as_fraction(mu)), to_mp(as_fraction(q))
    inner = MP.log(2 * C * MP.sqrt(beta_)) + 2 * MP.log(q_)
    return _clamp(mu_ + 2 / MP.sqrt(beta_) * MP.sqrt(inner))


def bound_records(q_values, mu, sigma=None, beta=None, seed=None) -> list:
    """JSON rows for the FFP-NK bounds at several query counts."""
    plain = lambda v: str(v) if isinstance(v, Fraction) else v  # noqa: E731
    rows = []
    for q in q_values:
        if sigma is not None:
            rows.append({"statistic": "ffp_nk_bound", "value": float(ffp_nk_bound_chebyshev(q, mu, sigma)),
                         "stderr": None, "trials": None, "seed": seed,
                         "formula_id": "failure_stats.ffp_nk.chebyshev(ln)",
                         "inputs": {"q": q, "mu": plain(mu), "sigma": plain(sigma), "C": C_SEARCH}})
        if beta is not None and q >= 1:
            rows.append({"statistic": "ffp_nk_bound", "value": float(ffp_nk_bound_gaussian(q, mu, beta)),
                         "stderr": None, "trials": None, "seed": seed,
                         "formula_id": "failure_stats.ffp_nk.gaussian",
                         "inputs": {"q": q, "mu": plain(mu), "beta": plain(beta), "C": C_SEARCH}})
    return rows
