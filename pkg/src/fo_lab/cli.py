"""Command-line front end: fo-lab {demo,games,stats,bounds,spread}.

Exit codes: 0 ok, 1 config error, 2 runtime or budget violation, 3 internal
invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import spreadness
from .adversaries import make_adversary
from .arith import parse_number
from .bound_calc import BoundInputs, compute_bound, cross_check, recompute, spreadness_budget
from .config import COMMANDS, RunConfig, resolve_scheme
from .encoding import derive_rng
from .errors import ConfigError, DomainError, FoLabError, InvariantError, RuntimeViolation
from .estimation import WinRate, two_proportion_pvalue
from .failure_stats import bound_records, estimate_failure_stats
from .fo_kem import FoKem, decaps, encaps, production_state
from .games import (QueryBudget, run_ffp_atk, run_ffp_ng, run_ffp_nk, run_ind_cca_kem, run_ind_cpa_kem,
                    run_ind_cpa_pke, run_many, run_ow_cpa_pke, run_seed)
from .pke_core import DerandomizedPke
from .reductions import reduction_pipeline

SCHEMA_VERSION = 1
GAMES = ("ind-cca-kem", "ind-cpa-kem", "ow-cpa", "ind-cpa", "ffp-cpa", "ffp-cca", "ffp-nk", "ffp-ng",
         "reduction")
MAX_ERRORS_LISTED = 20


def _kem(cfg: RunConfig) -> FoKem:
    scheme = resolve_scheme(cfg.scheme)
    try:
        if set(cfg.kem) - {"key_len", "variant", "oracles"}:
            raise ConfigError(f"unknown kem keys: {sorted(set(cfg.kem) - {'key_len', 'variant', 'oracles'})}")
        return FoKem(DerandomizedPke(scheme), int(cfg.kem.get("key_len", 128)),
                     cfg.kem.get("variant", "explicit"))
    except (DomainError, ValueError) as exc:
        raise ConfigError(f"bad kem section: {exc}") from None


def _budget(cfg: RunConfig) -> QueryBudget:
    b = cfg.budgets
    extra = set(b) - {"q_G", "q_H", "q_D"}
    if extra:
        raise ConfigError(f"unknown budget keys: {sorted(extra)}")
    return QueryBudget(b.get("q_G"), b.get("q_H"), b.get("q_D"))


# demo -------------------------------------------------------------------------------

def cmd_demo(cfg: RunConfig) -> dict:
    """Keygen / encaps / decaps cycles. Each cycle gets fresh lazily sampled
    oracles; `kem: {oracles: production}` uses the fixed hash instantiation."""
    kem = _kem(cfg)
    mode = cfg.kem.get("oracles", "random")
    if mode not in ("random", "production"):
        raise ConfigError("kem.oracles must be 'random' or 'production'")
    cycles = cfg.trials or 10_000
    mismatches = rejections = 0
    for i in range(cycles):
        seed = run_seed(cfg.seed, i)
        keys = kem.keygen(derive_rng(seed, "keygen"))
        if mode == "production":
            state = production_state(keys.pk, kem.dpke, kem.key_len)
        else:
            state = kem.oracle_state(seed)
        k, c = encaps(kem, state, keys.pk, derive_rng(seed, "challenge"))
        k2 = decaps(kem, state, keys, c)
        if k2 is None:
            rejections += 1
        elif k2 != k:
            mismatches += 1
    fails = mismatches + rejections
    rate = WinRate(fails, cycles)
    return {"schema_version": SCHEMA_VERSION, "command": "demo", "seed": cfg.seed, "cycles": cycles,
            "kem_variant": kem.variant, "oracles": mode, "mismatches": mismatches, "rejections": rejections,
            "failures": fails, "failure_rate": rate.rate, "stderr": rate.se,
            "interval95": list(rate.interval), "scheme": kem.scheme.to_config()}


# games ------------------------------------------------------------------------------

class GameJob:
    """Picklable per-seed game runner for run_many."""

    def __init__(self, game: str, kem: FoKem, adversary, budget: QueryBudget):
        self.game, self.kem, self.adversary, self.budget = game, kem, adversary, budget

    def __call__(self, seed: int) -> dict:
        try:
            return self._run(seed)
        except RuntimeViolation as exc:
            return {"seed": seed, "error": f"{type(exc).__name__}: {exc}"}

    def _run(self, seed: int) -> dict:
        g, kem, adv, budget = self.game, self.kem, self.adversary, self.budget
        if g == "reduction":
            return reduction_pipeline(kem, adv, seed, budget)
        if g == "ind-cca-kem":
            out = run_ind_cca_kem(kem, adv, seed, budget)
        elif g == "ind-cpa-kem":
            out = run_ind_cpa_kem(kem, adv, seed, budget)
        elif g == "ow-cpa":
            out = run_ow_cpa_pke(kem.scheme, adv, seed, budget)
        elif g == "ind-cpa":
            out = run_ind_cpa_pke(kem.scheme, adv, seed, budget)
        elif g == "ffp-cpa":
            out = run_ffp_atk(kem.dpke, adv, "CPA", seed, budget)
        elif g == "ffp-cca":
            out = run_ffp_atk(kem.dpke, adv, "CCA", seed, budget)
        elif g == "ffp-nk":
            out = run_ffp_nk(kem.dpke, adv, seed, budget)
        else:
            out = run_ffp_ng(kem.scheme, adv, seed)
        return out.to_record()


def _rate_summary(wins: int, n: int) -> dict:
    r = WinRate(wins, n)
    return {"wins": wins, "trials": n, "rate": r.rate, "stderr": r.se, "interval95": list(r.interval)}


def cmd_games(cfg: RunConfig) -> tuple[dict, list]:
    game = cfg.game
    if game not in GAMES:
        raise ConfigError(f"unknown game {game!r}; known: {list(GAMES)}")
    adv_cfg = dict(cfg.adversary)
    if "name" not in adv_cfg:
        raise ConfigError("no adversary configured")
    adversary = make_adversary(adv_cfg["name"], **adv_cfg.get("params", {}))
    kem = _kem(cfg)
    trials = cfg.trials or 1000
    records = run_many(GameJob(game, kem, adversary, _budget(cfg)), trials, cfg.seed)
    errors = [r for r in records if "error" in r]
    ok = [r for r in records if "error" not in r]
    report = {"schema_version": SCHEMA_VERSION, "command": "games", "game": game, "seed": cfg.seed,
              "adversary": adv_cfg, "trials": trials, "completed": len(ok), "scheme": kem.scheme.to_config(),
              "errors": errors[:MAX_ERRORS_LISTED], "error_count": len(errors)}
    if game == "reduction":
        report["cca"] = _rate_summary(sum(r["cca_won"] for r in ok), len(ok))
        report["cpa_simulated"] = _rate_summary(sum(r["cpa_won"] for r in ok), len(ok))
        report["ffp_extractor"] = _rate_summary(sum(r["ffp_won"] for r in ok), len(ok))
        report["diff_events"] = sum(r["diff"] for r in ok)
        report["guess_events"] = sum(r["guess"] for r in ok)
        report["runs_with_diff"] = sum(1 for r in ok if r["diff"])
        report["runs_with_guess"] = sum(1 for r in ok if r["guess"])
        extracted = [r for r in ok if r["extracted"] is not None]
        report["extractions"] = len(extracted)
        report["extractions_verified"] = sum(1 for r in extracted if r["extracted_fails"])
        if report["extractions_verified"] != report["extractions"]:
            raise InvariantError("an extracted plaintext does not fail under the secret key")
    else:
        report["result"] = _rate_summary(sum(r["won"] for r in ok), len(ok))
        report["diff_events"] = sum(r["events"]["diff_events"] for r in ok)
        report["guess_events"] = sum(r["events"]["guess_events"] for r in ok)
        if game == "ffp-ng":
            x0 = sum(r["output"] for r in ok if r["info"]["b"] == 0)
            n0 = sum(1 for r in ok if r["info"]["b"] == 0)
            x1 = sum(r["output"] for r in ok if r["info"]["b"] == 1)
            n1 = len(ok) - n0
            report["ng_two_proportion_pvalue"] = two_proportion_pvalue(x0, n0, x1, n1)
            report["note"] = "guess formulation; a left-or-right version would drop a factor 2 in the reduction"
        elif game in ("ind-cca-kem", "ind-cpa-kem", "ind-cpa"):
            report["advantage"] = WinRate(report["result"]["wins"], len(ok)).advantage
    if cfg.output.get("records"):
        report["records"] = records
    return report, errors


# stats ------------------------------------------------------------------------------

def cmd_stats(cfg: RunConfig) -> dict:
    scheme = resolve_scheme(cfg.scheme)
    s = dict(cfg.stats)
    known = {"messages", "keys_per_r", "grid", "message_sample", "ffp_nk_q", "beta"}
    if set(s) - known:
        raise ConfigError(f"unknown stats keys: {sorted(set(s) - known)}")
    kwargs = {k: s[k] for k in ("messages", "keys_per_r", "grid", "message_sample") if k in s}
    stats = estimate_failure_stats(scheme, trials=cfg.trials or 10_000, seed=cfg.seed, **kwargs)
    records = stats.to_records()
    if "ffp_nk_q" in s:
        qs = [int(parse_number(q)) for q in _as_list(s["ffp_nk_q"])]
        records += bound_records(qs, stats.delta_ik, sigma=stats.sigma, beta=s.get("beta"), seed=cfg.seed)
    return {"schema_version": SCHEMA_VERSION, "command": "stats", "seed": cfg.seed,
            "scheme": scheme.to_config(), "log_base": "e (natural log in the Chebyshev bound)",
            "messages_probed": stats.messages_probed, "max_over_all_messages": stats.exhaustive_messages,
            "records": records}


def _as_list(v):
    return v if isinstance(v, list) else [v]


# bounds -----------------------------------------------------------------------------

def _resolve_gamma(inputs: dict) -> dict:
    g = inputs.get("gamma")
    if isinstance(g, str) and g in spreadness.PRESETS:
        inputs = {**inputs, "gamma": spreadness.gamma_floor(spreadness.PRESETS[g])}
    return inputs


def budget_table(q_D=Fraction(2) ** 64) -> list:
    rows = []
    for name, params in spreadness.PRESETS.items():
        gamma = spreadness.gamma_floor(params)
        b = spreadness_budget(gamma, q_D)
        rows.append({"preset": name, "gamma_floor": gamma, "q_D": str(b["q_D"]),
                     "budget_exponent": str(b["exponent"]), "valid_for_q_G_at_least": str(b["min_q_G"])})
    return rows


def cmd_bounds(cfg: RunConfig) -> dict:
    b = dict(cfg.bounds)
    if set(b) - {"inputs", "variant", "budget_table"}:
        raise ConfigError(f"unknown bounds keys: {sorted(set(b) - {'inputs', 'variant', 'budget_table'})}")
    report = {"schema_version": SCHEMA_VERSION, "command": "bounds"}
    if "inputs" in b:
        try:
            inputs = BoundInputs.from_config(_resolve_gamma(dict(b["inputs"])))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad bound inputs: {exc}") from None
        rep = compute_bound(inputs, b.get("variant"))
        d = rep.to_dict()
        recompute(d)
        gap = cross_check(rep)
        if gap > 1e-12:
            raise InvariantError(f"mpmath and exact evaluations disagree (relative gap {gap:.3g})")
        d["dual_path_relative_gap"] = gap
        report["bound"] = d
    if b.get("budget_table"):
        q_D = b["inputs"].get("q_D", "2^64") if "inputs" in b else "2^64"
        report["budget_table"] = budget_table(parse_number(q_D))
    if len(report) == 2:
        raise ConfigError("bounds section needs inputs and/or budget_table: true")
    return report


# spread -----------------------------------------------------------------------------

def _spread_row(name, params) -> dict:
    if isinstance(params, spreadness.FrodoParams):
        g = spreadness.gamma_frodo(params)
        return {"preset": name, **spreadness.params_to_config(params), "gamma": g, "gamma_floor": g}
    h = spreadness.gamma_hqc(params)
    return {"preset": name, **spreadness.params_to_config(params), "gamma": h.gamma_exact,
            "gamma_floor": h.gamma_floor, "log2_binom_floor_per_vector": h.log2_binom_floor,
            "binom_exceeds_2^floor": h.certifies(h.log2_binom_floor)}


def cmd_spread(cfg: RunConfig) -> dict:
    s = dict(cfg.spread)
    rows = []
    if s.get("toy"):
        scheme = resolve_scheme(cfg.scheme)
        keys = scheme.keygen(derive_rng(cfg.seed, "keygen"))
        rows.append({"preset": "toy", "scheme": scheme.to_config(),
                     "gamma": spreadness.gamma_exact_toy(scheme, keys)})
    elif "preset" in s or "family" in s:
        params = spreadness.params_from_config(s)
        rows.append(_spread_row(s.get("preset", "custom"), params))
    else:
        rows = [_spread_row(n, p) for n, p in spreadness.PRESETS.items()]
    return {"schema_version": SCHEMA_VERSION, "command": "spread", "rows": rows}


# output -----------------------------------------------------------------------------

def _rows_for_csv(report: dict) -> list:
    cmd = report["command"]
    if cmd == "stats":
        return [{**r, "inputs": json.dumps(r["inputs"], sort_keys=True)} for r in report["records"]]
    if cmd == "spread":
        return [{k: json.dumps(v, sort_keys=True) if isinstance(v, dict) else v for k, v in r.items()}
                for r in report["rows"]]
    if cmd == "bounds":
        rows = []
        for name, route in report.get("bound", {}).get("routes", {}).items():
            for t in route["terms"]:
                rows.append({"route": name, "formula_id": t["formula_id"], "formula": t["formula"],
                             "value": t["value"], "log2": t["log2"], "symbolic": t["symbolic"] or "",
                             "inputs": json.dumps(t["inputs"], sort_keys=True)})
            rows.append({"route": name, "formula_id": "total", "formula": "clamp(sum)", "value": route["total"],
                         "log2": route["log2_total"], "symbolic": route["expression"],
                         "inputs": json.dumps(route["diagnostics"])})
        for r in report.get("budget_table", []):
            rows.append({"route": "budget", "formula_id": r["preset"], "formula": "65 - gamma_floor/2",
                         "value": r["budget_exponent"], "log2": "", "symbolic": "",
                         "inputs": json.dumps(r, sort_keys=True)})
        return rows
    flat = {}
    for k, v in report.items():
        if k == "records":
            continue
        if isinstance(v, dict):
            for k2, v2 in v.items():
                flat[f"{k}.{k2}"] = json.dumps(v2, sort_keys=True) if isinstance(v2, (dict, list)) else v2
        elif isinstance(v, list):
            flat[k] = json.dumps(v, sort_keys=True)
        else:
            flat[k] = v
    return [flat]


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    rows = _rows_for_csv(report)
    buf = io.StringIO()
    cols = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


# entry point ------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fo-lab", description="FO-transform KEM lab: games, failure statistics, bounds.")
    p.add_argument("command", nargs="?", choices=COMMANDS, help="defaults to the config's command")
    p.add_argument("--config", metavar="PATH", help="YAML run configuration")
    p.add_argument("--seed", type=int, metavar="U64", help="master seed (overrides the config)")
    p.add_argument("--trials", type=int, metavar="N", help="trial count (overrides the config)")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    return p


def load_config(args) -> RunConfig:
    if args.config:
        cfg = RunConfig.load(args.config)
        if args.command and args.command != cfg.command:
            raise ConfigError(f"command {args.command!r} does not match the config's {cfg.command!r}")
    elif args.command:
        cfg = RunConfig(command=args.command)
    else:
        raise ConfigError("give a command or --config")
    d = cfg.to_dict()
    if args.seed is not None:
        d["seed"] = args.seed
    if args.trials is not None:
        d["trials"] = args.trials
    if args.format is not None:
        d["output"] = {**d["output"], "format": args.format}
    if args.out is not None:
        d["output"] = {**d["output"], "path": args.out}
    return RunConfig.from_dict(d)


def execute(cfg: RunConfig) -> tuple[dict, int]:
    if cfg.command == "demo":
        return cmd_demo(cfg), 0
    if cfg.command == "games":
        report, errors = cmd_games(cfg)
        return report, 2 if errors else 0
    if cfg.command == "stats":
        return cmd_stats(cfg), 0
    if cfg.command == "bounds":
        return cmd_bounds(cfg), 0
    return cmd_spread(cfg), 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args)
        report, status = execute(cfg)
        text = render(report, cfg.output.get("format", "json"))
        path = cfg.output.get("path")
        if path:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        if status:
            print(f"fo-lab: {report.get('error_count', 0)} run(s) violated the game rules", file=sys.stderr)
        return status
    except FoLabError as exc:
        print(f"fo-lab: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # anything unexpected is an internal failure
        print(f"fo-lab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
