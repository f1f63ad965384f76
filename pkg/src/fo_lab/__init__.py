"""Executable model of the Fujisaki-Okamoto KEM transform: toy PKE schemes,
security games and reductions, failure statistics and concrete bound calculation."""

from .bound_calc import (BoundInputs, BoundReport, compute_bound, qrom_bound_ffpcpa, qrom_main_bound,
                         qrom_main_bound_gaussian, qrom_passive_terms, rom_main_bound)
from .failure_stats import (FailureStats, estimate_failure_stats, expectation_search_bound,
                            ffp_nk_bound_chebyshev, ffp_nk_bound_gaussian, search_success_bound)
from .fo_kem import FoKem, decaps, encaps
from .pke_core import DerandomizedPke, KeyPair, OracleState, PkeScheme, RandomOracle
from .spreadness import gamma_frodo, gamma_hqc
from .toy_schemes import MicroLwePke, SyntheticFailurePke, analytic_failure_prob, perfect_toy

__version__ = "0.1.0"

__all__ = [
    "BoundInputs", "BoundReport", "DerandomizedPke", "FailureStats", "FoKem", "KeyPair", "MicroLwePke",
    "OracleState", "PkeScheme", "RandomOracle", "SyntheticFailurePke", "analytic_failure_prob",
    "compute_bound", "decaps", "encaps", "estimate_failure_stats", "expectation_search_bound",
    "ffp_nk_bound_chebyshev", "ffp_nk_bound_gaussian", "gamma_frodo", "gamma_hqc", "perfect_toy",
    "qrom_bound_ffpcpa", "qrom_main_bound", "qrom_main_bound_gaussian", "qrom_passive_terms",
    "rom_main_bound", "search_success_bound",
]
