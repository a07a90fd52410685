"""Ensemble runner, estimators and the experiments built from them."""

from .ensemble import Check, EnsembleSummary, config_digest, run_ensemble
from .stats import Estimate, ks_statistic

__all__ = ["Check", "EnsembleSummary", "Estimate", "config_digest", "ks_statistic",
           "run_ensemble"]
