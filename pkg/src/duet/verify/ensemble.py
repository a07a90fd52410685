"""Deterministic parallel ensembles and their JSON summaries."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..rng import GAUSSIAN_METHOD
from ..sde import IntegrationDiverged
from .stats import Estimate

log = logging.getLogger(__name__)

# fixed so the partition of paths never depends on the worker count
BATCH_SIZE = 64
DIGEST_EXCLUDED = ("output_dir", "workers")


def config_digest(config: dict) -> str:
    """sha256 of the canonical JSON of every result-relevant config field."""
    clean = {k: v for k, v in config.items() if k not in DIGEST_EXCLUDED}
    blob = json.dumps(clean, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Check:
    """One acceptance comparison: ``value`` against ``bound``."""

    name: str
    value: float
    bound: float
    relation: str
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "value": float(self.value), "bound": float(self.bound),
                "relation": self.relation, "passed": bool(self.passed), "note": self.note}


def check_le(name, value, bound, note="") -> Check:
    return Check(name, value, bound, "<=", bool(value <= bound), note)


def check_ge(name, value, bound, note="") -> Check:
    return Check(name, value, bound, ">=", bool(value >= bound), note)


def check_in(name, value, lo, hi, note="") -> Check:
    return Check(name, value, hi, f"in [{lo:g}, {hi:g}]", bool(lo <= value <= hi), note)


@dataclass
class EnsembleSummary:
    experiment: str
    n_paths: int
    master_seed: int
    config_digest: str
    statistics: list[Estimate] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    runtime: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def stat(self, name: str) -> Estimate:
        for s in self.statistics:
            if s.name == name:
                return s
        raise KeyError(name)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self, include_runtime: bool = True) -> dict:
        meta = {"gaussian_method": GAUSSIAN_METHOD}
        meta.update(self.metadata)
        d = {
            "experiment": self.experiment,
            "n_paths": int(self.n_paths),
            "master_seed": int(self.master_seed),
            "config_digest": self.config_digest,
            "metadata": meta,
            "statistics": [s.to_dict() for s in self.statistics],
            "checks": [c.to_dict() for c in self.checks],
            "passed": self.passed,
        }
        if include_runtime:
            d["runtime"] = dict(self.runtime)
        return d

    def to_json(self, include_runtime: bool = True) -> str:
        return json.dumps(_finite(self.to_dict(include_runtime)), indent=2) + "\n"


def _finite(obj):
    # JSON has no inf/nan; keep the file strictly valid
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj


def run_ensemble(task: Callable[[np.ndarray], dict], n_paths: int, workers: int = 1,
                 master_seed: int | None = None, label: str = "") -> dict[str, np.ndarray]:
    """Apply ``task`` to index batches and concatenate results in index order.

    ``task(indices)`` returns a dict of arrays with one row per index.  The
    batches are fixed, so the output does not depend on ``workers``.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    batches = [np.arange(s, min(s + BATCH_SIZE, n_paths)) for s in range(0, n_paths, BATCH_SIZE)]

    def run(b):
        try:
            return task(b)
        except IntegrationDiverged as exc:
            if exc.trajectory_index is None:
                exc = IntegrationDiverged(exc.step, master_seed, int(b[0]))
            raise exc

    if workers == 1 or len(batches) == 1:
        parts = []
        for k, b in enumerate(batches):
            parts.append(run(b))
            if label and (k + 1) % max(1, len(batches) // 8) == 0:
                log.info("%s: %d/%d paths", label, int(b[-1]) + 1, n_paths)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, batches))
    keys = parts[0].keys()
    return {k: np.concatenate([np.asarray(p[k]) for p in parts]) for k in keys}
