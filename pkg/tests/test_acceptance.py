"""Acceptance criteria at their stated tolerances and default sizes.

Each test records one PASS/FAIL line that conftest prints in the terminal
summary.  Run with ``pytest -m acceptance -s`` to see them live.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from duet.cli import main
from duet.config import parse_config
from duet.oracle import exit_ode_u
from duet.verify.estimators import decoupled_weld
from duet.verify.experiments import REGISTRY

from .conftest import record

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
_cache = {}
_started = []


def outcome(name):
    if not _started:
        _started.append(time.perf_counter())
    if name not in _cache:
        cfg = parse_config(CONFIGS / f"{name}.toml", {"workers": 1}, env={})
        _cache[name] = REGISTRY[name][0](cfg)
    return _cache[name]


def _fmt(checks):
    return "; ".join(f"{c.name}={c.value:.4g} ({c.relation} {c.bound:.4g})"
                     if not c.relation.startswith("in") else f"{c.name}={c.value:.4g} {c.relation}"
                     for c in checks)


def _criterion(k, checks):
    ok = all(c.passed for c in checks)
    record(k, ok, _fmt(checks))
    assert ok, _fmt([c for c in checks if not c.passed])


def test_c01_diffusive_limit_ks():
    s = outcome("limit").summary
    _criterion(1, [s.check("ks_t1"), s.check("ks_t0.5")])


def test_c02_increment_structure():
    s = outcome("limit").summary
    _criterion(2, [s.check("quadratic_variation")])


def test_c03_decoupled_weld():
    if not _started:
        _started.append(time.perf_counter())
    res = decoupled_weld(10_000, 20240611)
    bad = [e.name for e in res["estimates"]
           if abs(e.value - res["oracle"][e.name]) > 4 * e.se]
    ok = not bad and res["z_exact_zero"]
    worst = max(abs(e.value - res["oracle"][e.name]) / e.se for e in res["estimates"])
    record(3, ok, f"{len(res['estimates'])} OU moments, worst |z| = {worst:.2f} (<= 4); "
                  f"Z identically zero: {res['z_exact_zero']}")
    assert ok, bad


def test_c04_expansion_slopes():
    s = outcome("expansion").summary
    _criterion(4, [s.check("slope_refined"), s.check("slope_crude")])


def test_c05_sup_r2_doob():
    s = outcome("supr2").summary
    _criterion(5, [s.check("p_sup_exceed")])


def test_c06_moment_ladder():
    s = outcome("supr2").summary
    _criterion(6, [s.check("ladder_margin"), s.check("n_tilde_max"), s.check("sigma_deviation")])


def test_c07_decorrelation():
    s = outcome("decorrelation").summary
    _criterion(7, [s.check("corr_t20"), s.check("corr_decreasing_in_t"),
                   s.check("analogue_max_abs_z")])


def test_c08_short_time_moments():
    _criterion(8, outcome("moments").summary.checks)


def test_c09_exit_statistics():
    s = outcome("exit").summary
    _criterion(9, [s.check("mean_exit_time"), s.check("p_lower_exit"),
                   s.check("control_p_lower_exit")])


def test_c10_exit_ode_and_small_r1_exit():
    x = np.linspace(0, 1, 102)[1:-1]
    h = 2.0**-8

    def u(y):
        return exit_ode_u(np.clip(y, 0, 1.0), 1.0)

    d1 = (-u(x + 2 * h) + 8 * u(x + h) - 8 * u(x - h) + u(x - 2 * h)) / (12 * h)
    d2 = (-u(x + 2 * h) + 16 * u(x + h) - 30 * u(x) + 16 * u(x - h) - u(x - 2 * h)) / (12 * h * h)
    resid = float(np.max(np.abs(0.5 * d2 - d1 + 1)))
    a = math.log(2048) ** (6 / 7)
    bc = exit_ode_u(a, a) == 0.0 and exit_ode_u(1.0, 1.0) == 0.0
    c = outcome("near-zero").summary.check("small_r1_exit")
    ok = resid <= 1e-9 and bc and c.passed
    record(10, ok, f"ODE residual {resid:.2e} (<= 1e-9); u(a) = 0 exactly: {bc}; " + _fmt([c]))
    assert ok


def test_c11_excursion_economy():
    nz = outcome("near-zero").summary
    ex = outcome("excursions").summary
    _criterion(11, [nz.check("near_zero_eps0.1"), ex.check("laplace"),
                    nz.check("ratio_2eps_over_eps"), ex.check("laplace_oracle_bm")])


def test_c12_martingale_defect():
    s = outcome("martingale").summary
    _criterion(12, [s.check("defect_gauss"), s.check("defect_lorentz"),
                    s.check("defect_gauss_oracle_bm"), s.check("defect_lorentz_oracle_bm")])


def _strip_runtime(path):
    d = json.loads(path.read_text())
    d.pop("runtime")
    return json.dumps(d, sort_keys=False)


def test_c13_determinism_across_workers(tmp_path, capsys):
    runs = {"limit": ["--paths", "512", "--T", "256"],
            "moments": ["--paths", "300"],
            "excursions": ["--paths", "256", "--T", "256"]}
    same = True
    for name, extra in runs.items():
        outputs = []
        for w in (1, 4, 16):
            d = tmp_path / f"{name}_{w}"
            d.mkdir()
            main([name, "--config", str(CONFIGS / f"{name}.toml"), *extra, "--workers", str(w),
                  "--out", str(d), "--paths-csv"])
            files = sorted(p.name for p in d.iterdir() if p.name != "summary.json")
            outputs.append((_strip_runtime(d / "summary.json"),
                            [(f, (d / f).read_bytes()) for f in files]))
        same &= outputs[0] == outputs[1] == outputs[2]
    capsys.readouterr()
    elapsed = time.perf_counter() - _started[0] if _started else float("nan")
    record(13, same and elapsed <= 900,
           f"summaries and data files identical for --workers 1/4/16: {same}; "
           f"acceptance suite wall time {elapsed:.0f} s on this machine (<= 900 s)")
    assert same
    assert elapsed <= 900
