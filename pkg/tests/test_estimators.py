import math

import numpy as np
import pytest

from duet.model import PhaseState
from duet.observe import GridTooCoarse, ScalingParams
from duet.rng import NoiseStream
from duet.sde import IntegrationDiverged, simulate
from duet.verify.ensemble import EnsembleSummary, check_le, config_digest, run_ensemble
from duet.verify.estimators import (MartingaleTestSpec, SpecInvalid, auto_dt, decorrelation,
                                    decoupled_weld, expansion_residual, limit_stride,
                                    martingale_defect, moment_drift_diffusion,
                                    reflected_bm_ensemble, time_near_zero)
from duet.verify.stats import Estimate


def _final_r1(idx):
    return {"r1": np.array([simulate(PhaseState(1, 0, 0, 0), "cos", 1.0, 0.01,
                                     NoiseStream(5, int(i))).r1[-1] for i in idx])}


def test_single_path_ensemble_is_simulate():
    out = run_ensemble(_final_r1, 1, master_seed=5)
    tr = simulate(PhaseState(1, 0, 0, 0), "cos", 1.0, 0.01, NoiseStream(5, 0))
    assert out["r1"].tolist() == [tr.r1[-1]]


def test_worker_count_does_not_change_results():
    a = run_ensemble(_final_r1, 300, workers=1, master_seed=5)["r1"]
    b = run_ensemble(_final_r1, 300, workers=4, master_seed=5)["r1"]
    c = run_ensemble(_final_r1, 300, workers=16, master_seed=5)["r1"]
    assert np.array_equal(a, b) and np.array_equal(a, c)


def test_divergence_carries_seed_and_index():
    def task(idx):
        if 70 in idx:
            raise IntegrationDiverged(12)
        return {"x": idx.astype(float)}
    with pytest.raises(IntegrationDiverged) as err:
        run_ensemble(task, 200, master_seed=99)
    assert err.value.master_seed == 99 and err.value.trajectory_index == 64


def test_config_digest_and_summary_json():
    d1 = config_digest({"a": 1, "b": 2.0, "workers": 1})
    assert d1 == config_digest({"b": 2.0, "a": 1, "workers": 8})
    assert d1 != config_digest({"a": 1, "b": 2.5})
    s = EnsembleSummary("x", 3, 7, d1, [Estimate("m", 1.0, 0.1, 3)],
                        [check_le("c", 1.0, float("inf"))], {"dt": 0.01}, {"wall_clock_s": 1.0})
    text = s.to_json(include_runtime=False)
    assert "runtime" not in text and '"inf"' in text
    assert list(s.to_dict()["metadata"])[0] == "gaussian_method"


def test_decoupled_weld():
    res = decoupled_weld(4000, 3)
    assert res["z_exact_zero"]
    for est in res["estimates"]:
        assert abs(est.value - res["oracle"][est.name]) <= 4 * est.se, est.name


def test_expansion_zero_potential_is_exactly_zero():
    res = expansion_residual([8, 16], 64, 1, 1.0, "zero", n_boot=10)
    assert all(r["l2"] == 0.0 for r in res["rows"])
    with pytest.raises(GridTooCoarse):
        expansion_residual([8], 8, 1, steps_per_rotation=50)


def test_moments_without_potential():
    params = ScalingParams(R=64.0)
    res = moment_drift_diffusion(params, 2000, 4, "zero")
    m2 = res["second"]
    assert abs(m2.value - res["t"]) <= 4 * m2.se


def test_decorrelation_at_time_zero():
    res = decorrelation(16.0, [0.0], [0.0], 4, 2, r2_0=1.0)
    assert res["estimates"][(0.0, 0)].value == 0.0


def test_decorrelation_analogue_is_centred():
    res = decorrelation(16.0, [2.0], [0.0, 1.0], 3000, 2, analogue=True, dt=0.01)
    for est in res["estimates"].values():
        assert abs(est.value) <= 4 * est.se


def test_time_near_zero_start_on_level():
    T, eps = 400.0, 0.1
    res = time_near_zero(eps, T, 5 / 9, 8, 1, r1_0=eps * math.sqrt(T))
    assert np.all(res["raw"]["tau"] == 0.0)


def test_martingale_spec_validation():
    with pytest.raises(SpecInvalid, match="f'\\(0\\+\\)"):
        MartingaleTestSpec(f=lambda x: np.sin(x) + 0 * x)
    with pytest.raises(SpecInvalid):
        MartingaleTestSpec.builtin("nope")
    with pytest.raises(SpecInvalid):
        MartingaleTestSpec(f=np.cos, t=-1.0)


def test_constant_function_has_zero_defect():
    spec = MartingaleTestSpec(f=lambda x: np.ones_like(x))
    bm = reflected_bm_ensemble(32, 0)
    assert martingale_defect(spec, bm["times"], bm["X"])["estimate"].value == 0.0


def test_numeric_second_derivative_matches_closed_form():
    spec = MartingaleTestSpec(f=lambda x: np.exp(-x * x))
    builtin = MartingaleTestSpec.builtin("gauss")
    x = np.linspace(0, 3, 31)
    np.testing.assert_allclose(spec.d2(x), builtin.d2(x), atol=1e-6)


def test_martingale_grid_check():
    spec = MartingaleTestSpec.builtin("gauss")
    grid = np.linspace(0, 1, 101)
    with pytest.raises(GridTooCoarse):
        martingale_defect(spec, grid, np.zeros((2, 101)))


def test_reflected_bm_defect_small():
    spec = MartingaleTestSpec.builtin("lorentz")
    bm = reflected_bm_ensemble(2000, 11)
    est = martingale_defect(spec, bm["times"], bm["X"])["estimate"]
    assert abs(est.value) <= 4 * est.se + 0.01


def test_limit_stride_and_auto_dt():
    assert limit_stride(2048.0, 0.01) == 200
    assert auto_dt(256.0) <= 1 / (10 * (256 + 2 * 256**0.33))
