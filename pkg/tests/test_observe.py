import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from duet.model import PhaseState
from duet.observe import (GridTooCoarse, Path, ScalingParams, excursions, hitting_time,
                          rotation_schedule, running_sup, scaled_process)
from duet.oracle import doob_bound, sample_reflected_bm
from duet.rng import NoiseStream
from duet.sde import simulate, simulate_analogue


def test_scaled_process_identity_and_constant():
    tr = simulate(PhaseState(2.0, 0, 0, 0), "cos", 1.0, 0.01, NoiseStream(0, 0))
    p = scaled_process(tr, 1.0)
    assert np.array_equal(p.values, tr.r1)
    const = scaled_process(Path(np.arange(5.0), np.full(5, 3.0)), 4.0)
    np.testing.assert_allclose(const.values, 1.5)
    np.testing.assert_allclose(const.times, np.arange(5.0) / 4)


def test_scaled_variance_without_potential():
    T = 400.0
    x1 = np.array([scaled_process(simulate(PhaseState(0, 0, 0, 0), "zero", T, 0.1,
                                           NoiseStream(5, i), stride=4000), T).values[-1]
                   for i in range(4000)])
    m = x1**2
    assert abs(m.mean() - 1.0) <= 4 * m.std(ddof=1) / math.sqrt(m.size)


def test_scaling_params_messages():
    with pytest.raises(ValueError, match="alpha_c must satisfy alpha_t/2 < alpha_c < 1/3"):
        ScalingParams(alpha_c=0.5)
    with pytest.raises(ValueError, match="beta > 1"):
        ScalingParams(beta=1.0)
    with pytest.raises(ValueError, match="alpha < alpha_t"):
        ScalingParams(alpha=0.3, alpha_t=0.25)
    p = ScalingParams(R=256, T=math.e**4)
    assert p.D == pytest.approx(4.0)
    assert p.c == pytest.approx(256**0.33)


def test_rotation_schedule_constant_speed():
    params = ScalingParams(R=64.0)
    tr = simulate(PhaseState(64.0, 0, 0, 0), "zero", params.t + 0.1, params.max_dt(),
                  NoiseStream(0, 0), noisy=False)
    sch = rotation_schedule(tr, params)
    k = np.arange(sch.n_tilde + 1)
    np.testing.assert_allclose(sch.sigma, k / 64.0, atol=1e-12)
    assert sch.n_tilde == math.ceil(params.t * 64.0 - 1e-9)
    assert sch.tau_c is None


def test_rotation_schedule_bounds_on_coupled_runs():
    params = ScalingParams(R=128.0)
    dt = params.max_dt()
    for i in range(100):
        tr = simulate(PhaseState(128.0, 1.0, 0.1 * i, 0), "cos", params.t + 0.1, dt,
                      NoiseStream(17, i), stride=1)
        sch = rotation_schedule(tr, params)
        k = np.arange(sch.n_tilde + 1)
        assert sch.n_tilde <= params.t * (params.R + 2 * params.c)
        assert np.max(np.abs(sch.sigma - k / params.R)) <= 2 * params.t * params.c / params.R


def test_rotation_schedule_rejects_coarse_grid():
    params = ScalingParams(R=64.0)
    tr = simulate(PhaseState(64.0, 0, 0, 0), "zero", 3.0, 0.01, NoiseStream(0, 0))
    with pytest.raises(GridTooCoarse):
        rotation_schedule(tr, params)


def test_hitting_time_ramp_and_miss():
    t = np.linspace(0, 10, 101)
    assert hitting_time((t, t), 3.0) == pytest.approx(3.0)
    assert hitting_time((t, 5 + np.sin(t)), 1.0) is None
    assert hitting_time((t, -t), 2.0, "signed") is None
    assert hitting_time((t, -t), 2.0, "absolute") == pytest.approx(2.0)


def test_two_sided_exit_of_bm():
    dt = 1e-3
    grid = np.arange(0, 20 + dt / 2, dt)
    taus = []
    for i in range(2000):
        w = np.concatenate([[0.0], np.cumsum(np.sqrt(dt) * NoiseStream(8, i).normals(grid.size - 1, 0))])
        taus.append(hitting_time((grid, w), 1.0))
    taus = np.array(taus, dtype=float)
    # discrete monitoring overshoots by about 0.5826 sqrt(dt)
    target = (1 + 0.5826 * math.sqrt(dt)) ** 2
    assert abs(taus.mean() - target) <= 4 * taus.std(ddof=1) / math.sqrt(taus.size)


def test_excursions_hand_path():
    eps = 0.1
    t = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    x = np.array([0.2, 0.1, 0.2, 0.1, 0.15])
    rec = excursions((t, x), eps)
    assert rec.eta == [1.0, 3.0] and rec.sigma_up == [2.0]
    assert rec.complete == 1 and rec.interlaced()
    assert excursions((t, np.full(5, 0.5)), eps).eta == []


def test_excursions_cut_at_zeta():
    t = np.linspace(0, 4, 5)
    x = np.array([0.2, 0.1, 0.2, 0.1, 0.15])
    r2 = (t, np.array([0.0, 0.0, 0.0, 5.0, 5.0]))
    rec = excursions((t, x), 0.1, r2, 4.0)
    assert rec.zeta == pytest.approx(2.8)
    assert rec.eta == [1.0] and rec.sigma_up == [2.0] and rec.censored == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([0.05, 0.1, 0.2]))
def test_excursions_always_interlaced(seed, eps):
    grid = np.linspace(0, 1, 1001)
    rec = excursions((grid, sample_reflected_bm(grid, NoiseStream(seed, 0))), eps)
    assert rec.interlaced()
    rows = list(rec.rows(0))
    assert sum(r[1] == "eta" for r in rows) == len(rec.eta)


def test_excursion_counts_scale_like_inverse_eps():
    grid = np.linspace(0, 1, 2**14 + 1)
    paths = [sample_reflected_bm(grid, NoiseStream(77, i)) for i in range(1000)]
    counts = [np.mean([excursions((grid, p), e).complete for p in paths]) for e in (0.2, 0.1, 0.05)]
    for a, b in zip(counts, counts[1:]):
        assert 2 * 0.7 <= b / a <= 2 * 1.3


def test_running_sup():
    t = np.linspace(0, 1, 11)
    assert running_sup((t, t)) == 1.0
    assert running_sup((t, np.full(11, -2.5))) == 2.5
    assert running_sup((t, t), 0.5) == pytest.approx(0.5)
    assert running_sup((t, t), (0.2, 0.4)) == pytest.approx(0.4)


def test_ou_sup_below_doob_bound():
    sups = np.empty(10_000)
    for i in range(sups.size):
        p = simulate_analogue((0.0, 0.0), 100.0, 0.01, NoiseStream(4, i))
        sups[i] = running_sup((p.times, p.r))
    p = float(np.mean(sups > 4.0))
    assert p <= doob_bound(1, 100, 5) + 4 * math.sqrt(p * (1 - p) / sups.size)
