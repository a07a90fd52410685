"""The named experiments behind the command line.

Each runner maps an :class:`ExperimentConfig` to an :class:`Outcome`: the
summary with its checks, plot series and optional per-path columns.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..model import TWO_PI, PhaseState, get_potential
from ..observe import excursions, scaled_process
from ..oracle import (HalfNormalLaw, bm_exit_mean, bm_hitting_laplace,
                      bm_lower_exit_probability, doob_bound, exit_ode_u)
from ..rng import NoiseStream, sub_seed
from ..sde import simulate
from .ensemble import Check, EnsembleSummary, check_in, check_le, config_digest, run_ensemble
from .estimators import (MartingaleTestSpec, auto_dt, decorrelation, excursion_laplace,
                         exit_interval_stats, expansion_residual, limit_ensemble,
                         martingale_defect, moment_drift_diffusion, moment_ladder,
                         reflected_bm_ensemble, reflected_bm_laplace, small_r1_exit,
                         sup_r2_exceedance, time_near_zero)
from .stats import Estimate, difference_estimate, ks_critical, ks_statistic, mean_estimate, \
    ratio_estimate

# frozen tolerances
KS_TOL = 0.05
QV_REL = 0.05
MARTINGALE_TOL = 0.02
MARTINGALE_ORACLE_TOL = 0.01
DECORRELATION_TOL = 0.02
EXIT_KAPPA = 0.1
NEAR_ZERO_C = 10.0
NEAR_ZERO_RATIO = (2.5, 6.0)
LAPLACE_KAPPA = 0.05
SLOPE_REFINED = (2.2, 2.8)
SLOPE_CRUDE = (1.8, 2.3)
P_TAU_C_MAX = 0.01
K_SE = 4.0

Series = tuple  # (x, y, y_err)


@dataclass
class Outcome:
    summary: EnsembleSummary
    series: dict[str, Series] = field(default_factory=dict)
    per_path: dict[str, np.ndarray] | None = None
    files: dict[str, Callable] = field(default_factory=dict)


def _summary(cfg, n_paths, stats, checks, meta, started) -> EnsembleSummary:
    base = {"potential": cfg.potential, "integrator": cfg.integrator}
    base.update(meta)
    return EnsembleSummary(cfg.experiment, n_paths, cfg.seed, config_digest(cfg.as_dict()),
                           list(stats), list(checks), base,
                           {"wall_clock_s": round(time.perf_counter() - started, 3)})


def _ecdf_series(samples, cdf, n_points=101):
    x = np.linspace(0.0, float(np.quantile(samples, 0.995)), n_points)
    s = np.sort(samples)
    F = np.searchsorted(s, x, side="right") / s.size
    err = np.sqrt(F * (1 - F) / s.size)
    return (x, F, err), (x, np.asarray(cdf(x)), np.zeros_like(x))


# --- experiments -------------------------------------------------------------

def run_simulate(cfg) -> Outcome:
    started = time.perf_counter()
    pot = get_potential(cfg.potential)
    trajs = []
    for i in range(cfg.n_paths):
        noise = NoiseStream(cfg.seed, i)
        trajs.append(simulate(PhaseState(cfg.R, cfg.r2_0, 0.0, 0.0), pot, cfg.horizon, cfg.dt,
                              noise, scheme=cfg.integrator))
    resid = max(t.identity_residual() for t in trajs)
    final = np.array([t.states[-1] for t in trajs])
    stats = [mean_estimate("final_r1", final[:, 0]), mean_estimate("final_r2", final[:, 1])]
    checks = [check_le("identity_residual", resid, 1e-9, "r1 = r1(0) + W1 + Z along every path")]
    summary = _summary(cfg, cfg.n_paths, stats, checks,
                       {"dt": cfg.dt, "horizon": cfg.horizon}, started)

    def writer(tr):
        return lambda path: tr.to_csv(path, f"config_digest {summary.config_digest}")

    files = {f"trajectory_{i}.csv": writer(tr) for i, tr in enumerate(trajs)}
    series = {f"r1_path{i}": (tr.times, tr.r1, np.zeros(len(tr))) for i, tr in enumerate(trajs[:4])}
    per_path = {"r1_final": final[:, 0], "r2_final": final[:, 1],
                "theta1_final": final[:, 2], "theta2_final": final[:, 3]}
    return Outcome(summary, series, per_path, files)


def _limit_stats(cfg, dt, seed):
    ens = limit_ensemble(cfg.n_paths, seed, cfg.T, dt, cfg.potential, 1.0,
                         r2_0=cfg.r2_0 or 0.0, workers=cfg.workers, scheme=cfg.integrator)
    X = ens["X"]
    half = (X.shape[1] - 1) // 2
    x1, xh = np.abs(X[:, -1]), np.abs(X[:, half])
    ks1 = ks_statistic(x1, HalfNormalLaw(1.0).cdf)
    ksh = ks_statistic(xh, HalfNormalLaw(0.5).cdf)
    return ens, x1, xh, ks1, ksh


def run_limit(cfg) -> Outcome:
    started = time.perf_counter()
    ens, x1, xh, ks1, ksh = _limit_stats(cfg, cfg.dt, cfg.seed)
    X, times = ens["X"], ens["times"]
    n = X.shape[0]
    half = (X.shape[1] - 1) // 2
    qv = mean_estimate("increment_sq_half_to_1", (X[:, -1] - X[:, half]) ** 2)
    near = mean_estimate(f"p_abs_x_below_{cfg.epsilon:g}_t0.5", xh < cfg.epsilon)
    stats = [Estimate("ks_t1", ks1, 0.0, n), Estimate("ks_t0.5", ksh, 0.0, n), qv, near,
             mean_estimate("mean_abs_x_t1", x1)]
    checks = [
        check_le("ks_t1", ks1, KS_TOL, "|X_1| against the half-normal law, variance 1"),
        check_le("ks_t0.5", ksh, KS_TOL, "|X_1/2| against the half-normal law, variance 1/2"),
        check_le("quadratic_variation", abs(qv.value - 0.5), max(K_SE * qv.se, QV_REL * 0.5),
                 "|E(X_1 - X_1/2)^2 - 1/2| <= max(4 SE, 5%)"),
    ]
    meta = {"dt": ens["dt"], "T": cfg.T, "stride": ens["stride"],
            "ks_critical_1pct": ks_critical(n, 0.01),
            "half_normal_mean_t1": HalfNormalLaw(1.0).mean}
    if cfg.dt_check:
        _, _, _, k1, kh = _limit_stats(cfg, cfg.dt / 2, cfg.seed)
        meta["dt_sensitivity"] = {"dt": cfg.dt / 2, "ks_t1": k1, "ks_t0.5": kh,
                                  "delta_ks_t1": k1 - ks1, "delta_ks_t0.5": kh - ksh}
    s1, o1 = _ecdf_series(x1, HalfNormalLaw(1.0).cdf)
    sh, oh = _ecdf_series(xh, HalfNormalLaw(0.5).cdf)
    m2 = (X**2).mean(axis=0)
    m2_se = (X**2).std(axis=0, ddof=1) / math.sqrt(n)
    step = max(1, len(times) // 200)
    series = {"ecdf_t1": s1, "halfnormal_t1": o1, "ecdf_t0.5": sh, "halfnormal_t0.5": oh,
              "second_moment": (times[::step], m2[::step], m2_se[::step])}
    per_path = {"X_half": X[:, half], "X_1": X[:, -1], "sup_abs_r2": ens["sup_r2_grid"]}
    return Outcome(_summary(cfg, n, stats, checks, meta, started), series, per_path)


def run_martingale(cfg) -> Outcome:
    started = time.perf_counter()
    ens = limit_ensemble(cfg.n_paths, cfg.seed, cfg.T, cfg.dt, cfg.potential, cfg.t,
                         r2_0=cfg.r2_0 or 0.0, workers=cfg.workers, scheme=cfg.integrator)
    bm = reflected_bm_ensemble(cfg.control_paths or cfg.n_paths,
                               sub_seed(cfg.seed, "martingale/oracle"), cfg.t)
    stats, checks, series, per_path = [], [], {}, {}
    for name in ("gauss", "lorentz"):
        spec = MartingaleTestSpec.builtin(name, t=cfg.t, T=cfg.T)
        res = martingale_defect(spec, ens["times"], ens["X"])
        est = res["estimate"]
        stats.append(est)
        checks.append(check_le(f"defect_{name}", abs(est.value), K_SE * est.se + MARTINGALE_TOL,
                               "|defect| <= 4 SE + 0.02"))
        x, y, e = res["curve"]
        step = max(1, len(x) // 200)
        series[f"defect_curve_{name}"] = (x[::step], y[::step], e[::step])
        per_path[f"defect_{name}"] = res["per_path"]
        ctl = martingale_defect(spec, bm["times"], bm["X"])["estimate"]
        ctl = Estimate(f"defect_{name}_oracle_bm", ctl.value, ctl.se, ctl.n_effective)
        stats.append(ctl)
        checks.append(check_le(ctl.name, abs(ctl.value), K_SE * ctl.se + MARTINGALE_ORACLE_TOL,
                               "exact reflected Brownian paths, |defect| <= 4 SE + 0.01"))
    meta = {"dt": cfg.dt, "T": cfg.T, "t": cfg.t, "stride": ens["stride"],
            "scaled_grid_dt": float(ens["times"][1]), "oracle_grid_dt": float(bm["times"][1])}
    return Outcome(_summary(cfg, ens["X"].shape[0], stats, checks, meta, started), series,
                   per_path)


def run_expansion(cfg) -> Outcome:
    started = time.perf_counter()
    R_values = cfg.R_values or [cfg.R]
    refined = expansion_residual(R_values, cfg.n_paths, cfg.seed, 0.0, cfg.potential,
                                 "refined", workers=cfg.workers)
    crude = expansion_residual(R_values, cfg.n_paths, sub_seed(cfg.seed, "crude"), 1.0,
                               cfg.potential, "crude", workers=cfg.workers)
    stats, series = [], {}
    for res in (refined, crude):
        tag = res["mode"]
        for row in res["rows"]:
            stats.append(Estimate(f"l2_{tag}_R{row['R']:g}", row["l2"], row["se"], cfg.n_paths))
        stats.append(Estimate(f"slope_{tag}", res["slope"], res["slope_se"], len(res["rows"])))
        series[f"l2_{tag}"] = (np.array([r["sigma"] for r in res["rows"]]),
                               np.array([r["l2"] for r in res["rows"]]),
                               np.array([r["se"] for r in res["rows"]]))
    checks = [
        check_in("slope_refined", refined["slope"], *SLOPE_REFINED,
                 "log-log slope of the residual after the leading term, r2(0) = 0"),
        check_in("slope_crude", crude["slope"], *SLOPE_CRUDE,
                 "log-log slope of Z(sigma) itself, r2(0) = 1"),
    ]
    meta = {"sigma": "2 pi / R", "steps_per_rotation": 128,
            "dt_per_R": {f"{r['R']:g}": r["dt"] for r in refined["rows"]}}
    return Outcome(_summary(cfg, cfg.n_paths, stats, checks, meta, started), series)


def run_moments(cfg) -> Outcome:
    started = time.perf_counter()
    stats, checks, rows, dts = [], [], [], {}
    for R in cfg.R_values or [cfg.R]:
        params = cfg.scaling(R)
        res = moment_drift_diffusion(params, cfg.n_paths, cfg.seed, cfg.potential, cfg.dt,
                                     cfg.r2_0, cfg.workers)
        t_R, d, m2, p = res["t"], res["drift"], res["second"], res["p_tau_c"]
        stats += [d, m2, p]
        dts[f"{R:g}"] = res["dt"]
        checks.append(check_le(f"drift_R{R:g}", abs(d.value), K_SE * d.se + 0.1 * t_R / R,
                               "|E increment| <= 4 SE + 0.1 t(R)/R"))
        checks.append(check_le(f"second_moment_R{R:g}", abs(m2.value - t_R),
                               max(K_SE * m2.se, QV_REL * t_R),
                               "|E increment^2 - t(R)| <= max(4 SE, 5%)"))
        if R >= 256:
            checks.append(check_le(f"p_tau_c_R{R:g}", p.value, P_TAU_C_MAX + K_SE * p.se,
                                   "P(tau_c < t(R)) <= 0.01 + 4 SE; rate exponent untested"))
        rows.append((R, t_R, m2))
    series = {"second_moment_over_t": (np.array([r[0] for r in rows]),
                                       np.array([r[2].value / r[1] for r in rows]),
                                       np.array([r[2].se / r[1] for r in rows]))}
    meta = {"dt_per_R": dts, "alpha_t": cfg.alpha_t, "alpha_c": cfg.alpha_c,
            "r2_0": cfg.r2_0}
    return Outcome(_summary(cfg, cfg.n_paths, stats, checks, meta, started), series)


def run_decorrelation(cfg) -> Outcome:
    started = time.perf_counter()
    theta0 = np.arange(cfg.n_theta0) * (TWO_PI / cfg.n_theta0)
    res = decorrelation(cfg.R, cfg.t_values, theta0, cfg.n_paths, cfg.seed, cfg.potential,
                        cfg.dt, cfg.r2_0, False, cfg.alpha_c, cfg.workers)
    ctl = decorrelation(cfg.R, cfg.t_values, theta0, cfg.control_paths or cfg.n_paths, cfg.seed,
                        cfg.potential, cfg.dt, cfg.r2_0, True, cfg.alpha_c, cfg.workers)
    ts, est, cest = res["t_values"], res["estimates"], ctl["estimates"]
    t_last = ts[-1]
    stats = list(est.values())
    stats += [Estimate(f"analogue_{e.name}", e.value, e.se, e.n_effective) for e in cest.values()]
    margin = max(abs(est[(t_last, k)].value) - K_SE * est[(t_last, k)].se
                 for k in range(len(theta0)))
    checks = [check_le(f"corr_t{t_last:g}", margin, DECORRELATION_TOL,
                       "max over theta0 of |E r2 V'(theta2 - theta0)| - 4 SE")]
    if len(ts) > 1:
        rise = max(abs(est[(b, k)].value) - abs(est[(a, k)].value)
                   - K_SE * math.hypot(est[(a, k)].se, est[(b, k)].se)
                   for a, b in zip(ts, ts[1:]) for k in range(len(theta0)))
        checks.append(check_le("corr_decreasing_in_t", rise, 0.0,
                               "largest rise of |estimate| between consecutive t, less 4 SE"))
    z = max(abs(e.value) / e.se if e.se > 0 else 0.0 for e in cest.values())
    checks.append(check_le("analogue_max_abs_z", z, K_SE,
                           "stationary decoupled process, every estimate within 4 SE of 0"))
    series = {}
    for k in range(len(theta0)):
        series[f"corr_theta{k}"] = (np.array(ts), np.array([est[(t, k)].value for t in ts]),
                                    np.array([est[(t, k)].se for t in ts]))
    series["analogue_max_abs"] = (np.array(ts),
                                  np.array([max(abs(cest[(t, k)].value)
                                                for k in range(len(theta0))) for t in ts]),
                                  np.array([max(cest[(t, k)].se for k in range(len(theta0)))
                                            for t in ts]))
    meta = {"dt": res["dt"], "R": cfg.R, "r2_0": cfg.r2_0, "theta0": res["theta0"],
            "note": "uniformity over t is not asserted; smallness at the largest t only"}
    return Outcome(_summary(cfg, cfg.n_paths, stats, checks, meta, started), series)


def run_exit(cfg) -> Outcome:
    started = time.perf_counter()
    params = cfg.scaling(cfg.R)
    R, beta = params.R, params.beta
    res = exit_interval_stats(params, cfg.n_paths, cfg.seed, cfg.potential, cfg.dt,
                              cfg.r2_0, workers=cfg.workers)
    q = 2 ** (1 / beta)
    coef = (q - 1) * (1 - 1 / q) + EXIT_KAPPA
    m, p = res["mean_tau"], res["p_lower"]
    ctl = exit_interval_stats(params, cfg.control_paths or cfg.n_paths,
                              sub_seed(cfg.seed, "exit/control"), "zero", 0.05, cfg.r2_0,
                              workers=cfg.workers)
    lo, hi = res["lo"], res["hi"]
    p_bm = bm_lower_exit_probability(R, lo, hi)
    m_bm = bm_exit_mean(R, lo, hi)
    cm = Estimate("control_mean_exit_time", ctl["mean_tau"].value, ctl["mean_tau"].se,
                  ctl["mean_tau"].n_effective)
    cp = Estimate("control_p_lower_exit", ctl["p_lower"].value, ctl["p_lower"].se,
                  ctl["p_lower"].n_effective)
    stats = [m, p, cm, cp]
    checks = [
        check_le("mean_exit_time", m.value, coef * R * R + K_SE * m.se,
                 f"<= {coef:.4f} R^2 + 4 SE"),
        check_le("p_lower_exit", p.value, 2 / 3 + K_SE * p.se, "<= 2/3 + 4 SE"),
        check_le("control_p_lower_exit", abs(cp.value - p_bm), K_SE * cp.se,
                 "V = 0 against the Brownian gambler's-ruin value"),
        check_le("control_mean_exit_time", abs(cm.value - m_bm), K_SE * cm.se,
                 "V = 0 against the Brownian mean exit time"),
    ]
    tau = res["raw"]["tau"]
    srt = np.sort(tau) / (R * R)
    series = {"exit_time_ecdf": (srt, np.arange(1, srt.size + 1) / srt.size,
                                 np.zeros(srt.size))}
    meta = {"dt": res["dt"], "R": R, "beta": beta, "lo": lo, "hi": hi, "r2_cap": params.r2_cap,
            "mean_bound_coefficient": coef, "n_cap": res["n_cap"],
            "n_censored": res["n_censored"], "control_dt": 0.05,
            "oracle_p_lower": p_bm, "oracle_mean_exit": m_bm}
    per_path = {"tau": tau, "lower": (res["raw"]["kind"] == "lower").astype(int)}
    return Outcome(_summary(cfg, cfg.n_paths, stats, checks, meta, started), series, per_path)


def run_excursions(cfg) -> Outcome:
    started = time.perf_counter()
    eps, T = cfg.epsilon, cfg.T
    res = excursion_laplace(eps, T, cfg.n_paths, cfg.seed, cfg.potential, cfg.dt,
                            r2_0=cfg.r2_0, workers=cfg.workers)
    bm = reflected_bm_laplace(eps, cfg.control_paths or cfg.n_paths, cfg.seed)
    L, Lb = res["laplace"], bm["laplace"]
    exact = bm_hitting_laplace(eps)
    diff = difference_estimate("laplace_minus_bm", L, Lb)
    stats = [L, Lb, diff]
    checks = [
        check_le("laplace", L.value, 1 - LAPLACE_KAPPA * eps + K_SE * L.se,
                 "E exp(-eta) <= 1 - 0.05 eps + 4 SE"),
        check_le("laplace_oracle_bm", abs(Lb.value - exact), K_SE * Lb.se,
                 "sampled reflected Brownian paths against exp(-sqrt(2) eps)"),
        check_le("laplace_vs_bm", diff.value, K_SE * diff.se,
                 "system estimate <= Brownian estimate + 4 SE"),
    ]
    # excursion ladders on a subset of full scaled paths
    pot = get_potential(cfg.potential)
    n_ladder = min(cfg.n_paths, 128)
    cap = math.log(T)

    def task(idx):
        counts = np.empty(idx.size)
        rows = []
        for j, i in enumerate(idx):
            tr = simulate(PhaseState(0.0, cfg.r2_0, 0.0, 0.0), pot, T, cfg.dt,
                          NoiseStream(sub_seed(cfg.seed, "excursion/ladder"), int(i)),
                          stride=20, scheme=cfg.integrator)
            rec = excursions(scaled_process(tr, T), eps, tr, cap, T)
            counts[j] = rec.complete
            rows.extend(rec.rows(int(i)))
        return {"complete": counts, "rows": np.array(rows, dtype=object).reshape(-1, 5)}

    lad = run_ensemble(task, n_ladder, cfg.workers, cfg.seed, "excursion ladder")
    stats.append(mean_estimate("complete_excursions_t1", lad["complete"]))

    def write_crossings(path):
        with open(path, "w") as fh:
            fh.write(f"# config_digest {summary.config_digest}\n")
            fh.write("trajectory,kind,k,time,level\n")
            for i, kind, k, t, lvl in lad["rows"]:
                fh.write(f"{i},{kind},{k},{float(t):.17g},{float(lvl):.17g}\n")

    eta = np.sort(res["eta"])
    series = {"eta_ecdf": (eta, np.arange(1, eta.size + 1) / eta.size, np.zeros(eta.size))}
    meta = {"dt": cfg.dt, "T": T, "epsilon": eps, "t_max": 4.0, "n_censored": res["censored"],
            "oracle_exact": exact, "oracle_grid_dt": 1e-4, "ladder_paths": n_ladder,
            "ladder_r2_cap": cap, "kappa_design": LAPLACE_KAPPA}
    summary = _summary(cfg, cfg.n_paths, stats, checks, meta, started)
    return Outcome(summary, series, {"eta": res["eta"]}, {"crossings.csv": write_crossings})


def run_near_zero(cfg) -> Outcome:
    started = time.perf_counter()
    eps, T = cfg.epsilon, cfg.T
    res = time_near_zero(eps, T, cfg.alpha2, cfg.n_paths, cfg.seed, cfg.potential, cfg.dt,
                         r2_0=cfg.r2_0, workers=cfg.workers)
    res2 = time_near_zero(2 * eps, T, cfg.alpha2, cfg.n_paths, sub_seed(cfg.seed, "2eps"),
                          cfg.potential, cfg.dt, r2_0=cfg.r2_0, workers=cfg.workers)
    m, m2 = res["mean"], res2["mean"]
    ratio = ratio_estimate("ratio_2eps_over_eps", m2, m)
    a = math.log(T) ** cfg.alpha1
    x0 = 1.0
    sm = small_r1_exit(T, cfg.alpha1, x0, cfg.n_paths, cfg.seed, cfg.potential, cfg.dt,
                       cfg.workers)
    u = exit_ode_u(x0, a)
    stats = [m, m2, ratio, sm["mean_tau"]]
    checks = [
        check_le(f"near_zero_eps{eps:g}", m.value, NEAR_ZERO_C * eps**2 * T + K_SE * m.se,
                 "<= 10 eps^2 T + 4 SE (constant 10 is a design choice)"),
        check_in("ratio_2eps_over_eps", ratio.value, *NEAR_ZERO_RATIO, "quadratic scaling window"),
        check_le("small_r1_exit", sm["mean_tau"].value, u + K_SE * sm["mean_tau"].se,
                 f"E tau(a) <= u({x0:g}) + 4 SE"),
    ]
    e = np.array([eps, 2 * eps])
    series = {"near_zero_mean": (e, np.array([m.value, m2.value]), np.array([m.se, m2.se])),
              "bound": (e, NEAR_ZERO_C * e**2 * T, np.zeros(2))}
    meta = {"dt": cfg.dt, "T": T, "epsilon": eps, "level": res["level"], "r2_cap": res["cap"],
            "n_cap": res["n_cap"], "C_design": NEAR_ZERO_C, "a": a, "x0": x0, "u_x0": u,
            "alpha1": cfg.alpha1, "alpha2": cfg.alpha2}
    per_path = {"tau_eps": res["raw"]["tau"], "tau_2eps": res2["raw"]["tau"],
                "tau_small_r1": sm["raw"]["tau"]}
    return Outcome(_summary(cfg, cfg.n_paths, stats, checks, meta, started), series, per_path)


def run_supr2(cfg) -> Outcome:
    started = time.perf_counter()
    res = sup_r2_exceedance(cfg.t, cfg.T, cfg.D, cfg.n_paths, cfg.seed, cfg.potential, cfg.dt,
                            r2_0=cfg.r2_0, workers=cfg.workers)
    p = res["p"]
    bound = doob_bound(cfg.t, cfg.T, cfg.D)
    params = cfg.scaling(cfg.R)
    lad = moment_ladder(params, cfg.control_paths or cfg.n_paths, cfg.seed, cfg.potential,
                        cfg.r2_0, None, cfg.workers)
    norms, lb = lad["norms"], lad["bound"]
    margin = max(n.value - b - K_SE * n.se for n, b in zip(norms, lb))
    stats = [p, Estimate("ladder_max_l4", max(n.value for n in norms), 0.0, norms[0].n_effective)]
    checks = [
        check_le("p_sup_exceed", p.value, bound + K_SE * p.se,
                 "P(sup |r2| > |r2(0)| + D) <= Doob bound + 4 SE"),
        check_le("ladder_margin", margin, 0.0,
                 "max_k ||r2(sigma_k)||_4 - (2|r2(0)| exp(-k/R) + 3) - 4 SE"),
        check_le("n_tilde_max", float(lad["n_tilde"].max()), lad["n_tilde_bound"],
                 "rotation count <= t(R)(R + 2c(R))"),
        check_le("sigma_deviation", float(lad["sigma_dev"].max()), lad["sigma_dev_bound"],
                 "max_k |sigma_k - k/R| <= 2 t(R) c(R)/R"),
    ]
    k = np.arange(len(norms))
    srt = np.sort(res["sup"])
    series = {"ladder_l4": (k, np.array([n.value for n in norms]), np.array([n.se for n in norms])),
              "ladder_bound": (k, lb, np.zeros(k.size)),
              "sup_r2_ecdf": (srt, np.arange(1, srt.size + 1) / srt.size, np.zeros(srt.size))}
    meta = {"dt": cfg.dt, "t": cfg.t, "T": cfg.T, "D": cfg.D, "doob_bound": bound,
            "r2_0": cfg.r2_0, "ladder_R": params.R, "ladder_dt": lad["dt"],
            "ladder_paths": cfg.control_paths or cfg.n_paths}
    return Outcome(_summary(cfg, cfg.n_paths, stats, checks, meta, started), series,
                   {"sup_abs_r2": res["sup"]})


REGISTRY: dict[str, tuple[Callable, str]] = {
    "simulate": (run_simulate, "integrate a few trajectories and write them as CSV"),
    "limit": (run_limit, "diffusive limit: |r1(tT)|/sqrt(T) against reflected Brownian motion"),
    "expansion": (run_expansion, "one-rotation expansion of the coupling integral Z"),
    "moments": (run_moments, "drift and variance of r1 over the short time t(R)"),
    "decorrelation": (run_decorrelation, "decay of E r2 V'(theta2 - theta0) from a fast start"),
    "exit": (run_exit, "exit time and direction from the interval around R"),
    "excursions": (run_excursions, "Laplace transform of excursions from 2 eps down to eps"),
    "near-zero": (run_near_zero, "time |r1| spends below eps sqrt(T); small-r1 exit time"),
    "martingale": (run_martingale, "martingale-problem defect for the reflected generator"),
    "supr2": (run_supr2, "sup of |r2| against the Doob bound; L4 moment ladder"),
}


def run(cfg) -> Outcome:
    return REGISTRY[cfg.experiment][0](cfg)


def failed(checks: list[Check]) -> list[Check]:
    return [c for c in checks if not c.passed]
