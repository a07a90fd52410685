"""Monte Carlo estimators for the quantitative statements being checked.

Every estimator takes a master seed and a path count, fans the paths out
through :func:`run_ensemble` and returns :class:`Estimate` records plus the
raw per-path arrays they were reduced from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..model import TWO_PI, PhaseState, get_potential
from ..observe import GridTooCoarse, ScalingParams, rotation_schedule
from ..oracle import sample_reflected_bm
from ..rng import NoiseStream, W1, initial_draws, sub_seed
from ..sde import Trajectory, n_steps, simulate, simulate_analogue, simulate_endpoints
from .ensemble import run_ensemble
from .stats import Estimate, bootstrap_se, loglog_slope, lp_norm_estimate, mean_estimate, \
    proportion_estimate


def auto_dt(R: float, alpha_c: float = 0.33, base: float = 0.01) -> float:
    """Largest base/2^k with dt <= 1/(10 (R + 2 R^alpha_c))."""
    limit = 1.0 / (10.0 * (R + 2.0 * R ** alpha_c))
    dt = base
    while dt > limit:
        dt /= 2.0
    return dt


def _uniform_angles(seed, indices, n=2):
    return TWO_PI * initial_draws(seed, indices, n, "uniform")


# --- stopped runs -----------------------------------------------------------

def first_exit(traj: Trajectory, lo=None, hi=None, cap=None):
    """First time |r1| <= lo, |r1| >= hi or |r2| >= cap on the grid.

    Returns (time, kind) with kind in {"lower", "upper", "cap"}, or
    (None, None).  The time is interpolated inside the bracketing step.
    """
    a1 = np.abs(traj.r1)
    conds = []
    if lo is not None:
        conds.append(("lower", lo - a1))
    if hi is not None:
        conds.append(("upper", a1 - hi))
    if cap is not None:
        conds.append(("cap", np.abs(traj.r2) - cap))
    if not conds:
        raise ValueError("need at least one of lo, hi, cap")
    hit = np.zeros(len(traj), dtype=bool)
    for _, g in conds:
        hit |= g >= 0
    idx = np.flatnonzero(hit)
    if idx.size == 0:
        return None, None
    i = int(idx[0])
    best = (math.inf, None)
    for kind, g in conds:
        if g[i] < 0:
            continue
        if i == 0:
            t = float(traj.times[0])
        else:
            a, b = g[i - 1], g[i]
            t = float(traj.times[i - 1] + (-a) / (b - a) * (traj.times[i] - traj.times[i - 1]))
        if t < best[0]:
            best = (t, kind)
    return best


def run_until(init: PhaseState, pot, dt: float, noise: NoiseStream, lo=None, hi=None,
              cap=None, max_time=math.inf, chunk_time=None, scheme="split"):
    """Simulate in chunks until :func:`first_exit` fires or ``max_time`` passes.

    Returns (time, kind); kind is "censored" when ``max_time`` was reached.
    """
    state = init
    t0 = noise.cursor * dt
    chunk_time = chunk_time or 4096 * dt
    while True:
        remaining = max_time - (noise.cursor * dt - t0)
        if remaining <= 0:
            return max_time, "censored"
        horizon = min(chunk_time, remaining)
        traj = simulate(state, pot, horizon, dt, noise, scheme=scheme)
        t, kind = first_exit(traj, lo, hi, cap)
        if kind is not None:
            if t - t0 > max_time:
                return max_time, "censored"
            return t - t0, kind
        state = traj.final_state()


def _stopped_ensemble(n_paths, seed, pot, dt, r1_0, r2_0, lo, hi, cap, max_time,
                      chunk_time, workers, label, scheme="split"):
    def task(idx):
        tau = np.empty(idx.size)
        kind = np.empty(idx.size, dtype="<U8")
        for j, i in enumerate(idx):
            noise = NoiseStream(seed, int(i))
            tau[j], kind[j] = run_until(PhaseState(r1_0, r2_0, 0.0, 0.0), pot, dt, noise,
                                        lo, hi, cap, max_time, chunk_time, scheme)
        return {"tau": tau, "kind": kind}
    return run_ensemble(task, n_paths, workers, seed, label)


# --- decoupled case -----------------------------------------------------------

def decoupled_weld(n_paths: int, seed: int, dt: float = 0.01, r2_0: float = 5.0,
                   times=(0.5, 1.0, 3.0), workers: int = 1) -> dict:
    """V == 0 against closed-form OU moments.

    Returns Estimates of mean and variance of r2 at ``times`` from a fixed
    start, E r2(1)^2 from a stationary start, and whether Z stayed
    identically zero.
    """
    from ..oracle import ou_moments

    times = tuple(float(t) for t in times)
    horizon = max(times)
    grid = np.array(times)

    def task(idx):
        r2 = np.empty((idx.size, len(times)))
        stat = np.empty(idx.size)
        zmax = np.empty(idx.size)
        for j, i in enumerate(idx):
            noise = NoiseStream(seed, int(i))
            tr = simulate(PhaseState(0.0, r2_0, 0.0, 0.0), "zero", horizon, dt, noise)
            k = np.rint(grid / dt).astype(int)
            r2[j] = tr.r2[k]
            z = noise.initial_normals(1)[0] * math.sqrt(0.5)
            th = noise.initial_uniforms(1)[0] * TWO_PI
            s = simulate(PhaseState(0.0, z, 0.0, th), "zero", 1.0, dt, NoiseStream(seed, int(i)))
            stat[j] = s.r2[-1]
            zmax[j] = max(np.max(np.abs(tr.z)), np.max(np.abs(s.z)))
        return {"r2": r2, "stationary": stat, "zmax": zmax}

    out = run_ensemble(task, n_paths, workers, seed, "weld")
    res = {"estimates": [], "oracle": {}, "z_exact_zero": bool(np.all(out["zmax"] == 0.0))}
    for c, t in enumerate(times):
        x = out["r2"][:, c]
        m = mean_estimate(f"r2_mean_t{t:g}", x)
        dev2 = (x - x.mean()) ** 2 * x.size / (x.size - 1)
        v = mean_estimate(f"r2_var_t{t:g}", dev2)
        res["estimates"] += [m, v]
        mu, var = ou_moments(r2_0, t)
        res["oracle"][m.name] = mu
        res["oracle"][v.name] = var
    st = mean_estimate("stationary_r2_sq_t1", out["stationary"] ** 2)
    res["estimates"].append(st)
    res["oracle"][st.name] = 0.5
    return res


# --- expansion over one rotation -------------------------------------------

def expansion_residual(R_values, n_paths: int, seed: int, r2_0: float = 0.0, pot="cos",
                       mode: str = "refined", steps_per_rotation: int = 128,
                       n_boot: int = 200, workers: int = 1) -> dict:
    """L2 size of Z(sigma) minus its leading term, sigma = 2pi/R.

    ``mode="refined"`` subtracts 2pi r2(0)/r1(0)^2 V'(theta1(0) - theta2(0));
    ``"crude"`` reports Z(sigma) itself.
    """
    if mode not in ("refined", "crude"):
        raise ValueError("mode must be 'refined' or 'crude'")
    pot = get_potential(pot)
    rows = []
    for R in R_values:
        R = float(R)
        if R < 2:
            raise ValueError("R must be >= 2")
        sigma = TWO_PI / R
        dt = sigma / steps_per_rotation
        if dt > sigma / 100:
            raise GridTooCoarse(f"dt = {dt:.3g} exceeds sigma/100 = {sigma / 100:.3g}")
        s = sub_seed(seed, f"expansion/R={R:g}")

        def task(idx, R=R, s=s, sigma=sigma, dt=dt):
            ang = _uniform_angles(s, idx)
            init = np.column_stack([np.full(idx.size, R), np.full(idx.size, r2_0), ang])
            end = simulate_endpoints(init, pot, sigma, dt, s, idx)
            z = end[:, 6]
            if mode == "refined":
                lead = TWO_PI * r2_0 / R**2 * pot.d1(init[:, 2] - init[:, 3])
                z = z - lead
            return {"res": z}

        res = run_ensemble(task, n_paths, workers, s, f"expansion R={R:g}")["res"]
        l2 = float(np.sqrt(np.mean(res**2)))
        se = bootstrap_se(res, lambda x: math.sqrt(np.mean(x**2)), n_boot, seed=s & 0xFFFFFFFF)
        rows.append({"R": R, "sigma": sigma, "dt": dt, "l2": l2, "se": se,
                     "mean": float(np.mean(res))})
    slope, slope_se = loglog_slope([r["sigma"] for r in rows], [r["l2"] for r in rows])
    return {"rows": rows, "slope": slope, "slope_se": slope_se, "mode": mode, "r2_0": r2_0}


# --- short-time moments -----------------------------------------------------

def moment_drift_diffusion(params: ScalingParams, n_paths: int, seed: int, pot="cos",
                           dt: float | None = None, r2_0: float = 1.0,
                           workers: int = 1) -> dict:
    """First and second moments of r1(t(R)) - r1(0) and P(tau_c < t(R))."""
    R, t_R, c = params.R, params.t, params.c
    if abs(r2_0) > params.r2_cap:
        raise ValueError("|r2(0)| must be <= R^alpha")
    dt = dt or auto_dt(R, params.alpha_c)
    s = sub_seed(seed, f"moments/R={R:g}")

    def task(idx):
        ang = _uniform_angles(s, idx)
        inc = np.empty(idx.size)
        dev = np.empty(idx.size)
        for j, i in enumerate(idx):
            tr = simulate(PhaseState(R, r2_0, ang[j, 0], ang[j, 1]), pot, t_R, dt,
                          NoiseStream(s, int(i)))
            inc[j] = tr.r1[-1] - R
            dev[j] = np.max(np.abs(tr.r1 - R))
        return {"increment": inc, "max_dev": dev}

    out = run_ensemble(task, n_paths, workers, s, f"moments R={R:g}")
    t_end = n_steps(t_R, dt) * dt
    return {
        "R": R, "t": t_end, "dt": dt, "c": c,
        "drift": mean_estimate(f"drift_R{R:g}", out["increment"]),
        "second": mean_estimate(f"second_moment_R{R:g}", out["increment"] ** 2),
        "p_tau_c": proportion_estimate(f"p_tau_c_before_t_R{R:g}", out["max_dev"] >= c),
        "raw": out,
    }


# --- decorrelation ----------------------------------------------------------

def decorrelation(R: float, t_values, theta0_values, n_paths: int, seed: int, pot="cos",
                  dt: float | None = None, r2_0: float = 1.0, analogue: bool = False,
                  alpha_c: float = 0.33, workers: int = 1) -> dict:
    """E[r2(t) V'(theta2(t) - theta0)] for each t and theta0.

    With ``analogue=True`` the decoupled (r, theta) process is run from its
    stationary law instead of the coupled system.
    """
    pot = get_potential(pot)
    t_values = sorted(float(t) for t in t_values)
    theta0 = np.asarray(theta0_values, dtype=float)
    dt = dt or auto_dt(R, alpha_c)
    s = sub_seed(seed, "decorrelation" + ("/analogue" if analogue else ""))

    def task(idx):
        r2 = np.empty((idx.size, len(t_values)))
        th = np.empty((idx.size, len(t_values)))
        for j, i in enumerate(idx):
            noise = NoiseStream(s, int(i))
            if analogue:
                r = noise.initial_normals(1)[0] * math.sqrt(0.5)
                a = noise.initial_uniforms(1)[0] * TWO_PI
            else:
                state = PhaseState(R, r2_0, 0.0, 0.0)
            t_prev = 0.0
            for c, t in enumerate(t_values):
                if t > t_prev:
                    if analogue:
                        p = simulate_analogue((r, a), t - t_prev, dt, noise, stride=n_steps(t - t_prev, dt))
                        r, a = p.r[-1], p.theta[-1]
                    else:
                        tr = simulate(state, pot, t - t_prev, dt, noise,
                                      stride=n_steps(t - t_prev, dt))
                        state = tr.final_state()
                        r, a = state.r2, state.theta2
                elif not analogue:
                    r, a = state.r2, state.theta2
                r2[j, c], th[j, c] = r, a
                t_prev = t
        return {"r2": r2, "theta2": th}

    out = run_ensemble(task, n_paths, workers, s, "decorrelation")
    est = {}
    for c, t in enumerate(t_values):
        for k, t0 in enumerate(theta0):
            x = out["r2"][:, c] * pot.d1(out["theta2"][:, c] - t0)
            est[(t, k)] = mean_estimate(f"corr_t{t:g}_theta{k}", x)
    return {"t_values": t_values, "theta0": theta0.tolist(), "dt": dt, "estimates": est}


# --- martingale problem -----------------------------------------------------

class SpecInvalid(ValueError):
    pass


def _gauss(x):
    return np.exp(-x * x)


def _gauss_d2(x):
    return (4 * x * x - 2) * np.exp(-x * x)


def _lorentz(x):
    return 1.0 / (1.0 + x * x)


def _lorentz_d2(x):
    return (6 * x * x - 2) / (1.0 + x * x) ** 3


TEST_FUNCTIONS = {
    "gauss": (_gauss, _gauss_d2),
    "lorentz": (_lorentz, _lorentz_d2),
}


@dataclass
class MartingaleTestSpec:
    """Test function for the reflected-BM generator f -> f''/2 on [0, inf).

    ``d2`` defaults to a central second difference of ``f``.
    """

    f: Callable
    t: float = 1.0
    T: float = 2048.0
    epsilon: float | None = None
    d2: Callable | None = None
    name: str = "f"

    def __post_init__(self):
        if self.t <= 0 or self.T <= 0:
            raise SpecInvalid("t and T must be > 0")
        if self.epsilon is not None and self.epsilon <= 0:
            raise SpecInvalid("epsilon must be > 0")
        h = 1e-7
        slope = (float(self.f(np.float64(h))) - float(self.f(np.float64(0.0)))) / h
        if abs(slope) > 1e-6:
            raise SpecInvalid(f"f'(0+) = {slope:.3g}; the reflecting condition needs f'(0+) = 0")
        x = np.linspace(0.0, 20.0, 20001)
        fx = np.asarray(self.f(x), dtype=float)
        derivs = [fx]
        for _ in range(3):
            derivs.append(np.gradient(derivs[-1], x))
        for k, d in enumerate(derivs):
            if not np.all(np.isfinite(d)):
                raise SpecInvalid(f"derivative of order {k} is not finite on [0, 20]")
        if self.d2 is None:
            self.d2 = self._numeric_d2

    def _numeric_d2(self, x, h=1e-4):
        return (self.f(x + h) - 2 * self.f(x) + self.f(x - h)) / h**2

    @classmethod
    def builtin(cls, name: str, **kw) -> "MartingaleTestSpec":
        try:
            f, d2 = TEST_FUNCTIONS[name]
        except KeyError:
            raise SpecInvalid(f"unknown test function {name!r}") from None
        return cls(f=f, d2=d2, name=name, **kw)


def martingale_defect(spec: MartingaleTestSpec, times, X) -> dict:
    """E[f(|X_t|) - f(|X_0|) - 1/2 int_0^t f''(|X_s|) ds] by the trapezoid rule.

    ``X`` has one path per row on the uniform grid ``times`` (scaled units).
    With ``spec.epsilon`` the paths are stopped at the first grid point with
    |X| <= epsilon.
    """
    times = np.asarray(times, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    dt = float(times[1] - times[0])
    if dt > 1e-3 * (1 + 1e-9):
        raise GridTooCoarse(f"scaled grid spacing {dt:.3g} exceeds 1e-3")
    m = int(np.searchsorted(times - times[0], spec.t * (1 + 1e-12), side="right"))
    if times[m - 1] - times[0] < spec.t * (1 - 1e-9):
        raise ValueError("paths do not reach the requested t")
    A = np.abs(X[:, :m])
    f = spec.f(A)
    g = 0.5 * spec.d2(A)
    cum = np.concatenate([np.zeros((A.shape[0], 1)),
                          np.cumsum(0.5 * dt * (g[:, 1:] + g[:, :-1]), axis=1)], axis=1)
    curve = f - f[:, :1] - cum
    if spec.epsilon is not None:
        below = A <= spec.epsilon
        stop = np.where(below.any(axis=1), below.argmax(axis=1), m - 1)
        per_path = curve[np.arange(A.shape[0]), stop]
    else:
        per_path = curve[:, -1]
    est = mean_estimate(f"defect_{spec.name}", per_path)
    curve_mean = curve.mean(axis=0)
    curve_se = curve.std(axis=0, ddof=1) / math.sqrt(A.shape[0]) if A.shape[0] > 1 else 0 * curve_mean
    return {"estimate": est, "per_path": per_path,
            "curve": (times[:m] - times[0], curve_mean, curve_se)}


# --- diffusive ensembles ----------------------------------------------------

def limit_stride(T: float, dt: float, t_max: float = 1.0, max_scaled_dt: float = 1e-3) -> int:
    """Largest recording stride with scaled spacing <= max_scaled_dt that puts t_max/2 on the grid."""
    n = n_steps(t_max * T, dt)
    s = max(1, int(math.floor(max_scaled_dt * T / dt * (1 + 1e-12))))
    half = n // 2 if n % 2 == 0 else n
    while s > 1 and (n % s or half % s):
        s -= 1
    return s


def limit_ensemble(n_paths: int, seed: int, T: float = 2048.0, dt: float = 0.01, pot="cos",
                   t_max: float = 1.0, r1_0: float = 0.0, r2_0: float = 0.0,
                   stride: int | None = None, workers: int = 1, scheme: str = "split") -> dict:
    """Scaled paths X_t = r1(tT)/sqrt(T), one row per trajectory."""
    stride = stride or limit_stride(T, dt, t_max)

    def task(idx):
        rows = []
        zeta_r2 = []
        for i in idx:
            tr = simulate(PhaseState(r1_0, r2_0, 0.0, 0.0), pot, t_max * T, dt,
                          NoiseStream(seed, int(i)), stride=stride, scheme=scheme)
            rows.append(tr.r1 / math.sqrt(T))
            zeta_r2.append(np.max(np.abs(tr.r2)))
        return {"X": np.array(rows), "sup_r2_grid": np.array(zeta_r2)}

    out = run_ensemble(task, n_paths, workers, seed, "limit")
    n = out["X"].shape[1]
    times = np.arange(n) * (stride * dt / T)
    return {"times": times, "X": out["X"], "stride": stride, "dt": dt, "T": T,
            "sup_r2_grid": out["sup_r2_grid"]}


def reflected_bm_ensemble(n_paths: int, seed: int, t_max: float = 1.0,
                          dt: float = 1.0 / 1024, x0: float = 0.0) -> dict:
    """Exact |x0 + W| paths on a uniform grid (oracle control)."""
    m = int(round(t_max / dt))
    grid = np.arange(m + 1) * dt
    X = np.empty((n_paths, m + 1))
    for i in range(n_paths):
        X[i] = sample_reflected_bm(grid, NoiseStream(seed, i), x0)
    return {"times": grid, "X": X}


# --- stopped-time estimators ------------------------------------------------

def exit_interval_stats(params: ScalingParams, n_paths: int, seed: int, pot="cos",
                        dt: float | None = None, r2_0: float = 0.0, max_time=None,
                        workers: int = 1) -> dict:
    """Exit of |r1|^beta from [R^beta/2, 2 R^beta], also stopped when |r2| = R^alpha."""
    R, beta = params.R, params.beta
    lo, hi = R * 2 ** (-1 / beta), R * 2 ** (1 / beta)
    dt = dt or auto_dt(R, params.alpha_c)
    max_time = max_time or 50.0 * R * R
    s = sub_seed(seed, f"exit/{get_potential(pot).name}/R={R:g}")
    out = _stopped_ensemble(n_paths, s, pot, dt, R, r2_0, lo, hi, params.r2_cap, max_time,
                            2**17 * dt, workers, f"exit {get_potential(pot).name}")
    tau, kind = out["tau"], out["kind"]
    return {
        "lo": lo, "hi": hi, "dt": dt,
        "mean_tau": mean_estimate("mean_exit_time", tau),
        "p_lower": proportion_estimate("p_lower_exit", kind == "lower"),
        "n_cap": int(np.sum(kind == "cap")), "n_censored": int(np.sum(kind == "censored")),
        "raw": out,
    }


def small_r1_exit(T: float, alpha1: float, x0: float, n_paths: int, seed: int, pot="cos",
                  dt: float = 0.01, workers: int = 1) -> dict:
    """E tau(a) for a = (log T)^alpha1 started from |r1(0)| = x0 < a."""
    a = math.log(T) ** alpha1
    if not 0 <= x0 <= a:
        raise ValueError("x0 must lie in [0, a]")
    s = sub_seed(seed, "small-r1-exit")
    out = _stopped_ensemble(n_paths, s, pot, dt, x0, 0.0, None, a, None, math.inf,
                            4096 * dt, workers, "small-r1 exit")
    return {"a": a, "x0": x0, "mean_tau": mean_estimate("mean_tau_small", out["tau"]), "raw": out}


def time_near_zero(epsilon: float, T: float, alpha2: float, n_paths: int, seed: int,
                   pot="cos", dt: float = 0.01, r1_0: float = 0.0, r2_0: float = 0.0,
                   workers: int = 1) -> dict:
    """E[tau(eps sqrt T) ^ zeta], zeta = first |r2| = (log T)^alpha2."""
    level = epsilon * math.sqrt(T)
    cap = math.log(T) ** alpha2
    if abs(r1_0) > level or abs(r2_0) > cap:
        raise ValueError("start must satisfy |r1(0)| <= eps sqrt T and |r2(0)| <= (log T)^alpha2")
    s = sub_seed(seed, "near-zero")
    out = _stopped_ensemble(n_paths, s, pot, dt, r1_0, r2_0, None, level, cap, math.inf,
                            4096 * dt, workers, f"near-zero eps={epsilon:g}")
    return {"level": level, "cap": cap,
            "mean": mean_estimate(f"near_zero_eps{epsilon:g}", out["tau"]),
            "n_cap": int(np.sum(out["kind"] == "cap")), "raw": out}


def excursion_laplace(epsilon: float, T: float, n_paths: int, seed: int, pot="cos",
                      dt: float = 0.01, t_max: float = 4.0, r2_0: float = 0.0,
                      workers: int = 1) -> dict:
    """E exp(-eta), eta = first |X| = eps from |X_0| = 2 eps, censored at t_max."""
    if abs(r2_0) >= math.log(T):
        raise ValueError("need |r2(0)| < log T")
    s = sub_seed(seed, "excursion")
    out = _stopped_ensemble(n_paths, s, pot, dt, 2 * epsilon * math.sqrt(T), r2_0,
                            epsilon * math.sqrt(T), None, None, t_max * T, 4096 * dt,
                            workers, f"excursion eps={epsilon:g}")
    eta = out["tau"] / T
    return {"eta": eta, "censored": int(np.sum(out["kind"] == "censored")),
            "laplace": mean_estimate(f"laplace_eps{epsilon:g}", np.exp(-eta))}


def reflected_bm_laplace(epsilon: float, n_paths: int, seed: int, dt: float = 1e-4,
                         t_max: float = 4.0, bridge: bool = True) -> dict:
    """Same statistic on exact |2 eps + W| paths sampled on a grid.

    With ``bridge`` a crossing between two grid points above the level is
    drawn from the Brownian-bridge law, which removes the delay of
    discrete monitoring.
    """
    from ..observe import hitting_time

    s = sub_seed(seed, "excursion/oracle")
    m = int(round(t_max / dt))
    grid = np.arange(m + 1) * dt
    eta = np.empty(n_paths)
    for i in range(n_paths):
        noise = NoiseStream(s, i)
        p = sample_reflected_bm(grid, noise, 2 * epsilon)
        h = hitting_time((grid, p), epsilon, "signed")
        eta[i] = t_max if h is None else h
        if bridge:
            g = p - epsilon
            stop = m if h is None else int(np.searchsorted(grid, h))
            a, b = g[:stop], g[1:stop + 1]
            ok = (a > 0) & (b > 0)
            cross = np.exp(-2.0 * np.where(ok, a * b, np.inf) / dt)
            k = np.flatnonzero(noise.initial_uniforms(stop) < cross)
            if k.size:
                eta[i] = min(eta[i], grid[k[0]] + 0.5 * dt)
    return {"eta": eta, "laplace": mean_estimate(f"laplace_bm_eps{epsilon:g}", np.exp(-eta))}


# --- r2 growth and the moment ladder ---------------------------------------

def sup_r2_exceedance(t: float, T: float, D: float, n_paths: int, seed: int, pot="cos",
                      dt: float = 0.01, r1_0: float = 0.0, r2_0: float = 1.0,
                      workers: int = 1) -> dict:
    """P(sup_[0,tT] |r2| > |r2(0)| + D) and the per-path suprema."""
    s = sub_seed(seed, "sup-r2")

    def task(idx):
        sup = np.empty(idx.size)
        for j, i in enumerate(idx):
            tr = simulate(PhaseState(r1_0, r2_0, 0.0, 0.0), pot, t * T, dt, NoiseStream(s, int(i)))
            sup[j] = np.max(np.abs(tr.r2))
        return {"sup": sup}

    sup = run_ensemble(task, n_paths, workers, s, "sup r2")["sup"]
    return {"sup": sup, "p": proportion_estimate("p_sup_exceed", sup > abs(r2_0) + D)}


def moment_ladder(params: ScalingParams, n_paths: int, seed: int, pot="cos", r2_0: float = 2.0,
                  dt: float | None = None, workers: int = 1) -> dict:
    """||1{k <= n~} r2(sigma_k)||_4 for every rotation index k."""
    R, t_R, c = params.R, params.t, params.c
    dt = dt or auto_dt(R, params.alpha_c)
    K = int(math.ceil(t_R * (R + 2 * c))) + 2
    horizon = t_R + 2.0 / (R - c)
    s = sub_seed(seed, f"ladder/R={R:g}")

    def task(idx):
        ang = _uniform_angles(s, idx)
        q = np.zeros((idx.size, K))
        n_tilde = np.empty(idx.size, dtype=int)
        sig_dev = np.empty(idx.size)
        for j, i in enumerate(idx):
            tr = simulate(PhaseState(R, r2_0, ang[j, 0], ang[j, 1]), pot, horizon, dt,
                          NoiseStream(s, int(i)))
            sch = rotation_schedule(tr, params)
            k = np.arange(sch.n_tilde + 1)
            x = sch.sigma / tr.dt
            pos = np.floor(x)
            pos = np.minimum((pos + (x - pos > 0.5)).astype(int), len(tr) - 1)
            q[j, : sch.n_tilde + 1] = tr.r2[pos]
            n_tilde[j] = sch.n_tilde
            sig_dev[j] = np.max(np.abs(sch.sigma - k / R))
        return {"r2_at_sigma": q, "n_tilde": n_tilde, "sigma_dev": sig_dev}

    out = run_ensemble(task, n_paths, workers, s, "ladder")
    kmax = int(out["n_tilde"].max())
    norms = [lp_norm_estimate(f"l4_k{k}", out["r2_at_sigma"][:, k]) for k in range(kmax + 1)]
    bound = 2 * abs(r2_0) * np.exp(-np.arange(kmax + 1) / R) + 3
    return {"norms": norms, "bound": bound, "n_tilde": out["n_tilde"],
            "sigma_dev": out["sigma_dev"], "n_tilde_bound": t_R * (R + 2 * c),
            "sigma_dev_bound": 2 * t_R * c / R, "dt": dt}
