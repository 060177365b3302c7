"""Stability and approximation diagnostics.

Distances to target sets, sup-deviations between trajectories, frequency
sweeps of the averaging error, practical-stability envelopes and the
Lyapunov-function checks for the source-seeking unicycle. Reports are plain
dicts that serialize to JSON; :func:`format_report` renders aligned text.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .averaging import DEFAULT_QUAD, _remainder_batch, phi_batch
from .errors import GridMismatch, ReportFailure, UnknownOptimum, UnsupportedPlant
from .plants import Objective, Plant
from .scenario import initial_states_on_shell, pullback_via_transform, simulate
from .signals import DitherSpec

GRID_RTOL = 1e-9
FD_STEP = 1e-6
PHI_TOL = 1e-8
VDOT_BAND = (0.1, 5.0)
SAMPLE_RADII = (1e-2, 10.0)


# -- sets and distances --------------------------------------------------------


@dataclass(frozen=True)
class TargetSet:
    """``point``: ``{x*}``. ``point_times_circle``: ``{p*} x S^1`` (heading unconstrained)."""

    kind: str
    p_star: tuple

    def __post_init__(self):
        if self.kind not in ("point", "point_times_circle"):
            raise ValueError(f"unknown target kind {self.kind!r}")
        p = tuple(float(x) for x in np.atleast_1d(self.p_star))
        if not all(math.isfinite(x) for x in p):
            raise ValueError("p_star must be finite")
        object.__setattr__(self, "p_star", p)

    @classmethod
    def for_plant(cls, plant):
        p_star, _ = plant.objective.require_optimum()
        kind = "point_times_circle" if plant.kind == "unicycle" else "point"
        return cls(kind, tuple(p_star))


def distance_to_set(state, target):
    """Euclidean distance of the position part of ``state`` to ``target``.

    Trailing entries (heading, filter state) are ignored, so this also accepts
    full closed-loop states. Works row-wise on ``(N, dim)`` arrays.
    """
    state = np.asarray(state, dtype=float)
    k = len(target.p_star)
    d = state[..., :k] - np.asarray(target.p_star)
    return np.sqrt(np.sum(d * d, axis=-1))


def _embed(traj):
    """States with any ``theta`` column replaced by ``(cos, sin)``."""
    names = traj.state_names
    if "theta" not in names:
        return traj.states
    j = names.index("theta")
    th = traj.states[:, j]
    return np.column_stack([traj.states[:, :j], np.cos(th), np.sin(th), traj.states[:, j + 1:]])


def sup_deviation(traj_a, traj_b):
    """Max over the common grid of the Euclidean distance between states."""
    if len(traj_a.times) != len(traj_b.times) or traj_a.states.shape != traj_b.states.shape:
        raise GridMismatch(
            f"grids differ: {traj_a.states.shape} on [{traj_a.t0}, {traj_a.t1}] vs "
            f"{traj_b.states.shape} on [{traj_b.t0}, {traj_b.t1}]")
    scale = max(1.0, float(np.max(np.abs(traj_a.times))))
    if np.max(np.abs(traj_a.times - traj_b.times)) > GRID_RTOL * scale:
        raise GridMismatch("time grids differ")
    diff = _embed(traj_a) - _embed(traj_b)
    return float(np.max(np.sqrt(np.sum(diff * diff, axis=1))))


# -- frequency sweeps and practical stability ----------------------------------


def _averaged_on_grid(scenario, fine_dt):
    """Averaged run whose grid is a stride subset of the fine grid; returns (traj, stride)."""
    if not scenario.dist.is_zero:
        return simulate(scenario, "averaged", fine_dt), 1
    stride = max(1, round(scenario.step("averaged") / fine_dt))
    return simulate(scenario, "averaged", stride * fine_dt), stride


def omega_sweep(scenario, omegas):
    """Sup-deviation between pull-back and averaged trajectories for each ``omega``.

    The pull-back trajectory comes from the closed loop mapped through the
    coordinate change. Returns rows ``{"omega", "deviation", "dt", "stride"}``.
    """
    omegas = [float(w) for w in omegas]
    if any(b <= a for a, b in zip(omegas, omegas[1:])):
        raise ValueError("omegas must be strictly increasing")
    rows = []
    for om in omegas:
        sc = scenario.replace(params=scenario.params.replace(omega=om), dt=None)
        fine_dt = sc.step("closed_loop")
        tilde = pullback_via_transform(sc, fine_dt)
        bar, stride = _averaged_on_grid(sc, fine_dt)
        tilde = tilde.subsample(stride)
        rows.append({"omega": om, "deviation": sup_deviation(tilde, bar),
                     "dt": fine_dt, "stride": stride})
    return rows


def strictly_decreasing(values):
    return all(b < a for a, b in zip(values, values[1:]))


def sgpuas_envelope(scenario, rho, runs=None, omegas=None, t_settle=None):
    """Empirical practical-stability witnesses for the pull-back system.

    For each frequency and initial state, ``|xi~(t)|_K`` is recorded with the
    filter state projected out. ``nu`` is its max over ``t >= t_settle``
    (default: second half of the span); ``overshoot`` is the max of the
    trajectory's distance relative to the initial distance. The filter state's
    empirical range is reported alongside.
    """
    target = TargetSet.for_plant(scenario.plant)
    runs = initial_states_on_shell(scenario, rho) if runs is None else runs
    omegas = [scenario.params.omega] if omegas is None else [float(w) for w in omegas]
    t0, t1 = scenario.t_span
    t_settle = 0.5 * (t0 + t1) if t_settle is None else float(t_settle)
    rows = []
    for om in omegas:
        sc = scenario.replace(params=scenario.params.replace(omega=om), dt=None)
        nu, overshoot, eta_lo, eta_hi, d0_max = 0.0, 0.0, math.inf, -math.inf, 0.0
        for x0 in runs:
            d0 = float(distance_to_set(x0, target))
            if d0 > rho * (1 + 1e-12):
                raise ValueError(f"initial state {list(x0)} lies outside the rho-ball")
            tr = simulate(sc.replace(state0=tuple(x0)), "pullback")
            d = distance_to_set(tr.states, target)
            nu = max(nu, float(np.max(d[tr.window(t_settle)])))
            d0_max = max(d0_max, d0)
            if d0 > 0:
                overshoot = max(overshoot, float(np.max(d)) / d0)
            eta = tr.states[:, -1]
            eta_lo, eta_hi = min(eta_lo, float(eta.min())), max(eta_hi, float(eta.max()))
        rows.append({"omega": om, "nu": nu, "overshoot": overshoot, "eta_range": [eta_lo, eta_hi],
                     "max_initial_distance": d0_max})
    nus = [r["nu"] for r in rows]
    return {"kind": "sgpuas", "scenario": scenario.name, "rho": rho, "t_settle": t_settle,
            "runs": [list(map(float, x)) for x in runs], "rows": rows,
            "nu_shrinks": strictly_decreasing(nus) if len(nus) > 1 else None}


# -- Lyapunov suite --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LyapunovSpec:
    """Weight ``epsilon`` of the heading term, objective and turning rate ``Omega``."""

    epsilon: float
    objective: Objective
    Omega: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not self.Omega > 0:
            raise ValueError("Omega must be > 0")


def _headings(theta):
    theta = np.asarray(theta, dtype=float)
    o = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    o_perp = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    return o, o_perp


def lyapunov_V(spec, state):
    """``V = y* - psi(p) + epsilon <grad psi(p), o - o_perp>^2`` for ``state = [p1, p2, theta, ...]``."""
    obj = spec.objective
    if obj.y_star is None:
        raise UnknownOptimum(f"objective {obj.name!r} has no declared maximum")
    state = np.asarray(state, dtype=float)
    p = state[..., :2]
    o, o_perp = _headings(state[..., 2])
    g = obj.gradient(p)
    inner = np.sum(g * (o - o_perp), axis=-1)
    return obj.y_star - obj.value(p) + spec.epsilon * inner * inner


def _averaged_plant_batch(obj, dither, a, Omega, X, quad):
    """Undisturbed averaged unicycle tangent ``(p', theta')`` at the rows of ``X``."""
    plant = Plant.unicycle(obj)
    o, _ = _headings(X[:, 2])
    g = obj.gradient(X[:, :2])
    uv = float(dither.uv_matrix()[0, 0])
    phi, _ = _remainder_batch(plant, dither, a, X, quad)
    coef = uv * np.sum(g * o, axis=1) + a * phi[:, 0]
    return np.column_stack([coef * o[:, 0], coef * o[:, 1], np.full(len(X), float(Omega))]), phi[:, 0]


def sample_states(p_star, n, seed=0, radii=SAMPLE_RADII):
    """States with ``|p - p*|`` log-uniform in ``radii`` and uniform heading."""
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(math.log(radii[0]), math.log(radii[1]), n))
    ang = rng.uniform(0.0, 2.0 * math.pi, n)
    theta = rng.uniform(0.0, 2.0 * math.pi, n)
    p = np.asarray(p_star)[None, :] + r[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
    return np.column_stack([p, theta])


def _check(name, inequality, ok_mask, X, margin):
    ok_mask = np.asarray(ok_mask, dtype=bool)
    bad = np.flatnonzero(~ok_mask)
    witness = X[bad[np.argmin(margin[bad])]].tolist() if len(bad) else None
    return {"name": name, "inequality": inequality, "passed": not len(bad),
            "checked": int(ok_mask.size), "violations": int(len(bad)),
            "worst_margin": float(np.min(margin)) if margin.size else None, "witness": witness}


def lyapunov_report(spec, a, n_samples=10_000, seed=0, dither=None, quad=DEFAULT_QUAD,
                    raise_on_failure=False):
    """Sampled verification of the Lyapunov inequalities for the averaged unicycle.

    Checks the sandwich ``(y*-psi)/2 <= V <= 2 (y*-psi)``, negativity of the
    derivative of ``V`` along the undisturbed averaged field (central
    differences, step ``1e-6``) for ``|p - p*|`` in ``[0.1, 5]``, and that
    ``phi^a(p*, theta)`` vanishes. Also reports ``c1`` (max sampled Hessian
    norm) and ``kappa = max |phi^a| / |grad psi|``.

    Raises:
        UnsupportedPlant: the objective is not planar.
        UnknownOptimum: the objective has no declared maximizer.
        ReportFailure: with ``raise_on_failure``, for the first failed check.
    """
    obj = spec.objective
    if obj.dim != 2:
        raise UnsupportedPlant("the Lyapunov suite applies to the planar unicycle only")
    p_star, y_star = obj.require_optimum()
    dither = DitherSpec.uniform(1) if dither is None else dither
    if not a > 0:
        raise ValueError("a must be > 0")
    X = sample_states(p_star, n_samples, seed)
    eps = spec.epsilon

    H = obj.hessian(X[:, :2])
    c1 = float(np.max(np.linalg.norm(H, ord=2, axis=(1, 2))))
    eps_bound = 1.0 / (4.0 * c1)
    checks = [{
        "name": "epsilon-bound", "inequality": "epsilon < 1/(4 c1)", "passed": eps < eps_bound,
        "checked": 1, "violations": int(not eps < eps_bound),
        "worst_margin": eps_bound - eps, "witness": None,
    }]

    gap = y_star - obj.value(X[:, :2])
    V = lyapunov_V(spec, X)
    lo, hi = V - 0.5 * gap, 2.0 * gap - V
    checks.append(_check("sandwich", "(y*-psi)/2 <= V <= 2(y*-psi)", (lo >= 0) & (hi >= 0), X,
                         np.minimum(lo, hi)))

    F, phi = _averaged_plant_batch(obj, dither, a, spec.Omega, X, quad)
    Vp = lyapunov_V(spec, X + FD_STEP * F)
    Vm = lyapunov_V(spec, X - FD_STEP * F)
    Vdot = (Vp - Vm) / (2.0 * FD_STEP)
    r = distance_to_set(X, TargetSet("point_times_circle", tuple(p_star)))
    band = (r >= VDOT_BAND[0]) & (r <= VDOT_BAND[1])
    checks.append(_check("decrease", "dV/dt < 0 for 0.1 <= |p-p*| <= 5", Vdot[band] < 0,
                         X[band], -Vdot[band]))

    th = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
    X_star = np.column_stack([np.tile(p_star, (len(th), 1)), th])
    phi_star = phi_batch(Plant.unicycle(obj), dither, a, X_star, quad)
    phi_max = float(np.max(np.abs(phi_star)))
    checks.append({"name": "phi-at-optimum", "inequality": "|phi^a(p*, theta)| <= 1e-8",
                   "passed": phi_max <= PHI_TOL, "checked": len(th),
                   "violations": int(np.sum(np.abs(phi_star) > PHI_TOL)),
                   "worst_margin": PHI_TOL - phi_max,
                   "witness": X_star[int(np.argmax(np.abs(phi_star)))].tolist()
                   if phi_max > PHI_TOL else None})

    gnorm = np.linalg.norm(obj.gradient(X[:, :2]), axis=1)
    kappa = float(np.max(np.abs(phi) / gnorm))
    report = {
        "kind": "lyapunov", "epsilon": eps, "a": a, "Omega": spec.Omega,
        "n_samples": n_samples, "seed": seed, "c1_est": c1, "epsilon_bound": eps_bound,
        "kappa": kappa, "phi_at_optimum_max": phi_max,
        "vdot_max_in_band": float(np.max(Vdot[band])) if band.any() else None,
        "checks": checks, "passed": all(c["passed"] for c in checks),
    }
    if raise_on_failure:
        for c in checks:
            if not c["passed"]:
                raise ReportFailure(c["inequality"], c["witness"])
    return report


def estimate_a0(spec, a_lo=0.01, a_hi=2.0, n_samples=2000, seed=0, iters=8, dither=None):
    """Bisection for the largest ``a`` at which the decrease check still passes.

    Returns ``(a0_est, bracketed)``; ``bracketed`` is False when the check
    passes at ``a_hi`` (then ``a_hi`` is returned) or fails at ``a_lo``.
    """
    def ok(a):
        rep = lyapunov_report(spec, a, n_samples, seed, dither)
        return next(c for c in rep["checks"] if c["name"] == "decrease")["passed"]

    if ok(a_hi):
        return a_hi, False
    if not ok(a_lo):
        return a_lo, False
    lo, hi = a_lo, a_hi
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo, True


# -- rendering -------------------------------------------------------------------


def to_json(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, list):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    return str(x)


def format_report(report):
    """Aligned text rendering of a report dict."""
    lines = [f"{report.get('kind', 'report')} report"]
    scalars = {k: v for k, v in report.items()
               if k not in ("kind", "checks", "rows", "runs") and not isinstance(v, dict)}
    width = max((len(k) for k in scalars), default=0)
    lines += [f"  {k:<{width}}  {_fmt(v)}" for k, v in scalars.items()]
    if report.get("checks"):
        w = max(len(c["inequality"]) for c in report["checks"])
        for c in report["checks"]:
            status = "PASS" if c["passed"] else "FAIL"
            line = f"  [{status}] {c['inequality']:<{w}}  checked={c['checked']}"
            line += f" violations={c['violations']}"
            if c["witness"] is not None:
                line += f" witness={_fmt(c['witness'])}"
            lines.append(line)
    if report.get("rows"):
        keys = list(report["rows"][0])
        lines.append("  " + "  ".join(f"{k:>14}" for k in keys))
        for r in report["rows"]:
            lines.append("  " + "  ".join(f"{_fmt(r[k]):>14}" for k in keys))
    return "\n".join(lines) + "\n"
