"""Control-affine example plants, their objective functions and dither flows.

States are flat vectors in the plant's chart:

* single integrator on R^m: ``[x1, ..., xm]``;
* kinematic unicycle on R^2 x S^1: ``[p1, p2, theta]`` with heading
  ``o = (cos theta, sin theta)``. ``theta`` is never wrapped.

Closed-loop states append the filter state ``eta`` as the last entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    NonFiniteValue,
    UnknownOptimum,
    UnsupportedPlant,
    ValidationFailure,
)
from .signals import ValidationReport

GRAD_STEP = 1e-5
HESS_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class Objective:
    """Smooth objective ``psi`` on R^N together with derivative providers.

    ``value`` must accept arrays of shape ``(..., N)``. ``gradient`` and
    ``hessian`` are optional; missing ones fall back to central differences.
    ``scalar`` is an optional fast evaluator taking a plain sequence of floats,
    used inside the integrator loops.
    """

    name: str
    dim: int
    value_fn: Callable
    grad_fn: Optional[Callable] = None
    hess_fn: Optional[Callable] = None
    p_star: Optional[tuple] = None
    y_star: Optional[float] = None
    scalar_fn: Optional[Callable] = None
    params: dict = field(default_factory=dict)
    hess_form_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.p_star is not None:
            object.__setattr__(self, "p_star", tuple(float(x) for x in self.p_star))
        if self.scalar_fn is None:
            fn = self.value_fn
            object.__setattr__(self, "scalar_fn", lambda p: float(fn(np.asarray(p, dtype=float))))

    @property
    def has_optimum(self):
        return self.p_star is not None and self.y_star is not None

    def require_optimum(self):
        if not self.has_optimum:
            raise UnknownOptimum(f"objective {self.name!r} has no declared maximizer")
        return np.asarray(self.p_star), float(self.y_star)

    def value(self, p):
        return self.value_fn(np.asarray(p, dtype=float))

    def scalar(self, p):
        return self.scalar_fn(p)

    def gradient(self, p):
        p = np.asarray(p, dtype=float)
        if self.grad_fn is not None:
            return np.asarray(self.grad_fn(p), dtype=float)
        return _fd_gradient(self.value_fn, p, GRAD_STEP)

    def hessian(self, p):
        p = np.asarray(p, dtype=float)
        if self.hess_fn is not None:
            H = np.asarray(self.hess_fn(p), dtype=float)
        else:
            H = _fd_hessian(self.value_fn, p, HESS_STEP)
        return 0.5 * (H + np.swapaxes(H, -1, -2))

    def hessian_form(self, p, d):
        """``<H(p) d, d>`` with ``d`` broadcast against ``p`` along the leading axes."""
        p = np.asarray(p, dtype=float)
        d = np.asarray(d, dtype=float)
        if self.hess_form_fn is not None:
            return np.asarray(self.hess_form_fn(p, d), dtype=float)
        H = self.hessian(p)
        return np.einsum("...i,...ij,...j->...", d, H, d)


def _unit(n, i):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def _fd_gradient(f, p, h):
    n = p.shape[-1]
    cols = [(f(p + h * _unit(n, i)) - f(p - h * _unit(n, i))) / (2.0 * h) for i in range(n)]
    return np.stack(cols, axis=-1)


def _fd_hessian(f, p, h):
    n = p.shape[-1]
    H = np.empty(p.shape + (n,))
    for i in range(n):
        ei = h * _unit(n, i)
        for j in range(i, n):
            ej = h * _unit(n, j)
            d = (f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)) / (4.0 * h * h)
            H[..., i, j] = d
            H[..., j, i] = d
    return H


def quadratic_objective(m=1, curvature=1.0, center=None):
    """``psi(x) = -curvature |x - center|^2 / 2``; the default is ``-x^2/2`` on R."""
    k = float(curvature)
    c = np.zeros(m) if center is None else np.asarray(center, dtype=float).reshape(m)
    c_list = c.tolist()

    def value(p):
        d = p - c
        return -0.5 * k * np.sum(d * d, axis=-1)

    def grad(p):
        return -k * (p - c)

    def hess(p):
        return np.broadcast_to(-k * np.eye(m), p.shape + (m,)).copy()

    def scalar(p):
        s = 0.0
        for pi, ci in zip(p, c_list):
            s += (pi - ci) * (pi - ci)
        return -0.5 * k * s

    def hess_form(p, e):
        return np.broadcast_to(-k * np.sum(e * e, axis=-1), np.broadcast_shapes(p.shape, e.shape)[:-1])

    return Objective("quadratic", m, value, grad, hess, p_star=tuple(c_list), y_star=0.0,
                     scalar_fn=scalar, params={"m": m, "curvature": k, "center": c_list},
                     hess_form_fn=hess_form)


def source_objective(peak=4.0, weights=(1.0, 2.0), center=(0.0, 0.0)):
    """Planar source signal ``peak / (1 + sum_i w_i (p_i - c_i)^2)``.

    Defaults give ``4 / (1 + p1^2 + 2 p2^2)`` with maximum 4 at the origin.
    """
    peak = float(peak)
    w = np.asarray(weights, dtype=float)
    c = np.asarray(center, dtype=float)
    if w.shape != (2,) or c.shape != (2,):
        raise ValueError("source objective is planar: weights and center need length 2")
    w1, w2 = w.tolist()
    c1, c2 = c.tolist()

    def value(p):
        d = p - c
        return peak / (1.0 + np.sum(w * d * d, axis=-1))

    def grad(p):
        d = p - c
        D = 1.0 + np.sum(w * d * d, axis=-1)
        return -2.0 * peak * (w * d) / (D * D)[..., None]

    def hess(p):
        d = p - c
        D = (1.0 + np.sum(w * d * d, axis=-1))[..., None, None]
        wd = w * d
        outer = wd[..., :, None] * wd[..., None, :]
        return -2.0 * peak * np.eye(2) * w / (D * D) + 8.0 * peak * outer / (D * D * D)

    def scalar(p):
        d1 = p[0] - c1
        d2 = p[1] - c2
        return peak / (1.0 + w1 * d1 * d1 + w2 * d2 * d2)

    def hess_form(p, e):
        # componentwise to avoid reductions over the short last axis
        z1 = p[..., 0] - c1
        z2 = p[..., 1] - c2
        e1, e2 = e[..., 0], e[..., 1]
        D = 1.0 + w1 * z1 * z1 + w2 * z2 * z2
        lin = w1 * z1 * e1 + w2 * z2 * e2
        return (-2.0 * peak * (w1 * e1 * e1 + w2 * e2 * e2) + 8.0 * peak * lin * lin / D) / (D * D)

    return Objective("source", 2, value, grad, hess, p_star=(c1, c2), y_star=peak,
                     scalar_fn=scalar,
                     params={"peak": peak, "weights": w.tolist(), "center": c.tolist()},
                     hess_form_fn=hess_form)


def custom_objective(value, dim, p_star=None, y_star=None, name="custom", gradient=None,
                     hessian=None):
    """Wrap a user objective; derivatives default to finite differences."""
    return Objective(name, dim, value, gradient, hessian, p_star=p_star, y_star=y_star)


OBJECTIVES = {"quadratic": quadratic_objective, "source": source_objective}


@dataclass(frozen=True, eq=False)
class Plant:
    """One of the two built-in plants, or a custom control-affine system.

    ``kind`` is ``"integrator"``, ``"unicycle"`` or ``"custom"``. Custom plants
    provide ``input_fields`` (callables ``x -> R^n``) and an optional ``drift``;
    they are supported by the closed loop and :func:`commutation_check` only.
    """

    kind: str
    objective: Objective
    m: int = 1
    n: Optional[int] = None
    input_fields: tuple = ()
    drift: Optional[Callable] = None

    @classmethod
    def integrator(cls, objective):
        return cls("integrator", objective, m=objective.dim, n=objective.dim)

    @classmethod
    def unicycle(cls, objective):
        if objective.dim != 2:
            raise DimensionMismatch("unicycle objective must live on R^2")
        return cls("unicycle", objective, m=1, n=3)

    @classmethod
    def custom(cls, objective, input_fields, state_dim, drift=None):
        return cls("custom", objective, m=len(input_fields), n=state_dim,
                   input_fields=tuple(input_fields), drift=drift)

    @property
    def state_dim(self):
        return self.n

    @property
    def input_dim(self):
        return self.m

    @property
    def state_names(self):
        if self.kind == "unicycle":
            return ("p1", "p2", "theta")
        if self.kind == "integrator" and self.m == 1:
            return ("x",)
        return tuple(f"x{i + 1}" for i in range(self.n))

    def position(self, state):
        """Coordinates the objective is evaluated on (``x`` or ``p``)."""
        return np.asarray(state, dtype=float)[..., : self.objective.dim]

    def fields(self, state, Omega=None):
        """Drift and input vector fields ``(F0, [F1..Fm])`` at ``state``."""
        x = np.asarray(state, dtype=float)[: self.n]
        if self.kind == "integrator":
            return np.zeros(self.n), [_unit(self.n, i) for i in range(self.m)]
        if self.kind == "unicycle":
            th = x[2]
            return (np.array([0.0, 0.0, 0.0 if Omega is None else float(Omega)]),
                    [np.array([math.cos(th), math.sin(th), 0.0])])
        F0 = np.zeros(self.n) if self.drift is None else np.asarray(self.drift(x), dtype=float)
        return F0, [np.asarray(F(x), dtype=float) for F in self.input_fields]


def integrator_plant(m=1, objective=None):
    return Plant.integrator(objective or quadratic_objective(m))


def unicycle_plant(objective=None):
    return Plant.unicycle(objective or source_objective())


def plant_rhs(plant, state, u_in, omega_turn=None):
    """Plant vector field ``F0 + u^i F_i`` at ``state`` for input ``u_in``."""
    u_in = np.atleast_1d(np.asarray(u_in, dtype=float))
    if u_in.shape != (plant.input_dim,):
        raise DimensionMismatch(f"expected {plant.input_dim} inputs, got {u_in.shape[0]}")
    state = np.asarray(state, dtype=float)
    if state.shape[0] < plant.state_dim:
        raise DimensionMismatch(f"expected state of length {plant.state_dim}")
    if plant.kind == "integrator":
        return u_in.copy()
    if plant.kind == "unicycle":
        if omega_turn is None:
            raise DimensionMismatch("unicycle needs the angular speed Omega")
        th = state[2]
        return np.array([u_in[0] * math.cos(th), u_in[0] * math.sin(th), float(omega_turn)])
    if omega_turn is not None:
        raise DimensionMismatch("omega_turn only applies to the unicycle")
    F0, Fs = plant.fields(state)
    return F0 + sum(ui * F for ui, F in zip(u_in, Fs))


def flow_phi(plant, spec, tau, a, state):
    """Exact time-``a`` flow of ``U^i(tau) F_i`` applied to ``state``.

    Integrator: ``x + a U(tau)``. Unicycle: ``p + a U(tau) o`` with the heading
    unchanged. A trailing filter entry, if present, is passed through.
    """
    if a < 0:
        raise ValueError("flow amplitude a must be >= 0")
    out = np.array(state, dtype=float)
    U = np.asarray(spec.U(tau), dtype=float)
    if plant.kind == "integrator":
        out[: plant.m] += a * U
    elif plant.kind == "unicycle":
        th = out[2]
        out[0] += a * U[0] * math.cos(th)
        out[1] += a * U[0] * math.sin(th)
    else:
        raise UnsupportedPlant("closed-form flows exist for the built-in plants only")
    return out


def objective_probe(obj, p):
    """``(psi(p), grad psi(p), hess psi(p))`` with a finiteness check."""
    p = np.asarray(p, dtype=float)
    if p.shape != (obj.dim,):
        raise DimensionMismatch(f"objective {obj.name!r} expects a point in R^{obj.dim}")
    val = float(obj.value(p))
    g = obj.gradient(p)
    H = obj.hessian(p)
    if not (math.isfinite(val) and np.all(np.isfinite(g)) and np.all(np.isfinite(H))):
        raise NonFiniteValue(f"objective {obj.name!r} is not finite at {p.tolist()}")
    return val, g, H


def _jacobian(F, x, h=1e-6):
    cols = [(np.asarray(F(x + h * _unit(len(x), k))) - np.asarray(F(x - h * _unit(len(x), k))))
            / (2.0 * h) for k in range(len(x))]
    return np.stack(cols, axis=-1)


def lie_bracket_fd(X, Y, x, h=1e-6):
    """Finite-difference estimate of ``[X, Y](x) = DY(x) X(x) - DX(x) Y(x)``."""
    x = np.asarray(x, dtype=float)
    return _jacobian(Y, x, h) @ np.asarray(X(x)) - _jacobian(X, x, h) @ np.asarray(Y(x))


def commutation_check(plant, n_samples=100, tol=1e-4, seed=0):
    """Verify that the input vector fields commute pairwise.

    Built-in plants pass analytically. Custom plants are probed with
    finite-difference brackets at ``n_samples`` random states; a bracket with
    norm ``>= tol`` raises :class:`ValidationFailure` with the witness.
    """
    report = ValidationReport()
    if plant.kind == "integrator":
        report.add("commutator", True, "constant input fields")
        return report
    if plant.kind == "unicycle" or plant.m == 1:
        report.add("commutator", True, "single input field")
        return report
    rng = np.random.default_rng(seed)
    states = rng.normal(scale=2.0, size=(n_samples, plant.n))
    worst = 0.0
    for i in range(plant.m):
        for j in range(i + 1, plant.m):
            Fi, Fj = plant.input_fields[i], plant.input_fields[j]
            for x in states:
                norm = float(np.linalg.norm(lie_bracket_fd(Fi, Fj, x)))
                worst = max(worst, norm)
                if not norm < tol:
                    raise ValidationFailure(
                        "commutator", f"|[F{i + 1},F{j + 1}]| = {norm:.3e}",
                        i=i + 1, j=j + 1, state=x.tolist())
    report.add("commutator", True, f"max bracket norm {worst:.3e}")
    return report
