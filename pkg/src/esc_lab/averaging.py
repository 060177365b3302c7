"""Averaged vector fields of the pull-back system.

The plant part is the main term plus a remainder that vanishes as ``a -> 0``::

    integrator:  Uv^T grad psi(x)                 + dG^a(x) + w
    unicycle:    Omega d/dtheta + Uv <grad psi(p), o> F1 + a phi^a(x) F1 + w F1

and the filter line is ``-h eta + h psi(x) + dg^a(x) + h w_n``. The remainders
are double integrals over ``tau in [0, T]`` (composite Simpson) and
``s in [0, 1]`` (Gauss-Legendre) of the objective's Hessian evaluated along
the dither flow.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .controller import _check_dims
from .errors import QuadratureNotConverged, UnsupportedPlant
from .quadrature import gauss_legendre_unit, simpson_weights

REFINE_RTOL = 1e-8
# absolute floor for remainders that vanish identically (quadratic objectives)
REFINE_ATOL = 1e-13
BATCH = 256


@dataclass(frozen=True)
class QuadratureSpec:
    n_tau: int = 512
    n_s: int = 8

    def __post_init__(self):
        if self.n_tau < 64 or self.n_tau % 2:
            raise ValueError("quad.n_tau must be an even integer >= 64")
        if self.n_s < 4:
            raise ValueError("quad.n_s must be >= 4")

    def refined(self):
        return QuadratureSpec(2 * self.n_tau, self.n_s)


DEFAULT_QUAD = QuadratureSpec()


@functools.lru_cache(maxsize=64)
def _grid(spec, n_tau, n_s):
    tau, w_tau = simpson_weights(n_tau, 0.0, spec.T)
    s, w_s = gauss_legendre_unit(n_s)
    U = spec.U(tau)
    v = spec.v(tau)
    # weights of the (1/T) int int (1-s) ... ds dtau tensor rule
    W = (w_tau / spec.T)[:, None] * (w_s * (1.0 - s))[None, :]
    for arr in (U, v, W, s):
        arr.setflags(write=False)
    return U, v, s, W


def _require_builtin(plant):
    if plant.kind not in ("integrator", "unicycle"):
        raise UnsupportedPlant("averaged fields exist for the built-in plants only")


def averaged_main(plant, spec, x_bar, Omega=None):
    """Main part of the averaged plant field at ``x_bar`` (no remainder, no disturbance)."""
    _require_builtin(plant)
    x_bar = np.asarray(x_bar, dtype=float)
    Uv = spec.uv_matrix()
    g = plant.objective.gradient(plant.position(x_bar))
    if plant.kind == "integrator":
        return Uv.T @ g
    th = x_bar[2]
    o = np.array([math.cos(th), math.sin(th)])
    coef = float(Uv[0, 0] * (g @ o))
    return np.array([coef * o[0], coef * o[1], 0.0 if Omega is None else float(Omega)])


def _quadratic_forms(plant, grid, a, X):
    """Hessian quadratic forms along the dither flow, shape ``(B, n_tau+1, n_s)``.

    Integrator: ``<H(x + a s U) U, U>``. Unicycle: ``U^2 <H(p + a s U o) o, o>``.
    """
    U, _, s, _ = grid
    obj = plant.objective
    if plant.kind == "integrator":
        pts = X[:, None, None, :] + a * s[None, None, :, None] * U[None, :, None, :]
        return obj.hessian_form(pts, np.broadcast_to(U[None, :, None, :], pts.shape))
    p = X[:, :2]
    o = np.stack([np.cos(X[:, 2]), np.sin(X[:, 2])], axis=-1)
    shift = a * s[None, None, :] * U[None, :, None, 0]
    pts = p[:, None, None, :] + shift[..., None] * o[:, None, None, :]
    q = obj.hessian_form(pts, o[:, None, None, :])
    return q * (U[None, :, None, 0] ** 2)


def _remainder_batch(plant, spec, a, X, quad):
    """Remainder coefficients for a batch of states ``X`` of shape ``(B, n)``.

    Returns ``(G, Q)`` where ``G`` is ``(B, m)`` (integrator: the remainder
    vector without the leading ``a``; unicycle: ``phi^a``) and ``Q`` is
    ``(B,)``, the plain weighted mean of the quadratic forms.
    """
    grid = _grid(spec, quad.n_tau, quad.n_s)
    _, v, _, W = grid
    Gs, Qs = [], []
    for start in range(0, X.shape[0], BATCH):
        q = _quadratic_forms(plant, grid, a, X[start:start + BATCH])
        wq = q * W[None]
        Gs.append(np.sum(np.sum(wq, axis=2)[:, :, None] * v[None], axis=1))
        Qs.append(np.sum(wq, axis=(1, 2)))
    return np.concatenate(Gs), np.concatenate(Qs)


def phi_batch(plant, spec, a, X, quad=DEFAULT_QUAD):
    """Unicycle ``phi^a`` at each row of ``X`` (``[p1, p2, theta]``)."""
    if plant.kind != "unicycle":
        raise UnsupportedPlant("phi^a is defined for the unicycle")
    G, _ = _remainder_batch(plant, spec, a, np.atleast_2d(np.asarray(X, float)), quad)
    return G[:, 0]


def _check_refinement(value, refined):
    value = np.asarray(value, dtype=float)
    refined = np.asarray(refined, dtype=float)
    diff = float(np.max(np.abs(value - refined)))
    scale = float(np.max(np.abs(refined)))
    if diff > REFINE_RTOL * scale + REFINE_ATOL:
        raise QuadratureNotConverged(value, refined, diff / scale if scale else math.inf)


def _deltaG_from(plant, a, x_bar, G):
    if plant.kind == "integrator":
        return a * G
    th = x_bar[2]
    c = a * G[0]
    return np.array([c * math.cos(th), c * math.sin(th), 0.0])


def remainder_deltaG(plant, spec, a, x_bar, quad=DEFAULT_QUAD, check=True):
    """Remainder ``dG^a`` of the averaged plant field at ``x_bar``.

    With ``check`` the rule is re-run at twice the ``tau`` resolution and
    :class:`QuadratureNotConverged` is raised if the two disagree.
    """
    _require_builtin(plant)
    if a < 0:
        raise ValueError("a must be >= 0")
    x_bar = np.asarray(x_bar, dtype=float)[: plant.n]
    G, _ = _remainder_batch(plant, spec, a, x_bar[None], quad)
    out = _deltaG_from(plant, a, x_bar, G[0])
    if check:
        G2, _ = _remainder_batch(plant, spec, a, x_bar[None], quad.refined())
        _check_refinement(out, _deltaG_from(plant, a, x_bar, G2[0]))
    return out


def remainder_deltag(plant, spec, a, h, x_bar, quad=DEFAULT_QUAD, check=True):
    """Filter remainder ``dg^a = h a^2 (1/T) int int (1-s) <H U, U> ds dtau``."""
    _require_builtin(plant)
    if a < 0:
        raise ValueError("a must be >= 0")
    if h <= 0:
        raise ValueError("h must be > 0")
    x_bar = np.asarray(x_bar, dtype=float)[: plant.n]
    _, Q = _remainder_batch(plant, spec, a, x_bar[None], quad)
    out = h * a * a * float(Q[0])
    if check:
        _, Q2 = _remainder_batch(plant, spec, a, x_bar[None], quad.refined())
        _check_refinement(out, h * a * a * float(Q2[0]))
    return out


def effective_disturbance(t, dist, spec, params):
    """Disturbance channel of the averaged system: ``w^i = d_u^i + v^i(w t) d_y / a``, ``w^{m+1} = d_y``."""
    _, v, _ = spec.phases(params.omega * t)
    d_y = float(dist.d_y(t))
    w = [float(d(t)) + vi * d_y / params.a for d, vi in zip(dist.d_u, v)]
    w.append(d_y)
    return np.array(w)


def _assemble(plant, spec, params, x, eta, G, Q, w_bar, w_n):
    a, h = params.a, params.h
    main = averaged_main(plant, spec, x, params.Omega)
    dG = _deltaG_from(plant, a, x, G)
    if plant.kind == "integrator":
        dist_part = np.asarray(w_bar, dtype=float)
    else:
        th = x[2]
        wb = float(np.asarray(w_bar).reshape(-1)[0])
        dist_part = np.array([wb * math.cos(th), wb * math.sin(th), 0.0])
    plant_part = main + dG + dist_part
    psi = float(plant.objective.value(plant.position(x)))
    dg = h * a * a * Q
    eta_dot = -h * eta + h * psi + dg + h * w_n
    return np.append(plant_part, eta_dot)


def averaged_rhs(t_unused, bar_state, w_bar, w_n, plant, spec, params, quad=DEFAULT_QUAD):
    """Full averaged tangent ``[plant part, filter part]``; independent of time."""
    _require_builtin(plant)
    y = np.asarray(bar_state, dtype=float)
    x, eta = y[: plant.n], y[plant.n]
    G, Q = _remainder_batch(plant, spec, params.a, x[None], quad)
    return _assemble(plant, spec, params, x, eta, G[0], float(Q[0]), w_bar, w_n)


def averaged_field(plant, spec, params, dist, quad=DEFAULT_QUAD):
    """Build ``f(t, y)`` for the averaged system driven by the pathwise disturbance."""
    _require_builtin(plant)
    _check_dims(plant, spec, dist)
    n = plant.n
    zero_w = dist.is_zero

    def f(t, y):
        y = np.asarray(y, dtype=float)
        if zero_w:
            w_bar, w_n = np.zeros(plant.m), 0.0
        else:
            w = effective_disturbance(t, dist, spec, params)
            w_bar, w_n = w[:-1], float(w[-1])
        x = y[:n]
        G, Q = _remainder_batch(plant, spec, params.a, x[None], quad)
        return _assemble(plant, spec, params, x, y[n], G[0], float(Q[0]), w_bar, w_n).tolist()
    return f
