"""Change of coordinates into the frame moving with the dither flow.

With ``x = Phi_a^{F^{w t}}(x~)`` and ``eta = eta~`` the large ``a w u(w t)``
term disappears from the closed loop. For the built-in plants the flow is a
translation:

* integrator: ``x = x~ + a U(w t)``;
* unicycle:   ``p = p~ + a U(w t) o~``, heading and filter unchanged.

:func:`pullback_field` integrates the transformed dynamics directly; the
transform path (closed loop followed by :meth:`CoordinateMap.to_pullback`)
must agree with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .controller import EsParams, _check_dims, _input_disturbance
from .errors import UnsupportedPlant
from .plants import Plant, flow_phi


def _require_builtin(plant):
    if plant.kind not in ("integrator", "unicycle"):
        raise UnsupportedPlant("pull-back coordinates exist for the built-in plants only")


@dataclass(frozen=True)
class CoordinateMap:
    plant: Plant
    spec: object
    params: EsParams

    def __post_init__(self):
        _require_builtin(self.plant)

    def from_pullback(self, t, tilde_state):
        """Closed-loop state ``[x, eta]`` for pull-back state ``[x~, eta~]`` at time ``t``."""
        return flow_phi(self.plant, self.spec, self.params.omega * t, self.params.a, tilde_state)

    def to_pullback(self, t, state):
        out = np.array(state, dtype=float)
        U = np.asarray(self.spec.U(self.params.omega * t), dtype=float)
        a = self.params.a
        if self.plant.kind == "integrator":
            out[: self.plant.m] -= a * U
        else:
            th = out[2]
            out[0] -= a * U[0] * math.cos(th)
            out[1] -= a * U[0] * math.sin(th)
        return out

    def to_pullback_many(self, times, states):
        """Vectorized :meth:`to_pullback` over a ``(n_samples, dim)`` array."""
        states = np.array(states, dtype=float)
        U = self.spec.U(self.params.omega * np.asarray(times, dtype=float))
        a = self.params.a
        if self.plant.kind == "integrator":
            states[:, : self.plant.m] -= a * U
        else:
            th = states[:, 2]
            states[:, 0] -= a * U[:, 0] * np.cos(th)
            states[:, 1] -= a * U[:, 0] * np.sin(th)
        return states

    def from_pullback_many(self, times, tilde_states):
        states = np.array(tilde_states, dtype=float)
        U = self.spec.U(self.params.omega * np.asarray(times, dtype=float))
        a = self.params.a
        if self.plant.kind == "integrator":
            states[:, : self.plant.m] += a * U
        else:
            th = states[:, 2]
            states[:, 0] += a * U[:, 0] * np.cos(th)
            states[:, 1] += a * U[:, 0] * np.sin(th)
        return states


def pullback_field(plant, spec, params, dist):
    """Build ``f(t, y~)`` for the pull-back system; returns a list of floats."""
    _require_builtin(plant)
    _check_dims(plant, spec, dist)
    a, om, h = params.a, params.omega, params.h
    inv_a = 1.0 / a
    psi = plant.objective.scalar_fn
    dy = dist.d_y
    du = _input_disturbance(dist)
    phases = spec.phases
    m = plant.m

    if plant.kind == "integrator":
        def f(t, y):
            _, v, U = phases(om * t)
            shifted = [y[i] + a * U[i] for i in range(m)]
            yh = psi(shifted) + dy(t)
            eta = y[m]
            e = yh - eta
            if du is None:
                out = [inv_a * v[i] * e for i in range(m)]
            else:
                out = [du[i](t) + inv_a * v[i] * e for i in range(m)]
            out.append(-h * eta + h * yh)
            return out
        return f

    if params.Omega is None:
        raise ValueError("unicycle pull-back needs params.Omega")
    Om = params.Omega
    du0 = None if du is None else du[0]

    def f(t, y):
        p1, p2, th, eta = y[0], y[1], y[2], y[3]
        _, v, U = phases(om * t)
        co, si = math.cos(th), math.sin(th)
        shift = a * U[0]
        yh = psi((p1 + shift * co, p2 + shift * si)) + dy(t)
        g = inv_a * v[0] * (yh - eta) + (0.0 if du0 is None else du0(t))
        turn = shift * Om
        return [g * co + turn * si, g * si - turn * co, Om, -h * eta + h * yh]
    return f


def tilde_rhs(t, tilde_state, plant, spec, params, dist):
    """Pull-back tangent vector at ``(t, [x~, eta~])``."""
    f = pullback_field(plant, spec, params, dist)
    return np.asarray(f(t, np.asarray(tilde_state, dtype=float)))

