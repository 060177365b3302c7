"""Extremum-seeking feedback law, high-pass filter, disturbances and the closed loop.

The closed loop acts on flat states ``[plant state..., eta]``::

    u   = a w u(w t) + (1/a) v(w t) (y_hat - eta) + d_u(t)
    eta' = -h eta + h y_hat,        y_hat = psi(x) + d_y(t)

Right-hand sides used by the integrator are built once by
:func:`closed_loop_field` and operate on plain float sequences.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DimensionMismatch
from .plants import plant_rhs


@dataclass(frozen=True)
class EsParams:
    """Controller constants: amplitude ``a``, frequency ``omega``, filter gain ``h``.

    ``Omega`` is the constant turning rate and is only used by the unicycle.
    """

    a: float
    omega: float
    h: float = 1.0
    Omega: Optional[float] = None

    def __post_init__(self):
        for name in ("a", "omega", "h"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be > 0")
            object.__setattr__(self, name, float(val))
        if self.Omega is not None:
            if not (math.isfinite(self.Omega) and self.Omega > 0):
                raise ValueError("Omega must be > 0")
            object.__setattr__(self, "Omega", float(self.Omega))

    def replace(self, **changes):
        d = {"a": self.a, "omega": self.omega, "h": self.h, "Omega": self.Omega}
        d.update(changes)
        return EsParams(**d)


# -- disturbance descriptors -------------------------------------------------


@dataclass(frozen=True)
class Zero:
    kind = "zero"

    def __call__(self, t):
        return 0.0

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class Constant:
    value: float
    kind = "constant"

    def __call__(self, t):
        return self.value

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class SquareWave:
    """``eps * sgn(sin(omega_d t))`` with ``sgn(0) = +1``."""

    eps: float
    omega_d: float
    kind = "square_wave"

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("square_wave eps must be >= 0")

    def __call__(self, t):
        return self.eps if math.sin(self.omega_d * t) >= 0.0 else -self.eps

    def to_dict(self):
        return {"kind": self.kind, "eps": self.eps, "omega_d": self.omega_d}


@dataclass(frozen=True)
class Modulated:
    """``eps * sin(omega t) * cos(Omega t)``, resonant with the unicycle dither."""

    eps: float
    omega: float
    Omega: float
    kind = "modulated"

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("modulated eps must be >= 0")

    def __call__(self, t):
        return self.eps * math.sin(self.omega * t) * math.cos(self.Omega * t)

    def to_dict(self):
        return {"kind": self.kind, "eps": self.eps, "omega": self.omega, "Omega": self.Omega}


@dataclass(frozen=True)
class Sampled:
    """Table of ``(time, value)`` pairs with sample-and-hold; zero before the first stamp."""

    times: tuple
    values: tuple
    kind = "sampled"

    def __post_init__(self):
        times = tuple(float(x) for x in self.times)
        values = tuple(float(x) for x in self.values)
        if len(times) != len(values) or not times:
            raise ValueError("sampled disturbance needs equally long, non-empty tables")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("sampled disturbance times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __call__(self, t):
        k = bisect.bisect_right(self.times, t) - 1
        return self.values[k] if k >= 0 else 0.0

    def to_dict(self):
        return {"kind": self.kind, "times": list(self.times), "values": list(self.values)}


_KINDS = {
    "zero": (Zero, ()),
    "constant": (Constant, ("value",)),
    "square_wave": (SquareWave, ("eps", "omega_d")),
    "modulated": (Modulated, ("eps", "omega", "Omega")),
    "sampled": (Sampled, ("times", "values")),
}


def descriptor_from_dict(d, key="disturbance"):
    """Parse ``{"kind": ..., params...}`` into a descriptor, or raise ConfigError."""
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("expected an object with a 'kind' entry", key)
    kind = d["kind"]
    if kind not in _KINDS:
        raise ConfigError(f"unknown disturbance kind {kind!r}", f"{key}.kind")
    cls, names = _KINDS[kind]
    extra = set(d) - set(names) - {"kind"}
    if extra:
        raise ConfigError("unknown key", f"{key}.{sorted(extra)[0]}")
    missing = [n for n in names if n not in d]
    if missing:
        raise ConfigError("missing key", f"{key}.{missing[0]}")
    try:
        return cls(*(d[n] for n in names))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), key) from exc


@dataclass(frozen=True)
class DisturbanceSpec:
    """Input disturbances ``d_u`` (one descriptor per channel) and output ``d_y``."""

    d_u: tuple
    d_y: object = Zero()

    def __post_init__(self):
        object.__setattr__(self, "d_u", tuple(self.d_u))

    @classmethod
    def zero(cls, m=1):
        return cls((Zero(),) * m, Zero())

    @property
    def m(self):
        return len(self.d_u)

    @property
    def is_zero(self):
        return all(isinstance(d, Zero) for d in self.d_u + (self.d_y,))

    def to_dict(self):
        return {"d_u": [d.to_dict() for d in self.d_u], "d_y": self.d_y.to_dict()}

    @classmethod
    def from_dict(cls, d, m, key="disturbance"):
        if d is None:
            return cls.zero(m)
        extra = set(d) - {"d_u", "d_y"}
        if extra:
            raise ConfigError("unknown key", f"{key}.{sorted(extra)[0]}")
        du = d.get("d_u", [{"kind": "zero"}] * m)
        if isinstance(du, dict):
            du = [du] * m
        if len(du) != m:
            raise ConfigError(f"expected {m} input disturbance entries", f"{key}.d_u")
        return cls(
            tuple(descriptor_from_dict(x, f"{key}.d_u[{i}]") for i, x in enumerate(du)),
            descriptor_from_dict(d.get("d_y", {"kind": "zero"}), f"{key}.d_y"),
        )


def disturbance_eval(spec, t):
    """``(d_u(t), d_y(t))`` for a :class:`DisturbanceSpec`."""
    return np.array([d(t) for d in spec.d_u], dtype=float), float(spec.d_y(t))


# -- control law ---------------------------------------------------------------


def es_control(t, y_hat, eta, spec, params, d_u):
    """Extremum-seeking input ``a w u(w t) + (1/a) v(w t) (y_hat - eta) + d_u``."""
    u, v, _ = spec.phases(params.omega * t)
    aw = params.a * params.omega
    inv_a = 1.0 / params.a
    e = y_hat - eta
    d_u = np.broadcast_to(np.asarray(d_u, dtype=float), (spec.m,))
    return np.array([aw * ui + inv_a * vi * e + di for ui, vi, di in zip(u, v, d_u)])


def filter_rhs(eta, y_hat, h):
    """High-pass filter dynamics ``-h eta + h y_hat``."""
    return -h * eta + h * y_hat


def _check_dims(plant, spec, dist):
    if spec.m != plant.input_dim:
        raise DimensionMismatch(f"dither has {spec.m} channels, plant has {plant.input_dim} inputs")
    if dist.m != plant.input_dim:
        raise DimensionMismatch(f"disturbance has {dist.m} input channels")


def _input_disturbance(dist):
    if all(isinstance(d, Zero) for d in dist.d_u):
        return None
    return dist.d_u


def closed_loop_field(plant, spec, params, dist):
    """Build ``f(t, y)`` for the closed loop; returns a list of floats."""
    _check_dims(plant, spec, dist)
    a, om, h = params.a, params.omega, params.h
    aw = a * om
    inv_a = 1.0 / a
    psi = plant.objective.scalar_fn
    dy = dist.d_y
    du = _input_disturbance(dist)
    phases = spec.phases
    m = plant.m

    if plant.kind == "integrator":
        def f(t, y):
            yh = psi(y[:m]) + dy(t)
            eta = y[m]
            e = yh - eta
            u, v, _ = phases(om * t)
            if du is None:
                out = [aw * u[i] + inv_a * v[i] * e + 0.0 for i in range(m)]
            else:
                out = [aw * u[i] + inv_a * v[i] * e + du[i](t) for i in range(m)]
            out.append(-h * eta + h * yh)
            return out
        return f

    if plant.kind == "unicycle":
        if params.Omega is None:
            raise DimensionMismatch("unicycle closed loop needs params.Omega")
        Om = params.Omega
        du0 = None if du is None else du[0]

        def f(t, y):
            p1, p2, th, eta = y[0], y[1], y[2], y[3]
            yh = psi((p1, p2)) + dy(t)
            u, v, _ = phases(om * t)
            u1 = aw * u[0] + inv_a * v[0] * (yh - eta) + (0.0 if du0 is None else du0(t))
            return [u1 * math.cos(th), u1 * math.sin(th), Om, -h * eta + h * yh]
        return f

    n = plant.n

    def f(t, y):
        y = np.asarray(y, dtype=float)
        x, eta = y[:n], y[n]
        d_u, d_y = disturbance_eval(dist, t)
        yh = float(plant.objective.value(plant.position(x))) + d_y
        u_in = es_control(t, yh, eta, spec, params, d_u)
        dx = plant_rhs(plant, x, u_in)
        return dx.tolist() + [filter_rhs(eta, yh, h)]
    return f


def closed_loop_rhs(t, state, plant, spec, params, dist):
    """Closed-loop tangent vector at ``(t, [x, eta])``."""
    return np.asarray(closed_loop_field(plant, spec, params, dist)(t, np.asarray(state, float)))
