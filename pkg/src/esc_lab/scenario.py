"""Scenario configuration: JSON schema, compiled-in presets and simulation dispatch.

A scenario config is a JSON object::

    {
      "name": "fig3a",
      "plant": {"kind": "integrator", "m": 1},
      "objective": {"kind": "quadratic", "curvature": 1.0},
      "dither": {"alpha": [0.25], "c": [1.0], "varpi": [1]},
      "params": {"a": 1.0, "omega": 10.0, "h": 1.0},
      "disturbance": {"d_y": {"kind": "square_wave", "eps": 0.1, "omega_d": 10.0}},
      "initial_state": [1.0, 0.0],
      "t_span": [0.0, 100.0],
      "system": "closed-loop",
      "solver": {"dt": null},
      "quad": {"n_tau": 512, "n_s": 8},
      "artifact_defaults": ["initial_state", "t_span"]
    }

``initial_state`` is the closed-loop state with the filter state last.
Everything but ``plant``, ``params``, ``initial_state`` and ``t_span`` has a
default. ``artifact_defaults`` labels values that are tool choices rather than
externally prescribed constants.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .averaging import DEFAULT_QUAD, QuadratureSpec, averaged_field
from .controller import DisturbanceSpec, EsParams, closed_loop_field
from .errors import ConfigError
from .plants import Plant, commutation_check, quadratic_objective, source_objective
from .pullback import CoordinateMap, pullback_field
from .signals import DitherSpec, validate_assumptions
from .solver import AVERAGED_DT, default_step, integrate

SYSTEM_ALIASES = {
    "closed-loop": "closed_loop", "closed_loop": "closed_loop",
    "pullback": "pullback", "pull-back": "pullback",
    "averaged": "averaged",
}
TOP_KEYS = {"name", "plant", "objective", "dither", "params", "disturbance", "initial_state",
            "t_span", "system", "solver", "quad", "artifact_defaults", "outdir"}


@dataclass(frozen=True, eq=False)
class Scenario:
    """A fully resolved simulation setup."""

    name: str
    plant: Plant
    spec: DitherSpec
    params: EsParams
    dist: DisturbanceSpec
    state0: tuple
    t_span: tuple
    system: str = "closed_loop"
    dt: Optional[float] = None
    quad: QuadratureSpec = DEFAULT_QUAD
    artifact_defaults: tuple = ()
    config: dict = field(default_factory=dict)

    def replace(self, **changes):
        """Copy with fields replaced; the stored config is updated to match."""
        d = dict(self.__dict__)
        d.update(changes)
        cfg = copy.deepcopy(self.config)
        if "params" in changes:
            p = changes["params"]
            cfg["params"] = _params_dict(p)
        if "system" in changes:
            cfg["system"] = changes["system"].replace("_", "-")
        if "dt" in changes:
            cfg.setdefault("solver", {})["dt"] = changes["dt"]
        if "state0" in changes:
            cfg["initial_state"] = [float(x) for x in changes["state0"]]
        if "t_span" in changes:
            cfg["t_span"] = [float(x) for x in changes["t_span"]]
        if "dist" in changes:
            cfg["disturbance"] = changes["dist"].to_dict()
        if "name" in changes:
            cfg["name"] = changes["name"]
        d["config"] = cfg
        return Scenario(**d)

    @property
    def state_names(self):
        return self.plant.state_names + ("eta",)

    def step(self, system=None):
        """Integration step: the explicit override, else the system default.

        Averaged runs with a disturbance reuse the oscillatory step because the
        effective disturbance oscillates at the dither frequency.
        """
        system = system or self.system
        if self.dt is not None and system == self.system:
            return float(self.dt)
        base = default_step(self.params, "closed_loop", self.spec.T)
        if system != "averaged":
            return base
        return AVERAGED_DT if self.dist.is_zero else min(AVERAGED_DT, base)

    def to_dict(self):
        """Resolved config; feeding it back through :func:`from_config` reproduces the run."""
        cfg = copy.deepcopy(self.config)
        cfg["system"] = self.system.replace("_", "-")
        cfg.setdefault("solver", {})["dt"] = self.step()
        cfg["quad"] = {"n_tau": self.quad.n_tau, "n_s": self.quad.n_s}
        return cfg


def _params_dict(p):
    d = {"a": p.a, "omega": p.omega, "h": p.h}
    if p.Omega is not None:
        d["Omega"] = p.Omega
    return d


def _require(d, key, path):
    if key not in d:
        raise ConfigError("missing key", f"{path}{key}")
    return d[key]


def _no_extra(d, allowed, path):
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError("unknown key", f"{path}{sorted(extra)[0]}")


def _float_list(x, key):
    try:
        out = [float(v) for v in (x if isinstance(x, (list, tuple)) else [x])]
    except (TypeError, ValueError) as exc:
        raise ConfigError("expected numbers", key) from exc
    if not all(math.isfinite(v) for v in out):
        raise ConfigError("values must be finite", key)
    return out


def _objective(cfg, plant_kind, m):
    cfg = dict(cfg or {"kind": "quadratic" if plant_kind == "integrator" else "source"})
    kind = _require(cfg, "kind", "objective.")
    try:
        if kind == "quadratic":
            _no_extra(cfg, {"kind", "curvature", "center"}, "objective.")
            return quadratic_objective(m, cfg.get("curvature", 1.0), cfg.get("center"))
        if kind == "source":
            _no_extra(cfg, {"kind", "peak", "weights", "center"}, "objective.")
            return source_objective(cfg.get("peak", 4.0), cfg.get("weights", (1.0, 2.0)),
                                    cfg.get("center", (0.0, 0.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "objective") from exc
    raise ConfigError(f"unknown objective kind {kind!r}", "objective.kind")


def _plant(cfg, obj_cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("expected an object", "plant")
    kind = _require(cfg, "kind", "plant.")
    if kind == "integrator1d":
        if cfg.get("m", 1) != 1:
            raise ConfigError("integrator1d has m = 1", "plant.m")
        kind = "integrator"
    if kind == "integrator":
        _no_extra(cfg, {"kind", "m"}, "plant.")
        m = cfg.get("m", 1)
        if not isinstance(m, int) or m < 1:
            raise ConfigError("m must be a positive integer", "plant.m")
        return Plant.integrator(_objective(obj_cfg, kind, m))
    if kind == "unicycle":
        _no_extra(cfg, {"kind"}, "plant.")
        obj = _objective(obj_cfg, kind, 2)
        if obj.dim != 2:
            raise ConfigError("unicycle objective must be planar", "objective")
        return Plant.unicycle(obj)
    raise ConfigError(f"unknown plant kind {kind!r}", "plant.kind")


def _dither(cfg, m):
    if cfg is None:
        return DitherSpec.uniform(m)
    _no_extra(cfg, {"alpha", "c", "varpi"}, "dither.")
    alpha = _float_list(cfg.get("alpha", [0.25] * m), "dither.alpha")
    c = _float_list(cfg.get("c", [1.0] * m), "dither.c")
    varpi = cfg.get("varpi", list(range(1, m + 1)))
    varpi = varpi if isinstance(varpi, list) else [varpi]
    if len(alpha) != m or len(c) != m or len(varpi) != m:
        raise ConfigError(f"expected {m} entries per dither field", "dither")
    return DitherSpec(tuple(alpha), tuple(c), tuple(varpi))


def _params(cfg, plant):
    if not isinstance(cfg, dict):
        raise ConfigError("expected an object", "params")
    _no_extra(cfg, {"a", "omega", "h", "Omega"}, "params.")
    for key in ("a", "omega"):
        _require(cfg, key, "params.")
    vals = {}
    for key in ("a", "omega", "h", "Omega"):
        if cfg.get(key) is None:
            continue
        val = cfg[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError("expected a number", f"params.{key}")
        if not (math.isfinite(val) and val > 0):
            raise ConfigError(f"{key} must be > 0", f"params.{key}")
        vals[key] = float(val)
    if plant.kind == "unicycle" and "Omega" not in vals:
        raise ConfigError("missing key (unicycle turning rate)", "params.Omega")
    return EsParams(**vals)


def from_config(cfg, validate=True):
    """Build a :class:`Scenario` from a config mapping.

    Raises :class:`ConfigError` with a dotted key path on schema problems and,
    with ``validate``, :class:`ValidationFailure` when the dither or plant
    violates a structural assumption.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    _no_extra(cfg, TOP_KEYS, "")
    cfg = copy.deepcopy(cfg)
    plant = _plant(_require(cfg, "plant", ""), cfg.get("objective"))
    spec = _dither(cfg.get("dither"), plant.m)
    params = _params(_require(cfg, "params", ""), plant)
    dist = DisturbanceSpec.from_dict(cfg.get("disturbance"), plant.m)
    state0 = _float_list(_require(cfg, "initial_state", ""), "initial_state")
    if len(state0) != plant.n + 1:
        raise ConfigError(f"expected {plant.n + 1} entries (plant state and eta)", "initial_state")
    span = _float_list(_require(cfg, "t_span", ""), "t_span")
    if len(span) != 2 or not span[1] > span[0]:
        raise ConfigError("expected [t0, t1] with t1 > t0", "t_span")
    system = cfg.get("system", "closed-loop")
    if system not in SYSTEM_ALIASES:
        raise ConfigError(f"unknown system {system!r}", "system")
    solver = cfg.get("solver") or {}
    _no_extra(solver, {"dt"}, "solver.")
    dt = solver.get("dt")
    if dt is not None and not (isinstance(dt, (int, float)) and dt > 0):
        raise ConfigError("dt must be > 0", "solver.dt")
    q = cfg.get("quad") or {}
    _no_extra(q, {"n_tau", "n_s"}, "quad.")
    try:
        quad = QuadratureSpec(q.get("n_tau", 512), q.get("n_s", 8))
    except ValueError as exc:
        raise ConfigError(str(exc), "quad") from exc
    if validate:
        validate_assumptions(spec)
        commutation_check(plant)
    cfg["system"] = system
    cfg["params"] = _params_dict(params)
    return Scenario(
        name=str(cfg.get("name", "scenario")), plant=plant, spec=spec, params=params, dist=dist,
        state0=tuple(state0), t_span=tuple(span), system=SYSTEM_ALIASES[system],
        dt=None if dt is None else float(dt), quad=quad,
        artifact_defaults=tuple(cfg.get("artifact_defaults", ())), config=cfg,
    )


def load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON ({exc.msg} at line {exc.lineno})") from exc


# -- presets -------------------------------------------------------------------

_INTEGRATOR = {
    "plant": {"kind": "integrator", "m": 1},
    "objective": {"kind": "quadratic", "curvature": 1.0},
    "dither": {"alpha": [0.25], "c": [1.0], "varpi": [1]},
    "initial_state": [1.0, 0.0],
    "t_span": [0.0, 100.0],
    "artifact_defaults": ["initial_state", "t_span"],
}
_UNICYCLE = {
    "plant": {"kind": "unicycle"},
    "objective": {"kind": "source", "peak": 4.0, "weights": [1.0, 2.0], "center": [0.0, 0.0]},
    "dither": {"alpha": [0.25], "c": [1.0], "varpi": [1]},
    "initial_state": [2.0, 0.0, 0.0, 0.0],
    "t_span": [0.0, 200.0],
    "artifact_defaults": ["initial_state", "t_span"],
}


def _fig3(name, omega_d, eps=0.1, span=(0.0, 100.0)):
    cfg = copy.deepcopy(_INTEGRATOR)
    cfg.update(name=name, params={"a": 1.0, "omega": 10.0, "h": 1.0}, t_span=list(span))
    d_y = {"kind": "zero"} if eps == 0 else {"kind": "square_wave", "eps": eps, "omega_d": omega_d}
    cfg["disturbance"] = {"d_u": [{"kind": "zero"}], "d_y": d_y}
    return cfg


def _fig4(name, a, eps, span=(0.0, 200.0)):
    omega = 10.0
    cfg = copy.deepcopy(_UNICYCLE)
    cfg.update(name=name, params={"a": a, "omega": omega, "h": 1.0, "Omega": 1.0},
               t_span=list(span))
    d_y = {"kind": "zero"} if eps == 0 else {"kind": "modulated", "eps": eps, "omega": omega,
                                               "Omega": 1.0}
    cfg["disturbance"] = {"d_u": [{"kind": "zero"}], "d_y": d_y}
    return cfg


_SMALL_A = 1.0 / math.sqrt(10.0)

PRESETS = {
    "fig3a": _fig3("fig3a", 10.0),
    "fig3b": _fig3("fig3b", math.sqrt(2.0) * 10.0),
    "fig4a": _fig4("fig4a", 1.0, 0.0),
    "fig4b": _fig4("fig4b", _SMALL_A, 0.0),
    "fig4c": _fig4("fig4c", 1.0, 0.1),
    "fig4d": _fig4("fig4d", _SMALL_A, 0.1),
    "fig3-nodisturbance": _fig3("fig3-nodisturbance", 10.0, eps=0.0, span=(0.0, 10.0)),
    "fig4-nodisturbance": _fig4("fig4-nodisturbance", 1.0, 0.0, span=(0.0, 10.0)),
}
FIGURES = ("fig3a", "fig3b", "fig4a", "fig4b", "fig4c", "fig4d")


def preset(name):
    """Config dict of a compiled-in preset (a fresh copy)."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return copy.deepcopy(PRESETS[name])


def resolve(source):
    """Scenario from a preset name, a config path, a dict or a Scenario."""
    if isinstance(source, Scenario):
        return source
    if isinstance(source, dict):
        return from_config(source)
    if source in PRESETS:
        return from_config(preset(source))
    return from_config(load_config(source))


# -- simulation ------------------------------------------------------------------


def simulate(scenario, system=None, dt=None):
    """Integrate one of the three systems of ``scenario`` on its time span.

    The pull-back and averaged runs start from the pull-back image of the
    closed-loop initial state.
    """
    system = SYSTEM_ALIASES.get(system, system) if system else scenario.system
    dt = scenario.step(system) if dt is None else float(dt)
    t0, t1 = scenario.t_span
    plant, spec, params, dist = scenario.plant, scenario.spec, scenario.params, scenario.dist
    meta = {"scenario": scenario.to_dict(), "system": system, "dt": dt}
    names = scenario.state_names
    if system == "closed_loop":
        rhs = closed_loop_field(plant, spec, params, dist)
        y0 = scenario.state0
    else:
        y0 = CoordinateMap(plant, spec, params).to_pullback(t0, scenario.state0)
        if system == "pullback":
            rhs = pullback_field(plant, spec, params, dist)
        elif system == "averaged":
            rhs = averaged_field(plant, spec, params, dist, scenario.quad)
        else:
            raise ValueError(f"unknown system {system!r}")
    return integrate(rhs, y0, t0, t1, dt, system_tag=system, state_names=names, metadata=meta)


def pullback_via_transform(scenario, dt=None):
    """Closed-loop run mapped pointwise into pull-back coordinates."""
    traj = simulate(scenario, "closed_loop", dt)
    cmap = CoordinateMap(scenario.plant, scenario.spec, scenario.params)
    out = traj.with_states(cmap.to_pullback_many(traj.times, traj.states), "pullback")
    out.metadata["path"] = "transform"
    return out


def initial_states_on_shell(scenario, rho, count=4):
    """Deterministic initial states at distance ``rho`` and ``rho/2`` from the optimizer."""
    p_star, _ = scenario.plant.objective.require_optimum()
    dim = len(p_star)
    out = []
    for k in range(count):
        r = rho if k % 2 == 0 else rho / 2.0
        if dim == 1:
            direction = np.array([1.0 if k < count / 2 else -1.0])
        else:
            ang = 2.0 * math.pi * k / count
            direction = np.zeros(dim)
            direction[0], direction[1] = math.cos(ang), math.sin(ang)
        pos = p_star + r * direction
        rest = list(scenario.state0[dim:])
        out.append(tuple(pos.tolist() + rest))
    return out
