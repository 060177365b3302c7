"""Fixed-step classical Runge-Kutta integration onto a uniform time grid."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUp

BLOWUP_LIMIT = 1e9
STEPS_PER_PERIOD = 64
AVERAGED_DT = 0.01
SYSTEMS = ("closed_loop", "pullback", "averaged")


@dataclass
class Trajectory:
    """Samples of one integrated system on ``t0, t0 + dt, ..., t1``.

    ``states`` has shape ``(len(times), dim)``. ``state_names`` label the
    columns and end with ``"eta"`` for closed-loop style states.
    """

    times: np.ndarray
    states: np.ndarray
    dt: float
    system_tag: str = "closed_loop"
    state_names: tuple = ()
    metadata: dict = field(default_factory=dict)

    @property
    def t0(self):
        return float(self.times[0])

    @property
    def t1(self):
        return float(self.times[-1])

    def __len__(self):
        return len(self.times)

    @property
    def final(self):
        return self.states[-1]

    def column(self, name):
        return self.states[:, self.state_names.index(name)]

    def window(self, t_lo, t_hi=math.inf):
        """Boolean mask of grid points with ``t_lo <= t <= t_hi``."""
        tol = 1e-9 * max(1.0, abs(self.t1))
        return (self.times >= t_lo - tol) & (self.times <= t_hi + tol)

    def subsample(self, stride):
        """Every ``stride``-th sample; the final sample is always kept."""
        if stride == 1:
            return self
        idx = np.arange(0, len(self.times), stride)
        if idx[-1] != len(self.times) - 1:
            idx = np.append(idx, len(self.times) - 1)
        return Trajectory(self.times[idx], self.states[idx], self.dt * stride, self.system_tag,
                          self.state_names, dict(self.metadata))

    def with_states(self, states, system_tag=None):
        return Trajectory(self.times, np.asarray(states, dtype=float), self.dt,
                          system_tag or self.system_tag, self.state_names, dict(self.metadata))

    def to_csv(self, target=None):
        """Write ``t,<state names>`` rows with 12 significant digits.

        ``target`` may be a path (written atomically) or a text stream. With no
        target the CSV text is returned.
        """
        buf = io.StringIO()
        buf.write(",".join(("t",) + tuple(self.state_names)) + "\n")
        for t, row in zip(self.times.tolist(), self.states.tolist()):
            buf.write(",".join(format(x, ".12g") for x in [t] + row) + "\n")
        text = buf.getvalue()
        if target is None:
            return text
        if hasattr(target, "write"):
            target.write(text)
            return None
        atomic_write(target, text)
        return None

    @classmethod
    def from_csv(cls, path, system_tag="closed_loop"):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        names = tuple(rows[0][1:])
        data = np.array([[float(x) for x in r] for r in rows[1:]])
        dt = float(data[1, 0] - data[0, 0]) if len(data) > 1 else 0.0
        return cls(data[:, 0], data[:, 1:], dt, system_tag, names)


def atomic_write(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def time_grid(t0, t1, dt):
    """Uniform grid from ``t0`` to ``t1``.

    When the span is a whole number of steps the last node is snapped to
    ``t1``; otherwise one extra, shortened step ends exactly at ``t1``.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    ratio = (t1 - t0) / dt
    n = max(1, round(ratio))
    if abs(n - ratio) <= 1e-9 * max(1.0, ratio):
        times = t0 + dt * np.arange(n + 1)
    else:
        n = math.ceil(ratio)
        times = t0 + dt * np.arange(n + 1)
    times[-1] = t1
    return times


def integrate(rhs, state0, t0, t1, dt, system_tag="closed_loop", state_names=(), metadata=None):
    """Integrate ``y' = rhs(t, y)`` with classical RK4 on a fixed grid.

    ``rhs`` receives a list of floats and returns a sequence of floats.
    Raises :class:`BlowUp` as soon as a component is non-finite or exceeds
    ``1e9`` in magnitude.
    """
    times = time_grid(float(t0), float(t1), float(dt))
    y = [float(x) for x in np.asarray(state0, dtype=float).ravel()]
    n = len(y)
    idx = range(n)
    out = [tuple(y)]
    tl = times.tolist()
    for k in range(len(tl) - 1):
        t = tl[k]
        h = tl[k + 1] - t
        h2 = 0.5 * h
        k1 = rhs(t, y)
        k2 = rhs(t + h2, [y[i] + h2 * k1[i] for i in idx])
        k3 = rhs(t + h2, [y[i] + h2 * k2[i] for i in idx])
        k4 = rhs(t + h, [y[i] + h * k3[i] for i in idx])
        h6 = h / 6.0
        y = [y[i] + h6 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) for i in idx]
        for v in y:
            if not abs(v) <= BLOWUP_LIMIT:
                raise BlowUp(tl[k + 1], y)
        out.append(tuple(y))
    return Trajectory(times, np.array(out, dtype=float), float(dt), system_tag,
                      tuple(state_names), dict(metadata or {}))


def default_step(params, system="closed_loop", T=2.0 * math.pi):
    """Default RK4 step: 64 steps per dither period, or 0.01 for the averaged system."""
    if system == "averaged":
        return AVERAGED_DT
    if system not in SYSTEMS:
        raise ValueError(f"unknown system {system!r}")
    if not params.omega > 0:
        raise ValueError("omega must be > 0")
    return (T / params.omega) / STEPS_PER_PERIOD
