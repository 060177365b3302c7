"""Oscillatory dither signals u, v, the antiderivative U and their iterated integral.

Two signal families share one duck-typed interface (``m``, ``T``, ``u``, ``v``,
``U``, ``phases``, ``uv_matrix``):

* :class:`DitherSpec`, the sinusoid family
  ``u^i = alpha^i varpi^i cos(varpi^i tau)``, ``v^j = c^j sin(varpi^j tau)``;
* :class:`SampledDither`, periodic signals given by samples over one period
  and interpolated piecewise linearly.

Vectorized evaluators accept scalar or array phases and return arrays with a
trailing channel axis of length ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationFailure
from .quadrature import simpson

TWO_PI = 2.0 * math.pi

# analytic-vs-quadrature tolerance
QUAD_TOL = 1e-10
# intervals per period for validation quadrature
QUAD_INTERVALS = 4096


@dataclass(frozen=True)
class DitherSpec:
    """Sinusoidal dither family with per-channel amplitudes and integer frequencies.

    Construction only checks shapes; the positivity and distinct-frequency
    requirements are enforced by :func:`validate_assumptions`, so that invalid
    specs can still be built and reported on.
    """

    alpha: tuple
    c: tuple
    varpi: tuple
    T: float = TWO_PI

    def __post_init__(self):
        alpha = tuple(float(x) for x in np.atleast_1d(self.alpha))
        c = tuple(float(x) for x in np.atleast_1d(self.c))
        varpi = tuple(np.atleast_1d(self.varpi).tolist())
        if not (len(alpha) == len(c) == len(varpi)) or not alpha:
            raise ValueError(
                f"alpha, c, varpi must have equal positive length, got "
                f"{len(alpha)}, {len(c)}, {len(varpi)}"
            )
        if not all(math.isfinite(x) for x in alpha + c):
            raise ValueError("dither amplitudes must be finite")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "varpi", varpi)
        object.__setattr__(self, "T", float(self.T))

    @classmethod
    def uniform(cls, m=1, alpha=0.25, c=1.0, varpi=None):
        """Spec with equal amplitudes on every channel and frequencies 1..m."""
        varpi = tuple(range(1, m + 1)) if varpi is None else varpi
        return cls((alpha,) * m, (c,) * m, varpi)

    @property
    def m(self):
        return len(self.alpha)

    def _arrays(self):
        return (np.asarray(self.alpha), np.asarray(self.c), np.asarray(self.varpi, dtype=float))

    def u(self, tau):
        al, _, w = self._arrays()
        tau = np.asarray(tau, dtype=float)[..., None]
        return al * w * np.cos(w * tau)

    def v(self, tau):
        _, c, w = self._arrays()
        tau = np.asarray(tau, dtype=float)[..., None]
        return c * np.sin(w * tau)

    def U(self, tau):
        al, _, w = self._arrays()
        tau = np.asarray(tau, dtype=float)[..., None]
        return al * np.sin(w * tau)

    def phases(self, tau):
        """Scalar fast path: ``(u, v, U)`` at phase ``tau`` as tuples of floats."""
        u, v, U = [], [], []
        for al, c, w in zip(self.alpha, self.c, self.varpi):
            s = math.sin(w * tau)
            u.append(al * w * math.cos(w * tau))
            v.append(c * s)
            U.append(al * s)
        return u, v, U

    def uv_matrix(self):
        """Closed-form iterated integral, ``alpha^i c^j delta_ij / 2``."""
        al, c, _ = self._arrays()
        return np.diag(al * c / 2.0)

    def u_max(self):
        """Largest attainable ``|U(tau)|`` per channel."""
        return np.abs(np.asarray(self.alpha))


@dataclass(frozen=True, eq=False)
class SampledDither:
    """Periodic dither pair given by ``n`` samples per period.

    ``u_samples`` and ``v_samples`` have shape ``(n, m)`` and hold the values at
    ``tau_k = k T / n``. Between samples the signals are linear; ``U`` is the
    exact integral of the interpolated ``u``.

    Linear interpolation makes ``uv_matrix`` second-order accurate in the
    sample spacing: a sampled sinusoid with 4096 samples per period matches
    the closed form to about ``4e-7`` relative, not ``1e-10``. Dithers with
    jumps converge more slowly still, so sample them finely.
    """

    u_samples: np.ndarray
    v_samples: np.ndarray
    T: float = TWO_PI
    _cumU: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        us = np.atleast_2d(np.asarray(self.u_samples, dtype=float))
        vs = np.atleast_2d(np.asarray(self.v_samples, dtype=float))
        if us.shape[0] == 1 and us.shape[1] > 1 and vs.shape == us.shape:
            us, vs = us.T, vs.T
        if us.shape != vs.shape or us.shape[0] < 4:
            raise ValueError("u_samples and v_samples need equal shape (n>=4, m)")
        if not (np.all(np.isfinite(us)) and np.all(np.isfinite(vs))):
            raise ValueError("dither samples must be finite")
        us.setflags(write=False)
        vs.setflags(write=False)
        object.__setattr__(self, "u_samples", us)
        object.__setattr__(self, "v_samples", vs)
        object.__setattr__(self, "T", float(self.T))
        h = self.T / us.shape[0]
        nxt = np.roll(us, -1, axis=0)
        cum = np.vstack([np.zeros(us.shape[1]), np.cumsum(0.5 * h * (us + nxt), axis=0)])
        object.__setattr__(self, "_cumU", cum)

    @property
    def m(self):
        return self.u_samples.shape[1]

    @property
    def n(self):
        return self.u_samples.shape[0]

    def _locate(self, tau):
        tau = np.asarray(tau, dtype=float)
        h = self.T / self.n
        periods = np.floor(tau / self.T)
        r = tau - periods * self.T
        k = np.minimum((r / h).astype(int), self.n - 1)
        s = r - k * h
        return periods, k, s, h

    def _interp(self, samples, tau):
        _, k, s, h = self._locate(tau)
        lo = samples[k]
        hi = samples[(k + 1) % self.n]
        return lo + (hi - lo) * (s / h)[..., None]

    def u(self, tau):
        return self._interp(self.u_samples, tau)

    def v(self, tau):
        return self._interp(self.v_samples, tau)

    def U(self, tau):
        periods, k, s, h = self._locate(tau)
        lo = self.u_samples[k]
        hi = self.u_samples[(k + 1) % self.n]
        s = s[..., None]
        within = lo * s + (hi - lo) * s * s / (2.0 * h)
        return self._cumU[k] + within + periods[..., None] * self._cumU[-1]

    def phases(self, tau):
        return (
            self.u(tau).tolist(),
            self.v(tau).tolist(),
            self.U(tau).tolist(),
        )

    def mean_u(self):
        return self._cumU[-1] / self.T

    def mean_v(self):
        return self.v_samples.mean(axis=0)

    def mean_U(self):
        """Exact period mean of the piecewise-quadratic antiderivative."""
        h = self.T / self.n
        lo = self.u_samples
        hi = np.roll(lo, -1, axis=0)
        seg = self._cumU[:-1] * h + lo * h * h / 2.0 + (hi - lo) * h * h / 6.0
        return seg.sum(axis=0) / self.T

    def uv_matrix(self):
        return _uv_quadrature(self)

    def u_max(self):
        grid = np.linspace(0.0, self.T, 8 * self.n + 1)
        return np.abs(self.U(grid)).max(axis=0)


def dither_u(spec, tau):
    """Dither ``u`` at phase ``tau``; shape ``(m,)`` for scalar ``tau``."""
    return spec.u(tau)


def dither_v(spec, tau):
    return spec.v(tau)


def antiderivative_U(spec, tau):
    """``U(tau) = int_0^tau u``; zero at ``tau = 0`` and T-periodic for valid specs."""
    return spec.U(tau)


def _uv_quadrature(spec, n=QUAD_INTERVALS):
    def integrand(tau):
        U = spec.U(tau)
        v = spec.v(tau)
        return U[:, :, None] * v[:, None, :]

    return simpson(integrand, 0.0, spec.T, n) / spec.T


def iterated_integral_Uv(spec, method="closed"):
    """Matrix of ``(1/T) int_0^T U^i v^j``.

    ``method="closed"`` uses the closed form where one exists (sinusoid
    family); ``"quadrature"`` always integrates with composite Simpson.
    """
    if method == "quadrature":
        return _uv_quadrature(spec)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    return spec.uv_matrix()


@dataclass
class ValidationReport:
    """Outcome of :func:`validate_assumptions`; one ``(name, passed, detail)`` per check."""

    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(ok for _, ok, _ in self.checks)

    def add(self, name, ok, detail=""):
        self.checks.append((name, bool(ok), detail))

    def failures(self):
        return [c for c in self.checks if not c[1]]

    def to_dict(self):
        return {
            "passed": self.passed,
            "checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in self.checks],
        }


def validate_assumptions(spec, raise_on_failure=True):
    """Check periodicity, zero mean of u, v, U and the frequency premises.

    Raises :class:`ValidationFailure` naming the first violated assumption
    unless ``raise_on_failure`` is false, in which case the report is returned
    either way.
    """
    report = ValidationReport()
    T = spec.T
    sinusoid = isinstance(spec, DitherSpec)

    if sinusoid:
        ok = all(x > 0 for x in spec.alpha + spec.c)
        report.add("positive-amplitudes", ok, f"alpha={spec.alpha}, c={spec.c}")
        ints = all(float(w).is_integer() and w >= 1 for w in spec.varpi)
        report.add("integer-frequencies", ints, f"varpi={spec.varpi}")
        report.add("period", math.isclose(T, TWO_PI, rel_tol=0, abs_tol=1e-15) and ints,
                   f"T={T!r}")

    grid = np.linspace(0.0, T, 257)
    scale = 1.0 + float(np.abs(spec.u(grid)).max() + np.abs(spec.v(grid)).max())
    shift = max(
        float(np.abs(spec.u(grid + T) - spec.u(grid)).max()),
        float(np.abs(spec.v(grid + T) - spec.v(grid)).max()),
    )
    report.add("periodic-samples", shift <= QUAD_TOL * scale, f"max shift {shift:.3e}")

    if sinusoid:
        mean_u = simpson(spec.u, 0.0, T, QUAD_INTERVALS) / T
        mean_v = simpson(spec.v, 0.0, T, QUAD_INTERVALS) / T
        mean_U = simpson(spec.U, 0.0, T, QUAD_INTERVALS) / T
    else:
        mean_u, mean_v, mean_U = spec.mean_u(), spec.mean_v(), spec.mean_U()
    dev = max(float(np.abs(mean_u).max()), float(np.abs(mean_v).max()))
    report.add("zero-mean-dither", dev <= QUAD_TOL, f"max |mean u|,|mean v| = {dev:.3e}")
    devU = float(np.abs(mean_U).max())
    report.add("zero-mean-antiderivative", devU <= QUAD_TOL, f"max |mean U| = {devU:.3e}")

    if sinusoid:
        report.add("distinct-frequencies", len(set(spec.varpi)) == len(spec.varpi),
                   f"varpi={spec.varpi}")

    if raise_on_failure and not report.passed:
        name, _, detail = report.failures()[0]
        err = ValidationFailure(name, detail)
        err.report = report
        raise err
    return report
