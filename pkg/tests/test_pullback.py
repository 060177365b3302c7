import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from esc_lab.controller import DisturbanceSpec, EsParams, Modulated, SquareWave, closed_loop_field
from esc_lab.errors import UnsupportedPlant
from esc_lab.plants import Plant, quadratic_objective
from esc_lab.pullback import CoordinateMap, pullback_field, tilde_rhs
from esc_lab.signals import DitherSpec
from esc_lab.solver import integrate

T_QUARTER = (math.pi / 2) / 10.0  # omega t = pi/2 at omega = 10


def test_from_pullback_examples(integrator, unicycle, spec1, params_int, params_uni):
    cm = CoordinateMap(integrator, spec1, params_int)
    np.testing.assert_array_equal(cm.from_pullback(0.0, [0.5, 0.1]), [0.5, 0.1])
    assert cm.from_pullback(T_QUARTER, [0.5, 0.1])[0] == pytest.approx(0.75, abs=1e-15)
    cu = CoordinateMap(unicycle, spec1, params_uni)
    np.testing.assert_allclose(cu.from_pullback(T_QUARTER, [0, 0, math.pi / 2, 0]),
                               [0, 0.25, math.pi / 2, 0], atol=1e-16)


def test_to_pullback_examples(integrator, spec1, params_int):
    cm = CoordinateMap(integrator, spec1, params_int)
    assert cm.to_pullback(T_QUARTER, [0.75, 0.0])[0] == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_array_equal(cm.to_pullback(2 * math.pi / 10, [0.3, 0.2])[1], 0.2)
    np.testing.assert_array_equal(cm.to_pullback(0.0, [0.3, 0.2]), [0.3, 0.2])


def test_round_trip(integrator, unicycle, spec1, params_int, params_uni):
    rng = np.random.default_rng(3)
    for plant, params in ((integrator, params_int), (unicycle, params_uni)):
        cm = CoordinateMap(plant, spec1, params)
        ts = rng.uniform(0, 20, 100)
        X = rng.normal(scale=3, size=(100, plant.n + 1))
        back = np.array([cm.to_pullback(t, cm.from_pullback(t, x)) for t, x in zip(ts, X)])
        assert np.max(np.abs(back - X)) < 1e-12
        many = cm.to_pullback_many(ts, cm.from_pullback_many(ts, X))
        assert np.max(np.abs(many - X)) < 1e-12
        # filter coordinate untouched
        np.testing.assert_array_equal(cm.from_pullback_many(ts, X)[:, -1], X[:, -1])


def test_tilde_rhs_examples(integrator, unicycle, spec1, params_int, params_uni, no_dist):
    out = tilde_rhs(0.0, [0.6, 0.1], integrator, spec1, params_int, no_dist)
    np.testing.assert_allclose(out, [0.0, -0.1 + (-0.18)], atol=1e-15)
    out = tilde_rhs(T_QUARTER, [0.0, 0.0], integrator, spec1, params_int, no_dist)
    assert out[0] == pytest.approx(-0.03125, abs=1e-15)
    eta = 4.0 / (1 + 0.25**2)  # psi at the shifted point (0.25, 0)
    out = tilde_rhs(T_QUARTER, [0.0, 0.0, 0.0, eta], unicycle, spec1, params_uni, no_dist)
    np.testing.assert_allclose(out[:3], [0.0, -0.25, 1.0], atol=1e-15)


def test_unsupported_plant(spec1, params_int, no_dist):
    plant = Plant.custom(quadratic_objective(), [lambda x: np.array([1.0])], 1)
    with pytest.raises(UnsupportedPlant):
        CoordinateMap(plant, spec1, params_int)
    with pytest.raises(UnsupportedPlant):
        pullback_field(plant, spec1, params_int, no_dist)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 6), st.floats(0, 30))
def test_tilde_rhs_periodic(p1, p2, th, t):
    from esc_lab.plants import unicycle_plant
    plant = unicycle_plant()
    spec = DitherSpec.uniform(1)
    params = EsParams(0.5, 40.0, 1.0, Omega=1.0)
    f = pullback_field(plant, spec, params, DisturbanceSpec.zero(1))
    y = [p1, p2, th, 0.3]
    np.testing.assert_allclose(f(t + 2 * math.pi / 40.0, y), f(t, y), rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("kind", ["integrator", "unicycle"])
def test_pullback_field_is_chain_rule_of_closed_loop(kind, spec1, integrator, unicycle):
    """d/dt to_pullback(t, xi(t)) computed from the closed loop equals the pull-back field."""
    plant = integrator if kind == "integrator" else unicycle
    params = EsParams(0.8, 10.0, 1.3, Omega=1.0 if kind == "unicycle" else None)
    dist = DisturbanceSpec((SquareWave(0.05, 7.0),), Modulated(0.1, 10.0, 1.0))
    cm = CoordinateMap(plant, spec1, params)
    f_cl = closed_loop_field(plant, spec1, params, dist)
    f_pb = pullback_field(plant, spec1, params, dist)
    rng = np.random.default_rng(5)
    h = 1e-6
    for _ in range(20):
        t = rng.uniform(0.05, 10)
        xi = rng.normal(size=plant.n + 1)
        if dist.d_u[0](t - h) != dist.d_u[0](t + h):
            continue
        dxi = np.asarray(f_cl(t, list(xi)))
        fd = (cm.to_pullback(t + h, xi + h * dxi) - cm.to_pullback(t - h, xi - h * dxi)) / (2 * h)
        np.testing.assert_allclose(f_pb(t, list(cm.to_pullback(t, xi))), fd, atol=2e-6)


def test_eta_identical_along_transform(integrator, spec1, params_int):
    dist = DisturbanceSpec.zero(1)
    tr = integrate(closed_loop_field(integrator, spec1, params_int, dist), [1.0, 0.0], 0, 2, 0.005)
    cm = CoordinateMap(integrator, spec1, params_int)
    np.testing.assert_array_equal(cm.to_pullback_many(tr.times, tr.states)[:, 1], tr.states[:, 1])
