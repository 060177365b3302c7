import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from esc_lab.controller import (
    Constant,
    DisturbanceSpec,
    EsParams,
    Modulated,
    Sampled,
    SquareWave,
    Zero,
    closed_loop_field,
    closed_loop_rhs,
    descriptor_from_dict,
    disturbance_eval,
    es_control,
    filter_rhs,
)
from esc_lab.errors import ConfigError, DimensionMismatch
from esc_lab.plants import Plant, quadratic_objective, unicycle_plant
from esc_lab.signals import DitherSpec


def test_params_validation():
    for bad in ({"a": 0, "omega": 1}, {"a": 1, "omega": -1}, {"a": 1, "omega": 1, "h": 0},
                {"a": 1, "omega": 1, "Omega": 0}):
        with pytest.raises(ValueError):
            EsParams(**bad)
    with pytest.raises(ValueError, match="a must be > 0"):
        EsParams(0.0, 10.0)


def test_disturbance_examples():
    assert SquareWave(0.1, 10.0)(0.05) == 0.1
    assert SquareWave(0.1, 10.0)(0.0) == 0.1  # sgn(0) = +1
    assert SquareWave(0.1, 10.0)(0.4) == -0.1
    assert Modulated(0.1, 10.0, 1.0)(0.0) == 0.0
    d_u, d_y = disturbance_eval(DisturbanceSpec.zero(2), 3.7)
    np.testing.assert_array_equal(d_u, [0.0, 0.0])
    assert d_y == 0.0


def test_sampled_hold():
    s = Sampled((1.0, 2.0, 4.0), (5.0, -1.0, 3.0))
    assert [s(0.5), s(1.0), s(1.9), s(2.0), s(10.0)] == [0.0, 5.0, 5.0, -1.0, 3.0]
    with pytest.raises(ValueError):
        Sampled((1.0, 1.0), (0.0, 0.0))


def test_negative_amplitude_rejected():
    with pytest.raises(ValueError):
        SquareWave(-0.1, 1.0)


@pytest.mark.parametrize("desc", [Zero(), Constant(0.3), SquareWave(0.1, 14.1),
                                  Modulated(0.1, 10.0, 1.0), Sampled((0.0, 1.0), (1.0, 2.0))])
def test_descriptor_round_trip(desc):
    again = descriptor_from_dict(desc.to_dict())
    assert again == desc
    spec = DisturbanceSpec((desc,), desc)
    assert DisturbanceSpec.from_dict(spec.to_dict(), 1) == spec


def test_descriptor_errors_carry_key_path():
    with pytest.raises(ConfigError, match=r"disturbance\.d_y\.kind"):
        DisturbanceSpec.from_dict({"d_y": {"kind": "gaussian"}}, 1)
    with pytest.raises(ConfigError, match=r"disturbance\.d_u\[0\]\.omega_d"):
        DisturbanceSpec.from_dict({"d_u": [{"kind": "square_wave", "eps": 0.1}]}, 1)


def test_es_control_examples(spec1):
    p = EsParams(1.0, 10.0)
    assert es_control(0.0, 0.3, 0.3, spec1, p, 0.0)[0] == pytest.approx(2.5, abs=1e-15)
    t = (math.pi / 2) / 10.0
    assert es_control(t, 1.0, 0.0, spec1, p, 0.0)[0] == pytest.approx(1.0, abs=1e-14)
    assert es_control(t, 0.2, 0.2, spec1, p, 0.0)[0] == pytest.approx(0.0, abs=1e-14)


@given(st.floats(0.05, 5), st.floats(0, 10), st.floats(-3, 3))
def test_feedback_term_scales_with_inverse_a(a, t, e):
    spec = DitherSpec.uniform(1)
    p = EsParams(a, 10.0)
    fb = es_control(t, e, 0.0, spec, p, 0.0) - es_control(t, 0.0, 0.0, spec, p, 0.0)
    fb2 = (es_control(t, e, 0.0, spec, p.replace(a=2 * a), 0.0)
           - es_control(t, 0.0, 0.0, spec, p.replace(a=2 * a), 0.0))
    assert fb2[0] == pytest.approx(fb[0] / 2, rel=1e-9, abs=1e-12)


def test_filter_rhs_examples():
    assert filter_rhs(0.7, 0.7, 2.0) == 0.0
    assert filter_rhs(0.0, -0.5, 1.0) == -0.5
    assert filter_rhs(2.0, 0.0, 3.0) == -6.0


def test_closed_loop_examples(integrator, unicycle, spec1, params_int, params_uni, no_dist):
    np.testing.assert_allclose(closed_loop_rhs(0.0, [1.0, 0.0], integrator, spec1, params_int,
                                               no_dist), [2.5, -0.5], atol=1e-15)
    np.testing.assert_allclose(
        closed_loop_rhs(0.0, [1.0, 0.0, 0.0, 2.0], unicycle, spec1, params_uni, no_dist),
        [2.5, 0.0, 1.0, 0.0], atol=1e-15)


def test_closed_loop_rest_point(integrator, params_int, no_dist):
    # sinusoidal u and v never vanish together, so use a zero-amplitude dither
    spec = DitherSpec((0.0,), (0.0,), (1,))
    out = closed_loop_rhs(0.37, [0.0, 0.0], integrator, spec, params_int, no_dist)
    np.testing.assert_array_equal(out, [0.0, 0.0])


def test_zero_dither_reduces_to_drift_plus_filter(params_int, no_dist):
    spec = DitherSpec((0.0, 0.0), (0.0, 0.0), (1, 2))
    plant = Plant.custom(quadratic_objective(2), [lambda x: np.array([1.0, 0.0]),
                                                 lambda x: np.array([0.0, 1.0])], 2,
                         drift=lambda x: np.array([x[1], -x[0]]))
    f = closed_loop_field(plant, spec, params_int, DisturbanceSpec.zero(2))
    y = [0.5, -1.5, 0.2]
    psi = -0.5 * (0.25 + 2.25)
    np.testing.assert_allclose(f(1.3, y), [-1.5, -0.5, -0.2 + psi], atol=1e-15)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 50))
def test_closed_loop_is_dither_periodic(x, eta, t):
    plant = unicycle_plant()
    spec = DitherSpec.uniform(1)
    params = EsParams(0.7, 10.0, 1.0, Omega=1.0)
    f = closed_loop_field(plant, spec, params, DisturbanceSpec.zero(1))
    y = [x, eta, 0.4, eta]
    period = 2 * math.pi / params.omega
    np.testing.assert_allclose(f(t + period, y), f(t, y), rtol=1e-9, atol=1e-9)


def test_fast_paths_match_generic_path(spec1):
    """The specialised integrator closure agrees with the generic custom-plant path."""
    obj = quadratic_objective(1)
    builtin = Plant.integrator(obj)
    generic = Plant.custom(obj, [lambda x: np.array([1.0])], 1)
    dist = DisturbanceSpec((Constant(0.2),), SquareWave(0.1, 10.0))
    p = EsParams(0.6, 10.0, 1.5)
    for t in (0.0, 0.13, 1.7):
        a = closed_loop_field(builtin, spec1, p, dist)(t, [0.4, -0.2])
        b = closed_loop_field(generic, spec1, p, dist)(t, [0.4, -0.2])
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-15)


def test_dimension_checks(integrator, params_int):
    with pytest.raises(DimensionMismatch):
        closed_loop_field(integrator, DitherSpec.uniform(2), params_int, DisturbanceSpec.zero(1))
    with pytest.raises(DimensionMismatch):
        closed_loop_field(integrator, DitherSpec.uniform(1), params_int, DisturbanceSpec.zero(2))
    with pytest.raises(DimensionMismatch):
        closed_loop_field(unicycle_plant(), DitherSpec.uniform(1), params_int,
                          DisturbanceSpec.zero(1))
