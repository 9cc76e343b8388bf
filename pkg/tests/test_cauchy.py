from __future__ import annotations

import math

import numpy as np
import pytest

from src.cauchy.delta import (
    DeltaEvaluator,
    TransitionRayError,
    compute_delta,
    compute_hat_delta,
    compute_nu,
    delta_profile,
)
from src.cauchy.identity import principal_value_transform, stationary_exponent, verify_a2_identity
from src.cauchy.quadrature import CutError, cauchy_transform
from src.errors import InputError
from src.scattering.data import closed_form_data, reflection_coefficients
from src.schemas import StepParams
from src.spectrum.winding import spectral_argument


def _sdata(A: float, B: float, R: float):
    return closed_form_data(StepParams(A=A, B=B, R=R))


def _lorentzian(z: np.ndarray) -> np.ndarray:
    return 1.0 / (np.asarray(z) ** 2 + 1.0) + 0j


def test_zero_background_gives_unit_delta() -> None:
    sdata = _sdata(0.0, 0.7, 0.2)
    assert compute_nu(sdata, 0.3).value == 0
    assert compute_delta(sdata, 0.3, 0.2 + 1.0j) == pytest.approx(1.0)
    assert compute_delta(sdata, 0.3, -1.0 + 0j, "+") == pytest.approx(1.0)


def test_delta_tends_to_one_at_infinity() -> None:
    sdata = _sdata(1.0, 1.0, 0.2)
    assert abs(compute_delta(sdata, 2.0, 1e6j) - 1.0) <= 1e-5


def test_delta_jumps_by_the_transmission_factor_on_its_cut() -> None:
    sdata = _sdata(1.0, 1.0, 0.2)
    xi = 2.0
    evaluator = DeltaEvaluator(sdata, xi)
    s = np.linspace(-8.0, -2.1, 20)
    r1, r2 = reflection_coefficients(sdata).values(s)
    for sj, expected in zip(s, 1.0 + r1 * r2):
        plus, minus = evaluator.boundary_values(float(sj))
        assert abs(plus / minus - expected) <= 1e-8 * max(1.0, abs(expected))

    # no jump to the right of -xi
    plus, minus = evaluator.boundary_values(-1.5)
    assert plus == pytest.approx(minus, rel=1e-12)


def test_plain_delta_refuses_a_cut_through_the_branch_points() -> None:
    with pytest.raises(InputError):
        DeltaEvaluator(_sdata(2.0, 0.5, 0.2), 0.0)
    with pytest.raises(CutError):
        DeltaEvaluator(_sdata(1.0, 1.0, 0.2), 2.0)(complex(-3.0, 0.0))


def test_hat_delta_does_not_depend_on_the_auxiliary_point() -> None:
    sdata = _sdata(2.0, 0.5, 0.2)
    xi, pole = 0.2, -0.5
    for k in (0.3 + 0.7j, -1.2 + 0.1j, 0.3 - 0.7j, 2.0 - 1.5j):
        first = compute_hat_delta(sdata, xi, pole, 1j, k)
        second = compute_hat_delta(sdata, xi, pole, 1.0 + 2.0j, k)
        assert abs(first - second) <= 1e-8 * max(1.0, abs(first))


def test_hat_delta_jumps_away_from_the_pole() -> None:
    sdata = _sdata(2.0, 0.5, 0.2)
    evaluator = DeltaEvaluator(sdata, 0.2, pole=-0.5)
    left = np.array([-6.0, -2.0, -0.9, -0.35])
    r1, r2 = reflection_coefficients(sdata).values(left)
    for sj, expected in zip(left, 1.0 + r1 * r2):
        plus, minus = evaluator.boundary_values(float(sj))
        assert abs(plus / minus - expected) <= 1e-7 * max(1.0, abs(expected))

    for sj in (0.1, 0.8, 4.0):
        plus, minus = evaluator.boundary_values(sj)
        assert abs(plus / minus - 1.0) <= 1e-7


def test_hat_delta_needs_the_stationary_point_between_the_poles() -> None:
    sdata = _sdata(2.0, 0.5, 0.2)
    with pytest.raises(InputError):
        DeltaEvaluator(sdata, 0.8, pole=-0.5)
    with pytest.raises(InputError):
        DeltaEvaluator(sdata, 0.2, pole=-0.4)
    with pytest.raises(InputError):
        DeltaEvaluator(sdata, 0.2, pole=-0.5, k_tilde=1.0 - 1.0j)


@pytest.mark.parametrize("xi", [0.0, 0.1, 0.2, 0.3])
def test_a2_identity_at_the_branch_point(xi: float) -> None:
    check = verify_a2_identity(_sdata(2.0, -0.5, 0.2), xi)
    assert check.residual <= 1e-6
    assert check.route_disagreement <= 1e-5


def test_a2_identity_is_stated_for_negative_B_only() -> None:
    with pytest.raises(InputError):
        verify_a2_identity(_sdata(2.0, 0.5, 0.2), 0.1)
    with pytest.raises(InputError):
        verify_a2_identity(_sdata(2.0, -0.5, 0.2), 0.6)


def test_delta_singularity_exponent_matches_nu() -> None:
    evaluator = DeltaEvaluator(_sdata(2.0, 0.5, 0.2), 2.0)
    slope, expected = stationary_exponent(evaluator)
    assert abs(slope - expected) <= 5e-3

    slope, expected = stationary_exponent(evaluator, angle=-0.25 * math.pi)
    assert abs(slope - expected) <= 5e-3


def test_hat_nu_agrees_with_nu_up_to_an_integer() -> None:
    sdata = _sdata(2.0, 0.5, 0.2)
    nu = compute_nu(sdata, 0.2).value
    hat = DeltaEvaluator(sdata, 0.2, pole=-0.5).nu_at_stationary_point()
    gap = hat - nu
    assert abs(gap.real) <= 1e-8
    assert abs(gap.imag - round(gap.imag)) <= 1e-8


@pytest.mark.parametrize("xi", [-3.0, -0.5, 0.5, 2.0, 5.0])
def test_case_two_keeps_nu_in_the_principal_strip(xi: float) -> None:
    nu = compute_nu(_sdata(1.0, 1.0, 0.2), xi)
    assert nu.m == 0
    assert -0.5 < nu.im < 0.5
    assert nu.direct_mismatch <= 1e-8


def test_nu_rejects_transition_rays() -> None:
    with pytest.raises(TransitionRayError):
        compute_nu(_sdata(1.0, 1.0, 0.2), 1.0)
    with pytest.raises(TransitionRayError):
        compute_nu(_sdata(1.0, 1.0, 0.2), -1.0)


@pytest.mark.parametrize("side", ["+", "-"])
def test_principal_value_route_matches_the_subtracted_transform(side: str) -> None:
    c = 0.5
    on = principal_value_transform(_lorentzian, c, -1.3, direction="left", side=side)
    assert on == pytest.approx(cauchy_transform(_lorentzian, c, -1.3, direction="left", side=side, smooth_tail=_lorentzian), abs=1e-8)

    on = principal_value_transform(_lorentzian, c, 2.2, direction="right", side=side)
    assert on == pytest.approx(cauchy_transform(_lorentzian, c, 2.2, direction="right", side=side, smooth_tail=_lorentzian), abs=1e-8)

    off = principal_value_transform(_lorentzian, c, 1.5, direction="left", side=side)
    assert off == pytest.approx(cauchy_transform(_lorentzian, c, 1.5, direction="left", smooth_tail=_lorentzian), abs=1e-8)


def test_cauchy_transform_of_a_lorentzian_has_the_plemelj_jump() -> None:
    c, s = 0.0, -0.8
    plus = cauchy_transform(_lorentzian, c, s, direction="left", side="+")
    minus = cauchy_transform(_lorentzian, c, s, direction="left", side="-")
    assert plus - minus == pytest.approx(1.0 / (s * s + 1.0), abs=1e-10)


def test_delta_profile_frame() -> None:
    evaluator = DeltaEvaluator(_sdata(1.0, 1.0, 0.2), 2.0)
    frame = delta_profile(evaluator, np.array([1.0j, -1.0 + 0.5j, 3.0 - 2.0j]))
    assert list(frame.columns) == ["re(k)", "im(k)", "re(delta)", "im(delta)", "abs(delta)"]
    assert len(frame) == 3


def _step_log_transmission(A: float, B: float, R: float):
    # a2 = 1 and a1 - 1 is closed form for the pure step
    def F(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return -np.log1p(A * A * np.exp(4j * z * R) / (4.0 * (z * z - B * B)))

    return F


def test_log_transmission_is_accurate_far_out() -> None:
    sdata = _sdata(1.0, 1.0, 0.2)
    arg = spectral_argument(sdata)
    k = np.array([-6.0e4, -1.0e6, -3.5e3])
    got = arg.log_transmission(k)
    expected = _step_log_transmission(1.0, 1.0, 0.2)(k)
    assert np.all(np.abs(got - expected) <= 1e-9 * np.abs(expected))


def test_delta_off_the_cut_matches_the_quadpack_route() -> None:
    A, B, R = 1.0, 1.0, 0.2
    xi = 2.0
    evaluator = DeltaEvaluator(_sdata(A, B, R), xi)
    for s in (0.0, 1.7):
        log_delta = principal_value_transform(_step_log_transmission(A, B, R), -xi, s, direction="left", side="+")
        assert abs(evaluator.log_value(complex(s, 0.0)) - log_delta) <= 1e-7
