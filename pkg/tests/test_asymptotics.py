from __future__ import annotations

import math

import numpy as np
import pytest

from src.asymptotics.amplitude import (
    GammaPoleError,
    VanishingReflectionError,
    alpha1,
    gamma_reflection_residual,
    remainder_exponent,
)
from src.asymptotics.leading import (
    AsymptoticEvaluator,
    DenominatorMarginError,
    reconstruct_from_model,
    rough_asymptotics,
    stationary_phase_derivative,
    terms_table,
)
from src.asymptotics.model_rh import BlowUpLocusError, model_rh_solution
from src.asymptotics.sectors import TransitionRegionError, classify_ray, phase_theta, sector_map
from src.cauchy.delta import compute_delta, compute_nu
from src.errors import InputError
from src.pipeline.runner import assemble_spectrum_report
from src.scattering.data import closed_form_data
from src.schemas import PairRecord, SpectrumReport, StepParams


def _evaluator(A: float, B: float, R: float, **kwargs: object) -> AsymptoticEvaluator:
    bundle = assemble_spectrum_report(StepParams(A=A, B=B, R=R), "classify")
    return AsymptoticEvaluator(bundle.sdata, bundle.report, **kwargs)


def _report(B: float, case: str, n: int) -> SpectrumReport:
    pairs = [PairRecord(re=-3.0, im=1.0, tau=3.6, y=1.2)] if n else []
    omegas = [-2.0] if n else []
    return SpectrumReport(params=StepParams(A=10.0, B=B, R=0.3), pairs=pairs, omegas=omegas, case=case, n=n)


# special functions and remainders


@pytest.mark.parametrize("nu", [0.3, 1.0, 2.5, -0.7])
def test_gamma_reflection_identity(nu: float) -> None:
    assert gamma_reflection_residual(nu) <= 1e-10


def test_gamma_reflection_refuses_the_pole() -> None:
    with pytest.raises(GammaPoleError):
        gamma_reflection_residual(0.0)


def test_remainder_exponents() -> None:
    assert remainder_exponent("R1", 0.0) == (-1.0, True)
    assert remainder_exponent("R1", -0.2) == pytest.approx((-0.6, False))
    assert remainder_exponent("R1", 0.2) == (-1.0, False)
    assert remainder_exponent("R2", 0.2) == pytest.approx((-0.6, False))
    assert remainder_exponent("R2", -0.2) == (-1.0, False)


def test_amplitude_needs_a_reflection_coefficient() -> None:
    with pytest.raises(VanishingReflectionError):
        alpha1(closed_form_data(StepParams(A=0.0, B=1.0, R=0.2)), -2.0)


def test_amplitude_of_the_decaying_sector_is_finite() -> None:
    amp = alpha1(closed_form_data(StepParams(A=1.0, B=1.0, R=0.2)), -2.0)
    assert np.isfinite(amp.value.real) and np.isfinite(amp.value.imag)
    assert amp.value != 0


# phase and sectors


def test_phase_is_stationary_at_minus_xi() -> None:
    assert phase_theta(0.0, 0.4) == 0.0
    assert phase_theta(-0.4, 0.4) == pytest.approx(-2.0 * 0.4**2)
    assert stationary_phase_derivative(0.4) <= 1e-9


def test_sectors_without_zero_pairs() -> None:
    report = _report(-0.5, "II", 0)
    assert classify_ray(1.0, report).label == "plane_wave_right"
    assert classify_ray(-1.0, report).label == "ZM_decay_left"
    assert classify_ray(0.2, report).label == "periodic_mid"
    assert classify_ray(0.0, report).label == "periodic_mid"

    report = _report(0.5, "I", 0)
    assert classify_ray(0.2, report).label == "ZM_decay_mid"
    with pytest.raises(TransitionRegionError):
        classify_ray(0.0, report)


def test_sectors_with_one_zero_pair() -> None:
    report = _report(0.5, "I", 1)
    expected = {
        0.8: ("plane_wave", 1),
        2.5: ("decay_right", 0),
        4.0: ("plane_wave", 0),
        -0.8: ("decay_left", 1),
        -2.5: ("reciprocal_wave", 0),
        -4.0: ("decay_left", 0),
        0.3: ("mid_decay", 1),
        -0.3: ("mid_decay", 1),
    }
    for xi, (kind, m) in expected.items():
        sector = classify_ray(xi, report)
        assert sector.label == "winding_sector"
        assert (sector.kind, sector.m) == (kind, m), xi
    assert classify_ray(2.5, report).describe == "decay_right(m=0)"

    smap = sector_map(report)
    assert smap.boundaries == [-3.0, -2.0, -0.5, 0.0, 0.5, 2.0, 3.0]


@pytest.mark.parametrize("xi", [0.5, -0.5, 2.0, -3.0])
def test_boundary_rays_are_transition_regions(xi: float) -> None:
    with pytest.raises(TransitionRegionError) as err:
        classify_ray(xi, _report(0.5, "I", 1))
    assert err.value.boundary == pytest.approx(xi)
    assert len(err.value.neighbors) == 2


def test_ray_classification_needs_a_case_tag() -> None:
    report = SpectrumReport(params=StepParams(A=2.0, B=0.5, R=0.2))
    with pytest.raises(InputError):
        classify_ray(1.0, report)


# model problem


def test_model_problem_satisfies_its_residue_conditions() -> None:
    sol = model_rh_solution(0.7, 0.3 + 0.2j, -1.1 + 0.4j)
    first, second = sol.residue_residuals()
    assert first <= 1e-12
    assert second <= 1e-12


def test_model_problem_without_coupling_is_the_identity() -> None:
    sol = model_rh_solution(0.5, 0.0, 0.0)
    assert np.allclose(sol.matrix(2.0 + 1.0j), np.eye(2))
    assert sol.q == 0


def test_model_problem_blow_up_locus() -> None:
    with pytest.raises(BlowUpLocusError):
        model_rh_solution(0.5, 1.0, -1.0)


def test_model_problem_reconstructs_the_periodic_term_and_its_mirror() -> None:
    evaluator = _evaluator(2.0, -0.5, 0.2, margin=0.0)
    x, t = 2.0, 5.0
    q_model = evaluator.model_problem(x, t).q
    q_periodic = evaluator.periodic(x, t, x / (4.0 * t))
    assert abs(q_model - q_periodic) <= 1e-5 * abs(q_periodic)

    check = reconstruct_from_model(evaluator, x, t)
    assert check.sign == "-"
    assert check.minus_residual <= 1e-5


# leading terms


def test_plane_wave_modulus_is_twice_delta_squared() -> None:
    evaluator = _evaluator(2.0, -0.5, 0.2)
    xi, t = 1.0, 30.0
    term = evaluator.leading_term(4.0 * xi * t, t)
    assert term.sector == "plane_wave_right"
    assert term.formula_id == "plane_wave"
    d = compute_delta(evaluator.sdata, xi, 0.5 + 0j)
    assert abs(term.value) == pytest.approx(2.0 * abs(d) ** 2, rel=1e-10)
    assert term.error_exponent < 0.0


def test_periodic_term_has_period_pi_over_two_B() -> None:
    evaluator = _evaluator(2.0, -0.5, 0.2, margin=0.0)
    xi, t = 0.2, 20.0
    for x in (1.0, 2.3, 3.9):
        assert abs(evaluator.periodic(x, t, xi)) == pytest.approx(abs(evaluator.periodic(x + math.pi, t, xi)), rel=1e-10)


def test_periodic_term_respects_the_denominator_margin() -> None:
    evaluator = _evaluator(2.0, -0.5, 0.2, margin=1e6)
    with pytest.raises(DenominatorMarginError) as err:
        evaluator.leading_term(8.0, 10.0)
    assert err.value.ratio < 1e6


def test_decaying_term_scales_with_its_exponent() -> None:
    evaluator = _evaluator(2.0, 0.5, 0.2)
    xi = -1.0
    nu = compute_nu(evaluator.sdata, -xi)
    amp = abs(alpha1(evaluator.sdata, xi).value)
    for t in (5.0, 50.0):
        term = evaluator.leading_term(4.0 * xi * t, t)
        assert term.formula_id == "zm_left"
        assert abs(term.value) * t ** (0.5 + nu.im) == pytest.approx(amp, rel=1e-10)


def test_middle_sector_matches_across_the_origin() -> None:
    evaluator = _evaluator(2.0, 0.5, 0.2)
    t = 10.0
    left = evaluator.leading_term(-4e-3 * t, t)
    right = evaluator.leading_term(4e-3 * t, t)
    assert left.formula_id == right.formula_id == "zm_mid"
    assert abs(abs(left.value) - abs(right.value)) <= 0.01 * abs(right.value)


def test_terms_table_columns() -> None:
    evaluator = _evaluator(2.0, -0.5, 0.2)
    frame = terms_table([evaluator.leading_term(4.0 * 30.0, 30.0), evaluator.leading_term(-4.0 * 30.0, 30.0)])
    assert list(frame["sector"]) == ["plane_wave_right", "ZM_decay_left"]
    assert (frame["abs(q_as)"] > 0).all()


# rough picture


def test_rough_asymptotics_of_the_pure_step() -> None:
    params = StepParams(A=2.0, B=0.5, R=0.2)
    assert rough_asymptotics(params, 1.0) == "plane_wave"
    assert rough_asymptotics(params, -1.0) == "decay"
    assert rough_asymptotics(params, 0.2) == "decay"
    assert rough_asymptotics(StepParams(A=2.0, B=-0.5, R=0.2), 0.2) == "periodic"

    with pytest.raises(InputError):
        rough_asymptotics(params, 0.5)
    with pytest.raises(InputError):
        rough_asymptotics(params, 0.0)
    with pytest.raises(InputError):
        rough_asymptotics(StepParams(A=2.0, B=0.5, R=1.0), 1.0)
