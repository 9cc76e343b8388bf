from __future__ import annotations

import math

import numpy as np
import pytest

from src.pipeline.artifacts import datum_to_csv_text, parse_datum_csv
from src.schemas import GridSpec, StepParams
from src.scattering.data import (
    OutsideDomainError,
    closed_form_data,
    compute_scattering,
    reflection_coefficients,
    residue_coefficients,
    scattering_relations,
)
from src.scattering.datum import DatumError, build_initial_datum, bump_perturbation, datum_from_samples
from src.scattering.jost import integrate_jost, tail_solution
from src.scattering.norming import norming_constants
from src.spectrum.zeros import find_imaginary_zero


def _punctured_real_grid(B: float, count: int, bound: float, puncture: float = 1e-3) -> np.ndarray:
    k = np.linspace(-bound, bound, count + 7)
    k = k[np.minimum(np.abs(k - B), np.abs(k + B)) > puncture * max(1.0, abs(B))]
    return k[:count]


def test_numerical_scattering_reproduces_the_step_closed_forms() -> None:
    params = StepParams(A=2.0, B=0.5, R=0.2)
    sdata = compute_scattering(build_initial_datum(params))
    closed = closed_form_data(params)

    k = _punctured_real_grid(0.5, 200, 6.0)
    assert k.size == 200
    a1, a2, b = sdata.real_values(k)
    a1c, a2c, bc = closed.real_values(k)
    for got, want in ((a1, a1c), (a2, a2c), (b, bc)):
        assert np.max(np.abs(got - want) / np.abs(want)) <= 1e-6

    rng = np.random.default_rng(11)
    upper = rng.uniform(-4.0, 4.0, 50) + 1j * rng.uniform(0.05, 3.0, 50)
    rel = np.abs(sdata.a1(upper) - closed.a1(upper)) / np.abs(closed.a1(upper))
    assert np.max(rel) <= 1e-6


def test_residue_relations_hold_for_random_steps() -> None:
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 10:
        A = rng.uniform(0.2, 5.0)
        B = rng.uniform(-2.0, 2.0)
        R = rng.uniform(0.01, 1.0)
        if not 0.0 < 4.0 * abs(B) * R < math.pi or abs(B) < 1e-3:
            continue
        rel = scattering_relations(closed_form_data(StepParams(A=A, B=B, R=R)), np.linspace(-3.0, 3.0, 17) + 0.0123)
        for key in ("a1_plusB_vs_b", "a1_minusB_vs_plusB", "a1_plusB_vs_bB"):
            assert rel[key] <= 1e-8, (A, B, R, key, rel[key])
        checked += 1


def test_relations_on_numerical_data_with_a_bump() -> None:
    params = StepParams(A=1.0, B=1.0, R=0.2)
    datum = build_initial_datum(params, perturbation=bump_perturbation(-1.0, 0.5, 0.3 + 0.1j))
    sdata = compute_scattering(datum)
    rel = scattering_relations(sdata, np.array([-2.3, -0.4, 0.7, 2.9]))
    assert rel["determinant"] <= 1e-6
    assert rel["a1_symmetry"] <= 1e-6
    assert rel["a2_symmetry"] <= 1e-6


def test_zero_background_gives_trivial_data() -> None:
    sdata = closed_form_data(StepParams(A=0.0, B=3.0))
    assert sdata.is_trivial
    a1, a2, b = sdata.real_values(np.array([-1.0, 0.0, 3.0]))
    assert np.allclose(a1, 1.0)
    assert np.allclose(a2, 1.0)
    assert np.allclose(b, 0.0)
    r1, r2 = reflection_coefficients(sdata).values(np.array([0.5]))
    assert r1[0] == 0 and r2[0] == 0


def test_a1_refuses_the_lower_half_plane_and_the_poles() -> None:
    sdata = closed_form_data(StepParams(A=2.0, B=0.5, R=0.2))
    with pytest.raises(OutsideDomainError):
        sdata.a1(np.array([0.3 - 0.2j]))
    with pytest.raises(OutsideDomainError):
        sdata.a1(np.array([0.5 + 0j]))


def test_tail_solution_is_unimodular_and_matches_the_integrated_jost_matrix() -> None:
    params = StepParams(A=1.5, B=0.4, R=0.3)
    k = np.array([1.3 + 0j])
    left = tail_solution(params, "left", k, -2.0)[0]
    assert abs(np.linalg.det(left) - 1.0) <= 1e-12

    datum = build_initial_datum(params, grid=GridSpec(half_width=4.0, points=1601))
    # the left Jost matrix stays exact until the datum leaves zero
    jm = integrate_jost(datum, "left", complex(k[0]), x_eval=-1.0)
    assert np.allclose(jm.value, tail_solution(params, "left", k, -1.0)[0], atol=1e-10)
    assert abs(jm.det - 1.0) <= 1e-6


def test_norming_constant_at_the_imaginary_zero_is_unimodular() -> None:
    params = StepParams(A=2.0, B=0.5, R=0.2)
    k0 = find_imaginary_zero(params)
    assert k0 is not None
    constants = norming_constants(build_initial_datum(params), k0, [])
    assert constants.gamma0 is not None
    assert abs(abs(constants.gamma0) - 1.0) <= 1e-6
    assert constants.residuals[0] <= 1e-6


def test_datum_csv_round_trip_keeps_samples_and_header() -> None:
    params = StepParams(A=2.0, B=-0.5, R=0.2)
    datum = build_initial_datum(params, grid=GridSpec(half_width=3.0, points=301))
    back = parse_datum_csv(datum_to_csv_text(datum))

    assert back.background == params
    assert back.sharp_edge is True
    assert back.left_tail_bound == datum.left_tail_bound
    assert back.right_tail_bound == datum.right_tail_bound
    assert np.array_equal(back.x, datum.x)
    assert np.array_equal(back.q, datum.q)


def test_datum_from_samples_rejects_bad_tails() -> None:
    params = StepParams(A=1.0, B=0.0, R=0.0)
    x = np.linspace(-2.0, 2.0, 41)
    q = np.where(x > 0.0, 1.0 + 0j, 0.0j)
    q[5] = 0.2  # left tail no longer vanishes
    with pytest.raises(DatumError):
        datum_from_samples(x, q, params, -0.5, 0.5)

    with pytest.raises(DatumError):
        datum_from_samples(np.array([0.0, 1.0, 3.0]), np.zeros(3, dtype=complex), StepParams(A=0.0), 0.0, 0.0)


def test_pure_step_values_and_residues() -> None:
    closed = closed_form_data(StepParams(A=2.0, B=0.5, R=0.2))
    a1, a2, b = closed.real_values(np.array([0.0]))
    assert a1[0] == pytest.approx(-3.0)
    assert a2[0] == pytest.approx(1.0)
    assert closed.a1_plusB == pytest.approx(np.exp(0.4j), abs=1e-12)
    assert closed.a1_minusB == pytest.approx(-np.conj(np.exp(0.4j)), abs=1e-12)

    r1, r2 = reflection_coefficients(closed).values(np.array([0.0, 1.3, -2.2]))
    assert r1[0] == pytest.approx(2j * np.exp(-0.2j) / -3.0)
    a1, a2, _ = closed.real_values(np.array([0.0, 1.3, -2.2]))
    assert np.max(np.abs(1.0 + r1 * r2 - 1.0 / (a1 * a2))) <= 1e-8


def test_laurent_fit_recovers_the_step_residues() -> None:
    params = StepParams(A=2.0, B=0.5, R=0.2)
    plus, minus, bB = residue_coefficients(closed_form_data(params), 0.5)
    assert abs(plus - np.exp(0.4j)) <= 1e-6
    assert abs(minus + np.conj(plus)) <= 1e-6

    numerical = compute_scattering(build_initial_datum(params))
    assert abs(numerical.a1_plusB - np.exp(0.4j)) <= 1e-5


def test_sharp_step_read_from_csv_scatters_like_the_closed_form() -> None:
    params = StepParams(A=1.0, B=1.0, R=0.2)
    datum = build_initial_datum(params, grid=GridSpec(half_width=3.0, points=601))
    back = parse_datum_csv(datum_to_csv_text(datum))
    assert back.profile is None
    sdata = compute_scattering(back)
    closed = closed_form_data(params)

    k = _punctured_real_grid(1.0, 40, 4.0)
    a1, a2, b = sdata.real_values(k)
    a1c, a2c, bc = closed.real_values(k)
    for got, want in ((a1, a1c), (a2, a2c), (b, bc)):
        assert np.max(np.abs(got - want) / np.abs(want)) <= 1e-6

    upper = np.array([0.3 + 0.5j, -1.7 + 0.2j, 2.4 + 1.1j])
    assert np.max(np.abs(sdata.a1(upper) - closed.a1(upper)) / np.abs(closed.a1(upper))) <= 1e-6


def test_mollified_samples_from_csv_scatter_like_the_exact_profile() -> None:
    params = StepParams(A=1.0, B=0.5, R=0.2)
    datum = build_initial_datum(params, mollify_width=0.3, grid=GridSpec(half_width=4.0, points=801))
    back = parse_datum_csv(datum_to_csv_text(datum))
    assert back.profile is None and back.sharp_edge is False

    # between the samples the spline stays close to the smooth profile
    mid = np.linspace(-0.5, 0.9, 57) + 0.0037
    assert np.max(np.abs(back.value(mid) - datum.value(mid))) <= 1e-7

    exact = compute_scattering(datum)
    sampled = compute_scattering(back)
    upper = np.array([0.3 + 0.5j, -1.2 + 0.8j, 2.0 + 0.3j])
    assert np.max(np.abs(sampled.a1(upper) - exact.a1(upper)) / np.abs(exact.a1(upper))) <= 1e-6
    k = np.array([-2.1, -0.3, 0.9, 1.7])
    _, _, b = sampled.real_values(k)
    _, _, b_exact = exact.real_values(k)
    assert np.max(np.abs(b - b_exact)) <= 1e-6 * max(1.0, float(np.max(np.abs(b_exact))))


def test_spline_falls_back_to_linear_on_short_pieces() -> None:
    params = StepParams(A=1.0, B=0.0, R=0.0)
    x = np.linspace(-1.0, 1.0, 21)
    q = np.where(x >= 0.1, 1.0 + 0j, 0.0j)
    q[10] = 0.5
    datum = datum_from_samples(x, q, params, -0.05, 0.1)
    assert datum.value(np.array([0.05]))[0] == pytest.approx(0.75)


def test_jost_solutions_are_related_by_the_nonlocal_reflection() -> None:
    params = StepParams(A=1.5, B=0.4, R=0.3)
    datum = build_initial_datum(
        params, perturbation=bump_perturbation(-0.5, 0.4, 0.3 + 0.2j), grid=GridSpec(half_width=4.0, points=1601)
    )
    sigma1 = np.array([[0.0, 1.0], [1.0, 0.0]])
    for x in (-0.8, 0.1, 0.6):
        for k in (0.7, 1.9, -1.3):
            psi1 = integrate_jost(datum, "left", complex(-k), x_eval=-x).value
            psi2 = integrate_jost(datum, "right", complex(k), x_eval=x).value
            assert np.max(np.abs(sigma1 @ np.conj(psi1) @ sigma1 - psi2)) <= 1e-7, (x, k)


def test_right_jost_matrix_is_explicit_between_the_mirrored_edges() -> None:
    A, B, R = 1.5, 0.4, 0.6
    datum = build_initial_datum(StepParams(A=A, B=B, R=R), grid=GridSpec(half_width=4.0, points=1601))
    for x in (-0.5, 0.0, 0.4):
        for k in (1.3, -0.9, 2.2):
            expected = np.array(
                [
                    [np.exp(1j * B * x), -1j * A * np.exp(1j * B * x) * np.exp(2j * (k + B) * (R - x)) / (2.0 * (k + B))],
                    [0.0, np.exp(-1j * B * x)],
                ]
            )
            got = integrate_jost(datum, "right", complex(k), x_eval=x).value
            assert np.max(np.abs(got - expected)) <= 1e-8, (x, k)


def test_reflection_product_is_conjugate_symmetric() -> None:
    k = np.array([-2.7, -1.1, -0.2, 0.35, 1.6, 3.3])
    rng = np.random.default_rng(5)
    for _ in range(5):
        params = StepParams(A=rng.uniform(0.5, 3.0), B=rng.uniform(0.1, 1.0), R=rng.uniform(0.05, 0.5))
        r1, r2 = reflection_coefficients(closed_form_data(params)).values(k)
        r1m, r2m = reflection_coefficients(closed_form_data(params)).values(-k)
        assert np.max(np.abs(r1m * r2m - np.conj(r1 * r2))) <= 1e-10

    datum = build_initial_datum(StepParams(A=1.0, B=1.0, R=0.2), perturbation=bump_perturbation(-1.0, 0.5, 0.3 + 0.1j))
    coefficients = reflection_coefficients(compute_scattering(datum))
    r1, r2 = coefficients.values(k)
    r1m, r2m = coefficients.values(-k)
    assert np.max(np.abs(r1m * r2m - np.conj(r1 * r2))) <= 1e-6


def test_r1_vanishes_linearly_at_minus_B() -> None:
    params = StepParams(A=2.0, B=0.5, R=0.2)
    closed = closed_form_data(params)
    B = params.effective_B
    assert closed.a1_minusB is not None
    slope = closed.b(np.array([-B]))[0] / closed.a1_minusB
    coefficients = reflection_coefficients(closed)
    for eps in (1e-3, 1e-4, 1e-5, -1e-4):
        r1 = coefficients.r1(np.array([-B + eps]))[0]
        assert abs(r1 / eps - slope) <= 10.0 * abs(eps) * abs(slope)
