from __future__ import annotations

import math
import os

import numpy as np
import pytest

from src.asymptotics.leading import AsymptoticEvaluator
from src.errors import InputError
from src.pipeline.runner import assemble_spectrum_report, run_simulate
from src.schemas import CompareSpec, RunConfig, SimConfig, StepParams
from src.simulation.compare import EmptyConeError, compare, dominant_period
from src.simulation.fields import (
    FieldSnapshot,
    SimulationGrid,
    default_domain,
    make_grid,
    mollified_step,
    seam_trust_radius,
)
from src.simulation.splitstep import evolve, nonlinear_substep, strang_step

SLOW = os.getenv("NNLS_SPECTRA_SLOW") == "1"


def _gaussian(grid: SimulationGrid) -> np.ndarray:
    # PT-symmetric: conj(q(-x)) = q(x)
    return np.exp(-grid.x**2) * (1.0 + 0.3j * np.tanh(grid.x)) + 0j


def test_grid_reflection_maps_x_to_minus_x() -> None:
    grid = SimulationGrid(L=10.0, N=64)
    assert np.allclose(grid.x[grid.reflection][1:], -grid.x[1:])
    # -L is its own mirror on the torus
    assert grid.reflection[0] == 0
    with pytest.raises(InputError):
        SimulationGrid(L=10.0, N=63)


def test_nonlinear_substep_conserves_the_nonlocal_density() -> None:
    grid = SimulationGrid(L=10.0, N=256)
    rng = np.random.default_rng(7)
    q = rng.normal(size=grid.N) + 1j * rng.normal(size=grid.N)
    before = q * np.conj(q[grid.reflection])
    after_q = nonlinear_substep(q, 0.3, grid.reflection)
    after = after_q * np.conj(after_q[grid.reflection])
    assert np.max(np.abs(after - before)) <= 1e-13


def test_strang_step_is_time_reversible() -> None:
    grid = SimulationGrid(L=10.0, N=256)
    q0 = _gaussian(grid)
    q = q0
    for _ in range(10):
        q = strang_step(q, 1e-2, grid)
    for _ in range(10):
        q = strang_step(q, -1e-2, grid)
    assert np.max(np.abs(q - q0)) <= 1e-10


def test_strang_step_is_second_order() -> None:
    grid = SimulationGrid(L=10.0, N=128)
    q0 = _gaussian(grid)
    T = 0.4

    def run(dt: float) -> np.ndarray:
        q = q0
        for _ in range(int(round(T / dt))):
            q = strang_step(q, dt, grid)
        return q

    coarse, mid, fine = run(0.02), run(0.01), run(0.005)
    ratio = np.max(np.abs(coarse - mid)) / np.max(np.abs(mid - fine))
    assert 3.5 <= ratio <= 4.5


def test_reflected_conjugate_datum_runs_the_evolution_backwards() -> None:
    grid = SimulationGrid(L=10.0, N=256)
    q0 = np.exp(-((grid.x - 1.0) ** 2)) * (0.8 + 0.5j) + 0.4j * np.exp(-((grid.x + 2.0) ** 2) / 2.0)
    config = SimConfig(dt=1e-2, t_final=0.03, snapshots=[0.03])
    forward = evolve(FieldSnapshot(t=0.0, x=grid.x, q=q0), grid, config)[-1].q

    p = np.conj(grid.reflect(q0))
    for _ in range(3):
        p = strang_step(p, -1e-2, grid)
    assert np.max(np.abs(np.conj(grid.reflect(p)) - forward)) <= 1e-8


def test_small_data_follow_the_free_propagator() -> None:
    grid = SimulationGrid(L=20.0, N=512)
    eps = 1e-4
    T = 0.5
    config = SimConfig(dt=1e-2, t_final=T, snapshots=[T])
    q = evolve(FieldSnapshot(t=0.0, x=grid.x, q=eps * np.exp(-grid.x**2) + 0j), grid, config)[-1].q
    # i q_t + q_xx = 0 from a Gaussian
    spread = 1.0 + 4j * T
    free = np.exp(-grid.x**2 / spread) / np.sqrt(spread)
    assert np.max(np.abs(q / eps - free)) <= 1e-6


def test_default_domain_keeps_the_background_periodic() -> None:
    assert default_domain(0.5) == pytest.approx(127 * 2.0 * math.pi)
    assert default_domain(-0.5) == default_domain(0.5)

    with pytest.raises(InputError):
        make_grid(StepParams(A=1.0, B=0.5, R=0.2), SimConfig(L=10.0))
    grid = make_grid(StepParams(A=1.0, B=0.5, R=0.2), SimConfig(L=8.0 * math.pi, N=512))
    assert grid.L == pytest.approx(8.0 * math.pi)


def test_trust_radius_is_positive_for_the_desk_scale_run() -> None:
    config = SimConfig()
    grid = make_grid(StepParams(A=2.0, B=-0.5, R=0.2), config)
    assert grid.N == 4096
    assert seam_trust_radius(grid, config) > 100.0


def test_mollified_step_profile() -> None:
    params = StepParams(A=2.0, B=0.5, R=0.2)
    config = SimConfig(L=16.0 * math.pi, N=1024)
    grid = make_grid(params, config)
    snap = mollified_step(params, grid, config)
    assert abs(snap.q[grid.nearest_index(-20.0)]) <= 1e-12
    assert abs(snap.q[grid.nearest_index(20.0)]) == pytest.approx(2.0)
    # tapered to zero at the seam
    assert abs(snap.q[-1]) <= 1e-2

    with pytest.raises(InputError):
        mollified_step(params, grid, SimConfig(L=16.0 * math.pi, N=1024, mollify_width=0.1))


def test_evolve_lands_on_the_requested_snapshot_times() -> None:
    grid = SimulationGrid(L=10.0, N=256)
    config = SimConfig(dt=1e-3, t_final=0.1, snapshots=[0.0, 0.05, 0.1, 0.05])
    snaps = evolve(FieldSnapshot(t=0.0, x=grid.x, q=_gaussian(grid)), grid, config)
    assert [s.t for s in snaps] == [0.0, 0.05, 0.1]
    assert np.array_equal(snaps[0].q, _gaussian(grid))
    assert list(snaps[-1].to_frame().columns) == ["t", "x", "re(q)", "im(q)", "abs(q)"]


def test_dominant_period_of_a_cosine() -> None:
    dx = 0.05
    x = np.arange(4096) * dx
    values = 1.0 + 0.4 * np.cos(2.0 * x + 0.3)
    assert abs(dominant_period(x, values) - math.pi) <= 2.0 * dx

    with pytest.raises(EmptyConeError):
        dominant_period(x[:4], values[:4])


def test_compare_needs_a_trusted_region() -> None:
    bundle = assemble_spectrum_report(StepParams(A=2.0, B=-0.5, R=0.2), "classify")
    evaluator = AsymptoticEvaluator(bundle.sdata, bundle.report)
    grid = SimulationGrid(L=4.0 * math.pi, N=256)
    snaps = [FieldSnapshot(t=1.0, x=grid.x, q=np.zeros(grid.N, dtype=complex))]
    with pytest.raises(EmptyConeError):
        compare(snaps, evaluator, grid, CompareSpec(xi=1.0), trust_radius=0.0)
    with pytest.raises(EmptyConeError):
        compare(snaps, evaluator, grid, CompareSpec(xi=1.0), trust_radius=1.0)


def test_reduced_simulation_tracks_the_leading_terms() -> None:
    params = StepParams(A=2.0, B=-0.5, R=0.2)
    time = SimConfig(L=64.0 * math.pi, N=1024, dt=1e-3, t_final=10.0, snapshots=[2.5, 5.0, 7.5, 10.0])
    config = RunConfig(command="simulate", background=params, time=time)
    simulated = run_simulate(config)
    grid = make_grid(params, time)
    trust = seam_trust_radius(grid, time)
    assert trust > 40.0
    bundle = assemble_spectrum_report(params, "classify")
    evaluator = AsymptoticEvaluator(bundle.sdata, bundle.report)

    wave = compare(simulated.snapshots, evaluator, grid, CompareSpec(xi=1.0), trust)
    errors = wave.ray_relative_errors()
    assert len(errors) == 4
    assert errors[-1] < errors[0]
    assert errors[-1] <= 0.3

    periodic = compare(simulated.snapshots, evaluator, grid, CompareSpec(xi=0.2), trust)
    assert periodic.x_period is not None
    assert abs(periodic.x_period - math.pi) <= 2.0 * grid.dx


@pytest.mark.skipif(not SLOW, reason="desk-scale simulation; set NNLS_SPECTRA_SLOW=1")
def test_simulation_agrees_with_the_leading_terms() -> None:
    params = StepParams(A=2.0, B=-0.5, R=0.2)
    config = RunConfig(command="simulate", background=params, threads=os.cpu_count() or 1)
    simulated = run_simulate(config)
    grid = make_grid(params, config.time)
    trust = seam_trust_radius(grid, config.time)
    bundle = assemble_spectrum_report(params, "classify")
    evaluator = AsymptoticEvaluator(bundle.sdata, bundle.report)

    wave = compare(simulated.snapshots, evaluator, grid, CompareSpec(xi=1.0), trust)
    errors = wave.ray_relative_errors()
    assert errors[-1] <= 0.15
    assert all(b < a for a, b in zip(errors[:-1], errors[1:]))

    decay = compare(simulated.snapshots, evaluator, grid, CompareSpec(xi=-1.0), trust)
    assert decay.decay_slope is not None and decay.predicted_slope is not None
    assert abs(decay.decay_slope - decay.predicted_slope) <= 0.1

    periodic = compare(simulated.snapshots, evaluator, grid, CompareSpec(xi=0.2), trust)
    assert periodic.x_period is not None
    assert abs(periodic.x_period - math.pi) <= 2.0 * grid.dx
