from __future__ import annotations

import logging
import math

import numpy as np
from scipy.fft import fft, ifft

from src.errors import NumericalError
from src.schemas import SimConfig
from src.simulation.fields import FieldSnapshot, SimulationGrid
from src.workers import resolve_threads

logger = logging.getLogger(__name__)


class BlowUpError(NumericalError):
    """Field left the admissible range; carries the snapshots taken so far."""

    def __init__(self, message: str, *, snapshots: list[FieldSnapshot], last_good: FieldSnapshot) -> None:
        super().__init__(message)
        self.snapshots = snapshots
        self.last_good = last_good


def nonlinear_substep(q: np.ndarray, dt: float, reflection: np.ndarray) -> np.ndarray:
    """
    Exact flow of i q_t = -2 q^2 conj(q(-x)) over dt.

    q(x) conj(q(-x)) is invariant under this flow, so both q(x) and q(-x) rotate
    by the same frozen exponent.
    """
    invariant = q * np.conj(q[reflection])
    return q * np.exp(2j * dt * invariant)


def linear_multiplier(k: np.ndarray, dt: float) -> np.ndarray:
    return np.exp(-1j * k * k * dt)


def linear_step(q: np.ndarray, multiplier: np.ndarray, workers: int = 1) -> np.ndarray:
    return ifft(multiplier * fft(q, workers=workers), workers=workers)


def strang_step(
    q: np.ndarray,
    dt: float,
    grid: SimulationGrid,
    multiplier: np.ndarray | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Half nonlinear, full linear, half nonlinear; dt may be negative."""
    if multiplier is None:
        multiplier = linear_multiplier(grid.k, dt)
    q = nonlinear_substep(q, 0.5 * dt, grid.reflection)
    q = linear_step(q, multiplier, workers)
    return nonlinear_substep(q, 0.5 * dt, grid.reflection)


def _segments(times: list[float], dt: float) -> list[tuple[float, int, float]]:
    """(target time, step count, step size) per snapshot interval, the size shrunk to land exactly."""
    out = []
    previous = 0.0
    for target in times:
        span = target - previous
        if span <= 0.0:
            out.append((target, 0, 0.0))
            continue
        count = max(1, math.ceil(span / dt - 1e-9))
        out.append((target, count, span / count))
        previous = target
    return out


def evolve(
    initial: FieldSnapshot,
    grid: SimulationGrid,
    config: SimConfig,
    *,
    threads: int | None = None,
) -> list[FieldSnapshot]:
    """Strang split-step evolution from t = 0, returning a snapshot at every requested time."""
    workers = resolve_threads(threads)
    q = np.asarray(initial.q, dtype=complex).copy()
    scale = max(float(np.max(np.abs(q))), 1e-300)
    ceiling = config.blowup_factor * scale
    times = sorted(set(config.snapshots))

    snapshots: list[FieldSnapshot] = []
    last_good = FieldSnapshot(t=0.0, x=grid.x.copy(), q=q.copy())
    if times and times[0] == 0.0:
        snapshots.append(last_good)
        times = times[1:]

    t = 0.0
    check_every = 50
    for target, count, h in _segments(times, config.dt):
        if count == 0:
            continue
        multiplier = linear_multiplier(grid.k, h)
        logger.info("evolving to t=%.4g: %d steps of %.3g", target, count, h)
        for step in range(1, count + 1):
            q = strang_step(q, h, grid, multiplier, workers)
            if step % check_every == 0 or step == count:
                peak = float(np.max(np.abs(q)))
                if not math.isfinite(peak) or peak > ceiling:
                    raise BlowUpError(
                        f"|q| = {peak:.3g} exceeds {config.blowup_factor}x the initial maximum near t={t + step * h:.4g}",
                        snapshots=snapshots,
                        last_good=last_good,
                    )
                last_good = FieldSnapshot(t=t + step * h, x=grid.x.copy(), q=q.copy())
        t = target
        snapshots.append(FieldSnapshot(t=target, x=grid.x.copy(), q=q.copy()))
        logger.debug("snapshot t=%.4g max|q|=%.4g", target, float(np.max(np.abs(q))))
    return snapshots
