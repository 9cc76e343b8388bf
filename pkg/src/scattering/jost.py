from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.errors import InputError, NumericalError
from src.schemas import StepParams
from src.scattering.datum import InitialDatum
from src.workers import map_chunks

logger = logging.getLogger(__name__)

Side = Literal["left", "right"]
Columns = Literal["both", "first", "second"]

# RK4 step h obeys h * (1 + |k| + A + |B|) <= STEP_SCALE
STEP_SCALE = 0.02
DET_TOLERANCE = 1e-6


class JostIntegrationError(NumericalError):
    pass


class SingularPointError(InputError):
    pass


@dataclass(frozen=True)
class JostMatrix:
    x: float
    k: complex
    side: Side
    value: np.ndarray

    @property
    def column_tags(self) -> tuple[str, str]:
        origin = "Psi1" if self.side == "left" else "Psi2"
        return (f"{origin}^(1)", f"{origin}^(2)")

    @property
    def det(self) -> complex:
        v = self.value
        return complex(v[0, 0] * v[1, 1] - v[0, 1] * v[1, 0])


def tail_solution(params: StepParams, side: Side, k: np.ndarray, x: float) -> np.ndarray:
    """Exact background Jost matrix: e^{-iBx s3} N_-(k) on the left, e^{iBx s3} N_+(k) on the right."""
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    A, B = params.A, params.effective_B
    out = np.zeros(k.shape + (2, 2), dtype=complex)
    denom = k - B if side == "left" else k + B
    with np.errstate(divide="ignore", invalid="ignore"):
        off = -1j * A / (2.0 * denom) if A > 0 else np.zeros_like(k)
    if side == "left":
        out[:, 0, 0] = np.exp(-1j * B * x)
        out[:, 1, 0] = np.exp(1j * B * x) * off
        out[:, 1, 1] = np.exp(1j * B * x)
    else:
        out[:, 0, 0] = np.exp(1j * B * x)
        out[:, 0, 1] = np.exp(1j * B * x) * off
        out[:, 1, 1] = np.exp(-1j * B * x)
    return out


def _start_point(datum: InitialDatum, side: Side) -> float:
    # beyond this point both q(x) and q(-x) equal their analytic tails
    if side == "left":
        return min(datum.left_tail_bound, -datum.right_tail_bound, 0.0)
    return max(datum.right_tail_bound, -datum.left_tail_bound, 0.0)


def _segments(datum: InitialDatum, start: float, stop: float) -> list[tuple[float, float]]:
    marks = {start, stop}
    candidates = list(datum.breakpoints) + [datum.left_tail_bound, datum.right_tail_bound, 0.0]
    lo, hi = min(start, stop), max(start, stop)
    for b in candidates:
        for c in (b, -b):
            if lo < c < hi:
                marks.add(c)
    ordered = sorted(marks, reverse=start > stop)
    return [(a, b) for a, b in zip(ordered[:-1], ordered[1:]) if a != b]


def _rhs(dk: np.ndarray, u12: complex, u21: complex, psi: np.ndarray) -> np.ndarray:
    out = dk * psi
    out[:, 0, :] += u12 * psi[:, 1, :]
    out[:, 1, :] += u21 * psi[:, 0, :]
    return out


def _propagate(
    datum: InitialDatum,
    side: Side,
    k: np.ndarray,
    psi: np.ndarray,
    start: float,
    stop: float,
    h_max: float,
) -> np.ndarray:
    """Fixed-step RK4 for Psi' = D(k) o Psi + U(x) Psi between start and stop."""
    B = datum.background.effective_B
    mu = k - B if side == "left" else k + B
    dk = np.empty(k.shape + (2, 2), dtype=complex)
    dk[:, 0, 0] = 1j * (mu - k)
    dk[:, 0, 1] = -1j * (mu + k)
    dk[:, 1, 0] = 1j * (k + mu)
    dk[:, 1, 1] = 1j * (k - mu)

    for a, b in _segments(datum, start, stop):
        length = b - a
        n = max(1, int(math.ceil(abs(length) / h_max)))
        h = length / n
        nodes = a + 0.5 * h * np.arange(2 * n + 1)
        # one-sided values at the segment ends
        eps = 1e-12 * max(1.0, abs(a), abs(b))
        nodes[0] += math.copysign(eps, h)
        nodes[-1] -= math.copysign(eps, h)
        qx = datum.value(nodes)
        qm = datum.value(-nodes)
        u12 = qx
        u21 = -np.conj(qm)
        for j in range(n):
            i0 = 2 * j
            k1 = _rhs(dk, u12[i0], u21[i0], psi)
            k2 = _rhs(dk, u12[i0 + 1], u21[i0 + 1], psi + 0.5 * h * k1)
            k3 = _rhs(dk, u12[i0 + 1], u21[i0 + 1], psi + 0.5 * h * k2)
            k4 = _rhs(dk, u12[i0 + 2], u21[i0 + 2], psi + h * k3)
            psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return psi


def _jost_block(datum: InitialDatum, side: Side, k: np.ndarray, x_eval: float, columns: Columns) -> np.ndarray:
    bg = datum.background
    start = _start_point(datum, side)
    if (side == "left" and x_eval <= start) or (side == "right" and x_eval >= start):
        return tail_solution(bg, side, k, x_eval)

    psi0 = tail_solution(bg, side, k, start)
    # columns evolve independently; dropping one keeps the other from overflowing off the real axis
    if columns == "first":
        psi0[:, :, 1] = 0.0
    elif columns == "second":
        psi0[:, :, 0] = 0.0
    scale = 1.0 + np.abs(k) + bg.A + abs(bg.effective_B)
    bucket = np.ceil(np.log2(scale)).astype(int)
    out = np.empty_like(psi0)
    for level in np.unique(bucket):
        sel = bucket == level
        h_max = min(datum.spacing, STEP_SCALE / 2.0 ** int(level))
        out[sel] = _propagate(datum, side, k[sel], psi0[sel], start, x_eval, h_max)
    return out


def jost_at(
    datum: InitialDatum,
    side: Side,
    k: np.ndarray,
    x_eval: float = 0.0,
    *,
    columns: Columns = "both",
    threads: int | None = None,
) -> np.ndarray:
    """Psi_1 (side='left') or Psi_2 (side='right') at x_eval for every k; shape (m, 2, 2)."""
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    B = datum.background.effective_B
    if datum.background.A > 0 and columns != ("second" if side == "left" else "first"):
        pole = B if side == "left" else -B
        if np.any(np.abs(k - pole) < 1e-14 * max(1.0, abs(pole))):
            raise SingularPointError(f"k = {pole} is a pole of the {side} Jost solution")

    psi = map_chunks(lambda chunk: _jost_block(datum, side, chunk, x_eval, columns), k, threads)

    real = np.abs(k.imag) < 1e-12
    if columns == "both" and np.any(real):
        det = psi[real, 0, 0] * psi[real, 1, 1] - psi[real, 0, 1] * psi[real, 1, 0]
        worst = float(np.max(np.abs(det - 1.0)))
        if not np.isfinite(worst) or worst > DET_TOLERANCE:
            raise JostIntegrationError(f"det Psi deviates from 1 by {worst:.3e} on the real axis")
    return psi


def integrate_jost(datum: InitialDatum, side: Side, k: complex, x_eval: float = 0.0) -> JostMatrix:
    value = jost_at(datum, side, np.array([k]), x_eval)[0]
    return JostMatrix(x=float(x_eval), k=complex(k), side=side, value=value)
