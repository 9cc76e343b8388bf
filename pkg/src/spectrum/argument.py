from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.errors import InputError, NumericalError

logger = logging.getLogger(__name__)

MAX_JUMP = math.pi / 8.0
BOUNDARY_FLOOR = 1e-6


class BoundaryZeroError(InputError):
    """The contour passes too close to a zero; perturb it."""

    pass


class ArgumentTraceError(NumericalError):
    pass


@dataclass(frozen=True)
class ArgumentTrace:
    """Continuous argument of f along a parametrised path, refined until jumps stay below pi/8."""

    params: np.ndarray
    values: np.ndarray
    lifted: np.ndarray

    @property
    def total(self) -> float:
        return float(self.lifted[-1] - self.lifted[0])

    def lift(self, s: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Continuous argument at parameters s, given the principal values there."""
        guess = np.interp(s, self.params, self.lifted)
        principal = np.angle(values)
        return principal + 2.0 * np.pi * np.round((guess - principal) / (2.0 * np.pi))


def trace_argument(
    f: Callable[[np.ndarray], np.ndarray],
    params: np.ndarray,
    *,
    start: float | None = None,
    floor: float | None = None,
    max_jump: float = MAX_JUMP,
    max_rounds: int = 40,
    max_nodes: int = 400_000,
) -> ArgumentTrace:
    """
    Adaptive argument tracking of f over increasing parameter nodes.

    Midpoints are inserted wherever consecutive principal-argument increments reach
    max_jump; `start` fixes the lifted value at the first node (default: its principal arg).
    """
    s = np.asarray(params, dtype=float)
    vals = np.asarray(f(s), dtype=complex)
    for _ in range(max_rounds):
        if floor is not None and np.min(np.abs(vals)) < floor:
            raise BoundaryZeroError(f"|f| = {np.min(np.abs(vals)):.2e} on the path, below {floor:g}")
        steps = np.angle(vals[1:] / vals[:-1])
        bad = np.nonzero(np.abs(steps) >= max_jump)[0]
        if bad.size == 0:
            break
        if s.size + bad.size > max_nodes:
            raise ArgumentTraceError("argument trace exceeded its node budget")
        mids = 0.5 * (s[bad] + s[bad + 1])
        new_vals = np.asarray(f(mids), dtype=complex)
        s = np.insert(s, bad + 1, mids)
        vals = np.insert(vals, bad + 1, new_vals)
    else:
        raise ArgumentTraceError("argument trace did not settle below the jump threshold")

    if floor is not None and np.min(np.abs(vals)) < floor:
        raise BoundaryZeroError(f"|f| = {np.min(np.abs(vals)):.2e} on the path, below {floor:g}")
    increments = np.angle(vals[1:] / vals[:-1])
    first = float(np.angle(vals[0])) if start is None else float(start)
    lifted = first + np.concatenate([[0.0], np.cumsum(increments)])
    return ArgumentTrace(params=s, values=vals, lifted=lifted)


def count_zeros_argument_principle(
    f: Callable[[np.ndarray], np.ndarray],
    rectangle: tuple[float, float, float, float],
    samples_per_side: int = 256,
) -> int:
    """Winding number of f around the boundary of [x0, x1] x [y0, y1], counterclockwise."""
    x0, x1, y0, y1 = rectangle
    if not (x0 < x1 and y0 < y1):
        raise InputError("rectangle must have x0 < x1 and y0 < y1")
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]

    def path(s: np.ndarray) -> np.ndarray:
        # s in [0, 4]: one unit per side
        side = np.minimum(np.floor(s).astype(int), 3)
        frac = s - side
        a = np.array(corners)[side]
        b = np.array(corners)[side + 1]
        return a + frac * (b - a)

    s = np.linspace(0.0, 4.0, 4 * samples_per_side + 1)
    trace = trace_argument(lambda t: f(path(t)), s, floor=BOUNDARY_FLOOR)
    turns = trace.total / (2.0 * math.pi)
    count = int(round(turns))
    if abs(turns - count) > 1e-6:
        raise ArgumentTraceError(f"winding {turns:.6f} is not an integer")
    return count
