from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from src.errors import InputError
from src.schemas import GridSpec, StepParams

logger = logging.getLogger(__name__)

Profile = Callable[[np.ndarray], np.ndarray]


class DatumError(InputError):
    pass


@dataclass(frozen=True)
class Perturbation:
    """Compactly supported complex profile added to the step."""

    support: tuple[float, float]
    func: Profile

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x > lo) & (x < hi)
        out = np.zeros(x.shape, dtype=complex)
        if np.any(inside):
            out[inside] = self.func(x[inside])
        return out


def bump_perturbation(center: float, half_width: float, amplitude: complex) -> Perturbation:
    """C-infinity bump amplitude*exp(1 - 1/(1-s^2)) on |s| < 1, s = (x-center)/half_width."""
    if half_width <= 0:
        raise DatumError("bump half width must be positive")

    def _bump(x: np.ndarray) -> np.ndarray:
        s = (x - center) / half_width
        return amplitude * np.exp(1.0 - 1.0 / (1.0 - s * s))

    return Perturbation(support=(center - half_width, center + half_width), func=_bump)


def smooth_step(s: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    out = np.zeros_like(s)
    out[s >= 1.0] = 1.0
    mid = (s > 0.0) & (s < 1.0)
    if np.any(mid):
        sm = s[mid]
        f0 = np.exp(-1.0 / sm)
        f1 = np.exp(-1.0 / (1.0 - sm))
        out[mid] = f0 / (f0 + f1)
    return out


@dataclass(frozen=True)
class InitialDatum:
    x: np.ndarray
    q: np.ndarray
    background: StepParams
    left_tail_bound: float
    right_tail_bound: float
    breakpoints: tuple[float, ...] = ()
    profile: Profile | None = field(default=None, repr=False, compare=False)
    sharp_edge: bool = False

    @property
    def spacing(self) -> float:
        return float(self.x[1] - self.x[0])

    def tail(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        bg = self.background
        return np.where(x >= self.right_tail_bound, bg.A * np.exp(2j * bg.effective_B * x), 0.0 + 0.0j)

    def value(self, x: np.ndarray) -> np.ndarray:
        """Profile q(x): exact tails outside the tail bounds, profile or interpolated samples inside."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.tail(x).astype(complex)
        inner = (x > self.left_tail_bound) & (x < self.right_tail_bound)
        if np.any(inner):
            xi = x[inner]
            if self.profile is not None:
                out[inner] = self.profile(xi)
            else:
                out[inner] = self._interpolate(xi)
        return out

    @cached_property
    def _pieces(self) -> tuple[np.ndarray, list[CubicSpline | None]]:
        # one spline per smooth piece between consecutive breakpoints inside the tail bounds
        lo, hi = self.left_tail_bound, self.right_tail_bound
        cuts = np.array(sorted({lo, hi, *(b for b in self.breakpoints if lo < b < hi)}))
        splines: list[CubicSpline | None] = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            sel = (self.x >= a) & (self.x <= b)
            if np.count_nonzero(sel) < 4:
                splines.append(None)
                continue
            values = np.column_stack([self.q.real[sel], self.q.imag[sel]])
            splines.append(CubicSpline(self.x[sel], values, axis=0))
        return cuts, splines

    def _interpolate(self, xs: np.ndarray) -> np.ndarray:
        """
        Samples interpolated by a cubic spline on each smooth piece.

        Pieces holding fewer than 4 samples fall back to linear interpolation, which
        limits the Jost integration there to second order in the spacing.
        """
        cuts, splines = self._pieces
        piece = np.clip(np.searchsorted(cuts, xs, side="right") - 1, 0, len(splines) - 1)
        out = np.empty(xs.shape, dtype=complex)
        for j, spline in enumerate(splines):
            sel = piece == j
            if not np.any(sel):
                continue
            if spline is None:
                out[sel] = np.interp(xs[sel], self.x, self.q.real) + 1j * np.interp(xs[sel], self.x, self.q.imag)
            else:
                values = spline(xs[sel])
                out[sel] = values[:, 0] + 1j * values[:, 1]
        return out


def _check_grid(params: StepParams, grid: GridSpec) -> np.ndarray:
    x = np.linspace(-grid.half_width, grid.half_width, grid.points)
    B = params.effective_B
    if B != 0.0:
        period = np.pi / abs(B)
        if grid.spacing > period / 2.0:
            raise DatumError(
                f"grid spacing {grid.spacing:.4g} too coarse for B={B}: need <= {period / 2.0:.4g}"
            )
    return x


def build_initial_datum(
    params: StepParams,
    perturbation: Perturbation | None = None,
    mollify_width: float = 0.0,
    grid: GridSpec | None = None,
) -> InitialDatum:
    """
    Sample the step 0 | A e^{2iBx} (edge at x=R) plus an optional compact perturbation.

    mollify_width = 0 keeps the sharp edge; a positive width replaces it by the smooth
    step transition over [R - 2.5w, R + 2.5w].
    """
    grid = grid or GridSpec()
    if mollify_width < 0:
        raise DatumError("mollify_width must be >= 0")
    x = _check_grid(params, grid)

    A, B, R = params.A, params.effective_B, params.R
    w = float(mollify_width)

    if w == 0.0:
        edge_lo, edge_hi = R, R
        breakpoints: list[float] = [R]

        def background(xs: np.ndarray) -> np.ndarray:
            return np.where(xs > R, A * np.exp(2j * B * xs), 0.0 + 0.0j)

    else:
        edge_lo, edge_hi = R - 2.5 * w, R + 2.5 * w
        breakpoints = [edge_lo, edge_hi]

        def background(xs: np.ndarray) -> np.ndarray:
            return A * np.exp(2j * B * xs) * smooth_step((xs - edge_lo) / (5.0 * w))

    left, right = edge_lo, edge_hi
    if perturbation is not None:
        lo, hi = perturbation.support
        if lo < -grid.half_width or hi > grid.half_width:
            raise DatumError(f"perturbation support [{lo}, {hi}] outside the sampled grid")
        left, right = min(left, lo), max(right, hi)
        breakpoints += [lo, hi]

    if A == 0.0 and perturbation is None:
        # the zero datum has no edge to resolve
        left, right = 0.0, 0.0

    for bound in (left, right):
        if abs(bound) > grid.half_width:
            raise DatumError(f"tail bound {bound} lies outside [-{grid.half_width}, {grid.half_width}]")

    def profile(xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = background(xs)
        if perturbation is not None:
            out = out + perturbation(xs)
        return out

    q = profile(x)
    logger.debug("datum A=%s B=%s R=%s width=%s tails=[%s, %s]", A, B, R, w, left, right)
    return InitialDatum(
        x=x,
        q=q,
        background=params,
        left_tail_bound=float(left),
        right_tail_bound=float(right),
        breakpoints=tuple(sorted(set(float(b) for b in breakpoints))),
        profile=profile,
        sharp_edge=(w == 0.0 and A > 0.0),
    )


def datum_from_samples(
    x: np.ndarray,
    q: np.ndarray,
    params: StepParams,
    left_tail_bound: float,
    right_tail_bound: float,
    *,
    breakpoints: tuple[float, ...] = (),
    sharp_edge: bool = False,
) -> InitialDatum:
    """Wrap sampled data (e.g. read back from CSV), checking the declared tails."""
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=complex)
    if x.ndim != 1 or x.shape != q.shape or x.size < 3:
        raise DatumError("samples must be matching 1d arrays with at least 3 points")
    steps = np.diff(x)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise DatumError("grid must be uniform and strictly increasing")
    if left_tail_bound > right_tail_bound:
        raise DatumError("left_tail_bound must not exceed right_tail_bound")
    if left_tail_bound < x[0] or right_tail_bound > x[-1]:
        raise DatumError("tail bounds must lie inside the sampled grid")

    B = params.effective_B
    if B != 0.0 and steps[0] > np.pi / abs(B) / 2.0:
        raise DatumError("grid too coarse for the background oscillation")

    left = x <= left_tail_bound
    right = x >= right_tail_bound
    scale = max(params.A, 1.0)
    if np.any(np.abs(q[left]) > 1e-12 * scale):
        raise DatumError("samples left of left_tail_bound must vanish")
    expected = params.A * np.exp(2j * B * x[right])
    if np.any(np.abs(q[right] - expected) > 1e-9 * scale):
        raise DatumError("samples right of right_tail_bound must equal A e^{2iBx}")

    return InitialDatum(
        x=x,
        q=q,
        background=params,
        left_tail_bound=float(left_tail_bound),
        right_tail_bound=float(right_tail_bound),
        breakpoints=tuple(sorted({float(left_tail_bound), float(right_tail_bound), *map(float, breakpoints)})),
        profile=None,
        sharp_edge=sharp_edge and params.A > 0.0,
    )
