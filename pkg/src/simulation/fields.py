from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.fft import fftfreq

from src.errors import InputError
from src.schemas import SimConfig, StepParams
from src.scattering.datum import smooth_step

logger = logging.getLogger(__name__)

MAX_HALF_WIDTH = 800.0
PERIODS_PER_DOMAIN = 200


@dataclass(frozen=True)
class SimulationGrid:
    """Torus [-L, L) with x_j = -L + j 2L/N; index (-j) mod N is the point -x_j."""

    L: float
    N: int
    x: np.ndarray = field(init=False, repr=False, compare=False)
    k: np.ndarray = field(init=False, repr=False, compare=False)
    reflection: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.N < 4 or self.N % 2:
            raise InputError("N must be even and at least 4")
        j = np.arange(self.N)
        dx = 2.0 * self.L / self.N
        object.__setattr__(self, "x", -self.L + j * dx)
        object.__setattr__(self, "k", 2.0 * np.pi * fftfreq(self.N, d=dx))
        object.__setattr__(self, "reflection", (-j) % self.N)

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def k_nyquist(self) -> float:
        return math.pi * self.N / (2.0 * self.L)

    def reflect(self, q: np.ndarray) -> np.ndarray:
        """q(-x) sampled on the same grid."""
        return q[self.reflection]

    def nearest_index(self, x: float) -> int:
        return int(np.argmin(np.abs(self.x - x)))


@dataclass(frozen=True)
class FieldSnapshot:
    t: float
    x: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": np.full(self.x.shape, self.t),
                "x": self.x,
                "re(q)": self.q.real,
                "im(q)": self.q.imag,
                "abs(q)": np.abs(self.q),
            }
        )


def default_domain(B: float) -> float:
    """Largest L <= min(200 pi/|B|, 800) with B L a multiple of pi."""
    if B == 0.0:
        return MAX_HALF_WIDTH
    period = math.pi / abs(B)
    cap = min(PERIODS_PER_DOMAIN * period, MAX_HALF_WIDTH)
    count = math.floor(cap / period)
    if count < 1:
        raise InputError(f"|B| = {abs(B)} too small for a periodic background on L <= {MAX_HALF_WIDTH}")
    return count * period


def make_grid(params: StepParams, config: SimConfig) -> SimulationGrid:
    L = config.L if config.L is not None else default_domain(params.effective_B)
    B = params.effective_B
    if B != 0.0:
        turns = B * L / math.pi
        if abs(turns - round(turns)) > 1e-9 * max(1.0, abs(turns)):
            raise InputError(f"B L = {B * L:.6g} is not a multiple of pi")
    return SimulationGrid(L=float(L), N=config.N)


def seam_width(grid: SimulationGrid, config: SimConfig) -> float:
    return config.seam_fraction * grid.L


def seam_trust_radius(grid: SimulationGrid, config: SimConfig) -> float:
    """Largest |x| kept by the comparison: L - seam - 4 k_max t_final."""
    k_max = grid.k_nyquist * config.safety
    return grid.L - seam_width(grid, config) - 4.0 * k_max * config.t_final


def seam_window(x: np.ndarray, L: float, width: float) -> np.ndarray:
    """1 away from the seam, raised-cosine fall to 0 over [L - width, L]."""
    s = np.clip((L - x) / width, 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(np.pi * s)


def mollified_step(params: StepParams, grid: SimulationGrid, config: SimConfig) -> FieldSnapshot:
    """Smoothed step A e^{2iBx} (edge near x=R), tapered to 0 before the seam at x = L."""
    A, B, R = params.A, params.effective_B, params.R
    w = config.mollify_width
    if w < 4.0 * grid.dx:
        raise InputError(f"mollify_width {w} is below 4 grid spacings ({4.0 * grid.dx:.4g})")
    ws = seam_width(grid, config)
    lo, hi = R - 2.5 * w, R + 2.5 * w
    if lo <= -grid.L or hi >= grid.L - ws:
        raise InputError(f"step transition [{lo:.4g}, {hi:.4g}] does not fit inside the domain and its seam")
    x = grid.x
    q = A * np.exp(2j * B * x) * smooth_step((x - lo) / (5.0 * w)) * seam_window(x, grid.L, ws)
    logger.debug("mollified step on L=%.4g N=%d width=%s seam=%.4g", grid.L, grid.N, w, ws)
    return FieldSnapshot(t=0.0, x=x.copy(), q=q.astype(complex))
