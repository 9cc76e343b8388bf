from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from src.errors import InputError
from src.schemas import SpectrumReport

logger = logging.getLogger(__name__)

SectorLabel = Literal["ZM_decay_left", "plane_wave_right", "ZM_decay_mid", "periodic_mid", "winding_sector"]
SectorKind = Literal["plane_wave", "decay_left", "decay_right", "reciprocal_wave", "mid_decay", "mid_periodic"]

BOUNDARY_RTOL = 1e-9


def phase_theta(k: complex | np.ndarray, xi: float) -> complex | np.ndarray:
    """theta(k, xi) = 4 k xi + 2 k^2, stationary at k = -xi."""
    return 4.0 * k * xi + 2.0 * k * k


@dataclass(frozen=True)
class RaySector:
    label: SectorLabel
    kind: SectorKind
    m: int
    lower: float
    upper: float
    n: int = 0
    case: Literal["I", "II"] = "II"

    def contains(self, xi: float) -> bool:
        return self.lower < xi < self.upper

    @property
    def describe(self) -> str:
        if self.label == "winding_sector":
            return f"{self.kind}(m={self.m})"
        return self.label


class TransitionRegionError(InputError):
    """The ray sits on a sector boundary; the neighbouring sectors are attached."""

    def __init__(self, message: str, *, xi: float, boundary: float, neighbors: list[RaySector] | None = None) -> None:
        super().__init__(message)
        self.xi = xi
        self.boundary = boundary
        self.neighbors: list[RaySector] = neighbors or []


@dataclass
class SectorMap:
    """Ordered sectors of the xi-line for one spectral report."""

    sectors: list[RaySector] = field(default_factory=list)
    boundaries: list[float] = field(default_factory=list)

    def locate(self, xi: float) -> RaySector:
        for b in self.boundaries:
            if abs(xi - b) <= BOUNDARY_RTOL * max(1.0, abs(b)):
                neighbors = [s for s in self.sectors if b in (s.lower, s.upper)]
                names = ", ".join(s.describe for s in neighbors)
                raise TransitionRegionError(
                    f"xi = {xi} lies on the transition ray {b:.6g} between {names}; out of scope",
                    xi=xi,
                    boundary=b,
                    neighbors=neighbors,
                )
        for s in self.sectors:
            if s.contains(xi):
                return s
        raise InputError(f"xi = {xi} is not covered by any sector")


def _require_classified(report: SpectrumReport) -> tuple[float, Literal["I", "II"], int]:
    if report.case is None or report.n is None:
        raise InputError("spectrum report carries no case tag; run classify first")
    if report.params.A <= 0.0 or report.params.B == 0.0:
        raise InputError("ray classification needs A > 0 and B != 0")
    if len(report.pairs) != report.n or len(report.omegas) != report.n:
        raise InputError(f"report lists {len(report.pairs)} pairs and {len(report.omegas)} omegas for n={report.n}")
    return report.params.B, report.case, report.n


def sector_map(report: SpectrumReport) -> SectorMap:
    B, case, n = _require_classified(report)
    edge = abs(B)
    mid_kind: SectorKind = "mid_decay" if B > 0 else "mid_periodic"

    if n == 0:
        mid_label: SectorLabel = "ZM_decay_mid" if B > 0 else "periodic_mid"
        sectors = [
            RaySector("ZM_decay_left", "decay_left", 0, -math.inf, -edge, n, case),
            RaySector("plane_wave_right", "plane_wave", 0, edge, math.inf, n, case),
        ]
        if case == "I":
            sectors += [
                RaySector(mid_label, mid_kind, 0, -edge, 0.0, n, case),
                RaySector(mid_label, mid_kind, 0, 0.0, edge, n, case),
            ]
        else:
            sectors.append(RaySector(mid_label, mid_kind, 0, -edge, edge, n, case))
    else:
        omegas = sorted(report.omegas, reverse=True)
        re_p = [pair.re for pair in report.pairs]
        sectors = []
        # right half-line: plane waves and decaying sectors alternate
        upper_marks = [edge]
        for j in range(1, n + 1):
            upper_marks += [-omegas[j - 1], -re_p[j - 1]]
        upper_marks.append(math.inf)
        for i, (lo, hi) in enumerate(zip(upper_marks[:-1], upper_marks[1:])):
            j = (i + 1) // 2
            kind: SectorKind = "plane_wave" if i % 2 == 0 else "decay_right"
            sectors.append(RaySector("winding_sector", kind, n - j, lo, hi, n, case))
        # left half-line mirrors it with decay and reciprocal waves
        lower_marks = [-edge]
        for j in range(1, n + 1):
            lower_marks += [omegas[j - 1], re_p[j - 1]]
        lower_marks.append(-math.inf)
        for i, (hi, lo) in enumerate(zip(lower_marks[:-1], lower_marks[1:])):
            j = (i + 1) // 2
            kind = "decay_left" if i % 2 == 0 else "reciprocal_wave"
            sectors.append(RaySector("winding_sector", kind, n - j, lo, hi, n, case))
        if case == "I":
            sectors += [
                RaySector("winding_sector", mid_kind, n, -edge, 0.0, n, case),
                RaySector("winding_sector", mid_kind, n, 0.0, edge, n, case),
            ]
        else:
            sectors.append(RaySector("winding_sector", mid_kind, n, -edge, edge, n, case))

    bounds = {s.lower for s in sectors} | {s.upper for s in sectors}
    boundaries = sorted(b for b in bounds if math.isfinite(b))
    return SectorMap(sectors=sorted(sectors, key=lambda s: s.lower), boundaries=boundaries)


def classify_ray(xi: float, report: SpectrumReport) -> RaySector:
    if not math.isfinite(xi):
        raise InputError("xi must be finite")
    sector = sector_map(report).locate(float(xi))
    logger.debug("xi=%s -> %s", xi, sector.describe)
    return sector
