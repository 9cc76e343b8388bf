from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.fft import rfft, rfftfreq

from src.errors import InputError
from src.schemas import CompareSpec
from src.asymptotics.leading import AsymptoticEvaluator, DenominatorMarginError
from src.asymptotics.sectors import TransitionRegionError, classify_ray
from src.simulation.fields import FieldSnapshot, SimulationGrid

logger = logging.getLogger(__name__)

COLUMNS = ["t", "x", "xi", "re(q_sim)", "im(q_sim)", "re(q_as)", "im(q_as)", "abs_err", "rel_err"]


class EmptyConeError(InputError):
    pass


@dataclass
class ComparisonReport:
    xi: float
    sector: str
    table: pd.DataFrame = field(repr=False)
    ray: pd.DataFrame = field(repr=False)
    decay_slope: float | None = None
    predicted_slope: float | None = None
    x_period: float | None = None

    def ray_relative_errors(self) -> list[float]:
        return [float(v) for v in self.ray["rel_err"]]

    def summary(self) -> dict[str, object]:
        return {
            "xi": self.xi,
            "sector": self.sector,
            "rows": int(len(self.table)),
            "ray_relative_errors": self.ray_relative_errors(),
            "decay_slope": self.decay_slope,
            "predicted_slope": self.predicted_slope,
            "x_period": self.x_period,
        }


def _row(evaluator: AsymptoticEvaluator, t: float, x: float, q_sim: complex) -> dict[str, float]:
    try:
        q_as = evaluator.leading_term(x, t).value
    except (DenominatorMarginError, TransitionRegionError) as exc:
        logger.debug("no leading term at x=%s t=%s: %s", x, t, exc)
        q_as = complex(np.nan, np.nan)
    err = abs(q_sim - q_as)
    return {
        "t": t,
        "x": x,
        "xi": x / (4.0 * t),
        "re(q_sim)": q_sim.real,
        "im(q_sim)": q_sim.imag,
        "re(q_as)": q_as.real,
        "im(q_as)": q_as.imag,
        "abs_err": err,
        "rel_err": err / abs(q_as) if abs(q_as) > 0 else np.nan,
    }


def dominant_period(x: np.ndarray, values: np.ndarray, *, pad: int = 16) -> float:
    """Spatial period of the strongest non-constant Fourier mode of a uniformly sampled profile."""
    if x.size < 8:
        raise EmptyConeError("too few samples for a period estimate")
    dx = float(x[1] - x[0])
    centred = values - np.mean(values)
    size = pad * x.size
    spectrum = np.abs(rfft(centred * np.hanning(x.size), n=size))
    freqs = rfftfreq(size, d=dx)
    spectrum[0] = 0.0
    j = int(np.argmax(spectrum))
    if 0 < j < spectrum.size - 1:
        # parabolic refinement of the peak
        a, b, c = spectrum[j - 1], spectrum[j], spectrum[j + 1]
        denom = a - 2.0 * b + c
        offset = 0.5 * (a - c) / denom if denom != 0 else 0.0
    else:
        offset = 0.0
    f = freqs[j] + offset * (freqs[1] - freqs[0])
    return float(1.0 / f)


def compare(
    snapshots: list[FieldSnapshot],
    evaluator: AsymptoticEvaluator,
    grid: SimulationGrid,
    spec: CompareSpec,
    trust_radius: float,
) -> ComparisonReport:
    """
    Errors of the leading term against simulated snapshots.

    Along the ray the nearest grid point to x = 4 xi t is used per snapshot; inside
    [x_min, x_max] every trusted grid point of every snapshot is tabulated.
    """
    if trust_radius <= 0.0:
        raise EmptyConeError(f"trust radius {trust_radius:.4g} leaves no usable region")
    sector = classify_ray(spec.xi, evaluator.report)
    timed = [snap for snap in snapshots if snap.t > 0.0]
    if not timed:
        raise EmptyConeError("no snapshot with t > 0")

    ray_rows = []
    for snap in timed:
        x = 4.0 * spec.xi * snap.t
        if abs(x) > trust_radius:
            continue
        j = grid.nearest_index(x)
        ray_rows.append(_row(evaluator, snap.t, float(grid.x[j]), complex(snap.q[j])))
    ray = pd.DataFrame(ray_rows, columns=COLUMNS)

    cone_rows = []
    if spec.x_min is not None and spec.x_max is not None:
        if spec.x_min >= spec.x_max:
            raise InputError("x_min must be below x_max")
        sel = (grid.x >= spec.x_min) & (grid.x <= spec.x_max) & (np.abs(grid.x) <= trust_radius)
        for snap in timed:
            for j in np.nonzero(sel)[0]:
                x = float(grid.x[j])
                if not sector.contains(x / (4.0 * snap.t)):
                    continue
                cone_rows.append(_row(evaluator, snap.t, x, complex(snap.q[j])))
    table = pd.DataFrame(cone_rows, columns=COLUMNS)
    if ray.empty and table.empty:
        raise EmptyConeError("the comparison cone is empty after excluding the seam region")

    report = ComparisonReport(xi=spec.xi, sector=sector.describe, table=table, ray=ray)

    if sector.kind in ("decay_left", "decay_right", "mid_decay") and len(ray) >= 2:
        modulus = np.hypot(ray["re(q_sim)"].to_numpy(), ray["im(q_sim)"].to_numpy())
        report.decay_slope = float(np.polyfit(np.log(ray["t"].to_numpy()), np.log(modulus), 1)[0])
        if sector.n == 0 and sector.kind != "decay_right":
            # modulus of the n = 0 decaying formulas is a pure power of t
            if sector.kind == "decay_left":
                report.predicted_slope = -0.5 - evaluator.nu_plus(spec.xi).im
            else:
                report.predicted_slope = -0.5 + evaluator.nu_minus(spec.xi).im

    if sector.kind == "mid_periodic":
        snap = timed[-1]
        edge = abs(evaluator.B) * 4.0 * snap.t
        lo = max(sector.lower * 4.0 * snap.t, -trust_radius, -edge)
        hi = min(sector.upper * 4.0 * snap.t, trust_radius, edge)
        if spec.x_min is not None and spec.x_max is not None:
            lo, hi = max(lo, spec.x_min), min(hi, spec.x_max)
        sel = (grid.x > lo) & (grid.x < hi)
        report.x_period = dominant_period(grid.x[sel], np.abs(snap.q[sel]))
    logger.info("compare xi=%s (%s): %d ray rows, %d cone rows", spec.xi, sector.describe, len(ray), len(table))
    return report
