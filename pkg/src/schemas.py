from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

# background and grids


class StepParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    A: float = Field(..., ge=0.0, description="amplitude of the right background A e^{2iBx}")
    B: float = Field(default=0.0, description="background wavenumber")
    R: float = Field(default=0.0, ge=0.0, description="shift of the step edge")

    @model_validator(mode="after")
    def _finite(self) -> "StepParams":
        for name in ("A", "B", "R"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        return self

    @property
    def effective_B(self) -> float:
        # the zero datum has no background oscillation
        return self.B if self.A > 0 else 0.0


class GridSpec(BaseModel):
    half_width: float = Field(default=8.0, gt=0.0, description="samples cover [-half_width, half_width]")
    points: int = Field(default=4097, ge=3, description="number of uniform samples")
    puncture: float = Field(default=1e-3, gt=0.0, description="puncture radius around +-B, scaled by max(1,|B|)")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points - 1)


class SimConfig(BaseModel):
    L: float | None = Field(default=None, gt=0.0, description="half period of the torus; default from B")
    N: int = Field(default=4096, ge=16, description="grid points, a power of two")
    dt: float = Field(default=5e-4, gt=0.0)
    t_final: float = Field(default=40.0, gt=0.0)
    snapshots: list[float] = Field(default_factory=lambda: [10.0, 20.0, 30.0, 40.0])
    mollify_width: float = Field(default=2.0, gt=0.0, description="width of the smooth step at x=R")
    seam_fraction: float = Field(default=0.05, gt=0.0, lt=0.5, description="raised-cosine seam width / L")
    safety: float = Field(default=0.25, gt=0.0, le=1.0, description="fraction of the Nyquist wavenumber trusted")
    blowup_factor: float = Field(default=50.0, gt=1.0, description="|q| above factor*A counts as divergence")

    @model_validator(mode="after")
    def _power_of_two(self) -> "SimConfig":
        if self.N & (self.N - 1):
            raise ValueError("N must be a power of two")
        if any(t < 0 or t > self.t_final for t in self.snapshots):
            raise ValueError("snapshot times must lie in [0, t_final]")
        return self


class CompareSpec(BaseModel):
    xi: float = Field(..., description="ray x/(4t) to compare along")
    x_min: float | None = Field(default=None, description="left edge of the comparison cone")
    x_max: float | None = Field(default=None, description="right edge of the comparison cone")
    margin: float = Field(default=0.05, gt=0.0, description="relative denominator margin for the periodic sector")


class RunConfig(BaseModel):
    command: Literal["scatter", "zeros", "winding", "classify", "asymptote", "simulate", "compare"]
    background: StepParams
    grid: GridSpec = Field(default_factory=GridSpec)
    time: SimConfig = Field(default_factory=SimConfig)
    compare: CompareSpec | None = None
    out_dir: str = Field(default="outputs")
    fmt: Literal["csv", "json"] = Field(default="csv")
    threads: int = Field(default=1, ge=1)


# spectrum report


class ComplexValue(BaseModel):
    re: float
    im: float

    @classmethod
    def of(cls, z: complex) -> "ComplexValue":
        return cls(re=float(z.real), im=float(z.imag))

    def to_complex(self) -> complex:
        return complex(self.re, self.im)


class RealZeroRecord(BaseModel):
    k: float
    multiplicity: int = Field(default=1, ge=1, le=2)


class PairRecord(BaseModel):
    re: float = Field(..., description="Re p, negative member of the pair {p, -conj(p)}")
    im: float = Field(..., gt=0.0)
    tau: float
    y: float


class SpectrumReport(BaseModel):
    params: StepParams
    real_zeros: list[RealZeroRecord] = Field(default_factory=list)
    k0: float | None = Field(default=None, description="imaginary zero i*k0 of a1")
    pairs: list[PairRecord] = Field(default_factory=list)
    omegas: list[float] = Field(default_factory=list, description="omega_1 > omega_2 > ... (all < -|B|)")
    theta_minusB: float | None = None
    winding_at_zero_over_pi: float | None = None
    case: Literal["I", "II"] | None = None
    n: int | None = Field(default=None, ge=0)
    gamma0: ComplexValue | None = None
    etas: list[ComplexValue] = Field(default_factory=list)


# HTTP requests


class ScatteringRequest(BaseModel):
    params: StepParams
    k: list[float] = Field(..., min_length=1, description="real parts of the evaluation points")
    im_k: list[float] | None = Field(default=None, description="imaginary parts; omitted means real k")
    source: Literal["closed_form", "numerical"] = Field(
        default="closed_form", description="closed forms of the pure step, or Jost integration of the sampled step"
    )
    grid: GridSpec = Field(default_factory=GridSpec)

    @model_validator(mode="after")
    def _matching(self) -> "ScatteringRequest":
        if self.im_k is not None and len(self.im_k) != len(self.k):
            raise ValueError("im_k must have the same length as k")
        return self


class AsymptoteRequest(BaseModel):
    params: StepParams
    xi: float = Field(..., description="ray x/(4t)")
    t: float = Field(..., gt=0.0, description="time; the term is evaluated at x = 4 xi t")
    margin: float = Field(default=0.05, gt=0.0)
