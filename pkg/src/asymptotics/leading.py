from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import pandas as pd

from src.errors import InputError, NumericalError
from src.schemas import SpectrumReport, StepParams
from src.scattering.data import ScatteringData
from src.spectrum.winding import SpectralArgument, spectral_argument
from src.spectrum.zeros import MEMBERSHIP_RTOL
from src.cauchy.delta import DeltaEvaluator, NuValue, compute_nu
from src.asymptotics.amplitude import alpha1, alpha2, remainder_exponent
from src.asymptotics.model_rh import ModelRHSolution, model_rh_solution, residue_coefficients_at
from src.asymptotics.sectors import RaySector, classify_ray, phase_theta

logger = logging.getLogger(__name__)

DENOMINATOR_MARGIN = 0.05

FormulaId = Literal["zm_left", "zm_mid", "plane_wave", "periodic", "reciprocal_wave", "rough"]


class DenominatorMarginError(InputError):
    """The periodic-sector denominator is inside the excluded neighbourhood of its zeros."""

    def __init__(self, message: str, *, ratio: float) -> None:
        super().__init__(message)
        self.ratio = ratio


@dataclass(frozen=True)
class AsymptoticTerm:
    x: float
    t: float
    xi: float
    sector: str
    value: complex
    error_exponent: float
    formula_id: FormulaId
    log_factor: bool = False

    def as_row(self) -> dict[str, object]:
        return {
            "x": self.x,
            "t": self.t,
            "xi": self.xi,
            "sector": self.sector,
            "re(q_as)": self.value.real,
            "im(q_as)": self.value.imag,
            "abs(q_as)": abs(self.value),
            "error_exponent": self.error_exponent,
        }


@dataclass
class AsymptoticEvaluator:
    """Leading terms for one set of scattering data; the spectral argument is traced once."""

    sdata: ScatteringData
    report: SpectrumReport
    margin: float = DENOMINATOR_MARGIN
    k_tilde: complex | None = None
    arg: SpectralArgument | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.sdata.is_trivial:
            raise InputError("asymptotic evaluation needs A > 0")
        if self.arg is None:
            self.arg = spectral_argument(self.sdata)

    @property
    def A(self) -> float:
        return self.sdata.background.A

    @property
    def B(self) -> float:
        return self.sdata.B

    def _pairs(self) -> list[complex]:
        # p_1, ..., p_n with Re p < 0
        return [complex(pr.re, pr.im) for pr in self.report.pairs]

    def nu_minus(self, xi: float) -> NuValue:
        """nu at the stationary point -xi."""
        return compute_nu(self.sdata, xi, arg=self.arg)

    def nu_plus(self, xi: float) -> NuValue:
        """nu at the mirrored point xi, used by the left half-line formulas."""
        return compute_nu(self.sdata, -xi, arg=self.arg)

    def delta(self, xi: float, k: complex) -> complex:
        return DeltaEvaluator(self.sdata, xi, arg=self.arg)(k)

    def hat_delta(self, xi: float, k: complex, side: Literal["+", "-"] | None = None) -> complex:
        return DeltaEvaluator(self.sdata, xi, pole=-abs(self.B), k_tilde=self.k_tilde, arg=self.arg)(k, side)

    # formulas

    def plane_wave(self, x: float, t: float, xi: float, m: int) -> complex:
        pairs = self._pairs()
        n = len(pairs)
        prod = complex(1.0)
        for s in range(m):
            prod *= pairs[n - s - 1] ** (-2)
        d = self.delta(xi, complex(-self.B))
        B = self.B
        return complex(self.A * xi ** (2 * m) * d * d * prod * np.exp(2j * B * x - 4j * B * B * t))

    def reciprocal_wave(self, x: float, t: float, xi: float, m: int) -> complex:
        pairs = self._pairs()
        n = len(pairs)
        prod = complex(1.0)
        for s in range(m + 1):
            prod *= pairs[n - s - 1] ** 2
        d_bar = np.conj(self.delta(-xi, complex(-self.B)))
        B = self.B
        return complex(-4.0 * prod * np.exp(-2j * B * x - 4j * B * B * t) / (self.A * xi ** (2 * m) * d_bar * d_bar))

    def periodic(self, x: float, t: float, xi: float) -> complex:
        A, B = self.A, self.B
        n = len(self.report.pairs)
        pairs = self._pairs()
        edge = abs(B)
        here = self.hat_delta(xi, complex(edge), "+")
        mirror = np.conj(self.hat_delta(-xi, complex(edge), "+"))
        num_prod = complex(1.0)
        ratio_prod = complex(1.0)
        for s in range(n):
            p = pairs[n - s - 1]
            num_prod *= (B + p) ** (-2)
            ratio_prod *= (B - p) / (B + p)
        numerator = 16.0 * A * B * B * (B - xi) ** (2 * n) * num_prod * here**2 * np.exp(2j * B * x - 4j * B * B * t)
        shift = ((B - xi) / (B + xi)) ** (2 * n) if n else 1.0
        denominator = 16.0 * B * B - A * A * shift * ratio_prod**2 * mirror**2 * here**2 * np.exp(4j * B * x)
        ratio = abs(denominator) / (16.0 * B * B)
        if ratio < self.margin:
            raise DenominatorMarginError(
                f"|denominator| = {ratio:.3g}*16B^2 at x={x}, t={t}; below the margin {self.margin}", ratio=ratio
            )
        return complex(numerator / denominator)

    def model_problem(self, x: float, t: float) -> ModelRHSolution:
        """Model problem of the periodic sector (n = 0) at the ray x/(4t)."""
        B = self.B
        if B >= 0.0:
            raise InputError("the model problem belongs to the periodic sector, B < 0")
        xi = x / (4.0 * t)
        a2B = complex(self.sdata.a2(np.array([B + 0j]))[0])
        lower = self.hat_delta(xi, complex(B), "-")
        at_minus_B = self.hat_delta(xi, complex(-B), "+")
        c1, c2 = residue_coefficients_at(self.A, B, a2B, lower, at_minus_B, x, t)
        return model_rh_solution(B, c1, c2)

    # dispatch

    def leading_term(self, x: float, t: float, sector: RaySector | None = None) -> AsymptoticTerm:
        if not t > 0.0:
            raise InputError("t must be positive")
        xi = x / (4.0 * t)
        sector = sector or classify_ray(xi, self.report)
        if not sector.contains(xi):
            raise InputError(f"xi = {xi} is outside the sector {sector.describe}")
        n, m = sector.n, sector.m
        value = 0.0j
        log_factor = False
        formula: FormulaId = "rough"

        if sector.kind == "plane_wave":
            nu = self.nu_minus(xi)
            value = self.plane_wave(x, t, xi, m)
            exponent = -0.5 + abs(nu.im - m)
            formula = "plane_wave"
        elif sector.kind == "decay_left":
            nu = self.nu_plus(xi)
            if n == 0:
                amp = alpha1(self.sdata, xi, arg=self.arg)
                value = t ** (-0.5 - nu.im) * amp.value * np.exp(4j * t * xi * xi - 1j * nu.re * math.log(t))
                exponent, log_factor = remainder_exponent("R1", nu.im)
                formula = "zm_left"
            else:
                exponent = -0.5 - nu.im + m
        elif sector.kind == "decay_right":
            nu = self.nu_minus(xi)
            exponent = -0.5 + nu.im - m
        elif sector.kind == "reciprocal_wave":
            nu = self.nu_minus(xi)
            value = self.reciprocal_wave(x, t, xi, m)
            exponent = -0.5 + abs(nu.im - m)
            formula = "reciprocal_wave"
        elif sector.kind == "mid_decay":
            nu = self.nu_minus(xi)
            if n == 0:
                amp = alpha2(self.sdata, xi, k_tilde=self.k_tilde, arg=self.arg)
                value = t ** (-0.5 + nu.im) * amp.value * np.exp(4j * t * xi * xi - 1j * nu.re * math.log(t))
                exponent, log_factor = remainder_exponent("R2", nu.im)
                formula = "zm_mid"
            else:
                exponent = -0.5 + abs(nu.im - n)
        else:
            nu = self.nu_minus(xi)
            value = self.periodic(x, t, xi)
            exponent = -0.5 + abs(nu.im - n)
            formula = "periodic"

        if exponent >= 0.0:
            logger.warning("error exponent %.4f is not negative at xi=%s (%s)", exponent, xi, sector.describe)
        return AsymptoticTerm(
            x=float(x),
            t=float(t),
            xi=float(xi),
            sector=sector.describe,
            value=complex(value),
            error_exponent=float(exponent),
            formula_id=formula,
            log_factor=log_factor,
        )


def leading_term(
    x: float,
    t: float,
    sector: RaySector | None,
    sdata: ScatteringData,
    report: SpectrumReport,
    *,
    margin: float = DENOMINATOR_MARGIN,
    arg: SpectralArgument | None = None,
) -> AsymptoticTerm:
    return AsymptoticEvaluator(sdata, report, margin=margin, arg=arg).leading_term(x, t, sector)


def terms_table(terms: list[AsymptoticTerm]) -> pd.DataFrame:
    columns = ["x", "t", "xi", "sector", "re(q_as)", "im(q_as)", "abs(q_as)", "error_exponent"]
    return pd.DataFrame([term.as_row() for term in terms], columns=columns)


def stationary_phase_derivative(xi: float, h: float = 1e-5) -> float:
    """Central difference of theta at k = -xi; vanishes at the stationary point."""
    k = -xi
    return float(abs((phase_theta(k + h, xi) - phase_theta(k - h, xi)) / (2.0 * h)))


# model-problem reconstruction


@dataclass(frozen=True)
class MirrorCheck:
    q: complex
    q_mirror: complex
    plus_residual: float
    minus_residual: float

    @property
    def sign(self) -> Literal["+", "-"]:
        return "+" if self.plus_residual <= self.minus_residual else "-"


def reconstruct_from_model(evaluator: AsymptoticEvaluator, x: float, t: float) -> MirrorCheck:
    """
    q(x, t) = 2i A3(x, t) and q(-x, t) = -2i conj(A2(x, t)), with the residuals of
    A3(x, t) = +conj(A2(-x, t)) and A3(x, t) = -conj(A2(-x, t)).
    """
    here = evaluator.model_problem(x, t)
    there = evaluator.model_problem(-x, t)
    scale = max(abs(here.A3), 1e-300)
    plus = abs(here.A3 - np.conj(there.A2)) / scale
    minus = abs(here.A3 + np.conj(there.A2)) / scale
    return MirrorCheck(q=here.q, q_mirror=there.q_mirror_coefficient, plus_residual=float(plus), minus_residual=float(minus))


# pure-step rough classification


RoughLabel = Literal["decay", "plane_wave", "periodic"]


def rough_asymptotics(params: StepParams, xi: float) -> RoughLabel:
    """o(1) picture of the pure step under 0 < R < pi/(2 sqrt(4B^2+A^2)) and 0 < 4|B|R <= pi."""
    A, B, R = params.A, params.B, params.R
    if A <= 0.0 or B == 0.0:
        raise InputError("rough asymptotics needs A > 0 and B != 0")
    if not 0.0 < R < math.pi / (2.0 * math.sqrt(4.0 * B * B + A * A)):
        raise InputError("rough asymptotics needs 0 < R < pi/(2 sqrt(4B^2 + A^2))")
    if not 0.0 < 4.0 * abs(B) * R <= math.pi:
        raise InputError("rough asymptotics needs 0 < 4|B|R <= pi")
    disc = 4.0 * B * B - A * A
    if disc == 0.0:
        raise NumericalError("4B^2 = A^2 is excluded")
    if disc > 0.0:
        root = R * math.sqrt(disc) / math.pi
        if abs(root - round(root)) <= MEMBERSHIP_RTOL * max(1.0, root):
            raise NumericalError("R^2 (4B^2 - A^2)/pi^2 is a squared integer")
    edge = abs(B)
    tol = 1e-9 * max(1.0, edge)
    if abs(abs(xi) - edge) <= tol:
        raise InputError(f"xi = {xi} is a transition ray")
    if abs(xi) <= tol and disc < 0.0:
        raise InputError("xi = 0 is covered only when 4B^2 > A^2")
    if xi > edge:
        return "plane_wave"
    if xi < -edge:
        return "decay"
    return "decay" if B > 0 else "periodic"
