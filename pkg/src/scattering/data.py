from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import pandas as pd

from src.errors import InputError, NumericalError
from src.schemas import StepParams
from src.scattering.datum import InitialDatum
from src.scattering.jost import jost_at

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray], np.ndarray]

K_FAR = 200.0
RING_RADIUS = 1e-2
RING_POINTS = 8
FIT_TOLERANCE = 1e-6


class OutsideDomainError(InputError):
    pass


class ResidueFitError(NumericalError):
    pass


class AssumptionViolation(NumericalError):
    """a1 or a2 vanishes on the real line, or a residue vanishes."""

    pass


@dataclass(frozen=True)
class ScatteringData:
    background: StepParams
    a1_eval: Evaluator = field(repr=False)
    a2_eval: Evaluator = field(repr=False)
    b_eval: Evaluator = field(repr=False)
    a1_plusB: complex | None = None
    a1_minusB: complex | None = None
    bB: complex | None = None
    source: str = "closed_form"
    puncture: float = 1e-3
    real_eval: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]] | None = field(
        default=None, repr=False
    )
    table: pd.DataFrame | None = field(default=None, repr=False, compare=False)

    @property
    def B(self) -> float:
        return self.background.effective_B

    @property
    def is_trivial(self) -> bool:
        return self.background.A == 0.0

    def _check_poles(self, k: np.ndarray, poles: tuple[float, ...]) -> None:
        if self.is_trivial:
            return
        tol = 1e-14 * max(1.0, abs(self.B))
        for p in poles:
            if np.any(np.abs(k - p) < tol):
                raise OutsideDomainError(f"k = {p} is a pole; evaluate off the puncture")

    def a1(self, k: np.ndarray | complex) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        if np.any(k.imag < -1e-12):
            raise OutsideDomainError("a1 is defined on the closed upper half-plane")
        self._check_poles(k, (self.B, -self.B))
        return self.a1_eval(k)

    def a2(self, k: np.ndarray | complex) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        if np.any(k.imag > 1e-12):
            raise OutsideDomainError("a2 is defined on the closed lower half-plane")
        return self.a2_eval(k)

    def b(self, k: np.ndarray | float) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        if np.any(np.abs(k.imag) > 1e-12):
            raise OutsideDomainError("b is defined on the real line")
        self._check_poles(k, (self.B,))
        return self.b_eval(k.real.astype(complex))

    def real_values(self, k: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(a1, a2, b) on real k in one pass when the source supports it."""
        k = np.atleast_1d(np.asarray(k, dtype=float)).astype(complex)
        self._check_poles(k, (self.B, -self.B))
        if self.real_eval is not None:
            return self.real_eval(k)
        return self.a1_eval(k), self.a2_eval(k), self.b_eval(k)

    def residue(self, pole: float) -> complex | None:
        if self.is_trivial:
            return 0.0j
        if abs(pole - self.B) <= abs(pole + self.B) and self.B != 0.0:
            return self.a1_plusB
        return self.a1_minusB

    def a1_pole_weighted(self, k: np.ndarray, pole: float) -> np.ndarray:
        """(k - pole) a1(k), continued through the simple pole by its residue."""
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        out = np.empty(k.shape, dtype=complex)
        near = np.abs(k - pole) < 1e-9 * max(1.0, abs(pole))
        res = self.residue(pole)
        if np.any(near):
            if res is None:
                raise ResidueFitError(f"no residue available at {pole}")
            out[near] = res
        if np.any(~near):
            out[~near] = (k[~near] - pole) * self.a1_eval(k[~near])
        return out


# closed forms of the background step


def _step_kernels(params: StepParams) -> tuple[Evaluator, Evaluator, Evaluator]:
    A, B, R = params.A, params.effective_B, params.R

    def a1(k: np.ndarray) -> np.ndarray:
        return 1.0 + A * A * np.exp(4j * k * R) / (4.0 * (k * k - B * B))

    def a2(k: np.ndarray) -> np.ndarray:
        return np.ones(np.shape(k), dtype=complex)

    def b(k: np.ndarray) -> np.ndarray:
        return -1j * A * np.exp(2j * R * (k - B)) / (2.0 * (k - B))

    if A == 0.0:
        return a2, a2, lambda k: np.zeros(np.shape(k), dtype=complex)
    return a1, a2, b


def step_residues(params: StepParams) -> tuple[complex | None, complex | None, complex | None]:
    A, B, R = params.A, params.effective_B, params.R
    if A == 0.0:
        return 0.0j, 0.0j, 0.0j
    if B == 0.0:
        # double pole at k = 0: no simple residues
        return None, None, -0.5j * A
    plus = A * A * np.exp(4j * B * R) / (8.0 * B)
    return complex(plus), complex(-np.conj(plus)), complex(-0.5j * A)


def closed_form_data(params: StepParams, *, puncture: float = 1e-3) -> ScatteringData:
    a1, a2, b = _step_kernels(params)
    plus, minus, bB = step_residues(params)
    return ScatteringData(
        background=params,
        a1_eval=a1,
        a2_eval=a2,
        b_eval=b,
        a1_plusB=plus,
        a1_minusB=minus,
        bB=bB,
        source="closed_form",
        puncture=puncture,
    )


# numerical scattering from a sampled datum


def _triple_from_jost(psi1: np.ndarray, psi2: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a1 = psi1[:, 0, 0] * psi2[:, 1, 1] - psi1[:, 1, 0] * psi2[:, 0, 1]
    a2 = psi2[:, 0, 0] * psi1[:, 1, 1] - psi2[:, 1, 0] * psi1[:, 0, 1]
    b = psi2[:, 0, 0] * psi1[:, 1, 0] - psi2[:, 1, 0] * psi1[:, 0, 0]
    return a1, a2, b


def compute_scattering(
    datum: InitialDatum,
    k_grid: np.ndarray | None = None,
    *,
    puncture: float = 1e-3,
    k_far: float = K_FAR,
    threads: int | None = None,
) -> ScatteringData:
    """
    Scattering data of a datum from the Jost solutions at x = 0.

    Beyond |k| > k_far the evaluators switch to the closed forms of the background step
    (sharp edge) or to the trivial data (smooth edge), where the datum's own data agree
    to below quadrature tolerance.
    """
    bg = datum.background
    B = bg.effective_B
    far = closed_form_data(bg if datum.sharp_edge else StepParams(A=0.0), puncture=puncture)

    def _split(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        is_far = np.abs(k) > k_far
        return is_far, ~is_far

    def a1_eval(k: np.ndarray) -> np.ndarray:
        out = np.empty(k.shape, dtype=complex)
        is_far, near = _split(k)
        out[is_far] = far.a1_eval(k[is_far])
        if np.any(near):
            psi1 = jost_at(datum, "left", k[near], columns="first", threads=threads)
            psi2 = jost_at(datum, "right", k[near], columns="second", threads=threads)
            out[near] = psi1[:, 0, 0] * psi2[:, 1, 1] - psi1[:, 1, 0] * psi2[:, 0, 1]
        return out

    def a2_eval(k: np.ndarray) -> np.ndarray:
        out = np.empty(k.shape, dtype=complex)
        is_far, near = _split(k)
        out[is_far] = far.a2_eval(k[is_far])
        if np.any(near):
            psi1 = jost_at(datum, "left", k[near], columns="second", threads=threads)
            psi2 = jost_at(datum, "right", k[near], columns="first", threads=threads)
            out[near] = psi2[:, 0, 0] * psi1[:, 1, 1] - psi2[:, 1, 0] * psi1[:, 0, 1]
        return out

    def b_eval(k: np.ndarray) -> np.ndarray:
        out = np.empty(k.shape, dtype=complex)
        is_far, near = _split(k)
        out[is_far] = far.b_eval(k[is_far])
        if np.any(near):
            psi1 = jost_at(datum, "left", k[near], columns="first", threads=threads)
            psi2 = jost_at(datum, "right", k[near], columns="first", threads=threads)
            out[near] = psi2[:, 0, 0] * psi1[:, 1, 0] - psi2[:, 1, 0] * psi1[:, 0, 0]
        return out

    def real_eval(k: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a1 = np.empty(k.shape, dtype=complex)
        a2 = np.empty(k.shape, dtype=complex)
        b = np.empty(k.shape, dtype=complex)
        is_far, near = _split(k)
        a1[is_far], a2[is_far], b[is_far] = far.a1_eval(k[is_far]), far.a2_eval(k[is_far]), far.b_eval(k[is_far])
        if np.any(near):
            psi1 = jost_at(datum, "left", k[near], threads=threads)
            psi2 = jost_at(datum, "right", k[near], threads=threads)
            a1[near], a2[near], b[near] = _triple_from_jost(psi1, psi2)
        return a1, a2, b

    sdata = ScatteringData(
        background=bg,
        a1_eval=a1_eval,
        a2_eval=a2_eval,
        b_eval=b_eval,
        source="numerical",
        puncture=puncture,
        real_eval=real_eval,
    )

    if bg.A == 0.0:
        sdata = replace(sdata, a1_plusB=0.0j, a1_minusB=0.0j, bB=0.0j)
    elif B != 0.0:
        plus, minus, bB = residue_coefficients(sdata, B)
        sdata = replace(sdata, a1_plusB=plus, a1_minusB=minus, bB=bB)

    if k_grid is not None:
        k_grid = np.atleast_1d(np.asarray(k_grid, dtype=complex))
        radius = puncture * max(1.0, abs(B))
        if bg.A > 0 and np.any(np.minimum(np.abs(k_grid - B), np.abs(k_grid + B)) < radius):
            raise InputError(f"k grid enters the puncture of radius {radius:g} around +-B")
        sdata = replace(sdata, table=scattering_table(sdata, k_grid))
    logger.info("numerical scattering data ready (A=%s, B=%s, R=%s)", bg.A, bg.B, bg.R)
    return sdata


# residues


def _laurent_coefficient(values: np.ndarray, offsets: np.ndarray) -> tuple[complex, float]:
    # basis (k - pole)^n, n = -1..4
    powers = np.arange(-1, 5)
    basis = offsets[:, None] ** powers[None, :]
    coef, *_ = np.linalg.lstsq(basis, values, rcond=None)
    fit = basis @ coef
    resid = float(np.max(np.abs(fit - values)) / max(1.0, float(np.max(np.abs(values)))))
    return complex(coef[0]), resid


def _fit_pole(evaluate: Evaluator, pole: float, offsets_at: Callable[[float], np.ndarray]) -> complex:
    estimates = []
    for rho in (RING_RADIUS, RING_RADIUS / 2.0):
        offsets = offsets_at(rho)
        coef, resid = _laurent_coefficient(evaluate(pole + offsets), offsets)
        if resid > FIT_TOLERANCE:
            raise ResidueFitError(f"Laurent fit at {pole} left residual {resid:.2e}; pole is not simple")
        estimates.append(coef)
    coarse, fine = estimates
    # truncation error of c_{-1} scales like rho^6
    extrapolated = fine + (fine - coarse) / (2.0**6 - 1.0)
    if abs(fine - coarse) > 1e-4 * max(1.0, abs(fine)):
        raise ResidueFitError(f"residue at {pole} not stable under radius halving")
    return complex(extrapolated)


def _upper_ring(rho: float) -> np.ndarray:
    angles = np.pi * (np.arange(RING_POINTS) + 0.5) / RING_POINTS
    return rho * np.exp(1j * angles)


def _real_pairs(rho: float) -> np.ndarray:
    t = np.arange(1, RING_POINTS // 2 + 1) / (RING_POINTS // 2)
    return np.concatenate([-rho * t[::-1], rho * t]).astype(complex)


def residue_coefficients(sdata: ScatteringData, B: float) -> tuple[complex, complex, complex]:
    """Laurent-fit a1^{+B}, a1^{-B} (upper half ring) and b^B (real points) around k = +-B."""
    if sdata.is_trivial:
        return 0.0j, 0.0j, 0.0j
    if B == 0.0:
        raise ResidueFitError("B = 0: a1 has a double pole at k = 0")
    plus = _fit_pole(sdata.a1_eval, B, _upper_ring)
    minus = _fit_pole(sdata.a1_eval, -B, _upper_ring)
    bB = _fit_pole(sdata.b_eval, B, _real_pairs)
    for name, value in (("a1^{+B}", plus), ("a1^{-B}", minus)):
        if abs(value) < 1e-14:
            raise AssumptionViolation(f"residue {name} vanishes")
    return plus, minus, bB


# reflection coefficients


@dataclass(frozen=True)
class ReflectionCoefficients:
    sdata: ScatteringData

    def values(self, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """r1 = b/a1, r2 = conj(b(-k))/a2 on real k off +-B."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        a1, a2, b = self.sdata.real_values(k)
        if self.sdata.is_trivial:
            zero = np.zeros(k.shape, dtype=complex)
            return zero, zero
        b_minus = self.sdata.b(-k)
        tiny = 1e-12
        if np.any(np.abs(a1) < tiny) or np.any(np.abs(a2) < tiny):
            raise AssumptionViolation("a1 or a2 vanishes on the real line")
        return b / a1, np.conj(b_minus) / a2

    def r1(self, k: np.ndarray) -> np.ndarray:
        return self.values(k)[0]

    def r2(self, k: np.ndarray) -> np.ndarray:
        return self.values(k)[1]


def reflection_coefficients(sdata: ScatteringData) -> ReflectionCoefficients:
    return ReflectionCoefficients(sdata)


# tables and relation checks


def scattering_table(sdata: ScatteringData, k: np.ndarray) -> pd.DataFrame:
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    nan = np.full(k.shape, np.nan + 0j)
    real = np.abs(k.imag) < 1e-12
    a1 = nan.copy()
    a2 = nan.copy()
    b = nan.copy()
    if np.any(real):
        a1[real], a2[real], b[real] = sdata.real_values(k[real].real)
    upper = k.imag >= 1e-12
    if np.any(upper):
        a1[upper] = sdata.a1(k[upper])
    lower = k.imag <= -1e-12
    if np.any(lower):
        a2[lower] = sdata.a2(k[lower])

    data: dict[str, np.ndarray] = {"k": k.real}
    if np.any(~real):
        data["im(k)"] = k.imag
    for name, col in (("a1", a1), ("a2", a2), ("b", b)):
        data[f"re({name})"] = col.real
        data[f"im({name})"] = col.imag
    return pd.DataFrame(data)


def scattering_relations(sdata: ScatteringData, k: np.ndarray) -> dict[str, float]:
    """Max residuals of the scattering-data identities on real k (and the residue chain)."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    a1, a2, b = sdata.real_values(k)
    a1m, a2m, bm = sdata.real_values(-k)
    out = {
        "determinant": float(np.max(np.abs(a1 * a2 + b * np.conj(bm) - 1.0))),
        "a1_symmetry": float(np.max(np.abs(np.conj(a1m) - a1))),
        "a2_symmetry": float(np.max(np.abs(np.conj(a2m) - a2))),
    }
    A, B = sdata.background.A, sdata.B
    if A > 0 and B != 0.0 and sdata.a1_plusB is not None and sdata.bB is not None:
        b_minusB = sdata.b(np.array([-B]))[0]
        a2_B = sdata.a2(np.array([B + 0j]))[0]
        out["a1_plusB_vs_b"] = float(abs(sdata.a1_plusB + (A / 2j) * np.conj(b_minusB)))
        out["a1_minusB_vs_plusB"] = float(abs(sdata.a1_minusB + np.conj(sdata.a1_plusB)))
        out["a1_plusB_vs_bB"] = float(abs(sdata.a1_plusB * (a2_B - (2j / A) * sdata.bB)))
    return out
