from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import loggamma

from src.errors import InputError
from src.scattering.data import ScatteringData, reflection_coefficients
from src.spectrum.winding import SpectralArgument
from src.cauchy.delta import DeltaEvaluator, NuValue, compute_nu

logger = logging.getLogger(__name__)

REFLECTION_FLOOR = 1e-14
NU_FLOOR = 1e-12


class VanishingReflectionError(InputError):
    pass


class GammaPoleError(InputError):
    """nu = 0 puts Gamma(-i nu) on its pole; no limit is taken."""

    pass


def gamma(z: complex) -> complex:
    return complex(np.exp(loggamma(complex(z))))


def gamma_reflection_residual(nu: float) -> float:
    """| |Gamma(-i nu)|^2 - pi/(nu sinh(pi nu)) | relative to the exact value, real nu != 0."""
    if nu == 0.0:
        raise GammaPoleError("reflection identity is singular at nu = 0")
    exact = math.pi / (nu * math.sinh(math.pi * nu))
    value = abs(gamma(-1j * nu)) ** 2
    return abs(value - exact) / abs(exact)


@dataclass(frozen=True)
class Amplitude:
    which: Literal["alpha1", "alpha2"]
    xi: float
    value: complex
    nu: NuValue
    chi: complex
    reflection: complex


def _check_inputs(reflection: complex, nu: complex) -> None:
    if abs(reflection) < REFLECTION_FLOOR:
        raise VanishingReflectionError(f"reflection coefficient {abs(reflection):.2e} vanishes")
    if abs(nu) < NU_FLOOR:
        raise GammaPoleError("nu = 0: Gamma(-i nu) has a pole")


def alpha1(sdata: ScatteringData, xi: float, *, arg: SpectralArgument | None = None) -> Amplitude:
    """Amplitude of the decaying sector xi < -|B|; nu and chi are taken at the stationary point k = xi."""
    r2 = complex(reflection_coefficients(sdata).r2(np.array([xi]))[0]) if not sdata.is_trivial else 0.0j
    nu = compute_nu(sdata, -xi, arg=arg) if not sdata.is_trivial else NuValue(value=0.0j, m=0)
    _check_inputs(r2, nu.value)
    chi = DeltaEvaluator(sdata, -xi, arg=arg).chi_at_stationary_point()
    nub = nu.value.conjugate()
    exponent = -0.5 * math.pi * nub + 0.25j * math.pi - 2.0 * chi.conjugate() - 3j * nub * math.log(2.0)
    value = math.sqrt(math.pi) * np.exp(exponent) / (r2.conjugate() * gamma(-1j * nub))
    return Amplitude("alpha1", xi, complex(value), nu, chi, r2)


def alpha2(sdata: ScatteringData, xi: float, *, k_tilde: complex | None = None, arg: SpectralArgument | None = None) -> Amplitude:
    """Amplitude of the middle sector for B > 0, built from the pole-corrected delta at k = -xi."""
    r1 = complex(reflection_coefficients(sdata).r1(np.array([-xi]))[0]) if not sdata.is_trivial else 0.0j
    nu = compute_nu(sdata, xi, arg=arg) if not sdata.is_trivial else NuValue(value=0.0j, m=0)
    _check_inputs(r1, nu.value)
    B = sdata.B
    if B <= 0.0:
        raise InputError("alpha2 is the middle-sector amplitude for B > 0")
    chi = DeltaEvaluator(sdata, xi, pole=-B, k_tilde=k_tilde, arg=arg).chi_at_stationary_point()
    v = nu.value
    exponent = -0.5 * math.pi * v + 0.25j * math.pi + 2.0 * chi - 3j * v * math.log(2.0)
    value = math.sqrt(math.pi) * np.exp(exponent) / (r1 * gamma(-1j * v))
    return Amplitude("alpha2", xi, complex(value), nu, chi, r1)


def remainder_exponent(which: Literal["R1", "R2"], im_nu: float, *, atol: float = NU_FLOOR) -> tuple[float, bool]:
    """(power of t, carries a log t factor) for the remainders of the decaying-sector formulas."""
    if abs(im_nu) <= atol:
        return -1.0, True
    grows = im_nu < 0.0 if which == "R1" else im_nu > 0.0
    if grows:
        return -1.0 + 2.0 * abs(im_nu), False
    return -1.0, False
