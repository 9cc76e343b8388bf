from __future__ import annotations

import numpy as np

from src.errors import InputError
from src.schemas import StepParams
from src.scattering.data import ScatteringData, closed_form_data


def step_spectral_functions(params: StepParams, *, puncture: float = 1e-3) -> ScatteringData:
    """a1 = 1 + A^2 e^{4ikR}/(4(k^2-B^2)), a2 = 1, b = -iA e^{2iR(k-B)}/(2(k-B))."""
    if params.A < 0:
        raise InputError("A must be >= 0")
    return closed_form_data(params, puncture=puncture)


def a1_closed(params: StepParams, k: np.ndarray | complex) -> np.ndarray:
    k = np.asarray(k, dtype=complex)
    A, B, R = params.A, params.effective_B, params.R
    return 1.0 + A * A * np.exp(4j * k * R) / (4.0 * (k * k - B * B))


def a1_closed_derivative(params: StepParams, k: np.ndarray | complex) -> np.ndarray:
    k = np.asarray(k, dtype=complex)
    A, B, R = params.A, params.effective_B, params.R
    d = k * k - B * B
    e = np.exp(4j * k * R)
    return A * A * (4j * R * e * d - 2.0 * k * e) / (4.0 * d * d)


def zero_bound(params: StepParams) -> float:
    """A priori bound |k| <= A/2 + |B| + 1 for zeros of a1."""
    return 0.5 * params.A + abs(params.B) + 1.0
