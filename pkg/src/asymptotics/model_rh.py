from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.errors import InputError

logger = logging.getLogger(__name__)


class BlowUpLocusError(InputError):
    """4B^2 + c1 c2 vanishes: the model problem has no solution at this (x, t)."""

    pass


@dataclass(frozen=True)
class ModelRHSolution:
    """
    Meromorphic model solution with simple poles at +-B:

        M(k) = [[(k + A1)/(k - B), A3/(k + B)],
                [A2/(k - B),       (k + A4)/(k + B)]]
    """

    B: float
    c1: complex
    c2: complex
    A1: complex
    A2: complex
    A3: complex
    A4: complex

    def matrix(self, k: complex) -> np.ndarray:
        B = self.B
        return np.array(
            [
                [(k + self.A1) / (k - B), self.A3 / (k + B)],
                [self.A2 / (k - B), (k + self.A4) / (k + B)],
            ],
            dtype=complex,
        )

    @property
    def q(self) -> complex:
        """2i lim k M_12."""
        return 2j * self.A3

    @property
    def q_mirror_coefficient(self) -> complex:
        """-2i conj(lim k M_21): the value the same problem assigns to q(-x, t)."""
        return -2j * np.conj(self.A2)

    def residue_residuals(self) -> tuple[float, float]:
        """|Res_B M^(1) - c1 M^(2)(B)| and |Res_{-B} M^(2) - c2 M^(1)(-B)|."""
        B = self.B
        res_first = np.array([B + self.A1, self.A2])
        col2_at_B = np.array([self.A3 / (2.0 * B), (B + self.A4) / (2.0 * B)])
        res_second = np.array([self.A3, -B + self.A4])
        col1_at_mB = np.array([(-B + self.A1) / (-2.0 * B), self.A2 / (-2.0 * B)])
        return (
            float(np.max(np.abs(res_first - self.c1 * col2_at_B))),
            float(np.max(np.abs(res_second - self.c2 * col1_at_mB))),
        )


def model_rh_solution(B: float, c1: complex, c2: complex, *, rtol: float = 1e-12) -> ModelRHSolution:
    if B == 0.0:
        raise InputError("model problem needs B != 0")
    c1c2 = complex(c1) * complex(c2)
    den = 4.0 * B * B + c1c2
    if abs(den) <= rtol * 4.0 * B * B:
        raise BlowUpLocusError(f"4B^2 + c1 c2 = {den:.3e}")
    return ModelRHSolution(
        B=B,
        c1=complex(c1),
        c2=complex(c2),
        A1=(B * c1c2 - 4.0 * B**3) / den,
        A2=4.0 * B * B * complex(c1) / den,
        A3=4.0 * B * B * complex(c2) / den,
        A4=(4.0 * B**3 - B * c1c2) / den,
    )


def residue_coefficients_at(A: float, B: float, a2_B: complex, hat_delta_minus_B: complex, hat_delta_at_minus_B: complex, x: float, t: float) -> tuple[complex, complex]:
    """c1, c2 of the model problem from a2(B), delta_hat_-(B, xi) and delta_hat(-B, xi)."""
    c1 = (A / 2j) * a2_B**2 * hat_delta_minus_B ** (-2) * np.exp(2j * B * x + 4j * B * B * t)
    c2 = (A / 2j) * hat_delta_at_minus_B**2 * np.exp(2j * B * x - 4j * B * B * t)
    return complex(c1), complex(c2)
