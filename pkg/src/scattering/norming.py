from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from src.errors import NumericalError
from src.scattering.datum import InitialDatum
from src.scattering.jost import jost_at

logger = logging.getLogger(__name__)

PROPORTIONALITY_TOLERANCE = 1e-6
UNIMODULAR_TOLERANCE = 1e-6


class NormingError(NumericalError):
    pass


@dataclass
class NormingConstants:
    gamma0: complex | None = None
    etas: list[complex] = field(default_factory=list)
    eta_hats: list[complex] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)


def _proportionality(datum: InitialDatum, k: complex) -> tuple[complex, float]:
    # Psi_1^(1)(0, k) = c * Psi_2^(2)(0, k) at a zero of a1
    left = jost_at(datum, "left", np.array([k]), columns="first")[0][:, 0]
    right = jost_at(datum, "right", np.array([k]), columns="second")[0][:, 1]
    denom = np.vdot(right, right)
    if abs(denom) == 0.0:
        raise NormingError(f"Psi_2 column vanishes at k={k}")
    c = np.vdot(right, left) / denom
    resid = float(np.linalg.norm(left - c * right) / max(np.linalg.norm(left), 1e-300))
    return complex(c), resid


def norming_constants(
    datum: InitialDatum,
    k0: float | None,
    pairs: list[complex],
) -> NormingConstants:
    """
    gamma_0 at i*k0 and eta_j at each p_j (Re p_j < 0), plus eta_hat_j at -conj(p_j).

    Raises when the Jost columns are not proportional (the point is not a zero of a1)
    or when |gamma_0| differs from 1.
    """
    out = NormingConstants()
    if k0 is not None:
        gamma0, resid = _proportionality(datum, 1j * k0)
        if resid > PROPORTIONALITY_TOLERANCE:
            raise NormingError(f"columns not proportional at i*k0 (residual {resid:.2e})")
        if abs(abs(gamma0) - 1.0) > UNIMODULAR_TOLERANCE:
            raise NormingError(f"|gamma_0| = {abs(gamma0):.8f} deviates from 1")
        out.gamma0 = gamma0
        out.residuals.append(resid)

    for p in pairs:
        eta, resid = _proportionality(datum, p)
        eta_hat, resid_hat = _proportionality(datum, -np.conj(p))
        worst = max(resid, resid_hat)
        if worst > PROPORTIONALITY_TOLERANCE:
            raise NormingError(f"columns not proportional at p={p} (residual {worst:.2e})")
        mismatch = abs(eta_hat * np.conj(eta) - 1.0)
        if mismatch > 1e-6:
            logger.warning("eta_hat * conj(eta) - 1 = %.2e at p=%s", mismatch, p)
        out.etas.append(eta)
        out.eta_hats.append(eta_hat)
        out.residuals.append(worst)
    return out
