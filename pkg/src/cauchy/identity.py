from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from src.errors import InputError, NumericalError
from src.scattering.data import ScatteringData
from src.spectrum.winding import SpectralArgument, spectral_argument
from src.cauchy.delta import DeltaEvaluator, compute_nu
from src.cauchy.quadrature import BoundarySide, Direction, Integrand

logger = logging.getLogger(__name__)

QUAD_LIMIT = 400


def _quad_complex(f: Integrand, a: float, b: float, **kwargs: object) -> complex:
    def part(fn):
        return lambda x: float(fn(np.array([x]))[0])

    re, _ = quad(part(lambda z: np.real(f(z))), a, b, limit=QUAD_LIMIT, **kwargs)
    im, _ = quad(part(lambda z: np.imag(f(z))), a, b, limit=QUAD_LIMIT, **kwargs)
    return complex(re, im)


def principal_value_transform(
    F: Integrand,
    c: float,
    s: float,
    *,
    direction: Direction,
    side: BoundarySide,
) -> complex:
    """
    Boundary value of (1/2 pi i) * integral of F(z)/(z - s) at real s, through QUADPACK.

    On the cut this is +-F(s)/2 plus the principal value, the finite part done with
    the Cauchy weight and the infinite tail with an ordinary transformed rule.
    """
    if s == c:
        raise InputError("principal value at the endpoint of the cut is undefined")
    inside = s < c if direction == "left" else s > c

    if not inside:
        def regular(z: np.ndarray) -> np.ndarray:
            return np.asarray(F(z), dtype=complex) / (z - s)

        lo, hi = (-np.inf, c) if direction == "left" else (c, np.inf)
        return _quad_complex(regular, lo, hi) / (2j * math.pi)

    width = 1.0 + abs(s - c)

    def tail(z: np.ndarray) -> np.ndarray:
        return np.asarray(F(z), dtype=complex) / (z - s)

    if direction == "left":
        near = _quad_complex(F, s - width, c, weight="cauchy", wvar=s)
        far = _quad_complex(tail, -np.inf, s - width)
    else:
        near = _quad_complex(F, c, s + width, weight="cauchy", wvar=s)
        far = _quad_complex(tail, s + width, np.inf)
    jump = complex(np.asarray(F(np.array([s])), dtype=complex)[0])
    half = 0.5 * jump if side == "+" else -0.5 * jump
    return half + (near + far) / (2j * math.pi)


def hat_delta_by_principal_value(evaluator: DeltaEvaluator, s: float, side: BoundarySide) -> complex:
    if evaluator.pole is None:
        raise InputError("principal-value route is implemented for the pole-corrected delta")
    c = evaluator.c
    total = principal_value_transform(evaluator.left_density, c, s, direction="left", side=side)
    total += principal_value_transform(evaluator.right_density, c, s, direction="right", side=side)
    if side == "+":
        total += np.log(complex(s - evaluator.pole) / complex(s + evaluator.k_tilde))
    return complex(np.exp(total))


@dataclass(frozen=True)
class IdentityCheck:
    a2_at_B: complex
    product_adaptive: complex
    product_principal_value: complex
    residual: float
    route_disagreement: float


def verify_a2_identity(
    sdata: ScatteringData,
    xi: float,
    *,
    k_tilde: complex | None = None,
    arg: SpectralArgument | None = None,
) -> IdentityCheck:
    """
    a2(B) = delta_hat_-(B, xi) * conj(delta_hat_+(|B|, -xi)) for B < 0 and |xi| < |B|.

    Both boundary values are computed twice: by the subtracted Gauss-Legendre transform
    and by the principal-value route; the residual uses the first.
    """
    B = sdata.B
    if sdata.is_trivial or not B < 0.0:
        raise InputError("the a2(B) identity is stated for B < 0")
    if not abs(xi) < abs(B):
        raise InputError("the a2(B) identity needs |xi| < |B|")
    arg = arg if arg is not None else spectral_argument(sdata)
    here = DeltaEvaluator(sdata, xi, pole=B, k_tilde=k_tilde, arg=arg)
    mirror = DeltaEvaluator(sdata, -xi, pole=B, k_tilde=k_tilde, arg=arg)

    lower = here(complex(B, 0.0), "-")
    upper = mirror(complex(-B, 0.0), "+")
    product = lower * np.conj(upper)

    lower_pv = hat_delta_by_principal_value(here, B, "-")
    upper_pv = hat_delta_by_principal_value(mirror, -B, "+")
    product_pv = lower_pv * np.conj(upper_pv)

    a2B = complex(sdata.a2(np.array([B + 0j]))[0])
    residual = abs(a2B - product)
    disagreement = abs(product - product_pv)
    logger.info("a2(B) identity at xi=%s: residual %.2e, route gap %.2e", xi, residual, disagreement)
    return IdentityCheck(
        a2_at_B=a2B,
        product_adaptive=complex(product),
        product_principal_value=complex(product_pv),
        residual=float(residual),
        route_disagreement=float(disagreement),
    )


def stationary_exponent(
    evaluator: DeltaEvaluator,
    *,
    angle: float = 0.5 * math.pi,
    radii: np.ndarray | None = None,
) -> tuple[float, float]:
    """
    Slope of ln|delta| against ln|k + xi| along the ray -xi + r e^{i angle}, and -Im nu.

    The two agree when delta carries the (k + xi)^{i nu} singularity.
    """
    if radii is None:
        radii = np.logspace(-6, -3, 7)
    radii = np.asarray(radii, dtype=float)
    c = evaluator.c
    logs = np.array([evaluator.log_value(c + r * np.exp(1j * angle)).real for r in radii])
    slope = float(np.polyfit(np.log(radii), logs, 1)[0])
    nu = evaluator.nu_at_stationary_point()
    if not np.isfinite(slope):
        raise NumericalError("non-finite slope of ln|delta| near the stationary point")
    return slope, float(-nu.imag)


def nu_consistency(sdata: ScatteringData, xi: float, pole: float, *, arg: SpectralArgument | None = None) -> float:
    """|nu_hat - nu| where nu_hat comes from the two pole-corrected densities."""
    nu = compute_nu(sdata, xi, arg=arg).value
    hat = DeltaEvaluator(sdata, xi, pole=pole, arg=arg).nu_at_stationary_point()
    return float(abs(hat - nu))
