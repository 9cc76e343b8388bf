from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.errors import InputError, NumericalError
from src.scattering.data import ScatteringData, reflection_coefficients
from src.spectrum.winding import SpectralArgument, spectral_argument
from src.cauchy.quadrature import (
    BoundarySide,
    CutError,
    cauchy_transform,
    on_cut,
    regular_part_at_endpoint,
)

logger = logging.getLogger(__name__)


class TransitionRayError(InputError):
    """The stationary point -xi hits +-B, where 1 + r1 r2 vanishes."""

    pass


@dataclass(frozen=True)
class NuValue:
    value: complex
    m: int
    direct_mismatch: float = 0.0

    @property
    def re(self) -> float:
        return float(self.value.real)

    @property
    def im(self) -> float:
        return float(self.value.imag)


def default_k_tilde(B: float) -> complex:
    return complex(0.0, 1.0 + abs(B))


def _argument(sdata: ScatteringData, arg: SpectralArgument | None) -> SpectralArgument:
    return arg if arg is not None else spectral_argument(sdata)


def compute_nu(sdata: ScatteringData, xi: float, *, arg: SpectralArgument | None = None) -> NuValue:
    """
    nu(-xi) = -(1/2 pi) log(1 + r1 r2)(-xi), the log taken along the cumulative argument.

    The principal-log value must agree with it up to an imaginary integer; m is the
    integer nearest Im nu.
    """
    c = -float(xi)
    if sdata.is_trivial:
        return NuValue(value=0.0j, m=0)
    B = sdata.B
    if min(abs(c - B), abs(c + B)) < 1e-9 * max(1.0, abs(B)):
        raise TransitionRayError(f"xi = {xi} is a transition ray (-xi = +-B)")
    arg = _argument(sdata, arg)
    ell = complex(arg.log_transmission(np.array([c]))[0])
    nu = -ell / (2.0 * math.pi)

    r1, r2 = reflection_coefficients(sdata).values(np.array([c]))
    direct = -complex(np.log(1.0 + r1[0] * r2[0])) / (2.0 * math.pi)
    shift = (nu - direct).imag
    mismatch = math.hypot((nu - direct).real, shift - round(shift))
    if mismatch > 1e-8:
        raise NumericalError(f"nu from the cumulative argument disagrees with the direct log by {mismatch:.2e}")

    m = int(round(nu.imag))
    if abs(nu.imag - m) >= 0.5 - 1e-12:
        raise TransitionRayError(f"Im nu = {nu.imag:.6f} sits on a half-integer: transition ray")
    return NuValue(value=nu, m=m, direct_mismatch=mismatch)


@dataclass
class DeltaEvaluator:
    """
    delta(k, xi) = exp of the Cauchy integral of log(1 + r1 r2) over (-inf, -xi), and its
    pole-corrected variant delta_hat when `pole` is set.
    """

    sdata: ScatteringData
    xi: float
    pole: float | None = None
    k_tilde: complex | None = None
    arg: SpectralArgument | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.sdata.is_trivial:
            self.arg = None
        else:
            self.arg = _argument(self.sdata, self.arg)
        B = self.sdata.B
        c = self.c
        if self.pole is None:
            if not self.sdata.is_trivial and c > -abs(B) - 1e-12:
                raise InputError(f"the cut (-inf, {c}) contains +-B; use the pole-corrected delta")
            return
        if self.k_tilde is None:
            self.k_tilde = default_k_tilde(B)
        if complex(self.k_tilde).imag <= 0.0:
            raise InputError("k_tilde must lie in the open upper half-plane")
        if not self.sdata.is_trivial and abs(abs(self.pole) - abs(B)) > 1e-12 * max(1.0, abs(B)):
            raise InputError(f"pole must be +-B, got {self.pole}")
        if not (self.pole < c < -self.pole):
            raise InputError(f"pole-corrected delta needs {self.pole} < -xi < {-self.pole}")

    @property
    def c(self) -> float:
        return -float(self.xi)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        B = self.sdata.B
        return (B, -B)

    # densities

    def log_transmission(self, z: np.ndarray) -> np.ndarray:
        if self.arg is None:
            return np.zeros(np.shape(z), dtype=complex)
        return self.arg.log_transmission(z)

    def left_density(self, z: np.ndarray) -> np.ndarray:
        """L1 = continuous log of (z + k_tilde)/(z - pole) (1 + r1 r2) on (-inf, c), L1(-inf) = 0."""
        z = np.asarray(z, dtype=float)
        kt = complex(self.k_tilde)
        p = float(self.pole)
        base = np.log(z + kt) + np.log(np.abs(z + p)) + 1j * math.pi - 2.0 * np.log(z + 1j)
        if self.arg is None:
            # (z + kt)(z + p)/(z + i)^2 with no spectral factor
            return base
        return base - self.arg.log_weighted(z)

    def right_density(self, z: np.ndarray) -> np.ndarray:
        """L2 = Log((z + k_tilde)/(z - pole)) on (c, inf)."""
        z = np.asarray(z, dtype=float)
        return np.log((z + complex(self.k_tilde)) / (z - float(self.pole)))

    def far_density(self, z: np.ndarray) -> np.ndarray:
        """log1p((k_tilde + pole)/(z - pole)), what L1 and L2 tend to for large |z|."""
        z = np.asarray(z, dtype=float)
        p = float(self.pole)
        return np.log1p((complex(self.k_tilde) + p) / (z - p))

    # evaluation

    def log_value(self, k: complex, side: BoundarySide | None = None) -> complex:
        k = complex(k)
        c = self.c
        if self.pole is None:
            if self.arg is None:
                return 0.0j
            return cauchy_transform(self.log_transmission, c, k, direction="left", side=side, breakpoints=self.breakpoints)

        if abs(k.imag) <= 1e-14 and k.real == c:
            raise CutError("delta_hat is singular at k = -xi")
        real = abs(k.imag) <= 1e-14
        if real and side is None:
            if on_cut(c, k, "left"):
                raise CutError("k lies on the cut; pass side='+' or side='-'")
            side = "+"
        upper = k.imag > 1e-14 or (real and side == "+")

        log1 = cauchy_transform(
            self.left_density,
            c,
            k,
            direction="left",
            side=side,
            breakpoints=self.breakpoints,
            smooth_tail=self.far_density,
        )
        log2 = cauchy_transform(self.right_density, c, k, direction="right", side=side, smooth_tail=self.far_density)
        total = log1 + log2
        if upper:
            total += np.log(complex(k - self.pole) / complex(k + self.k_tilde)) if k != self.pole else -np.inf
        return complex(total)

    def __call__(self, k: complex, side: BoundarySide | None = None) -> complex:
        value = self.log_value(k, side)
        if value.real == -np.inf:
            return 0.0j
        return complex(np.exp(value))

    def boundary_values(self, s: float) -> tuple[complex, complex]:
        return self(complex(s, 0.0), "+"), self(complex(s, 0.0), "-")

    def chi_at_stationary_point(self) -> complex:
        """Regular part of log delta (or log delta_hat) at k = -xi, the (k+xi)^{i nu} factor removed."""
        c = self.c
        if self.pole is None:
            if self.arg is None:
                return 0.0j
            return regular_part_at_endpoint(self.log_transmission, c, direction="left", breakpoints=self.breakpoints)
        r1 = regular_part_at_endpoint(
            self.left_density, c, direction="left", breakpoints=self.breakpoints, smooth_tail=self.far_density
        )
        r2 = regular_part_at_endpoint(self.right_density, c, direction="right", smooth_tail=self.far_density)
        l2c = complex(self.right_density(np.array([c]))[0])
        # limit from the lower half-plane, where delta_hat = delta_1 delta_2
        return complex(r1 + r2 - 0.5 * l2c)

    def nu_at_stationary_point(self) -> complex:
        c = self.c
        if self.pole is None:
            return complex(-self.log_transmission(np.array([c]))[0] / (2.0 * math.pi))
        l1c = complex(self.left_density(np.array([c]))[0])
        l2c = complex(self.right_density(np.array([c]))[0])
        return -(l1c - l2c) / (2.0 * math.pi)


def compute_delta(
    sdata: ScatteringData,
    xi: float,
    k: complex,
    side: BoundarySide | None = None,
    *,
    arg: SpectralArgument | None = None,
) -> complex:
    return DeltaEvaluator(sdata, xi, arg=arg)(k, side)


def compute_hat_delta(
    sdata: ScatteringData,
    xi: float,
    pole: float,
    k_tilde: complex | None,
    k: complex,
    side: BoundarySide | None = None,
    *,
    arg: SpectralArgument | None = None,
) -> complex:
    return DeltaEvaluator(sdata, xi, pole=pole, k_tilde=k_tilde, arg=arg)(k, side)


def delta_profile(evaluator: DeltaEvaluator, contour: np.ndarray, side: BoundarySide | None = None) -> pd.DataFrame:
    contour = np.atleast_1d(np.asarray(contour, dtype=complex))
    values = np.array([evaluator(k, side) for k in contour])
    return pd.DataFrame(
        {
            "re(k)": contour.real,
            "im(k)": contour.imag,
            "re(delta)": values.real,
            "im(delta)": values.imag,
            "abs(delta)": np.abs(values),
        }
    )
