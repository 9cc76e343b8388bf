from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import brentq

from src.errors import InputError, NonGenericParametersError, NumericalError
from src.schemas import StepParams
from src.scattering.data import AssumptionViolation, ScatteringData
from src.spectrum.argument import ArgumentTrace, trace_argument
from src.spectrum.zeros import ZeroSet, pair_birth_threshold

logger = logging.getLogger(__name__)

_EDGE = 1e-7
_POLE_NUDGE = 1e-7
# log1p(r1 r2) replaces -log(a1 a2) where |r1 r2| < _DIRECT_BOUND, away from +-B
_DIRECT_BOUND = 0.5
_DIRECT_GAP = 1e-6


@dataclass
class SpectralArgument:
    """
    Continuous log of a1(k)a2(k) on the real line.

    The argument is fixed to 0 at k = -inf and the poles at +-B are passed from above,
    each adding +pi. Internally the regular function
    G(k) = a1 a2 (k-B)(k+B)/(k+i)^2 is traced in the compact variable k = tan(s).
    """

    sdata: ScatteringData
    trace: ArgumentTrace | None = field(default=None, repr=False)

    @property
    def B(self) -> float:
        return self.sdata.B

    def weighted(self, k: np.ndarray) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=float))
        B = self.B
        if B == 0.0:
            # double pole at 0: evaluate next to it, G is continuous there
            tiny = np.abs(k) < _POLE_NUDGE
            k = np.where(tiny, np.where(k < 0, -_POLE_NUDGE, _POLE_NUDGE), k)
            a1, a2, _ = self.sdata.real_values(k)
            return a1 * a2 * k * k / (k + 1j) ** 2
        near_plus = np.abs(k - B) <= np.abs(k + B)
        out = np.empty(k.shape, dtype=complex)
        scale = 1e-9 * max(1.0, abs(B))
        far = (np.abs(k - B) > scale) & (np.abs(k + B) > scale)
        if np.any(far):
            a1, a2, _ = self.sdata.real_values(k[far])
            out[far] = a1 * a2 * (k[far] - B) * (k[far] + B) / (k[far] + 1j) ** 2
        for pole, other in ((B, -B), (-B, B)):
            sel = ~far & (near_plus if pole == B else ~near_plus)
            if np.any(sel):
                kc = k[sel].astype(complex)
                w = self.sdata.a1_pole_weighted(kc, pole) * (kc - other)
                out[sel] = w * self.sdata.a2(kc) / (kc + 1j) ** 2
        return out

    def build(self) -> "SpectralArgument":
        if self.sdata.is_trivial:
            return self
        s = np.linspace(-0.5 * math.pi + _EDGE, 0.5 * math.pi - _EDGE, 2049)
        marks = [self.B, -self.B]
        s = np.unique(np.concatenate([s, np.arctan(marks)]))
        self.trace = trace_argument(lambda u: self.weighted(np.tan(u)), s, start=None)
        logger.debug("spectral argument traced on %d nodes", self.trace.params.size)
        return self

    def arg_weighted(self, k: np.ndarray) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=float))
        if self.sdata.is_trivial:
            return np.zeros(k.shape)
        if self.trace is None:
            self.build()
        assert self.trace is not None
        return self.trace.lift(np.arctan(k), self.weighted(k))

    def log_weighted(self, k: np.ndarray) -> np.ndarray:
        """Continuous log G(k) with log G(-inf) = 0."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        if self.sdata.is_trivial:
            return np.zeros(k.shape, dtype=complex)
        return np.log(np.abs(self.weighted(k))) + 1j * self.arg_weighted(k)

    def phi(self, k: np.ndarray) -> np.ndarray:
        """Cumulative argument of a1 a2 from -inf to k."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        if self.sdata.is_trivial:
            return np.zeros(k.shape)
        B = self.B
        return (
            self.arg_weighted(k)
            - math.pi * (k < B)
            - math.pi * (k < -B)
            + 2.0 * np.arctan2(1.0, k)
        )

    def log_abs(self, k: np.ndarray) -> np.ndarray:
        """ln |a1 a2| at real k off +-B."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        if self.sdata.is_trivial:
            return np.zeros(k.shape)
        B = self.B
        return (
            np.log(np.abs(self.weighted(k)))
            - np.log(np.abs(k - B))
            - np.log(np.abs(k + B))
            + 2.0 * np.log(np.abs(k + 1j))
        )

    def reflection_product(self, k: np.ndarray) -> np.ndarray:
        """r1 r2 = b(k) conj(b(-k)) / (a1 a2) at real k off +-B."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        a1, a2, b = self.sdata.real_values(k)
        return b * np.conj(self.sdata.b(-k)) / (a1 * a2)

    def log_transmission(self, k: np.ndarray) -> np.ndarray:
        """
        Continuous log(1 + r1 r2) = -log(a1 a2) along the real line.

        Where |r1 r2| is small the value is log1p(r1 r2) shifted onto the continuous
        branch; the log|a1 a2| route cancels to rounding noise there.
        """
        k = np.atleast_1d(np.asarray(k, dtype=float))
        out = -self.log_abs(k) - 1j * self.phi(k)
        if self.sdata.is_trivial:
            return out.astype(complex)
        B = self.B
        scale = _DIRECT_GAP * max(1.0, abs(B))
        off = (np.abs(k - B) > scale) & (np.abs(k + B) > scale)
        if np.any(off):
            prod = self.reflection_product(k[off])
            small = np.abs(prod) < _DIRECT_BOUND
            direct = np.log1p(prod[small])
            turns = np.round((out[off][small].imag - direct.imag) / (2.0 * math.pi))
            idx = np.flatnonzero(off)[small]
            out[idx] = direct + 2j * math.pi * turns
        return out


def spectral_argument(sdata: ScatteringData) -> SpectralArgument:
    return SpectralArgument(sdata).build()


@dataclass
class WindingProfile:
    omega: list[float]
    theta_minusB: float
    winding_at_zero: float
    case: Literal["I", "II"]
    n: int
    argument: SpectralArgument | None = field(default=None, repr=False)

    @property
    def winding_at_zero_over_pi(self) -> float:
        return self.winding_at_zero / math.pi


@dataclass(frozen=True)
class CaseTag:
    case: Literal["I", "II"]
    n: int


def _locate_crossing(arg: SpectralArgument, level: float, lo: float, hi: float) -> float:
    assert arg.trace is not None
    ks = np.tan(arg.trace.params)
    sel = (ks > lo) & (ks < hi)
    grid = np.concatenate([[lo], ks[sel], [hi]])
    values = arg.phi(grid) - level
    sign_change = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) <= 0)[0]
    if sign_change.size != 1:
        raise AssumptionViolation(
            f"cumulative argument crosses {level / math.pi:.0f}*pi {sign_change.size} times below -|B|"
        )
    j = int(sign_change[0])
    return float(brentq(lambda k: float(arg.phi(np.array([k]))[0] - level), grid[j], grid[j + 1], xtol=1e-13))


def winding_profile(sdata: ScatteringData, params: StepParams | None = None) -> WindingProfile:
    """Winding of arg(a1 a2) along (-inf, 0): omega_j, theta_{-|B|}, winding at 0 and the case tag."""
    params = params or sdata.background
    B = sdata.B
    if sdata.is_trivial:
        raise InputError("winding profile needs A > 0")
    if B == 0.0:
        raise InputError("winding profile needs B != 0")
    if sdata.source == "closed_form" and not (0.0 < 4.0 * abs(B) * params.R < math.pi):
        raise InputError("pure-step winding needs 0 < 4|B|R < pi")

    arg = spectral_argument(sdata)
    at_zero = float(arg.phi(np.array([0.0]))[0])
    m = int(round(at_zero / math.pi))
    if m < 0 or abs(at_zero - m * math.pi) > 1e-3 * math.pi:
        raise AssumptionViolation(f"winding at k=0 is {at_zero / math.pi:.6f}*pi, not a nonnegative multiple of pi")
    case: Literal["I", "II"] = "I" if m % 2 == 1 else "II"
    n = (m - 1) // 2 if case == "I" else m // 2

    edge = -abs(B)
    below = edge - 1e-7 * max(1.0, abs(B))
    theta = 2.0 * math.pi * n - float(arg.phi(np.array([below]))[0])
    if not (0.0 < theta < math.pi):
        raise AssumptionViolation(f"theta_(-|B|) = {theta:.6f} outside (0, pi)")

    omegas: list[float] = []
    hi = edge
    lo_limit = -1e6
    for j in range(1, n + 1):
        level = (2 * (n - j + 1) - 1) * math.pi
        # omega_j solves phi = (2(n-j+1)-1) pi, searching left of the previous one
        omega = _locate_crossing(arg, level, lo_limit, hi)
        omegas.append(omega)
        hi = omega
    omegas = sorted(omegas, reverse=True)

    _check_bands(arg, omegas, n, edge)
    logger.info("winding at 0 = %.6f pi -> case %s, n=%d", at_zero / math.pi, case, n)
    return WindingProfile(
        omega=omegas, theta_minusB=theta, winding_at_zero=at_zero, case=case, n=n, argument=arg
    )


def _check_bands(arg: SpectralArgument, omegas: list[float], n: int, edge: float) -> None:
    # on (omega_{n-j+1}, omega_{n-j}) the argument stays in ((2j-1)pi, (2j+1)pi)
    assert arg.trace is not None
    bounds = [-np.inf] + sorted(omegas) + [edge]
    ks = np.tan(arg.trace.params)
    for j in range(n + 1):
        lo, hi = bounds[j], bounds[j + 1]
        sel = (ks > lo) & (ks < hi)
        if not np.any(sel):
            continue
        phi = arg.phi(ks[sel])
        if np.min(phi) <= (2 * j - 1) * math.pi - 1e-9 or np.max(phi) >= (2 * j + 1) * math.pi + 1e-9:
            raise AssumptionViolation(f"cumulative argument leaves its band on ({lo:.4g}, {hi:.4g})")


def classify_case(
    params: StepParams,
    zeros: ZeroSet,
    profile: WindingProfile,
) -> CaseTag:
    """Case I iff i*k0 is present and the winding at 0 is an odd multiple of pi; n from the pair count."""
    if zeros.real_zeros:
        raise NonGenericParametersError(f"a1 has real zeros {zeros.real_zeros}")
    if pair_birth_threshold(params):
        raise NonGenericParametersError("R sits on a zero-pair birth threshold")
    odd = profile.case == "I"
    if (zeros.imaginary_zero is not None) != odd:
        raise NumericalError("imaginary zero and winding parity disagree")
    if len(zeros.complex_pairs) != profile.n:
        raise NumericalError(f"pair count {len(zeros.complex_pairs)} disagrees with winding n={profile.n}")

    # interlacing Re p_n < omega_n < ... < Re p_1 < omega_1 < -|B|
    chain: list[float] = []
    for pair, omega in zip(zeros.complex_pairs, profile.omega):
        chain += [omega, pair.p.real]
    chain = [-abs(params.B)] + chain
    if any(b >= a for a, b in zip(chain[:-1], chain[1:])):
        raise AssumptionViolation("zeros and omegas do not interlace")
    return CaseTag(case=profile.case, n=profile.n)
