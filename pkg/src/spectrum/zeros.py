from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from src.errors import InputError, NumericalError
from src.schemas import StepParams
from src.spectrum.step import a1_closed, a1_closed_derivative
from src.workers import map_threads

logger = logging.getLogger(__name__)

MEMBERSHIP_RTOL = 1e-9
ZERO_TOLERANCE = 1e-10
# exp overflow guard for y e^y
_Y_CAP = 700.0


@dataclass(frozen=True)
class ComplexPair:
    """Zeros p and -conj(p) of a1 with p = (-tau + i y)/(4R)."""

    index: int
    tau: float
    y: float
    p: complex

    @property
    def partner(self) -> complex:
        return -self.p.conjugate()


@dataclass
class ZeroSet:
    real_zeros: list[tuple[float, int]] = field(default_factory=list)
    imaginary_zero: float | None = None
    complex_pairs: list[ComplexPair] = field(default_factory=list)

    @property
    def count_upper(self) -> int:
        """Zeros in the open upper half-plane, with multiplicity."""
        return (1 if self.imaginary_zero is not None else 0) + 2 * len(self.complex_pairs)

    def upper_zeros(self) -> list[complex]:
        out: list[complex] = []
        if self.imaginary_zero is not None:
            out.append(1j * self.imaginary_zero)
        for pair in self.complex_pairs:
            out.extend([pair.p, pair.partner])
        return out


def _newton(params: StepParams, k: complex, steps: int = 2) -> complex:
    for _ in range(steps):
        d = complex(a1_closed_derivative(params, k))
        if d == 0:
            break
        k = k - complex(a1_closed(params, k)) / d
    return k


# imaginary zero


def find_imaginary_zero(params: StepParams) -> float | None:
    """Unique k0 > 0 with A^2 e^{-4kR} = 4(B^2 + k^2) when 4B^2 < A^2."""
    A, B, R = params.A, params.B, params.R
    if A == 0.0 or 4.0 * B * B - A * A >= 0.0:
        return None

    def f(k: float) -> float:
        return A * A * math.exp(-4.0 * k * R) - 4.0 * (B * B + k * k)

    k0 = brentq(f, 0.0, 0.5 * A + 1.0, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    for _ in range(2):
        df = -4.0 * R * A * A * math.exp(-4.0 * k0 * R) - 8.0 * k0
        k0 = k0 - f(k0) / df
    return float(k0)


# real zeros


def _near_integer(value: float, *, minimum: int) -> int | None:
    n = round(value)
    if n >= minimum and abs(value - n) <= MEMBERSHIP_RTOL * max(1.0, abs(value)):
        return int(n)
    return None


def find_real_zeros(params: StepParams) -> list[tuple[float, int]]:
    A, B, R = params.A, params.B, params.R
    if A == 0.0:
        return []
    zeros: list[tuple[float, int]] = []

    disc = 4.0 * B * B - A * A
    if abs(disc) <= MEMBERSHIP_RTOL * max(A * A, 4.0 * B * B):
        zeros.append((0.0, 2))

    if R > 0.0 and disc > 0.0:
        n = _near_integer(R * math.sqrt(disc) / math.pi, minimum=1)
        if n is not None:
            k = math.pi * n / (2.0 * R)
            zeros += [(-k, 1), (k, 1)]

    if R > 0.0:
        half = R * math.sqrt(4.0 * B * B + A * A) / math.pi - 0.5
        n = _near_integer(half, minimum=0)
        if n is not None:
            k = 0.5 * math.sqrt(4.0 * B * B + A * A)
            zeros += [(-k, 1), (k, 1)]

    return sorted(zeros)


# complex zeros


def y_of_tau(tau: np.ndarray | float, B: float, R: float) -> np.ndarray:
    """Positive root y of y^2 + 2 tau cot(tau) y - (tau^2 - 16 B^2 R^2) = 0."""
    tau = np.asarray(tau, dtype=float)
    c = tau * tau - 16.0 * B * B * R * R
    x = tau / np.tan(tau)
    root = np.sqrt(x * x + c)
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = c / (x + root)
    return np.where(x > 0.0, stable, -x + root)


def y_prime(tau: np.ndarray | float, B: float, R: float) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    y = y_of_tau(tau, B, R)
    cot = 1.0 / np.tan(tau)
    d_x = cot - tau / np.sin(tau) ** 2
    return (tau - d_x * y) / (y + tau * cot)


def slope_limit(n: int, B: float, R: float) -> float:
    """Limit of (y e^y)' as tau decreases to 2 pi n - pi."""
    m = 2 * n - 1
    return (math.pi**2 * m * m - 16.0 * B * B * R * R) / (2.0 * math.pi * m)


def one_sided_slope(n: int, B: float, R: float, h: float = 1e-7) -> float:
    tau0 = 2.0 * math.pi * n - math.pi
    y = float(y_of_tau(tau0 + h, B, R))
    return y * math.exp(y) / h


def second_differences(n: int, B: float, R: float, samples: int = 200) -> np.ndarray:
    """Sampled second differences of y on the open interval (2 pi n - pi, 2 pi n)."""
    lo = 2.0 * math.pi * n - math.pi
    tau = lo + math.pi * np.linspace(0.02, 0.98, samples)
    y = y_of_tau(tau, B, R)
    return y[2:] - 2.0 * y[1:-1] + y[:-2]


def _pair_equation(tau: float, A: float, B: float, R: float) -> float:
    y = float(y_of_tau(tau, B, R))
    lhs = y * math.exp(min(y, _Y_CAP))
    return lhs + 2.0 * A * A * R * R * math.sin(tau) / tau


def pair_count(params: StepParams) -> int:
    """Number of n with 4A^2R^2 > pi^2(2n-1)^2 - 16B^2R^2."""
    A, B, R = params.A, params.B, params.R
    if R == 0.0 or A == 0.0:
        return 0
    total = 4.0 * A * A * R * R + 16.0 * B * B * R * R
    count = 0
    while math.pi**2 * (2 * count + 1) ** 2 < total:
        count += 1
    return count


def pair_birth_threshold(params: StepParams) -> bool:
    """True when R sits on pi(2n-1)/(2 sqrt(4B^2+A^2)) for some n."""
    A, B, R = params.A, params.B, params.R
    if R == 0.0 or A == 0.0:
        return False
    ratio = 2.0 * R * math.sqrt(4.0 * B * B + A * A) / math.pi
    m = round(ratio)
    return m % 2 == 1 and abs(ratio - m) <= MEMBERSHIP_RTOL * max(1.0, ratio)


def _solve_pair(params: StepParams, n: int) -> ComplexPair:
    A, B, R = params.A, params.B, params.R
    lo = 2.0 * math.pi * n - math.pi
    # equation starts at 0 with negative slope; first sign change is the unique root
    s = np.concatenate([np.logspace(-9, -2, 40), np.linspace(0.011, 1.0 - 1e-9, 400)])
    taus = lo + math.pi * s
    values = np.array([_pair_equation(t, A, B, R) for t in taus])
    positive = np.nonzero(values > 0.0)[0]
    if positive.size == 0 or positive[0] == 0:
        raise NumericalError(f"could not bracket the zero pair n={n}")
    j = int(positive[0])
    tau = brentq(_pair_equation, taus[j - 1], taus[j], args=(A, B, R), xtol=1e-15, maxiter=200)
    y = float(y_of_tau(tau, B, R))
    p = _newton(params, complex(-tau, y) / (4.0 * R))
    if abs(complex(a1_closed(params, p))) > ZERO_TOLERANCE:
        raise NumericalError(f"pair n={n}: |a1(p)| = {abs(complex(a1_closed(params, p))):.2e}")
    tau_polished = -4.0 * R * p.real
    return ComplexPair(index=n, tau=float(tau_polished), y=float(4.0 * R * p.imag), p=p)


def find_complex_zeros(params: StepParams, *, threads: int | None = None) -> list[ComplexPair]:
    """Pairs {p_n, -conj(p_n)} for n = 1, 2, ... in the upper half-plane."""
    A, B, R = params.A, params.B, params.R
    if 4.0 * abs(B) * R > math.pi * (1.0 + 1e-12):
        raise InputError("complex-zero census needs 0 <= 4|B|R <= pi")
    if A == 0.0 or R == 0.0:
        return []
    count = pair_count(params)
    pairs = map_threads(lambda n: _solve_pair(params, n), list(range(1, count + 1)), threads)
    logger.debug("found %d zero pairs for A=%s B=%s R=%s", len(pairs), A, B, R)
    return sorted(pairs, key=lambda pr: pr.index)


def find_zeros(params: StepParams, *, threads: int | None = None) -> ZeroSet:
    return ZeroSet(
        real_zeros=find_real_zeros(params),
        imaginary_zero=find_imaginary_zero(params),
        complex_pairs=find_complex_zeros(params, threads=threads),
    )
