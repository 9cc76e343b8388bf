from __future__ import annotations

import logging
import math
from typing import Callable, Literal

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.errors import InputError, NumericalError

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]
Direction = Literal["left", "right"]
BoundarySide = Literal["+", "-"]

ORDER = 16
_NODES, _WEIGHTS = leggauss(ORDER)

# the direct part of a half-line integral stops at |z - c| = TAIL_SCALE * (1 + reach)
TAIL_SCALE = 1e3
# panel errors below this multiple of eps * sum|f w| are rounding, not truncation
NOISE_FLOOR = 1e3 * float(np.finfo(float).eps)


class CauchyQuadratureError(NumericalError):
    pass


class CutError(InputError):
    pass


def _panel_rule(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * _NODES[None, :]
    weights = half[:, None] * _WEIGHTS[None, :]
    return nodes, weights


def adaptive_gauss_legendre(
    f: Integrand,
    a: float,
    b: float,
    *,
    breakpoints: tuple[float, ...] = (),
    atol: float = 1e-12,
    rtol: float = 1e-12,
    max_rounds: int = 60,
    max_panels: int = 50_000,
) -> complex:
    """
    Adaptive composite Gauss-Legendre on a finite [a, b].

    Every round evaluates each open panel with one 16-point rule and with the rule on
    its two halves, all nodes in one vectorised call; panels whose estimates agree are
    accepted, the rest are split. A panel also passes when the disagreement is at the
    rounding level of its own integrand values.
    """
    marks = sorted({a, b, *[p for p in breakpoints if a < p < b]})
    lo = np.array(marks[:-1], dtype=float)
    hi = np.array(marks[1:], dtype=float)
    total = 0.0 + 0.0j
    length = b - a
    for _ in range(max_rounds):
        if lo.size == 0:
            return complex(total)
        if lo.size > max_panels:
            break
        mid = 0.5 * (lo + hi)
        n_coarse, w_coarse = _panel_rule(lo, hi)
        n_left, w_left = _panel_rule(lo, mid)
        n_right, w_right = _panel_rule(mid, hi)
        nodes = np.concatenate([n_coarse, n_left, n_right], axis=0)
        values = np.asarray(f(nodes.ravel()), dtype=complex).reshape(nodes.shape)
        m = lo.size
        coarse = np.sum(values[:m] * w_coarse, axis=1)
        fine = np.sum(values[m : 2 * m] * w_left, axis=1) + np.sum(values[2 * m :] * w_right, axis=1)
        if not np.all(np.isfinite(fine)):
            raise CauchyQuadratureError("non-finite integrand values")
        err = np.abs(fine - coarse)
        share = (hi - lo) / length
        noise = NOISE_FLOOR * np.sum(np.abs(values[:m]) * w_coarse, axis=1)
        ok = err <= np.maximum(np.maximum(atol * share, rtol * np.abs(fine)), noise)
        total += np.sum(fine[ok])
        lo = np.concatenate([lo[~ok], mid[~ok]])
        hi = np.concatenate([mid[~ok], hi[~ok]])
    raise CauchyQuadratureError(f"adaptive quadrature left {lo.size} panels unresolved")


def _log_with_side(z: complex, side: BoundarySide | None, flip: float) -> complex:
    """Log of z = +-(k - c) continued to a boundary value when z is a negative real."""
    if side is None or abs(z.imag) > 0.0 or z.real > 0.0:
        return complex(np.log(z))
    return complex(math.log(abs(z)), flip * math.pi if side == "+" else -flip * math.pi)


def cauchy_model(c: float, k: complex, direction: Direction, side: BoundarySide | None) -> complex:
    """
    Closed-form Cauchy transform of the model density.

    left:  phi(z) = 1/(1+c-z) on (-inf, c), C phi(k) = Log(k-c) / (2 pi i (1+c-k))
    right: psi(z) = 1/(1+z-c) on (c, inf),  C psi(k) = -Log(c-k) / (2 pi i (1+k-c))
    """
    if direction == "left":
        denom = 1.0 + c - k
        if abs(denom) < 1e-10:
            return complex(-1.0 / (2j * math.pi))
        return _log_with_side(k - c, side, +1.0) / (2j * math.pi * denom)
    denom = 1.0 + k - c
    if abs(denom) < 1e-10:
        return complex(1.0 / (2j * math.pi))
    return -_log_with_side(c - k, side, -1.0) / (2j * math.pi * denom)


def _model_density(c: float, z: np.ndarray, direction: Direction) -> np.ndarray:
    return 1.0 / (1.0 + c - z) if direction == "left" else 1.0 / (1.0 + z - c)


def on_cut(c: float, k: complex, direction: Direction) -> bool:
    if abs(complex(k).imag) > 1e-14:
        return False
    s = complex(k).real
    return s < c if direction == "left" else s > c


def _cutoff(c: float, k: complex, breakpoints: tuple[float, ...]) -> float:
    reach = max([abs(c), abs(complex(k).real), *[abs(p) for p in breakpoints]])
    return TAIL_SCALE * (1.0 + reach)


def _first_moment(e: complex, Y: float) -> complex:
    """Integral of du / (u (u - e)) over (Y, inf), |e| < Y on the real axis."""
    x = e / Y
    if abs(x) < 1e-4:
        return complex((1.0 + x / 2.0 + x * x / 3.0 + x**3 / 4.0) / Y)
    return complex(-np.log1p(-x) / e)


def _half_line(
    density: Integrand,
    c: float,
    k: complex,
    weight: complex,
    *,
    direction: Direction,
    breakpoints: tuple[float, ...],
    anchor: float | None,
    smooth_tail: Integrand | None,
    atol: float,
) -> complex:
    """
    Integral of (F(z) - weight m(z)) / (z - k) over the half-line, m the model density.

    The near part [0, Z] of zeta = |z - c| runs in t = log1p(zeta), which keeps oscillating
    tails of F at bounded frequency per panel. Beyond Z the model part is closed form and
    F is replaced by `smooth_tail`, integrated in v = 1/(1 + zeta); without one the far
    part of F is dropped.
    """
    sign = -1.0 if direction == "left" else 1.0
    Z = _cutoff(c, k, breakpoints)
    t_end = math.log1p(Z)

    def near(t: np.ndarray) -> np.ndarray:
        zeta = np.expm1(t)
        z = c + sign * zeta
        dens = np.asarray(density(z), dtype=complex) - weight * _model_density(c, z, direction)
        diff = z - k
        out = np.zeros(z.shape, dtype=complex)
        # removable point: the density vanishes at the anchor
        ok = np.abs(diff) >= 1e-13 * max(1.0, abs(k))
        out[ok] = dens[ok] / diff[ok] * (1.0 + zeta[ok])
        return out

    t_marks = [float(t) for t in np.arange(1.0, t_end)]
    if anchor is not None and anchor != c:
        t_marks.append(math.log1p(abs(anchor - c)))
    for p in breakpoints:
        d = (c - p) if direction == "left" else (p - c)
        if 0.0 < d < Z:
            t_marks.append(math.log1p(d))
    total = adaptive_gauss_legendre(near, 0.0, t_end, breakpoints=tuple(t_marks), atol=atol)

    Y = 1.0 + Z
    total -= weight * sign * _first_moment(1.0 + sign * (k - c), Y)
    if smooth_tail is not None:

        def far(v: np.ndarray) -> np.ndarray:
            z = c + sign * (1.0 / v - 1.0)
            return np.asarray(smooth_tail(z), dtype=complex) / ((z - k) * v * v)

        total += adaptive_gauss_legendre(far, 0.0, 1.0 / Y, atol=atol)
    return complex(total)


def cauchy_transform(
    F: Integrand,
    c: float,
    k: complex,
    *,
    direction: Direction = "left",
    side: BoundarySide | None = None,
    breakpoints: tuple[float, ...] = (),
    smooth_tail: Integrand | None = None,
    atol: float = 1e-12,
) -> complex:
    """
    (1/2 pi i) * integral of F(z)/(z-k) over (-inf, c) (left) or (c, inf) (right).

    F must be continuous up to c and decay at infinity. The density value at the anchor
    a (Re k clipped to the cut) is subtracted through the model density, whose transform
    is closed form, so the remaining integrand is regular even for k on the cut; `side`
    selects the boundary value from above ('+') or below ('-') there. `smooth_tail` is a
    non-oscillating function that matches F far out; it is required when F decays only
    like 1/z.
    """
    k = complex(k)
    if abs(k.imag) <= 1e-14 and k.real == c:
        raise CutError("k sits on the endpoint of the cut")
    if on_cut(c, k, direction):
        if side is None:
            raise CutError("k lies on the cut; pass side='+' or side='-'")
        k = complex(k.real, 0.0)
    else:
        side = None

    a = min(k.real, c) if direction == "left" else max(k.real, c)
    Fa = complex(np.asarray(F(np.array([a])), dtype=complex)[0])
    model_a = float(_model_density(c, np.array([a]), direction)[0])
    weight = Fa / model_a
    regular = _half_line(
        F,
        c,
        k,
        weight,
        direction=direction,
        breakpoints=breakpoints,
        anchor=a,
        smooth_tail=smooth_tail,
        atol=atol,
    )
    return weight * cauchy_model(c, k, direction, side) + regular / (2j * math.pi)


def regular_part_at_endpoint(
    F: Integrand,
    c: float,
    *,
    direction: Direction = "left",
    breakpoints: tuple[float, ...] = (),
    smooth_tail: Integrand | None = None,
    atol: float = 1e-12,
) -> complex:
    """
    Regular part of the Cauchy transform at the endpoint k = c:
    (1/2 pi i) * integral of (F(z) - F(c) m(z))/(z - c) with the model density m, m(c) = 1.
    """
    Fc = complex(np.asarray(F(np.array([c])), dtype=complex)[0])
    value = _half_line(
        F,
        c,
        complex(c),
        Fc,
        direction=direction,
        breakpoints=breakpoints,
        anchor=None,
        smooth_tail=smooth_tail,
        atol=atol,
    )
    return value / (2j * math.pi)
