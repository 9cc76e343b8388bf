from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

from src.errors import ParameterValidationError
from src.schemas import GridSpec, RunConfig, SimConfig, StepParams
from src.spectrum.zeros import MEMBERSHIP_RTOL
from src.simulation.fields import default_domain

NEAR_THRESHOLD = 1e-6

# commands whose spectral analysis needs a nonzero background and 0 < 4|B|R < pi
_SPECTRAL = {"winding", "classify", "asymptote", "compare"}


@dataclass
class ValidationResult:
    ok: bool
    errors: list[dict[str, Any]]
    warnings: list[dict[str, Any]]


def ensure_valid_run_config(config: RunConfig) -> ValidationResult:
    """
    Validate a run configuration and raise if it contains errors.
    """
    result = validate_run_config(config)
    if not result.ok:
        raise ParameterValidationError(
            "run configuration validation failed",
            errors=result.errors,
            warnings=result.warnings,
        )
    return result


def validate_run_config(config: RunConfig) -> ValidationResult:
    """
    Validate the configuration against the preconditions of the requested command.
    - Errors stop the run before any computation
    - Warnings flag parameters close to excluded thresholds
    """
    errors: list[dict[str, Any]] = []
    warnings: list[dict[str, Any]] = []

    _validate_background(config.background, config.command, errors, warnings)
    _validate_grid(config.background, config.grid, errors, warnings)
    if config.command in ("simulate", "compare"):
        _validate_time(config.background, config.time, errors, warnings)
    if config.command == "compare":
        if config.compare is None:
            errors.append({"path": "compare", "message": "compare needs a [compare] section with xi"})
        else:
            _validate_compare(config, errors, warnings)

    return ValidationResult(ok=len(errors) == 0, errors=errors, warnings=warnings)


def validate_step_params(params: StepParams, command: str = "classify") -> ValidationResult:
    errors: list[dict[str, Any]] = []
    warnings: list[dict[str, Any]] = []
    _validate_background(params, command, errors, warnings)
    return ValidationResult(ok=len(errors) == 0, errors=errors, warnings=warnings)


def ensure_valid_step_params(params: StepParams, command: str = "classify") -> ValidationResult:
    result = validate_step_params(params, command)
    if not result.ok:
        raise ParameterValidationError("background validation failed", errors=result.errors, warnings=result.warnings)
    return result


def validate_sim_config(params: StepParams, config: SimConfig) -> ValidationResult:
    errors: list[dict[str, Any]] = []
    warnings: list[dict[str, Any]] = []
    _validate_time(params, config, errors, warnings)
    return ValidationResult(ok=len(errors) == 0, errors=errors, warnings=warnings)


def _validate_background(
    params: StepParams,
    command: str,
    errors: list[dict[str, Any]],
    warnings: list[dict[str, Any]],
) -> None:
    A, B, R = params.A, params.B, params.R
    if command in _SPECTRAL | {"zeros", "simulate"} and A == 0.0:
        errors.append({"path": "background.A", "message": f"{command} needs A > 0"})
        return
    if A == 0.0 and B != 0.0:
        warnings.append({"path": "background.B", "message": "A = 0: the zero datum ignores B"})
    if command in _SPECTRAL and B == 0.0:
        errors.append({"path": "background.B", "message": f"{command} needs B != 0"})
    if command in _SPECTRAL and not 0.0 < 4.0 * abs(B) * R < math.pi:
        errors.append({"path": "background.R", "message": f"{command} needs 0 < 4|B|R < pi, got {4.0 * abs(B) * R:.6g}"})
    if command == "zeros" and 4.0 * abs(B) * R > math.pi:
        errors.append({"path": "background.R", "message": "complex-zero census needs 4|B|R <= pi"})

    if A > 0.0:
        disc = 4.0 * B * B - A * A
        if 0.0 < abs(disc) <= NEAR_THRESHOLD * max(A * A, 4.0 * B * B):
            warnings.append({"path": "background", "message": "4B^2 is close to A^2: a double real zero is near"})
        if R > 0.0:
            ratio = 2.0 * R * math.sqrt(4.0 * B * B + A * A) / math.pi
            m = round(ratio)
            gap = abs(ratio - m)
            if m % 2 == 1 and MEMBERSHIP_RTOL * ratio < gap <= NEAR_THRESHOLD * max(1.0, ratio):
                warnings.append({"path": "background.R", "message": "R is close to a zero-pair birth threshold"})


def _validate_grid(
    params: StepParams,
    grid: GridSpec,
    errors: list[dict[str, Any]],
    warnings: list[dict[str, Any]],
) -> None:
    B = params.effective_B
    if B != 0.0 and grid.spacing > math.pi / abs(B) / 2.0:
        errors.append(
            {"path": "grid.points", "message": f"spacing {grid.spacing:.4g} does not resolve e^(2iBx); need <= {math.pi / abs(B) / 2.0:.4g}"}
        )
    if params.R >= grid.half_width:
        errors.append({"path": "grid.half_width", "message": f"the step edge R={params.R} lies outside the sampled grid"})
    if grid.puncture >= 0.5:
        warnings.append({"path": "grid.puncture", "message": "puncture radius is large compared with |B|"})


def _validate_time(
    params: StepParams,
    config: SimConfig,
    errors: list[dict[str, Any]],
    warnings: list[dict[str, Any]],
) -> None:
    B = params.effective_B
    L = config.L if config.L is not None else default_domain(B)
    if B != 0.0:
        turns = B * L / math.pi
        if abs(turns - round(turns)) > 1e-9 * max(1.0, abs(turns)):
            errors.append({"path": "time.L", "message": f"B*L = {B * L:.6g} must be a multiple of pi"})
    dx = 2.0 * L / config.N
    if config.mollify_width < 4.0 * dx:
        errors.append(
            {"path": "time.mollify_width", "message": f"width {config.mollify_width} is below 4 grid spacings ({4.0 * dx:.4g})"}
        )
    if params.R + 2.5 * config.mollify_width >= (1.0 - config.seam_fraction) * L:
        errors.append({"path": "time.L", "message": "the step transition reaches the seam window"})
    trust = L - config.seam_fraction * L - 4.0 * math.pi * config.N / (2.0 * L) * config.safety * config.t_final
    if trust <= 0.0:
        errors.append(
            {"path": "time", "message": f"seam-influence buffer exceeds the domain (trust radius {trust:.4g}); lower N or t_final, or raise L"}
        )
    if B != 0.0 and math.pi / abs(B) < 8.0 * dx:
        warnings.append({"path": "time.N", "message": "fewer than 8 points per background period"})


def _validate_compare(config: RunConfig, errors: list[dict[str, Any]], warnings: list[dict[str, Any]]) -> None:
    spec = config.compare
    assert spec is not None
    if spec.x_min is not None and spec.x_max is not None and spec.x_min >= spec.x_max:
        errors.append({"path": "compare.x_min", "message": f"x_min ({spec.x_min}) must be below x_max ({spec.x_max})"})
    if (spec.x_min is None) != (spec.x_max is None):
        warnings.append({"path": "compare", "message": "only one cone edge given; the cone table is skipped"})
    B = config.background.effective_B
    if abs(abs(spec.xi) - abs(B)) <= 1e-9 * max(1.0, abs(B)):
        errors.append({"path": "compare.xi", "message": f"xi = {spec.xi} is a transition ray"})
    L = config.time.L if config.time.L is not None else default_domain(B)
    trust = L * (1.0 - config.time.seam_fraction) - 4.0 * math.pi * config.time.N / (2.0 * L) * config.time.safety * config.time.t_final
    if trust > 0.0 and abs(4.0 * spec.xi * config.time.t_final) > trust:
        warnings.append({"path": "compare.xi", "message": "the ray leaves the trusted region before t_final"})
