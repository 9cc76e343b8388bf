from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Literal
from uuid import uuid4

import numpy as np
import pandas as pd

from src.errors import InputError, NumericalError
from src.schemas import ComplexValue, GridSpec, PairRecord, RealZeroRecord, RunConfig, SpectrumReport, StepParams
from src.asymptotics.leading import AsymptoticEvaluator, AsymptoticTerm, terms_table
from src.asymptotics.sectors import SectorMap, sector_map
from src.pipeline.artifacts import write_datum_csv, write_report_json, write_snapshots_csv, write_table_csv, ensure_output_dirs
from src.pipeline.validate import ValidationResult, ensure_valid_run_config
from src.scattering.data import ScatteringData, compute_scattering, scattering_relations, scattering_table
from src.scattering.datum import InitialDatum, build_initial_datum
from src.scattering.norming import norming_constants
from src.simulation.compare import compare
from src.simulation.fields import FieldSnapshot, make_grid, mollified_step, seam_trust_radius
from src.simulation.splitstep import BlowUpError, evolve
from src.spectrum.argument import ArgumentTraceError, count_zeros_argument_principle
from src.spectrum.step import a1_closed, step_spectral_functions, zero_bound
from src.spectrum.winding import WindingProfile, classify_case, winding_profile
from src.spectrum.zeros import ZeroSet, find_zeros

logger = logging.getLogger(__name__)

Stage = Literal["zeros", "winding", "classify"]

SCATTER_POINTS = 201
ORACLE_FLOOR = 1e-4


def new_run_id(command: str) -> str:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%d_%H%M%S")
    return f"{command}_{stamp}_{uuid4().hex[:8]}"


@dataclass
class SpectrumBundle:
    report: SpectrumReport
    zeros: ZeroSet
    sdata: ScatteringData
    profile: WindingProfile | None = None


@dataclass
class CommandResult:
    command: str
    run_id: str
    report: dict[str, Any]
    table: pd.DataFrame | None = None
    snapshots: list[FieldSnapshot] = field(default_factory=list)
    datum: InitialDatum | None = None
    validation: ValidationResult | None = None
    seconds: float = 0.0


# spectrum report


def _complex(z: complex | None) -> ComplexValue | None:
    return None if z is None else ComplexValue.of(complex(z))


def assemble_spectrum_report(
    params: StepParams,
    stage: Stage = "classify",
    *,
    grid: GridSpec | None = None,
    norming: bool = False,
    threads: int | None = None,
) -> SpectrumBundle:
    """
    Zeros of a1, the winding profile and the case tag; at 'classify' a failed tag is an
    error and the norming constants can be added.

    The earlier stages report the case when it can be decided and leave it empty for
    non-generic backgrounds.
    """
    grid = grid or GridSpec()
    zeros = find_zeros(params, threads=threads)
    report = SpectrumReport(
        params=params,
        real_zeros=[RealZeroRecord(k=float(k), multiplicity=mult) for k, mult in zeros.real_zeros],
        k0=zeros.imaginary_zero,
        pairs=[PairRecord(re=pr.p.real, im=pr.p.imag, tau=pr.tau, y=pr.y) for pr in zeros.complex_pairs],
    )
    sdata = step_spectral_functions(params, puncture=grid.puncture)
    bundle = SpectrumBundle(report=report, zeros=zeros, sdata=sdata)

    try:
        profile = winding_profile(sdata, params)
    except (InputError, NumericalError) as exc:
        if stage == "classify":
            raise
        logger.warning("no winding profile for A=%s B=%s R=%s: %s", params.A, params.B, params.R, exc)
        return bundle
    bundle.profile = profile
    if stage != "zeros":
        report.omegas = list(profile.omega)
        report.theta_minusB = profile.theta_minusB
        report.winding_at_zero_over_pi = profile.winding_at_zero_over_pi

    try:
        tag = classify_case(params, zeros, profile)
    except (InputError, NumericalError) as exc:
        if stage == "classify":
            raise
        logger.warning("no case tag for A=%s B=%s R=%s: %s", params.A, params.B, params.R, exc)
        return bundle
    report.case, report.n = tag.case, tag.n
    if stage != "classify":
        return bundle

    if norming:
        datum = build_initial_datum(params, grid=grid)
        constants = norming_constants(datum, zeros.imaginary_zero, [pr.p for pr in zeros.complex_pairs])
        report.gamma0 = _complex(constants.gamma0)
        report.etas = [ComplexValue.of(eta) for eta in constants.etas]
    logger.info("spectrum A=%s B=%s R=%s: case %s, n=%s", params.A, params.B, params.R, report.case, report.n)
    return bundle


def argument_principle_count(params: StepParams) -> int | None:
    """Zeros of a1 in a box of the upper half-plane, counted independently of the root finders."""
    if params.A == 0.0:
        return 0
    bound = zero_bound(params)
    try:
        return count_zeros_argument_principle(
            lambda k: a1_closed(params, k), (-bound, bound, ORACLE_FLOOR, bound), samples_per_side=1024
        )
    except ArgumentTraceError as exc:
        logger.warning("argument-principle oracle failed: %s", exc)
        return None


def sector_table(smap: SectorMap) -> pd.DataFrame:
    rows = [
        {"label": s.label, "kind": s.kind, "m": s.m, "lower": s.lower, "upper": s.upper, "describe": s.describe}
        for s in smap.sectors
    ]
    return pd.DataFrame(rows, columns=["label", "kind", "m", "lower", "upper", "describe"])


# commands


def _scatter_grid(params: StepParams, grid: GridSpec) -> np.ndarray:
    bound = 2.0 * zero_bound(params)
    k = np.linspace(-bound, bound, SCATTER_POINTS)
    B = params.effective_B
    if B != 0.0:
        keep = np.min(np.abs(k[:, None] - np.array([B, -B])[None, :]), axis=1) > grid.puncture * max(1.0, abs(B))
        k = k[keep]
    return k


def run_scatter(config: RunConfig, *, datum: InitialDatum | None = None) -> CommandResult:
    """Numerical scattering data of the (sampled) step, tabulated on the real line."""
    params = config.background
    datum = datum or build_initial_datum(params, grid=config.grid)
    sdata = compute_scattering(datum, puncture=config.grid.puncture, threads=config.threads)
    k = _scatter_grid(datum.background, config.grid)
    table = scattering_table(sdata, k)
    report: dict[str, Any] = {
        "background": datum.background.model_dump(),
        "points": int(k.size),
        "relations": scattering_relations(sdata, k),
    }
    if datum.profile is not None and datum.sharp_edge:
        closed = step_spectral_functions(datum.background, puncture=config.grid.puncture)
        a1, _, b = sdata.real_values(k)
        a1c, _, bc = closed.real_values(k)
        report["closed_form_deviation"] = {
            "a1": float(np.max(np.abs(a1 - a1c) / np.maximum(np.abs(a1c), 1e-300))),
            "b": float(np.max(np.abs(b - bc) / np.maximum(np.abs(bc), 1e-300))),
        }
    return CommandResult(command="scatter", run_id=new_run_id("scatter"), report=report, table=table, datum=datum)


def run_spectrum(config: RunConfig, stage: Stage, *, norming: bool = False) -> tuple[CommandResult, SpectrumBundle]:
    bundle = assemble_spectrum_report(
        config.background, stage, grid=config.grid, norming=norming, threads=config.threads
    )
    report: dict[str, Any] = bundle.report.model_dump()
    table: pd.DataFrame | None = None
    if stage == "zeros":
        report["count_upper"] = bundle.zeros.count_upper
        report["argument_principle_count"] = argument_principle_count(config.background)
        oracle = report["argument_principle_count"]
        if oracle is not None and oracle != bundle.zeros.count_upper:
            logger.warning("root finders found %d zeros, argument principle %d", bundle.zeros.count_upper, oracle)
        table = pd.DataFrame(
            [{"re(k)": z.real, "im(k)": z.imag, "abs(a1)": float(abs(a1_closed(config.background, z)))} for z in bundle.zeros.upper_zeros()],
            columns=["re(k)", "im(k)", "abs(a1)"],
        )
    elif stage == "winding" and bundle.profile is not None and bundle.profile.argument is not None:
        k = -np.logspace(-3, 3, 241)[::-1] * max(1.0, abs(config.background.B))
        k = k[np.abs(k + abs(config.background.B)) > config.grid.puncture]
        table = pd.DataFrame({"k": k, "phi": bundle.profile.argument.phi(k)})
    elif stage == "classify":
        table = sector_table(sector_map(bundle.report))
    result = CommandResult(command=stage, run_id=new_run_id(stage), report=report, table=table)
    return result, bundle


def run_asymptote(
    config: RunConfig,
    xis: list[float],
    times: list[float],
    *,
    bundle: SpectrumBundle | None = None,
) -> CommandResult:
    """Leading term at x = 4 xi t for every (xi, t) pair."""
    if not xis or not times:
        raise InputError("asymptote needs at least one xi and one t")
    if any(t <= 0.0 for t in times):
        raise InputError("asymptote times must be positive")
    bundle = bundle or assemble_spectrum_report(config.background, "classify", grid=config.grid, threads=config.threads)
    margin = config.compare.margin if config.compare is not None else 0.05
    evaluator = AsymptoticEvaluator(bundle.sdata, bundle.report, margin=margin)
    terms: list[AsymptoticTerm] = []
    for xi in xis:
        for t in times:
            terms.append(evaluator.leading_term(4.0 * xi * t, t))
    report: dict[str, Any] = {
        "spectrum": bundle.report.model_dump(),
        "terms": [
            {**term.as_row(), "formula_id": term.formula_id, "log_factor": term.log_factor} for term in terms
        ],
    }
    return CommandResult(command="asymptote", run_id=new_run_id("asymptote"), report=report, table=terms_table(terms))


def _snapshot_summary(snapshots: list[FieldSnapshot], reflection: np.ndarray, dx: float) -> pd.DataFrame:
    rows = []
    for snap in snapshots:
        # integral of q(x) conj(q(-x)) is conserved by the flow
        pt_mass = complex(np.sum(snap.q * np.conj(snap.q[reflection])) * dx)
        rows.append(
            {
                "t": snap.t,
                "max_abs_q": float(np.max(np.abs(snap.q))),
                "re(pt_mass)": pt_mass.real,
                "im(pt_mass)": pt_mass.imag,
            }
        )
    return pd.DataFrame(rows, columns=["t", "max_abs_q", "re(pt_mass)", "im(pt_mass)"])


def run_simulate(config: RunConfig) -> CommandResult:
    """Split-step evolution of the mollified step; a blow-up keeps the snapshots taken so far."""
    params, sim = config.background, config.time
    grid = make_grid(params, sim)
    initial = mollified_step(params, grid, sim)
    report: dict[str, Any] = {
        "background": params.model_dump(),
        "time": sim.model_dump(),
        "L": grid.L,
        "N": grid.N,
        "trust_radius": seam_trust_radius(grid, sim),
    }
    run_id = new_run_id("simulate")
    try:
        snapshots = evolve(initial, grid, sim, threads=config.threads)
    except BlowUpError as exc:
        partial = exc.snapshots + [exc.last_good]
        report["blow_up"] = str(exc)
        table = _snapshot_summary(partial, grid.reflection, grid.dx)
        _persist(CommandResult("simulate", run_id, report, table, partial), config)
        raise
    table = _snapshot_summary(snapshots, grid.reflection, grid.dx)
    return CommandResult(command="simulate", run_id=run_id, report=report, table=table, snapshots=snapshots)


def run_compare(config: RunConfig, *, bundle: SpectrumBundle | None = None) -> CommandResult:
    """Simulate, then tabulate the leading term against the snapshots along the ray and cone."""
    if config.compare is None:
        raise InputError("compare needs a compare section with xi")
    bundle = bundle or assemble_spectrum_report(config.background, "classify", grid=config.grid, threads=config.threads)
    evaluator = AsymptoticEvaluator(bundle.sdata, bundle.report, margin=config.compare.margin)

    simulated = run_simulate(config)
    grid = make_grid(config.background, config.time)
    trust = seam_trust_radius(grid, config.time)
    comparison = compare(simulated.snapshots, evaluator, grid, config.compare, trust)

    report = {**simulated.report, "spectrum": bundle.report.model_dump(), "comparison": comparison.summary()}
    table = pd.concat([comparison.ray, comparison.table], ignore_index=True)
    return CommandResult(
        command="compare",
        run_id=new_run_id("compare"),
        report=report,
        table=table,
        snapshots=simulated.snapshots,
    )


def run_command(
    config: RunConfig,
    *,
    xis: list[float] | None = None,
    times: list[float] | None = None,
    datum: InitialDatum | None = None,
    seed_report: str | Path | None = None,
    persist: bool = True,
) -> CommandResult:
    """Validate, dispatch on config.command, and write the artifacts."""
    started = time.perf_counter()
    validation = ensure_valid_run_config(config) if datum is None else None
    for warning in validation.warnings if validation else []:
        logger.warning("%s: %s", warning["path"], warning["message"])

    bundle: SpectrumBundle | None = None
    command = config.command
    if command == "scatter":
        result = run_scatter(config, datum=datum)
    elif command in ("zeros", "winding", "classify"):
        result, bundle = run_spectrum(config, command, norming=command == "classify")
    elif command == "asymptote":
        xi_values = xis or ([config.compare.xi] if config.compare is not None else [])
        bundle = assemble_spectrum_report(config.background, "classify", grid=config.grid, threads=config.threads)
        result = run_asymptote(config, xi_values, times or [config.time.t_final], bundle=bundle)
    elif command == "simulate":
        result = run_simulate(config)
    else:
        bundle = assemble_spectrum_report(config.background, "classify", grid=config.grid, threads=config.threads)
        result = run_compare(config, bundle=bundle)

    result.validation = validation
    result.seconds = time.perf_counter() - started
    if validation is not None and validation.warnings:
        result.report["warnings"] = validation.warnings
    if seed_report is not None:
        if bundle is None:
            raise InputError(f"--seed-report has no spectrum report to dump for '{command}'")
        path = Path(seed_report)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(bundle.report.model_dump(), indent=2, ensure_ascii=False), encoding="utf-8")
        result.report["seed_report"] = str(path)
    if persist:
        _persist(result, config)
    logger.info("%s finished in %.2fs (run %s)", command, result.seconds, result.run_id)
    return result


def _persist(result: CommandResult, config: RunConfig) -> None:
    base = config.out_dir
    paths = ensure_output_dirs(base)
    artifacts: dict[str, str] = {}
    if result.table is not None:
        if config.fmt == "csv":
            artifacts["table_csv"] = str(write_table_csv(result.table, result.run_id, base_dir=base))
        else:
            result.report["rows"] = _json_rows(result.table)
    if result.snapshots:
        artifacts["snapshots_csv"] = str(
            write_snapshots_csv([snap.to_frame() for snap in result.snapshots], result.run_id, base_dir=base)
        )
    if result.datum is not None:
        artifacts["datum_csv"] = str(write_datum_csv(result.datum, paths["tables"] / f"{result.run_id}.datum.csv"))
    result.report["run_id"] = result.run_id
    result.report["command"] = result.command
    result.report["artifacts"] = artifacts
    artifacts["report_json"] = str(paths["reports"] / f"{result.run_id}.json")
    result.report = _jsonable(result.report)
    write_report_json(result.report, result.run_id, base_dir=base)


def _json_rows(table: pd.DataFrame) -> list[dict[str, Any]]:
    return [{k: _jsonable(v) for k, v in row.items()} for row in table.to_dict(orient="records")]


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if not math.isfinite(float(value)) else float(value)
    return value
