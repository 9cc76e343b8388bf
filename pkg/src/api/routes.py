from __future__ import annotations

import logging
from typing import Any, NoReturn

import numpy as np
from fastapi import APIRouter, File, HTTPException, Query, UploadFile
from fastapi.responses import FileResponse

from src.errors import InputError, NumericalError, ParameterValidationError
from src.pipeline.artifacts import default_base_dir, parse_datum_csv, read_report_json, table_csv_path
from src.pipeline.runner import assemble_spectrum_report, run_command
from src.pipeline.validate import ensure_valid_step_params
from src.scattering.data import compute_scattering, scattering_table
from src.scattering.datum import build_initial_datum
from src.schemas import AsymptoteRequest, CompareSpec, RunConfig, ScatteringRequest, SpectrumReport, StepParams
from src.spectrum.step import step_spectral_functions

logger = logging.getLogger(__name__)

router = APIRouter()

TAG_SYSTEM = "system"
TAG_SPECTRUM = "spectrum"
TAG_SCATTERING = "scattering"
TAG_ASYMPTOTICS = "asymptotics"
TAG_RUNS = "runs"


def _raise_http(e: Exception) -> NoReturn:
    if isinstance(e, ParameterValidationError):
        raise HTTPException(
            status_code=422,
            detail={"message": str(e), "errors": e.errors, "warnings": e.warnings},
        )
    if isinstance(e, InputError):
        raise HTTPException(status_code=400, detail=str(e))
    if isinstance(e, NumericalError):
        raise HTTPException(status_code=422, detail=f"numerical failure: {e}")
    raise e


def _read_upload_text(upload: UploadFile) -> str:
    try:
        raw = upload.file.read()
        if not raw:
            raise ValueError("empty file")
    except Exception as e:
        raise HTTPException(status_code=400, detail=f"failed to read upload: {e}")

    for enc in ("utf-8", "utf-8-sig", "latin-1"):
        try:
            return raw.decode(enc)
        except UnicodeDecodeError:
            continue
    raise HTTPException(status_code=400, detail="could not decode upload")


def _rows(table: Any) -> list[dict[str, Any]]:
    return table.replace({np.nan: None}).to_dict(orient="records")


@router.get(
    "/health",
    tags=[TAG_SYSTEM],
    summary="Health check",
    description="Simple liveness probe for the API.",
)
def health() -> dict[str, str]:
    return {"status": "ok"}


@router.post(
    "/spectrum",
    tags=[TAG_SPECTRUM],
    summary="Spectral report of a pure step",
    description=(
        "Locates the zeros of a1 and, from stage 'winding' on, the winding profile of arg(a1 a2).\n\n"
        "Stage 'classify' (default) also validates the case tag and reports n.\n"
        "Set norming=true to add gamma_0 and eta_j from Jost integration (slower)."
    ),
    response_model=SpectrumReport,
)
def spectrum(
    params: StepParams,
    stage: str = Query(default="classify", pattern="^(zeros|winding|classify)$"),
    norming: bool = Query(default=False),
) -> SpectrumReport:
    try:
        ensure_valid_step_params(params, stage)
        bundle = assemble_spectrum_report(params, stage, norming=norming)  # type: ignore[arg-type]
    except (InputError, NumericalError) as e:
        _raise_http(e)
    return bundle.report


@router.post(
    "/scattering",
    tags=[TAG_SCATTERING],
    summary="Scattering data on a k grid",
    description=(
        "Returns a1, a2 and b at the requested points.\n"
        "- real k: all three (points within the puncture radius of +-B are rejected)\n"
        "- upper half-plane: a1 only; lower half-plane: a2 only\n"
    ),
)
def scattering(req: ScatteringRequest) -> dict[str, Any]:
    k = np.asarray(req.k, dtype=float) + 1j * np.asarray(req.im_k if req.im_k is not None else [0.0] * len(req.k))
    try:
        if req.source == "closed_form":
            sdata = step_spectral_functions(req.params, puncture=req.grid.puncture)
        else:
            datum = build_initial_datum(req.params, grid=req.grid)
            sdata = compute_scattering(datum, puncture=req.grid.puncture)
        table = scattering_table(sdata, k)
    except (InputError, NumericalError) as e:
        _raise_http(e)
    return {"source": req.source, "params": req.params.model_dump(), "rows": _rows(table)}


@router.post(
    "/scattering/upload",
    tags=[TAG_SCATTERING],
    summary="Scattering data of an uploaded datum",
    description=(
        "Uploads an initial-datum CSV ('#key=value' header, then x, re(q), im(q)) and returns\n"
        "a1, a2 and b on a uniform real grid [k_min, k_max]."
    ),
)
def scattering_upload(
    file: UploadFile = File(...),
    k_min: float = Query(default=-4.0),
    k_max: float = Query(default=4.0),
    points: int = Query(default=81, ge=2, le=2001),
) -> dict[str, Any]:
    if not file.filename:
        raise HTTPException(status_code=400, detail="missing filename")

    if not file.filename.lower().endswith(".csv"):
        raise HTTPException(status_code=400, detail="only .csv files are supported")

    if k_min >= k_max:
        raise HTTPException(status_code=400, detail="k_min must be below k_max")

    text = _read_upload_text(file)
    try:
        datum = parse_datum_csv(text)
        sdata = compute_scattering(datum)
        k = np.linspace(k_min, k_max, points)
        B = datum.background.effective_B
        if B != 0.0:
            k = k[np.min(np.abs(k[:, None] - np.array([B, -B])[None, :]), axis=1) > sdata.puncture * max(1.0, abs(B))]
        table = scattering_table(sdata, k)
    except (InputError, NumericalError) as e:
        _raise_http(e)
    except Exception as e:
        raise HTTPException(status_code=400, detail=f"could not parse datum: {e}")
    return {
        "filename": file.filename,
        "params": datum.background.model_dump(),
        "samples": int(datum.x.size),
        "rows": _rows(table),
    }


@router.post(
    "/asymptote",
    tags=[TAG_ASYMPTOTICS],
    summary="Leading asymptotic term",
    description=(
        "Classifies the ray xi, evaluates the leading term at x = 4 xi t and saves the run.\n\n"
        "Rays on a sector boundary and points where the periodic formula's denominator is\n"
        "within the margin of zero are rejected."
    ),
)
def asymptote(req: AsymptoteRequest) -> dict[str, Any]:
    try:
        config = RunConfig(
            command="asymptote",
            background=req.params,
            compare=CompareSpec(xi=req.xi, margin=req.margin),
            out_dir=default_base_dir(),
            fmt="csv",
        )
        result = run_command(config, xis=[req.xi], times=[req.t])
    except (InputError, NumericalError) as e:
        _raise_http(e)
    term = result.report["terms"][0]
    return {"run_id": result.run_id, "term": term, "artifacts": result.report["artifacts"]}


@router.get(
    "/runs/{run_id}",
    tags=[TAG_RUNS],
    summary="Fetch a run report",
    description="Returns the saved report JSON of a previous run (CLI or HTTP).",
)
def get_run(run_id: str) -> dict[str, Any]:
    try:
        return read_report_json(run_id)
    except FileNotFoundError:
        raise HTTPException(status_code=404, detail="run_id not found")
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"failed to read report: {e}")


@router.get(
    "/runs/{run_id}/table.csv",
    tags=[TAG_RUNS],
    summary="Download the run table",
    description="Downloads the CSV table of a previous run.",
)
def download_table_csv(run_id: str) -> FileResponse:
    try:
        path = table_csv_path(run_id)
        return FileResponse(
            path=str(path),
            media_type="text/csv",
            filename=f"{run_id}.csv",
        )
    except FileNotFoundError:
        raise HTTPException(status_code=404, detail="run_id not found")
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"failed to read csv: {e}")
