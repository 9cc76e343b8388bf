from __future__ import annotations

import io
import json
import os
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from src.schemas import StepParams
from src.scattering.datum import DatumError, InitialDatum, datum_from_samples

OUTPUT_ENV = "NNLS_SPECTRA_OUTPUT_DIR"


def default_base_dir() -> str:
    return os.getenv(OUTPUT_ENV) or "outputs"


def ensure_output_dirs(base_dir: str | None = None) -> dict[str, Path]:
    """
    Create runtime output directories if they don't exist.
    """
    base = Path(base_dir or default_base_dir())
    reports_dir = base / "reports"
    tables_dir = base / "tables"
    snapshots_dir = base / "snapshots"

    reports_dir.mkdir(parents=True, exist_ok=True)
    tables_dir.mkdir(parents=True, exist_ok=True)
    snapshots_dir.mkdir(parents=True, exist_ok=True)

    return {
        "base": base,
        "reports": reports_dir,
        "tables": tables_dir,
        "snapshots": snapshots_dir,
    }


def write_report_json(report: dict[str, Any], run_id: str, *, base_dir: str | None = None) -> Path:
    paths = ensure_output_dirs(base_dir)
    out_path = paths["reports"] / f"{run_id}.json"
    with out_path.open("w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, ensure_ascii=False)
    return out_path


def write_table_csv(df: pd.DataFrame, run_id: str, *, base_dir: str | None = None) -> Path:
    paths = ensure_output_dirs(base_dir)
    out_path = paths["tables"] / f"{run_id}.csv"
    # repr precision so tables re-read bit-exact
    df.to_csv(out_path, index=False, float_format="%.17g")
    return out_path


def write_snapshots_csv(frames: list[pd.DataFrame], run_id: str, *, base_dir: str | None = None) -> Path:
    paths = ensure_output_dirs(base_dir)
    out_path = paths["snapshots"] / f"{run_id}.csv"
    pd.concat(frames, ignore_index=True).to_csv(out_path, index=False, float_format="%.17g")
    return out_path


def read_report_json(run_id: str, *, base_dir: str | None = None) -> dict[str, Any]:
    paths = ensure_output_dirs(base_dir)
    report_path = paths["reports"] / f"{run_id}.json"
    if not report_path.exists():
        raise FileNotFoundError(f"Report not found for run_id={run_id}")
    with report_path.open("r", encoding="utf-8") as f:
        return json.load(f)


def table_csv_path(run_id: str, *, base_dir: str | None = None) -> Path:
    paths = ensure_output_dirs(base_dir)
    p = paths["tables"] / f"{run_id}.csv"
    if not p.exists():
        raise FileNotFoundError(f"Table CSV not found for run_id={run_id}")
    return p


def read_table_csv(run_id: str, *, base_dir: str | None = None) -> pd.DataFrame:
    return pd.read_csv(table_csv_path(run_id, base_dir=base_dir), float_precision="round_trip")


# initial datum files: '#key=value' header, then x, re(q), im(q)


def datum_to_csv_text(datum: InitialDatum) -> str:
    bg = datum.background
    header = {
        "A": bg.A,
        "B": bg.B,
        "R": bg.R,
        "left_tail_bound": datum.left_tail_bound,
        "right_tail_bound": datum.right_tail_bound,
        "breakpoints": ";".join(repr(float(b)) for b in datum.breakpoints),
        "sharp_edge": "1" if datum.sharp_edge else "0",
    }
    buf = io.StringIO()
    for key, value in header.items():
        buf.write(f"#{key}={value if isinstance(value, str) else repr(float(value))}\n")
    frame = pd.DataFrame({"x": datum.x, "re(q)": datum.q.real, "im(q)": datum.q.imag})
    frame.to_csv(buf, index=False, float_format="%.17g")
    return buf.getvalue()


def write_datum_csv(datum: InitialDatum, path: str | Path) -> Path:
    out_path = Path(path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(datum_to_csv_text(datum), encoding="utf-8")
    return out_path


def parse_datum_csv(text: str) -> InitialDatum:
    header: dict[str, str] = {}
    body: list[str] = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            header[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    missing = {"A", "B", "R", "left_tail_bound", "right_tail_bound"} - header.keys()
    if missing:
        raise DatumError(f"datum header is missing {sorted(missing)}")
    frame = pd.read_csv(io.StringIO("\n".join(body)), float_precision="round_trip")
    for col in ("x", "re(q)", "im(q)"):
        if col not in frame.columns:
            raise DatumError(f"datum CSV has no column '{col}'")
    params = StepParams(A=float(header["A"]), B=float(header["B"]), R=float(header["R"]))
    q = frame["re(q)"].to_numpy(dtype=float) + 1j * frame["im(q)"].to_numpy(dtype=float)
    breakpoints = tuple(float(b) for b in header.get("breakpoints", "").split(";") if b)
    return datum_from_samples(
        frame["x"].to_numpy(dtype=float),
        q.astype(np.complex128),
        params,
        float(header["left_tail_bound"]),
        float(header["right_tail_bound"]),
        breakpoints=breakpoints,
        sharp_edge=header.get("sharp_edge", "0") == "1",
    )


def read_datum_csv(path: str | Path) -> InitialDatum:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Datum CSV not found: {p}")
    return parse_datum_csv(p.read_text(encoding="utf-8"))
