from __future__ import annotations

import configparser
import logging
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from src.errors import InputError, ParameterValidationError
from src.pipeline.artifacts import default_base_dir
from src.schemas import RunConfig

logger = logging.getLogger(__name__)

SECTIONS = ("background", "grid", "time", "compare")

_LIST_KEYS = {("time", "snapshots")}
_INT_KEYS = {("grid", "points"), ("time", "N")}


class ConfigFileError(InputError):
    pass


def _coerce(section: str, key: str, raw: str) -> Any:
    raw = raw.strip()
    if (section, key) in _LIST_KEYS:
        return [float(v) for v in raw.replace(",", " ").split()]
    if raw.lower() in ("", "none"):
        return None
    if (section, key) in _INT_KEYS:
        return int(raw)
    return float(raw)


def read_config_sections(path: str | Path) -> dict[str, dict[str, Any]]:
    """[background], [grid], [time] and [compare] of an INI file as plain dicts."""
    p = Path(path)
    if not p.exists():
        raise ConfigFileError(f"config file not found: {p}")
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep A, B, R, L, N as written
    try:
        parser.read(p, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigFileError(f"unreadable config {p}: {exc}") from exc

    unknown = [s for s in parser.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigFileError(f"unknown config sections {unknown}; expected {list(SECTIONS)}")
    out: dict[str, dict[str, Any]] = {}
    for section in parser.sections():
        try:
            out[section] = {key: _coerce(section, key, value) for key, value in parser.items(section)}
        except ValueError as exc:
            raise ConfigFileError(f"[{section}] has a non-numeric value: {exc}") from exc
    return out


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    return merged


def build_run_config(
    command: str,
    *,
    config_path: str | Path | None = None,
    overrides: dict[str, dict[str, Any]] | None = None,
    out_dir: str | None = None,
    fmt: str | None = None,
    threads: int | None = None,
) -> RunConfig:
    """File values first, then command-line overrides (None means 'not given')."""
    sections = read_config_sections(config_path) if config_path else {}
    overrides = overrides or {}
    payload: dict[str, Any] = {"command": command}
    for section in SECTIONS:
        merged = _merge(sections.get(section, {}), overrides.get(section, {}))
        if merged:
            payload[section] = merged
    payload["out_dir"] = out_dir or default_base_dir()
    if fmt:
        payload["fmt"] = fmt
    if threads:
        payload["threads"] = threads
    try:
        config = RunConfig.model_validate(payload)
    except ValidationError as exc:
        errors = [{"path": ".".join(str(p) for p in err["loc"]), "message": err["msg"]} for err in exc.errors()]
        raise ParameterValidationError("run configuration does not parse", errors=errors) from exc
    logger.debug("run config: %s", config.model_dump())
    return config
