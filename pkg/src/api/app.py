from __future__ import annotations

import logging

from dotenv import load_dotenv
from fastapi import FastAPI
from fastapi.openapi.utils import get_openapi

from src.api.routes import router

load_dotenv()

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
)


def _custom_openapi(app: FastAPI) -> dict:
    if app.openapi_schema:
        return app.openapi_schema

    schema = get_openapi(
        title=app.title,
        version=app.version,
        description=app.description,
        routes=app.routes,
    )

    schema.setdefault("info", {})
    schema["info"]["x-equation"] = "i q_t + q_xx + 2 q^2 conj(q(-x, t)) = 0"

    app.openapi_schema = schema
    return app.openapi_schema


app = FastAPI(
    title="nnls-spectra",
    version="0.1.0",
    description=(
        "Scattering data, spectral classification and long-time asymptotics for the nonlocal NLS\n"
        "equation with step-like initial data.\n\n"
        "Every endpoint is deterministic; runs that produce tables are saved under the output root\n"
        "and can be fetched again by run_id."
    ),
    docs_url="/docs",
    redoc_url="/redoc",
    openapi_url="/openapi.json",
)

app.openapi = lambda: _custom_openapi(app)  # type: ignore[assignment]

app.include_router(
    router,
    tags=["nnls-spectra"],
)
