"""FastAPI application exposing fusion, evaluation, synthesis, and oracle checks."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..formats import FormatError, IndexOutOfRange
from ..fusion import FusionError
from ..geometry import GeometryError
from . import handlers, schemas


def create_app() -> FastAPI:
    app = FastAPI(title="textfuse", version="0.1.0")

    @app.exception_handler(GeometryError)
    @app.exception_handler(FusionError)
    @app.exception_handler(FormatError)
    @app.exception_handler(IndexOutOfRange)
    async def _bad_input(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/fuse", response_model=schemas.FuseResponse)
    def fuse(req: schemas.FuseRequest) -> schemas.FuseResponse:
        return handlers.fuse(req)

    @app.post("/evaluate", response_model=schemas.EvalResponse)
    def evaluate(req: schemas.EvalRequest) -> schemas.EvalResponse:
        return handlers.evaluate(req)

    @app.post("/synthesize", response_model=schemas.SynthResponse)
    def synthesize(req: schemas.SynthRequest) -> schemas.SynthResponse:
        return handlers.synthesize(req)

    @app.post("/convert", response_model=schemas.ConvertResponse)
    def convert(req: schemas.ConvertRequest) -> schemas.ConvertResponse:
        return handlers.convert(req)

    @app.post("/oracle-check", response_model=schemas.OracleCheckResponse)
    def oracle_check(req: schemas.OracleCheckRequest) -> schemas.OracleCheckResponse:
        return handlers.oracle_check(req)

    return app


app = create_app()
