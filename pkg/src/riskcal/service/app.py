"""FastAPI application exposing calibration, simulation, validation, and
reporting.

Result-bearing endpoints return canonical JSON built server-side, so a
response body is a pure function of the request — clients (including the
bundled CLI) can write the bytes straight to disk and byte-compare runs.
Error taxonomy: ConfigError -> 400, DataError -> 422, InvariantError -> 500,
all with {"detail": {"kind", "message"}}.
"""

from __future__ import annotations

from dataclasses import replace

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from ..errors import ConfigError, DataError, InvariantError, RiskcalError
from ..io import canonical_json, dump_loss_table, histogram_csv, parse_loss_csv, summary_doc
from ..methods import METHODS, run_calibration_doc
from ..montecarlo import monte_carlo_validate
from ..scenarios import generate_synthetic, scenario_from_doc
from .models import CalibrateRequest, ReportRequest, SimulateRequest, ValidateRequest

_STATUS = ((ConfigError, 400), (DataError, 422), (InvariantError, 500))


def _canonical_response(doc: dict) -> Response:
    return Response(content=canonical_json(doc) + "\n", media_type="application/json")


def create_app() -> FastAPI:
    app = FastAPI(title="riskcal", version="0.1.0",
                  description="Risk-controlling candidate selection via multiple hypothesis testing.")

    @app.exception_handler(RiskcalError)
    def _domain_error(request: Request, exc: RiskcalError) -> JSONResponse:
        status = 500
        for kind, code in _STATUS:
            if isinstance(exc, kind):
                status = code
                break
        return JSONResponse(
            status_code=status,
            content={"detail": {"kind": type(exc).__name__, "message": str(exc)}},
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/methods")
    def methods() -> Response:
        return _canonical_response(
            {"methods": {name: info.to_doc() for name, info in METHODS.items()}}
        )

    @app.post("/calibrate")
    def calibrate(req: CalibrateRequest) -> Response:
        result = run_calibration_doc(req.config, seed_override=req.seed)
        return _canonical_response(result.to_doc())

    @app.post("/simulate")
    def simulate(req: SimulateRequest) -> Response:
        spec = scenario_from_doc(req.scenario)
        if req.seed is not None:
            spec = replace(spec, seed=req.seed)
        candidates, table, truth = generate_synthetic(spec)
        return _canonical_response({
            "csv": dump_loss_table(candidates, table),
            "truth": truth.to_doc(quantile_levels=tuple(req.quantile_levels)),
            "scenario": spec.to_doc(),
        })

    @app.post("/validate")
    def validate(req: ValidateRequest) -> Response:
        report = monte_carlo_validate(req.config, trials=req.trials, jobs=req.jobs, seed=req.seed)
        return _canonical_response(report.to_doc())

    @app.post("/report")
    def report(req: ReportRequest) -> Response:
        candidates, table = parse_loss_csv(req.input_csv)
        if req.format == "json":
            content = canonical_json(summary_doc(candidates, table)) + "\n"
        elif req.format == "csv-summary":
            content = histogram_csv(candidates, table, bins=req.bins)
        else:
            raise ConfigError(f"unknown report format {req.format!r}")
        return _canonical_response({"format": req.format, "content": content})

    return app


app = create_app()
