"""FastAPI application exposing the analysis runners.

Domain errors (bad configuration, capacity, degenerate probes) surface as
HTTP 422 with the error message; everything else is a plain 500.
"""

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from . import runners
from .schemas import (
    IsingRequest, IsingResponse, QfiRequest, QfiResponse, SweepRequest,
    SweepResponse, TimescalesRequest, TimescalesResponse, VerifyRequest,
    VerifyResponse,
)

app = FastAPI(
    title="dephmet",
    version=__version__,
    description=(
        "Quantum Fisher information, Cramer-Rao bounds, characteristic "
        "timescales, and estimation-error scaling exponents for N two-level "
        "systems under commuting many-body dephasing."
    ),
)


@app.exception_handler(ValueError)
async def _value_error_handler(request: Request, exc: ValueError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/qfi", response_model=QfiResponse)
def qfi(req: QfiRequest) -> QfiResponse:
    return runners.run_qfi(req)


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest) -> SweepResponse:
    return runners.run_sweep(req)


@app.post("/timescales", response_model=TimescalesResponse)
def timescales(req: TimescalesRequest) -> TimescalesResponse:
    return runners.run_timescales(req)


@app.post("/ising", response_model=IsingResponse)
def ising(req: IsingRequest) -> IsingResponse:
    return runners.run_ising(req)


@app.post("/verify", response_model=VerifyResponse)
def verify(req: VerifyRequest) -> VerifyResponse:
    return runners.run_verify(req)
