# orbit_api.py
"""HTTP surface over the entropy, phase-diagram and matching operations."""

import logging
import os

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import ValidationError

from errors import ConvergenceError, DomainError, OrbitGapError
from experiment_cli import PHASE_HEADER, diag_boundary_report, entropy_record, phase_rows
from models import TOOL_VERSION, EntropyRequest
from orbit_matching import MatchConstraint, lcs_match, to_distance

# -----------------------------------------------------------------------------
# Initialize
# -----------------------------------------------------------------------------
app = FastAPI(title="Orbit Gap API")
log = logging.getLogger("orbitgap.api")
logging.basicConfig(level=os.environ.get("ORBITGAP_LOG_LEVEL", "INFO").upper())

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

MAX_PHASE_RESOLUTION = 256


# -----------------------------------------------------------------------------
# Error mapping
# -----------------------------------------------------------------------------
@app.exception_handler(DomainError)
async def domain_error(request: Request, exc: DomainError):
    return JSONResponse({"error": str(exc)}, status_code=400)


@app.exception_handler(ValidationError)
async def validation_error(request: Request, exc: ValidationError):
    return JSONResponse({"error": str(exc)}, status_code=400)


@app.exception_handler(ConvergenceError)
async def convergence_error(request: Request, exc: ConvergenceError):
    return JSONResponse({"error": str(exc), "residuals": exc.residuals}, status_code=422)


@app.exception_handler(OrbitGapError)
async def other_error(request: Request, exc: OrbitGapError):
    log.exception("request failed: %s", request.url.path)
    return JSONResponse({"error": str(exc)}, status_code=500)


# -----------------------------------------------------------------------------
# API Endpoints
# -----------------------------------------------------------------------------
@app.get("/")
async def api_root():
    return {"message": "orbit gap API active", "version": TOOL_VERSION}


@app.post("/api/entropy")
async def entropy_api(request: Request):
    data = await request.json()
    log.info("[POST /api/entropy] %s", data)
    try:
        params = EntropyRequest(**data)
    except (TypeError, ValidationError) as e:
        return JSONResponse({"error": f"pA and pB must lie in (0, 1): {e}"}, status_code=400)
    return entropy_record(params.pA, params.pB).model_dump()


@app.get("/api/phase-diagram")
async def phase_diagram_api(resolution: int = 64):
    if resolution > MAX_PHASE_RESOLUTION:
        return JSONResponse({"error": f"resolution is limited to {MAX_PHASE_RESOLUTION}"}, status_code=400)
    rows = phase_rows(resolution)
    return {"columns": list(PHASE_HEADER), "rows": [list(r) for r in rows]}


@app.get("/api/diag-boundary")
async def diag_boundary_api():
    return diag_boundary_report()


@app.post("/api/lcs")
async def lcs_api(
    x: UploadFile = File(...),
    y: UploadFile = File(...),
    n: int = Form(0),
    constraint: str = Form("all"),
    alpha: int = Form(0),
):
    xs = (await x.read()).rstrip(b"\n")
    ys = (await y.read()).rstrip(b"\n")
    if not xs or not ys:
        return JSONResponse({"error": "both files must contain symbols"}, status_code=400)
    builders = {
        "all": MatchConstraint.all,
        "diag": MatchConstraint.diagonal,
        "farthirds": MatchConstraint.far_thirds,
        "band": lambda: MatchConstraint.band(alpha),
        "offband": lambda: MatchConstraint.offband(alpha),
    }
    if constraint not in builders:
        return JSONResponse({"error": f"unknown constraint {constraint!r}"}, status_code=400)
    n = n or min(len(xs), len(ys))
    log.info("[POST /api/lcs] |x|=%d |y|=%d n=%d constraint=%s", len(xs), len(ys), n, constraint)
    result = lcs_match(list(xs), list(ys), n, builders[constraint]())
    return {
        "m": result.length,
        "witness": list(result.witness),
        "truncated": result.truncated,
        "n": n,
        "constraint": result.constraint.label(),
        "distance": to_distance(result.length),
    }


# -----------------------------------------------------------------------------
# Run manually (use `uvicorn orbit_api:app --port 8001`)
# -----------------------------------------------------------------------------
if __name__ == "__main__":
    import uvicorn

    port = int(os.environ.get("PORT", "8001"))
    uvicorn.run(app, host="127.0.0.1", port=port)
