"""HTTP service exposing the library; the CLI is a thin client of it."""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..deformation import parse_deformation, variation_report
from ..dynamics import replicator_orbit
from ..errors import InputError, InternalCheckError
from ..geometry import geometry_at
from ..integral import asymptote_S2, closed_S2, entropy_integral, linear_entropy_volume_check, parse_region
from ..model import affine_model, parse_model
from ..verification import potential_residuals, run_all
from .schemas import (
    DeformReportRequest,
    GeomAtRequest,
    PotentialVerifyRequest,
    ReplicatorRunRequest,
    SweepS2Request,
    VerifyAllRequest,
    VolumeCheckRequest,
)

_POTENTIAL_TOLS = {
    "pde_residual": 1e-9,
    "path_residual": 1e-9,
    "round_trip_residual": 1e-10,
    "jacobian_residual": 1e-10,
}


def _point(model_n: int, point: list[float]) -> np.ndarray:
    x = np.asarray(point, dtype=float)
    if x.shape != (model_n,):
        raise InputError(f"point needs {model_n} coordinates, got {x.shape}")
    return x


def create_app() -> FastAPI:
    app = FastAPI(title="statsurf")

    @app.exception_handler(InputError)
    async def _input_error(request: Request, exc: InputError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(InternalCheckError)
    async def _internal_error(request: Request, exc: InternalCheckError):
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.post("/geom/at")
    def geom_at(req: GeomAtRequest) -> dict:
        model = parse_model(req.model)
        return geometry_at(model, _point(model.n, req.point)).to_dict()

    @app.post("/deform/report")
    def deform_report(req: DeformReportRequest) -> dict:
        model = parse_model(req.model)
        d = parse_deformation(req.deformation)
        return variation_report(model, _point(model.n, req.point), d, as_printed=req.as_printed).to_dict()

    @app.post("/replicator/run")
    def replicator_run(req: ReplicatorRunRequest) -> dict:
        model = parse_model(req.model)
        shift = req.shift
        if isinstance(shift, str) and shift != "auto":
            raise InputError(f"shift must be 'auto' or a number, got {shift!r}")
        orbit = replicator_orbit(model, _point(model.n, req.point), steps=req.steps, shift=shift)
        return {
            "shift": orbit.shift,
            "weights": orbit.weights.tolist(),
            "entropies": orbit.entropies.tolist(),
        }

    @app.post("/potential/verify")
    def potential_verify(req: PotentialVerifyRequest) -> dict:
        res = potential_residuals(req.m, req.seed)
        res["passed"] = all(res[key] <= tol for key, tol in _POTENTIAL_TOLS.items())
        return res

    @app.post("/sweep/s2")
    def sweep_s2(req: SweepS2Request) -> dict:
        if not (np.isfinite(req.c_min) and np.isfinite(req.c_max)):
            raise InputError("c bounds must be finite")
        if req.c_min < 0.0 or req.c_max < req.c_min:
            raise InputError("need 0 <= c_min <= c_max")
        ideal2 = affine_model(np.eye(2))
        rows = []
        for c in np.linspace(req.c_min, req.c_max, req.steps):
            c = float(c)
            closed = closed_S2(c)
            quad = entropy_integral(ideal2, [-c, -c], [c, c], tol=req.tol).value
            asym = asymptote_S2(c)
            ratio = closed / asym if abs(asym) > 1e-12 else None
            rows.append({
                "c": c, "closed": closed, "quadrature": quad,
                "asymptote": asym, "ratio": ratio,
            })
        return {"rows": rows}

    @app.post("/volume/check")
    def volume_check(req: VolumeCheckRequest) -> dict:
        region = parse_region(req.region)
        return linear_entropy_volume_check(region, samples=req.samples, seed=req.seed).to_dict()

    @app.post("/verify/all")
    def verify_all(req: VerifyAllRequest) -> dict:
        return run_all(req.seed).to_dict()

    return app
