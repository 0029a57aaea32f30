"""
FastAPI server for the AoI toolkit.
Read-only: closed-form and Algorithm 1 evaluations, and browsing of sweep result CSVs.
"""

import math
import os
import sys
from pathlib import Path
from typing import Dict, Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware

sys.path.insert(0, str(Path(__file__).parent.parent))

from api.cache import ResultsCache
from api.filters import SORT_FIELDS, filter_results, paginate_results, sort_results, summarize_results
from utils.access_protocols import grant_based_rho
from utils.aoi_analysis import DEFAULT_TAIL_TOL, analysis_row, baseline_aaoi, solve_threshold_pairs
from utils.errors import AoiToolkitError
from utils.scheduling import ThresholdPolicy

app = FastAPI(
    title="AoI Toolkit API",
    description="Read-only API for AAoI analysis and sweep results",
    version="1.0.0"
)

allowed_origins = os.getenv("CORS_ORIGINS", "http://localhost:3000,http://localhost:8080").split(",")

app.add_middleware(
    CORSMiddleware,
    allow_origins=[origin.strip() for origin in allowed_origins],
    allow_credentials=True,
    allow_methods=["GET"],
    allow_headers=["*"],
)

# Result file served by /api/results; AOI_RESULTS_CSV overrides the default
DEFAULT_RESULTS_CSV = os.getenv("AOI_RESULTS_CSV", "results/sweep.csv")
cache = ResultsCache(DEFAULT_RESULTS_CSV)


def json_number(value: float):
    """JSON has no infinity: non-finite numbers are sent as strings."""
    value = float(value)
    return value if math.isfinite(value) else str(value)


def json_row(row: Dict) -> Dict:
    return {key: json_number(value) if isinstance(value, float) else value for key, value in row.items()}


@app.get("/")
async def root():
    """Root endpoint with API info."""
    return {
        "name": "AoI Toolkit API",
        "version": "1.0.0",
        "endpoints": {
            "baseline": "/api/analysis/baseline",
            "alg1": "/api/analysis/alg1",
            "thresholds": "/api/analysis/thresholds",
            "results": "/api/results",
            "summary": "/api/results/summary"
        }
    }


@app.get("/api/analysis/baseline")
async def analysis_baseline(
    eps: float = Query(..., ge=0, le=1),
    rho: Optional[float] = Query(None, ge=0, le=1),
    n_users: Optional[int] = Query(None, ge=1),
    pilot_len: Optional[int] = Query(None, ge=1)
):
    """AAoI = 1/(eps*rho); rho may be given or derived from grant-based contention."""
    try:
        if rho is None:
            if n_users is None or pilot_len is None:
                raise HTTPException(status_code=400, detail="give rho, or n_users and pilot_len")
            rho = grant_based_rho(n_users, pilot_len, eps)
        aaoi = baseline_aaoi(eps, rho)
    except AoiToolkitError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return {"eps": eps, "rho": rho, "p_u": eps * rho, "aaoi": json_number(aaoi)}


@app.get("/api/analysis/alg1")
async def analysis_alg1(
    sleep_thr: int = Query(..., ge=0),
    force_thr: int = Query(..., ge=1),
    base_prob: float = Query(0.5, gt=0, lt=1),
    rho: float = Query(..., gt=0, le=1),
    tail_tol: float = Query(DEFAULT_TAIL_TOL, gt=0, lt=1)
):
    """Algorithm 1 row for one threshold pair."""
    try:
        row = analysis_row(ThresholdPolicy(sleep_thr, force_thr, base_prob), rho, tail_tol)
    except AoiToolkitError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return json_row(row)


@app.get("/api/analysis/thresholds")
async def analysis_thresholds(
    target_eps: float = Query(..., gt=0, le=1),
    theta_max: int = Query(..., ge=1, le=200),
    tol: float = Query(1e-6, gt=0),
    rho: Optional[float] = Query(None, gt=0, le=1)
):
    """Threshold pairs matching a target activation, with Algorithm 1 results when rho is given."""
    try:
        pairs = solve_threshold_pairs(target_eps, theta_max, tol=tol)
        if rho is None:
            rows = [
                {"sleep_thr": p.sleep_thr, "force_thr": p.force_thr,
                 "base_prob": p.base_prob, "activation": p.activation}
                for p in pairs
            ]
        else:
            rows = [json_row(analysis_row(p.policy(), rho)) for p in pairs]
    except AoiToolkitError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return {"target_eps": target_eps, "theta_max": theta_max, "pairs": rows, "total": len(rows)}


@app.get("/api/results")
async def list_results(
    limit: int = Query(50, ge=1, le=500),
    offset: int = Query(0, ge=0),
    protocol: Optional[str] = None,
    source: Optional[str] = None,
    variable: Optional[str] = None,
    policy: Optional[str] = None,
    errors_only: Optional[bool] = None,
    sort: str = Query("value", pattern=f"^({'|'.join(SORT_FIELDS)})$"),
    order: str = Query("asc", pattern="^(asc|desc)$")
):
    """Sweep result rows with filtering, sorting and pagination."""
    if not cache.exists():
        raise HTTPException(status_code=404, detail=f"Result file '{cache.csv_path}' not found")

    rows = filter_results(
        cache.get_rows(),
        protocol=protocol,
        source=source,
        variable=variable,
        policy=policy,
        errors_only=errors_only
    )
    rows = sort_results(rows, sort_by=sort, order=order)
    return {
        "results": paginate_results(rows, limit=limit, offset=offset),
        "total": len(rows),
        "limit": limit,
        "offset": offset
    }


@app.get("/api/results/summary")
async def results_summary():
    """Counts and best AAoI per protocol/source."""
    if not cache.exists():
        raise HTTPException(status_code=404, detail=f"Result file '{cache.csv_path}' not found")
    return summarize_results(cache.get_rows())


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
