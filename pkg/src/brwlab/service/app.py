"""FastAPI service wrapping the laboratory core.

Quick numeric endpoints (calibration, screening, pair construction) respond
instantly; simulation endpoints run the replica farm synchronously and
return CSV text plus a summary report, sized for desk-scale parameters.
"""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, calibration, experiments, offspring
from ..genealogy import BudgetExceeded
from ..competition import WindowOutOfRange
from . import schemas

app = FastAPI(
    title="brwlab",
    version=__version__,
    description="Branching random walk laboratory: calibration, simulation, competition",
)

_CLIENT_ERRORS = (
    offspring.SpecError,
    calibration.NoTangentPoint,
    calibration.NonConvergence,
    calibration.Infeasible,
    experiments.InsufficientData,
    experiments.InsufficientTail,
    experiments.HypothesisViolation,
    BudgetExceeded,
    WindowOutOfRange,
    ValueError,
)


async def _domain_error_handler(request: Request, exc: Exception):
    return JSONResponse(
        status_code=422,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


for _exc_class in _CLIENT_ERRORS:
    app.add_exception_handler(_exc_class, _domain_error_handler)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/calibrate", response_model=schemas.CalibrateResponse)
def calibrate(req: schemas.CalibrateRequest) -> schemas.CalibrateResponse:
    spec = req.spec.to_law()
    exists, limit = calibration.theta_exists(spec)
    if not exists:
        return schemas.CalibrateResponse(exists=False, limit=limit)
    calib = calibration.solve_theta(spec, req.tol)
    lo, hi = calibration.fluct_bounds(calib)
    return schemas.CalibrateResponse(
        exists=True,
        limit=limit,
        theta_o=calib.theta_o,
        kappa_at=calib.kappa_at,
        kappa_prime_at=calib.kappa_prime_at,
        kappa_double_prime_at=calib.kappa_double_prime_at,
        residual=calib.residual,
        speed=calib.speed,
        fluct_liminf=lo,
        fluct_limsup=hi,
    )


@app.post("/assumptions", response_model=schemas.AssumptionsResponse)
def assumptions(req: schemas.AssumptionsRequest) -> schemas.AssumptionsResponse:
    report = calibration.check_assumptions(req.spec.to_law())
    return schemas.AssumptionsResponse(
        a1_ok=report.a1_ok,
        a2_ok=report.a2_ok,
        a3_ok=report.a3_ok,
        diagnostics=report.diagnostics,
        w_moment_note=report.w_moment_note,
    )


@app.post("/construct-pair", response_model=schemas.PairResponse)
def construct_pair(req: schemas.PairRequest) -> schemas.PairResponse:
    pair = calibration.construct_noncoexistence_pair(req.blue_count_mean, req.max_reach)
    return schemas.PairResponse(
        red=schemas.SpecModel.from_law(pair.red),
        blue=schemas.SpecModel.from_law(pair.blue),
        theta_r=pair.theta_r,
        theta_b=pair.theta_b,
        speed=pair.speed,
        gap_constant_2c=pair.gap_constant_2c,
        red_step_reach=pair.red_step_reach,
    )


def _engine_config(spec, opts: schemas.EngineOptions, companion=None):
    return experiments.engine_config(
        spec,
        mode=opts.mode,
        window_width=opts.window_width,
        count_cap=opts.count_cap,
        companion=companion,
    )


@app.post("/simulate", response_model=schemas.SimulateResponse)
def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
    spec = req.spec.to_law()
    config = _engine_config(spec, req.engine)
    records = []
    for r in range(req.replicas):
        rng = experiments.replica_rng(req.master_seed, r)
        records.append(
            experiments.simulate_trajectory(
                spec, req.horizon, config, rng, req.start, req.with_totals
            )
        )
    return schemas.SimulateResponse(
        csv=experiments.trajectory_csv(records),
        final_max=[int(rec.max_pos[-1]) for rec in records],
        saturated=[bool(rec.saturated[-1]) for rec in records],
        manifest=experiments.run_manifest(req.model_dump(), req.master_seed),
    )


@app.post("/arena", response_model=schemas.ArenaResponse)
def arena(req: schemas.ArenaRequest) -> schemas.ArenaResponse:
    red = req.red_spec.to_law()
    blue = req.blue_spec.to_law()
    config = _engine_config(red, req.engine, companion=blue)
    collect: list = []
    report: dict | None = None

    if req.analysis == "coexistence":
        rep = experiments.run_coexistence(
            red, blue, req.horizon, req.replicas, req.master_seed, config,
            tie_break=req.tie_break, red_start=req.red_start,
            blue_start=req.blue_start, count_threshold=req.count_threshold,
            z_grid=req.z_grid, c1=req.c1, c2=req.c2, collect=collect,
        )
        report = rep.to_dict()
    elif req.analysis == "noncoexistence":
        rep = experiments.run_noncoexistence(
            red, blue, req.horizon, req.replicas, req.master_seed, config,
            tie_break=req.tie_break, red_start=req.red_start,
            blue_start=req.blue_start, n0=req.n0,
            hole_window=req.hole_window, collect=collect,
        )
        report = rep.to_dict()
    else:
        for r in range(req.replicas):
            rngs = experiments.arena_rngs(req.master_seed, r)
            rec, _ = experiments.run_arena_replica(
                red, blue, req.horizon, config, rngs, req.tie_break,
                req.red_start, req.blue_start, req.hole_window,
            )
            collect.append(rec)

    kept = collect[: req.record_replicas]
    return schemas.ArenaResponse(
        csv=experiments.arena_csv(kept) if kept else None,
        report=report,
        manifest=experiments.run_manifest(req.model_dump(), req.master_seed),
    )


@app.post("/overshoot", response_model=schemas.OvershootResponse)
def overshoot(req: schemas.OvershootRequest) -> schemas.OvershootResponse:
    spec = req.spec.to_law()
    calib = calibration.solve_theta(spec)
    config = experiments.engine_config(
        spec, mode=req.engine.mode, window_width=req.engine.window_width,
        count_cap=req.engine.count_cap, calib=calib,
    )
    report = experiments.overshoot_scaling(
        spec, calib, req.z_grid, req.replicas, req.master_seed, config,
        generation_cap=req.generation_cap,
    )
    return schemas.OvershootResponse(
        report=report.to_dict(),
        csv=experiments.overshoot_csv(report),
        manifest=experiments.run_manifest(req.model_dump(), req.master_seed),
    )


@app.post("/tailfit", response_model=schemas.TailfitResponse)
def tailfit(req: schemas.TailfitRequest) -> schemas.TailfitResponse:
    spec = req.spec.to_law()
    calib = calibration.solve_theta(spec)
    config = experiments.engine_config(
        spec, mode=req.engine.mode, window_width=req.engine.window_width,
        count_cap=req.engine.count_cap, calib=calib,
    )
    report = experiments.tail_fit(
        spec, calib, req.n, req.replicas, req.master_seed, config,
        min_exceedances=req.min_exceedances,
    )
    return schemas.TailfitResponse(
        report=report.to_dict(),
        csv=experiments.tail_csv(report),
        manifest=experiments.run_manifest(req.model_dump(), req.master_seed),
    )


@app.post("/fluct", response_model=schemas.FluctResponse)
def fluct(req: schemas.FluctRequest) -> schemas.FluctResponse:
    spec = req.spec.to_law()
    calib = calibration.solve_theta(spec)
    config = experiments.engine_config(
        spec, mode=req.engine.mode, window_width=req.engine.window_width,
        count_cap=req.engine.count_cap, calib=calib,
    )
    report = experiments.fluctuation_windows(
        spec, calib, req.n_grid, req.replicas, req.master_seed, config,
        epsilon=req.epsilon,
    )
    return schemas.FluctResponse(
        report=report.to_dict(),
        csv=experiments.fluct_csv(report),
        manifest=experiments.run_manifest(req.model_dump(), req.master_seed),
    )


@app.post("/democracy", response_model=schemas.DemocracyResponse)
def democracy(req: schemas.DemocracyRequest) -> schemas.DemocracyResponse:
    spec = req.spec.to_law()
    report = experiments.run_democracy(
        spec, req.q, req.horizons, req.trees, req.master_seed,
        req.max_individuals,
    )
    return schemas.DemocracyResponse(
        report=report.to_dict(),
        csv=experiments.democracy_csv(report),
        manifest=experiments.run_manifest(req.model_dump(), req.master_seed),
    )
