"""brw-arena: thin command-line client of the laboratory service.

Every subcommand builds a request from its arguments (plus an optional
config file), sends it through the service API, and renders the response.
By default the app is driven in-process over an ASGI transport, so no
server needs to be running; ``--server URL`` targets a live instance
(started with ``brw-arena serve``) instead.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from .experiments import ExperimentConfig
from .offspring import load_spec, to_obj


def _request(server: str | None, path: str, body: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=body)

    # no server given: drive the app in-process over an ASGI transport
    import asyncio

    from .service import app

    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://brwlab.local", timeout=None
        ) as client:
            return await client.post(path, json=body)

    return asyncio.run(go())


def _post(args, path: str, body: dict) -> dict:
    resp = _request(args.server, path, body)
    if resp.status_code != 200:
        try:
            detail = resp.json()
        except ValueError:
            detail = resp.text
        print(f"error ({resp.status_code}): {json.dumps(detail)}", file=sys.stderr)
        raise SystemExit(1)
    return resp.json()


def _render(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def _emit(args, name: str, payload: dict) -> None:
    """Write CSV/report/manifest under --out, or print the report."""
    csv_part = payload.pop("csv", None)
    manifest = payload.pop("manifest", None)
    if getattr(args, "out", None):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if csv_part:
            (out / f"{name}.csv").write_text(csv_part, encoding="utf-8")
        (out / f"{name}_report.json").write_text(_render(payload) + "\n", encoding="utf-8")
        if manifest:
            (out / "manifest.json").write_text(_render(manifest) + "\n", encoding="utf-8")
        print(f"wrote {name} outputs to {out}")
    else:
        print(_render(payload))


def _spec_arg(path: str) -> dict:
    return to_obj(load_spec(path))


def _config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_file(args.config)
    else:
        cfg = ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg.master_seed = args.seed
    if getattr(args, "out", None) is None and cfg.out:
        args.out = cfg.out
    return cfg


def _engine_options(cfg: ExperimentConfig) -> dict:
    return {
        "mode": cfg.mode,
        "window_width": cfg.window_width,
        "count_cap": cfg.count_cap,
    }


def cmd_calibrate(args) -> None:
    body = {"spec": _spec_arg(args.spec_file), "tol": args.tol}
    _emit(args, "calibrate", _post(args, "/calibrate", body))


def cmd_check_assumptions(args) -> None:
    body = {"spec": _spec_arg(args.spec_file)}
    _emit(args, "assumptions", _post(args, "/assumptions", body))


def cmd_construct_pair(args) -> None:
    body = {"blue_count_mean": args.blue_mean, "max_reach": args.max_reach}
    payload = _post(args, "/construct-pair", body)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for color in ("red", "blue"):
            (out / f"{color}_spec.json").write_text(
                json.dumps(payload[color], sort_keys=True, separators=(",", ":")) + "\n",
                encoding="utf-8",
            )
    _emit(args, "pair", payload)


def cmd_simulate(args) -> None:
    cfg = _config(args)
    body = {
        "spec": cfg.red_spec,
        "horizon": cfg.horizon,
        "replicas": cfg.replicas,
        "master_seed": cfg.master_seed,
        "start": cfg.start,
        "engine": _engine_options(cfg),
        "with_totals": cfg.with_totals,
    }
    _emit(args, "simulate", _post(args, "/simulate", body))


def cmd_arena(args) -> None:
    cfg = _config(args)
    body = {
        "red_spec": cfg.red_spec,
        "blue_spec": cfg.blue_spec,
        "horizon": cfg.horizon,
        "replicas": cfg.replicas,
        "master_seed": cfg.master_seed,
        "tie_break": cfg.tie_break,
        "red_start": cfg.red_start,
        "blue_start": cfg.blue_start,
        "engine": _engine_options(cfg),
        "analysis": cfg.analysis,
        "record_replicas": cfg.record_replicas,
        "count_threshold": cfg.count_threshold,
        "n0": cfg.n0,
        "hole_window": cfg.hole_window,
        "z_grid": cfg.z_grid,
        "c1": cfg.c1,
        "c2": cfg.c2,
    }
    _emit(args, "arena", _post(args, "/arena", body))


def cmd_overshoot(args) -> None:
    cfg = _config(args)
    body = {
        "spec": cfg.red_spec,
        "z_grid": cfg.z_grid,
        "replicas": cfg.replicas,
        "master_seed": cfg.master_seed,
        "generation_cap": cfg.generation_cap,
        "engine": _engine_options(cfg),
    }
    _emit(args, "overshoot", _post(args, "/overshoot", body))


def cmd_tailfit(args) -> None:
    cfg = _config(args)
    body = {
        "spec": cfg.red_spec,
        "n": cfg.n,
        "replicas": cfg.replicas,
        "master_seed": cfg.master_seed,
        "min_exceedances": cfg.min_exceedances,
        "engine": _engine_options(cfg),
    }
    _emit(args, "tailfit", _post(args, "/tailfit", body))


def cmd_fluct(args) -> None:
    cfg = _config(args)
    body = {
        "spec": cfg.red_spec,
        "n_grid": cfg.n_grid,
        "replicas": cfg.replicas,
        "master_seed": cfg.master_seed,
        "epsilon": cfg.epsilon,
        "engine": _engine_options(cfg),
    }
    _emit(args, "fluct", _post(args, "/fluct", body))


def cmd_democracy(args) -> None:
    cfg = _config(args)
    body = {
        "spec": cfg.red_spec,
        "q": cfg.q,
        "horizons": cfg.horizons,
        "trees": cfg.trees,
        "master_seed": cfg.master_seed,
        "max_individuals": cfg.max_individuals,
    }
    _emit(args, "democracy", _post(args, "/democracy", body))


def cmd_serve(args) -> None:
    import uvicorn

    uvicorn.run("brwlab.service:app", host=args.host, port=args.port)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--server", default=None, help="base URL of a running service")
    p.add_argument("--out", default=None, help="directory for CSV/report/manifest output")


def _add_config(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    _add_common(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brw-arena",
        description="Branching random walk laboratory client",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="solve the tangent condition of a law")
    p.add_argument("spec_file")
    p.add_argument("--tol", type=float, default=1e-12)
    _add_common(p)
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("check-assumptions", help="screen a law against the standing assumptions")
    p.add_argument("spec_file")
    _add_common(p)
    p.set_defaults(fn=cmd_check_assumptions)

    p = sub.add_parser("construct-pair", help="build a matched-speed pair with a second-order gap")
    p.add_argument("--blue-mean", type=float, required=True, dest="blue_mean")
    p.add_argument("--max-reach", type=int, default=10_000, dest="max_reach")
    _add_common(p)
    p.set_defaults(fn=cmd_construct_pair)

    for name, fn, help_text in [
        ("simulate", cmd_simulate, "single-walk trajectories"),
        ("arena", cmd_arena, "two-color competition farm"),
        ("overshoot", cmd_overshoot, "overshoot-time scaling of the centered maximum"),
        ("tailfit", cmd_tailfit, "tail of the centered maximum at fixed generation"),
        ("fluct", cmd_fluct, "second-order fluctuation windows"),
        ("democracy", cmd_democracy, "extremal-descendant fractions over tree farms"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_config(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("serve", help="run the service with uvicorn")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    args.fn(args)


if __name__ == "__main__":
    main()
