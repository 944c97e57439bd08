"""Command-line entry point: run a simulation, serve the live API, or
print deployment plans.

    storesense run <config> [--seed N] [--duration S] [--trace PATH]
                            [--silence-node ID] [--out DIR]
    storesense serve <config> [--port P] [--static] [--speed X]
    storesense plan [--sultan-center | --parking N --traffic N --coordinators N]
                    [--battery-wh X] [--hops N] [--years N] [--csv PATH]
"""

from __future__ import annotations

import argparse
import csv
import sys
import threading
import time
from dataclasses import replace
from pathlib import Path

from .datastore import Datastore
from .planning import (
    DEFAULT_BATTERY_WH,
    PowerBudget,
    DeploymentSpec,
    battery_life_hours,
    cost_estimate,
    node_average_power,
    sultan_center_sizing,
)
from .scenario import MetricsReport, ScenarioError, ScenarioRun, load_scenario
from .simcore import US_PER_S

FIXTURES = Path(__file__).parent / "fixtures"


def _write_csv(path: Path, rows: list[list[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        csv.writer(handle, lineterminator="\n").writerows(rows)


def _print_run_summary(report: MetricsReport) -> None:
    print(f"seed {report.seed}, {report.duration_s:g} s simulated")
    print(
        f"frames: {report.frames_sent} sent, {report.frames_delivered} delivered, "
        f"{report.frames_lost} lost; medium airtime {report.medium_airtime_us} us"
    )
    for store in report.stores:
        print(
            f"store {store.store_id}: {store.epochs_closed} epochs "
            f"({store.closed_complete} complete, {store.closed_by_timeout} timeout), "
            f"accuracy {store.accuracy:.4f}, "
            f"update latency mean {store.mean_latency_ms:.0f} ms / p95 {store.p95_latency_ms:.0f} ms"
        )


def cmd_run(args: argparse.Namespace) -> int:
    config = load_scenario(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.duration is not None:
        config = replace(config, duration_s=args.duration)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_handle = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        run = ScenarioRun(
            config,
            silenced=set(args.silence_node or []),
            trace=trace_handle,
        )
        report = run.run()
    finally:
        if trace_handle:
            trace_handle.close()
    _write_csv(out_dir / "metrics.csv", report.store_csv_rows())
    _write_csv(out_dir / "nodes.csv", report.node_csv_rows())
    _print_run_summary(report)
    print(f"wrote {out_dir / 'metrics.csv'} and {out_dir / 'nodes.csv'}")
    return 0


class _LiveSimulation(threading.Thread):
    """Advance the simulation in step with the wall clock."""

    def __init__(self, run: ScenarioRun, speed: float):
        super().__init__(name="live-simulation", daemon=True)
        self.run_state = run
        self.speed = speed
        self._halt = threading.Event()

    def run(self) -> None:
        started = time.monotonic()
        while not self._halt.is_set():
            target_us = int((time.monotonic() - started) * self.speed * US_PER_S)
            self.run_state.step(target_us)
            if target_us >= self.run_state.end_us:
                break
            self._halt.wait(0.1)

    def stop(self) -> None:
        self._halt.set()


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import ScoreWeights, create_app

    config = load_scenario(args.config)
    port = args.port if args.port is not None else config.api_port
    weights = ScoreWeights(*config.recommend_weights)
    if args.static:
        store = Datastore.load(config.inventory) if config.inventory else Datastore()
        app = create_app(store, weights)
        sim_thread = None
    else:
        run = ScenarioRun(config)
        app = create_app(run.datastore, weights)
        sim_thread = _LiveSimulation(run, speed=args.speed)
        sim_thread.start()
    try:
        uvicorn.run(app, host=args.host, port=port, log_level="warning")
    finally:
        if sim_thread is not None:
            sim_thread.stop()
            sim_thread.join(timeout=2.0)
    return 0


def _plan_spec(args: argparse.Namespace) -> DeploymentSpec:
    if args.sultan_center:
        spec = sultan_center_sizing()
        if args.years != 1:
            spec = replace(spec, maintenance_years=args.years)
        return spec
    if args.parking is None or args.traffic is None:
        raise SystemExit("plan: give --sultan-center, or --parking and --traffic counts")
    return DeploymentSpec(
        parking_slots=args.parking,
        traffic_nodes=args.traffic,
        coordinators=args.coordinators,
        maintenance_years=args.years,
    )


def cmd_plan(args: argparse.Namespace) -> int:
    spec = _plan_spec(args)
    sheet = cost_estimate(spec)
    budget = PowerBudget()
    average_mw = node_average_power(budget.node_profile, args.hops)
    print(
        f"deployment: {spec.parking_slots} parking + {spec.traffic_nodes} traffic nodes, "
        f"{spec.coordinators} coordinators, {spec.radio_modules} radio modules"
    )
    print()
    print(sheet.format_table())
    print()
    print(
        f"node power: {budget.node_active_mw:g} mW active, {budget.node_idle_mw:g} mW idle, "
        f"{average_mw:.2f} mW average at {args.hops} hop(s)"
    )
    print(f"coordinator power: {budget.coordinator_mw:g} mW (always active)")
    hours = battery_life_hours(args.battery_wh, average_mw)
    print(f"battery life: {args.battery_wh:g} Wh / {average_mw:.2f} mW = {hours:.2f} h")
    if args.csv:
        _write_csv(Path(args.csv), sheet.to_csv_rows())
        print(f"wrote {args.csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="storesense", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario and write metrics CSVs")
    run_p.add_argument("config", help="scenario YAML path")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--duration", type=float, default=None, help="simulated seconds")
    run_p.add_argument("--trace", default=None, help="write the event trace TSV here")
    run_p.add_argument(
        "--silence-node", type=int, action="append", default=None, help="mute a node's radio"
    )
    run_p.add_argument("--out", default=".", help="output directory for CSVs")
    run_p.set_defaults(func=cmd_run)

    serve_p = sub.add_parser("serve", help="serve the HTTP API, optionally over a live simulation")
    serve_p.add_argument("config", help="scenario YAML path")
    serve_p.add_argument("--port", type=int, default=None)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--static", action="store_true", help="serve the fixture only, no simulation")
    serve_p.add_argument("--speed", type=float, default=1.0, help="simulated seconds per wall second")
    serve_p.set_defaults(func=cmd_serve)

    plan_p = sub.add_parser("plan", help="print the deployment cost sheet and power budget")
    plan_p.add_argument("--sultan-center", action="store_true", help="use the reference branch sizing")
    plan_p.add_argument("--parking", type=int, default=None)
    plan_p.add_argument("--traffic", type=int, default=None)
    plan_p.add_argument("--coordinators", type=int, default=0)
    plan_p.add_argument("--battery-wh", type=float, default=DEFAULT_BATTERY_WH)
    plan_p.add_argument("--hops", type=int, default=1)
    plan_p.add_argument("--years", type=int, default=1)
    plan_p.add_argument("--csv", default=None, help="also write the cost sheet CSV here")
    plan_p.set_defaults(func=cmd_plan)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
