"""Command-line pipeline: synthesize -> ingest -> run / serve / report."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from ..sim import SimConfig, load_scenario, synthesize_history
from ..statedb import StateDb, cluster, ingest_iter, load_alarm_log
from . import reports
from .runner import campaign_savings, run_scenario


def _config(seed: int | None, config_path: str | None) -> SimConfig:
    kwargs = {}
    if config_path:
        with open(config_path) as f:
            kwargs = json.load(f)
    if seed is not None:
        kwargs["rng_seed"] = seed
    known = {"rng_seed", "n_units", "dt_min", "initial_plant_flow", "initial_season"}
    unknown = set(kwargs) - known
    if unknown:
        raise click.ClickException(f"unsupported config keys: {sorted(unknown)}")
    return SimConfig(**kwargs)


@click.group()
def main():
    """Digital twin of a three-unit run-of-the-river hydro plant."""


@main.command()
@click.option("--days", default=200, show_default=True)
@click.option("--seed", type=int, default=None, help="Override the RNG seed.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("-o", "--telemetry", default="history.csv", show_default=True)
@click.option("--alarms", default="alarms.csv", show_default=True)
def synthesize(days, seed, config_path, telemetry, alarms):
    """Generate the synthetic archive (telemetry + alarm log)."""
    info = synthesize_history(
        _config(seed, config_path), days=days,
        telemetry_path=telemetry, alarm_path=alarms,
    )
    click.echo(f"wrote {info['ticks']} rows to {telemetry}; "
               f"{info['alarm_rows']} alarm rows to {alarms}")


@main.command("ingest")
@click.argument("telemetry", type=click.Path(exists=True))
@click.option("--alarms", type=click.Path(exists=True), default=None)
@click.option("-o", "--output", default="statedb.csv", show_default=True)
def ingest_cmd(telemetry, alarms, output):
    """Mine steady-state clusters from archived telemetry."""
    alarm_rows = load_alarm_log(alarms) if alarms else None
    diags: list[str] = []
    db = cluster(
        ingest_iter(telemetry, diagnostics=diags),
        alarm_rows=alarm_rows,
        source=str(telemetry),
    )
    db.save(output)
    for d in diags[:20]:
        click.echo(f"warning: {d}", err=True)
    if len(diags) > 20:
        click.echo(f"warning: {len(diags) - 20} further bad rows", err=True)
    click.echo(f"wrote {len(db)} clusters to {output}")


@main.command("run")
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--minutes", required=True, type=float)
@click.option("--db", "db_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--agents/--no-agents", default=True, show_default=True)
@click.option("-o", "--outdir", default="run-out", show_default=True)
def run_cmd(scenario, minutes, db_path, seed, config_path, agents, outdir):
    """Batch-run a scenario with zero-bias benefit accounting."""
    events = load_scenario(scenario)
    db = StateDb.load(db_path) if db_path else None
    report = run_scenario(
        _config(seed, config_path), events, minutes, db=db,
        with_agents=agents, scenario_id=Path(scenario).stem,
    )
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    reports.write_run_csv(report, out / "run.csv")
    summary = {
        "scenario": report.scenario_id,
        "ticks": report.n_ticks,
        "mwh_with_agents": round(report.mwh_with_agents, 4),
        "mwh_baseline": round(report.mwh_baseline, 4),
        "benefit_mwh": round(report.benefit_mwh, 4),
        "per_unit_benefit_mwh": [round(b, 4) for b in report.per_unit_benefit_mwh],
        "coal_tons_offset": round(report.coal_tons_offset, 3),
        "co2_tons_offset": round(report.co2_tons_offset, 3),
        "emissions_note": report.emissions_note,
        "alarm_event_rows": len(report.alarm_events),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    click.echo(json.dumps(summary, indent=2))


@main.command("report")
@click.option("--db", "db_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("-o", "--outdir", default="figures", show_default=True)
def report_cmd(db_path, seed, config_path, outdir):
    """Emit the plottable analysis CSVs from a cluster database."""
    cfg = _config(seed, config_path)
    db = StateDb.load(db_path)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    n = reports.write_load_vs_flow_csv(db, out / "load_vs_flow.csv")
    gaps = reports.hidden_capacity_gaps(db)
    trajectory = reports.write_redistribution_csv(cfg, out / "redistribution.csv")
    cmp = reports.stator_event_comparison(cfg)
    reports.write_event_response_csv(cmp, out / "event_response.csv")
    peak = max(t[1] for t in trajectory) - trajectory[0][1]
    click.echo(f"load_vs_flow.csv: {n} clusters near 34 ft")
    if gaps:
        g = gaps[0]
        click.echo(
            f"best hidden-capacity gap: {g.gap_mw:.3f} MW "
            f"(unit {g.unit} at {g.q_center:.0f} CFS, {g.n_clusters} clusters)"
        )
    click.echo(f"redistribution.csv: peak gain {peak:.3f} MW over equal split")
    click.echo(
        f"event_response.csv: agent saves {cmp.saving_mwh:.3f} MWh vs operator step; "
        f"294-event campaign at the calibrated 0.55 MWh/event totals "
        f"{campaign_savings():.1f} MWh"
    )


@main.command("serve")
@click.option("--db", "db_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8171, show_default=True)
@click.option("--tokens", "tokens_path", type=click.Path(exists=True), default=None,
              help="JSON file mapping token -> role.")
@click.option("--tick-interval", default=0.25, show_default=True,
              help="Wall seconds per simulated minute.")
@click.option("--agents/--no-agents", default=True, show_default=True)
def serve_cmd(db_path, seed, config_path, host, port, tokens_path, tick_interval, agents):
    """Serve the live plant over HTTP for the SCADA console."""
    from .service import ServiceConfig, serve

    db = StateDb.load(db_path) if db_path else None
    service_config = ServiceConfig(tick_interval_s=tick_interval)
    if tokens_path:
        with open(tokens_path) as f:
            service_config.tokens = json.load(f)
    click.echo(f"gateway on http://{host}:{port} (roles: {sorted(set(service_config.tokens.values()))})")
    serve(
        _config(seed, config_path), db=db, service_config=service_config,
        host=host, port=port, with_agents=agents,
    )


if __name__ == "__main__":
    sys.exit(main())
