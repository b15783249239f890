"""Analysis artifacts: plottable CSVs and the scripted event comparison.

Three views of the optimization story: the load-vs-flow scatter that
exposes hidden blade capacity, the redistribution trajectory with its
peak-then-decline rollover, and the side-by-side trouble-response time
series of the flow-step rule against the fixed operator step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from ..agents import AgentParams, UnitAllocation, redistribution_trajectory
from ..physics import K_DEFAULT
from ..sim import ScenarioEvent, SimConfig, TruthEfficiencyModel, true_efficiency
from ..sim.operator import OperatorPolicy
from ..sim.plant import PlantSimulation
from .runner import PlantRunner, TickRecord


# -- load vs flow (hidden capacity) -------------------------------------------

@dataclass(frozen=True)
class CapacityGap:
    unit: int
    q_center: float
    h_center: float
    gap_mw: float
    median_eta: float
    best_eta: float
    best_bp: float
    median_bp: float
    n_clusters: int


def load_vs_flow_rows(db, h_center: float = 34.0, h_tol: float = 0.5, unit: int | None = None):
    """Cluster scatter near one head: multiple load points per flow."""
    rows = []
    for c in db.clusters:
        if abs(c.h_net - h_center) <= h_tol and (unit is None or c.unit == unit):
            rows.append((c.unit, c.q_sp, c.p, c.bp, c.eta, c.support))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def write_load_vs_flow_csv(db, path, h_center: float = 34.0, h_tol: float = 0.5) -> int:
    rows = load_vs_flow_rows(db, h_center, h_tol)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["unit", "q_sp_cfs", "p_mw", "bp_pct", "eta", "support"])
        for r in rows:
            w.writerow([r[0]] + [f"{v:.6g}" for v in r[1:5]] + [r[5]])
    return len(rows)


def hidden_capacity_gaps(
    db,
    h_center: float = 34.0,
    h_tol: float = 0.5,
    min_bin_count: int = 5,
) -> list[CapacityGap]:
    """Max-minus-median load at fixed flow, per unit and flow bin.

    Cluster efficiencies are compared at the bin's reference flow and
    head, which removes the within-bin power spread that comes from flow
    alone and leaves the blade-choice signal.
    """
    bins: dict[tuple[int, int], list] = {}
    for c in db.clusters:
        if abs(c.h_net - h_center) <= h_tol:
            qb = int(c.q_sp // db.q_bin_cfs)
            bins.setdefault((c.unit, qb), []).append(c)
    gaps = []
    for (unit, qb), clusters in bins.items():
        if len(clusters) < min_bin_count:
            continue
        etas = sorted(c.eta for c in clusters)
        median_eta = etas[len(etas) // 2]
        best = max(clusters, key=lambda c: c.eta)
        median_bp = sorted(c.bp for c in clusters)[len(clusters) // 2]
        q_center = (qb + 0.5) * db.q_bin_cfs
        gap = (best.eta - median_eta) * K_DEFAULT * q_center * h_center
        gaps.append(
            CapacityGap(
                unit=unit, q_center=q_center, h_center=h_center, gap_mw=gap,
                median_eta=median_eta, best_eta=best.eta, best_bp=best.bp,
                median_bp=median_bp, n_clusters=len(clusters),
            )
        )
    gaps.sort(key=lambda g: -g.gap_mw)
    return gaps


# -- redistribution trajectory -------------------------------------------------

def truth_estimator(config: SimConfig):
    """Efficiency estimator backed by the shipped truth surfaces.

    The gate tracks flow and the blade tracks the cam, so the blade
    actually run at flow q is the cam blade there plus the given
    deviation.
    """
    sim = PlantSimulation(config)
    models: dict[int, TruthEfficiencyModel] = {
        i + 1: sim.truth[i] for i in range(config.n_units)
    }

    def estimate(unit: int, h: float, q: float, bp_dev: float) -> float:
        m = models[unit]
        return true_efficiency(m, h, q, m.cam_blade(h, q) + bp_dev)

    return estimate


def default_redistribution_units(
    config: SimConfig, plant_flow: float = 24000.0, h_net: float = 34.0
) -> list[UnitAllocation]:
    per = plant_flow / config.n_units
    return [
        UnitAllocation(
            unit=i + 1, q=per, h_net=h_net, bp_dev=0.0,
            q_min=p.q_min_stable, q_max=p.q_max,
        )
        for i, p in enumerate(config.units)
    ]


def write_redistribution_csv(
    config: SimConfig,
    path,
    plant_flow: float = 24000.0,
    h_net: float = 34.0,
    step: float = 250.0,
    past_peak_moves: int = 8,
) -> list[tuple[dict[int, float], float]]:
    units = default_redistribution_units(config, plant_flow, h_net)
    trajectory = redistribution_trajectory(
        units, truth_estimator(config), step, past_peak_moves
    )
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        unit_ids = sorted(u.unit for u in units)
        w.writerow(["move"] + [f"q{u}_cfs" for u in unit_ids] + ["plant_p_mw"])
        for i, (flows, total) in enumerate(trajectory):
            w.writerow([i] + [f"{flows[u]:.1f}" for u in unit_ids] + [f"{total:.6f}"])
    return trajectory


# -- trouble response comparison ------------------------------------------------

@dataclass
class EventComparison:
    unit: int
    saving_mwh: float
    unit_energy_agent_mwh: float
    unit_energy_baseline_mwh: float
    agent_records: list[TickRecord]
    baseline_records: list[TickRecord]


def stator_event_comparison(
    config: SimConfig | None = None,
    unit: int = 1,
    forcing_min: float = 45.0,
    at_minute: float = 10.0,
    duration_min: float = 160.0,
    operator_clear_margin_min: float = 5.0,
    agent_params: AgentParams | None = None,
) -> EventComparison:
    """Same scripted stator-HI event under both response policies.

    Baseline: the operator takes a fixed 5 MW step off the unit and
    restores it once the alarm has stayed clear for the margin. Agent:
    the 500 CFS per minute rule with gradual automatic restoration. The
    affected unit's generation over the window is compared directly.
    """
    cfg = config or SimConfig(rng_seed=77)
    events = [ScenarioEvent(at_minute, "force_stator_hot", unit, forcing_min)]
    op_policy = OperatorPolicy(
        corps_schedule=False,
        split_exploration=False,
        blade_exploration=False,
        eject_policy=False,
        stator_response=True,
        restore_clear_min=operator_clear_margin_min,
    )
    n_ticks = int(round(duration_min / cfg.dt_min))
    baseline = PlantRunner(
        cfg, with_agents=False, with_shadow=False, events=list(events),
        operator_policy=op_policy,
    ).run(n_ticks)
    agent = PlantRunner(
        cfg, with_agents=True, with_shadow=False, events=list(events),
        agent_params=agent_params or AgentParams(enable_redistribution=False),
    ).run(n_ticks)
    i = unit - 1
    dt_h = cfg.dt_min / 60.0
    e_base = sum(r.row.units[i].p for r in baseline) * dt_h
    e_agent = sum(r.row.units[i].p for r in agent) * dt_h
    return EventComparison(
        unit=unit,
        saving_mwh=e_agent - e_base,
        unit_energy_agent_mwh=e_agent,
        unit_energy_baseline_mwh=e_base,
        agent_records=agent,
        baseline_records=baseline,
    )


def write_event_response_csv(cmp: EventComparison, path) -> None:
    i = cmp.unit - 1
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["minute", "p_operator_mw", "p_agent_mw", "temp_operator_f",
             "temp_agent_f", "agent_q_bias_cfs"]
        )
        for rb, ra in zip(cmp.baseline_records, cmp.agent_records):
            w.writerow([
                f"{rb.minute:.0f}",
                f"{rb.row.units[i].p:.5f}",
                f"{ra.row.units[i].p:.5f}",
                f"{rb.row.units[i].stator_temp:.2f}",
                f"{ra.row.units[i].stator_temp:.2f}",
                f"{ra.biases[i].q_bias:.1f}" if ra.biases else "0.0",
            ])


# -- run report serialization ----------------------------------------------------

def write_run_csv(report, path) -> None:
    """Per-tick plant and unit series of a batch run."""
    n = len(report.records[0].row.units) if report.records else 0
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        header = ["minute", "plant_p_mw", "plant_p_baseline_mw", "plant_q_act", "plant_q_sp"]
        for i in range(1, n + 1):
            header += [f"u{i}_p", f"u{i}_q_act", f"u{i}_bp", f"u{i}_q_bias", f"u{i}_bp_bias"]
        w.writerow(header)
        for r in report.records:
            row = [
                f"{r.minute:.0f}",
                f"{r.row.plant_sum_p:.5f}",
                f"{r.shadow_row.plant_sum_p:.5f}" if r.shadow_row else "",
                f"{r.row.plant_sum_q_act:.2f}",
                f"{r.row.plant_sum_q_sp:.2f}",
            ]
            for i in range(n):
                bias = r.biases[i] if r.biases else None
                row += [
                    f"{r.row.units[i].p:.5f}",
                    f"{r.row.units[i].q_act:.2f}",
                    f"{r.row.units[i].bp:.3f}",
                    f"{bias.q_bias:.1f}" if bias else "0.0",
                    f"{bias.bp_bias:.3f}" if bias else "0.0",
                ]
            w.writerow(row)
