"""Synthetic SCADA archive: minute telemetry plus a time-correlated alarm log.

Stands in for the plant's historical process data, which is not
distributable. The generator runs the real plant model under the
emulated operator, so the archive is physically consistent with the
truth surfaces and the alarm statistics emerge from the same thermal
model the live simulation uses.
"""

from __future__ import annotations

import numpy as np

from .config import SimConfig
from .operator import OperatorEmulator, OperatorPolicy
from .plant import PlantSimulation, TelemetryRow

UNIT_FIELDS = ("gp", "bp", "h_net", "q_act", "q_sp", "p", "stator_temp", "vibration")

ALARM_HEADER = "minute,unit,kind,value"

#: column -> printf precision for the telemetry CSV
_UNIT_FMT = ("{:.3f}", "{:.3f}", "{:.4f}", "{:.2f}", "{:.2f}", "{:.5f}", "{:.2f}", "{:.2f}")
_PLANT_FMT = ("{:.4f}", "{:.2f}", "{:.2f}", "{:.5f}")


def telemetry_header(n_units: int = 3) -> str:
    cols = ["minute"]
    for i in range(1, n_units + 1):
        cols.extend(f"u{i}_{f}" for f in UNIT_FIELDS)
    cols.extend(["plant_h_net", "plant_sum_q_act", "plant_sum_q_sp", "plant_sum_p"])
    return ",".join(cols)


TELEMETRY_HEADER = telemetry_header(3)


def format_row(row: TelemetryRow) -> str:
    parts = [f"{row.minute:.0f}"]
    for t in row.units:
        vals = (t.gp, t.bp, t.h_net, t.q_act, t.q_sp, t.p, t.stator_temp, t.vibration)
        parts.extend(fmt.format(v) for fmt, v in zip(_UNIT_FMT, vals))
    plant = (row.plant_h_net, row.plant_sum_q_act, row.plant_sum_q_sp, row.plant_sum_p)
    parts.extend(fmt.format(v) for fmt, v in zip(_PLANT_FMT, plant))
    return ",".join(parts)


def raw_alarm_lines(sim: PlantSimulation, row: TelemetryRow) -> list[str]:
    """Raw exceedance minutes for the alarm log (pre-debounce).

    One line per unit per tick where the stator is over the alarm
    temperature or the vibration measure is over its limit. Episode
    counting applies the sustain requirement downstream.
    """
    cfg = sim.config
    lines = []
    for i, t in enumerate(row.units):
        if t.stator_temp > cfg.stator_alarm_temp_f:
            lines.append(f"{row.minute:.0f},{i + 1},stator_temp,{t.stator_temp:.2f}")
        if t.vibration > cfg.vibration_alarm_mils:
            lines.append(f"{row.minute:.0f},{i + 1},vibration,{t.vibration:.2f}")
    return lines


def synthesize_history(
    config: SimConfig,
    days: int = 200,
    telemetry_path="history.csv",
    alarm_path="alarms.csv",
    policy: OperatorPolicy | None = None,
) -> dict:
    """Generate `days` of one-minute archive data.

    Deterministic in (config, policy): the same inputs produce
    byte-identical files. Returns a small summary dict.
    """
    if days <= 0:
        raise ValueError("days must be positive")
    cfg = config.with_history_noise()
    sim = PlantSimulation(cfg)
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(3)
    operator = OperatorEmulator(sim, seeds[1], policy or OperatorPolicy())
    n_ticks = int(round(days * 1440 / cfg.dt_min))
    alarm_rows = 0
    with open(telemetry_path, "w") as tf, open(alarm_path, "w") as af:
        tf.write(telemetry_header(cfg.n_units) + "\n")
        af.write(ALARM_HEADER + "\n")
        for _ in range(n_ticks):
            operator.before_tick()
            row = sim.step()
            tf.write(format_row(row) + "\n")
            for line in raw_alarm_lines(sim, row):
                af.write(line + "\n")
                alarm_rows += 1
    return {
        "ticks": n_ticks,
        "days": days,
        "telemetry_path": str(telemetry_path),
        "alarm_path": str(alarm_path),
        "alarm_rows": alarm_rows,
    }
