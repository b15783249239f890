"""Per-unit gate and blade control: PID flow loop plus software cam.

The gate PID drives actual flow toward the flow setpoint; the cam maps
(gate position, net head) to a blade position. Optimization agents hook
in at exactly two points: a flow bias added to the PID error and a blade
bias added to the cam output. With both biases at zero this module is
the stock control scheme, bit for bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class PidGains:
    """Gate-loop tuning. k_p is % gate per CFS of flow error.

    t_i may be math.inf to disable the integral term.
    """

    k_p: float = 0.005
    t_i: float = 120.0  # s
    t_d: float = 0.0  # s
    output_min: float = 0.0  # % gate
    output_max: float = 100.0  # % gate

    def __post_init__(self):
        if not self.k_p > 0:
            raise ValueError("k_p must be positive")
        if not self.t_i > 0:
            raise ValueError("t_i must be positive (use math.inf to disable)")
        if self.t_d < 0:
            raise ValueError("t_d must be non-negative")
        if not self.output_min < self.output_max:
            raise ValueError("output_min must be below output_max")
        if not (0 <= self.output_min <= 100 and 0 <= self.output_max <= 100):
            raise ValueError("output limits must lie in [0, 100]")

    def integral_cap(self) -> float:
        """Largest integral magnitude that maps inside the output range."""
        if math.isinf(self.t_i):
            return math.inf
        return self.t_i * max(abs(self.output_min), abs(self.output_max)) / self.k_p


@dataclass(frozen=True)
class PidState:
    """Carried loop state: accumulated error*time, last error, last output."""

    integral_accum: float = 0.0  # CFS*s
    prev_error: float = 0.0  # CFS
    last_output: float = 0.0  # % gate


@dataclass(frozen=True)
class BiasCommand:
    """Agent-injected offsets: flow setpoint bias (CFS) and blade bias (%)."""

    q_bias: float = 0.0
    bp_bias: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.q_bias) and math.isfinite(self.bp_bias)):
            raise ValueError("bias values must be finite")


ZERO_BIAS = BiasCommand(0.0, 0.0)


def pid_step(
    gains: PidGains,
    state: PidState,
    q_sp: float,
    q_act: float,
    q_bias: float,
    dt: float,
) -> tuple[float, PidState]:
    """One discrete PID update; returns (gate position %, new state).

    Biased error eps = Q_SP + Q_bias - Q_act. Backward-Euler integral,
    backward-difference derivative on the error. Anti-windup by
    conditional integration: the integral is committed only when the
    unsaturated output stays inside the limits, and is additionally
    capped at the value that alone maps to the saturation boundary.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    for name, v in (("q_sp", q_sp), ("q_act", q_act), ("q_bias", q_bias)):
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v}")

    error = q_sp + q_bias - q_act
    derivative = (error - state.prev_error) / dt

    cap = gains.integral_cap()
    candidate = state.integral_accum + error * dt
    if math.isfinite(cap):
        candidate = max(-cap, min(cap, candidate))

    def output_for(integral: float) -> float:
        integral_term = 0.0 if math.isinf(gains.t_i) else integral / gains.t_i
        return gains.k_p * (error + integral_term + gains.t_d * derivative)

    raw = output_for(candidate)
    if gains.output_min <= raw <= gains.output_max:
        integral = candidate
        gate = raw
    else:
        # Saturated: freeze the integral, clamp the output.
        integral = state.integral_accum
        gate = min(gains.output_max, max(gains.output_min, output_for(integral)))

    return gate, PidState(integral_accum=integral, prev_error=error, last_output=gate)


def reset_pid_to(gains: PidGains, gate: float, error: float = 0.0) -> PidState:
    """State whose integral term alone reproduces `gate` at zero error.

    Used to start a simulation at an established operating point instead
    of winding the loop up from zero.
    """
    if math.isinf(gains.t_i):
        return PidState(0.0, error, gate)
    integral = gate * gains.t_i / gains.k_p
    return PidState(integral_accum=integral, prev_error=error, last_output=gate)


class CamGrid:
    """Static blade-position surface over (gate position, net head).

    Defined from an index test at a set of gate/head nodes; bilinearly
    interpolated inside the grid and clamped to the nearest edge value
    outside it. An index test covers the normal operating envelope, so
    out-of-grid queries indicate abnormal states and are not extrapolated.
    """

    def __init__(self, gate_axis, head_axis, blade_table):
        gate = np.asarray(gate_axis, dtype=float)
        head = np.asarray(head_axis, dtype=float)
        table = np.asarray(blade_table, dtype=float)
        if gate.ndim != 1 or gate.size < 2 or np.any(np.diff(gate) <= 0):
            raise ValueError("gate axis must be >= 2 strictly ascending values")
        if head.ndim != 1 or head.size < 2 or np.any(np.diff(head) <= 0):
            raise ValueError("head axis must be >= 2 strictly ascending values")
        if table.shape != (gate.size, head.size):
            raise ValueError(
                f"blade table shape {table.shape} does not match axes "
                f"({gate.size}, {head.size})"
            )
        if not np.all(np.isfinite(table)):
            raise ValueError("blade table must be finite")
        if table.min() < 0 or table.max() > 100:
            raise ValueError("blade values must lie in [0, 100]")
        self.gate_axis = gate
        self.head_axis = head
        self.blade_table = table

    @classmethod
    def from_csv(cls, path) -> "CamGrid":
        """Load a cam surface from CSV.

        Layout: header row = head-axis values (first cell ignored), first
        column = gate-axis values, body = blade positions.
        """
        with open(path, newline="") as f:
            rows = [r for r in csv.reader(f) if r and any(c.strip() for c in r)]
        if len(rows) < 3:
            raise ValueError(f"{path}: cam CSV needs a header and >= 2 data rows")
        try:
            head_axis = [float(c) for c in rows[0][1:]]
            gate_axis = [float(r[0]) for r in rows[1:]]
            table = [[float(c) for c in r[1:]] for r in rows[1:]]
        except (ValueError, IndexError) as e:
            raise ValueError(f"{path}: malformed cam CSV: {e}") from None
        return cls(gate_axis, head_axis, table)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["gate_pct\\head_ft"] + [repr(float(h)) for h in self.head_axis])
            for g, row in zip(self.gate_axis, self.blade_table):
                w.writerow([repr(float(g))] + [repr(float(v)) for v in row])

    def lookup(self, gate_position: float, h_net: float) -> float:
        """Blade position (%) for the given gate (%) and net head (ft)."""
        if not (math.isfinite(gate_position) and math.isfinite(h_net)):
            raise ValueError("cam lookup inputs must be finite")
        g = min(max(gate_position, self.gate_axis[0]), self.gate_axis[-1])
        h = min(max(h_net, self.head_axis[0]), self.head_axis[-1])
        i = int(np.searchsorted(self.gate_axis, g, side="right") - 1)
        j = int(np.searchsorted(self.head_axis, h, side="right") - 1)
        i = min(i, self.gate_axis.size - 2)
        j = min(j, self.head_axis.size - 2)
        g0, g1 = self.gate_axis[i], self.gate_axis[i + 1]
        h0, h1 = self.head_axis[j], self.head_axis[j + 1]
        tg = (g - g0) / (g1 - g0)
        th = (h - h0) / (h1 - h0)
        t = self.blade_table
        return float(
            t[i, j] * (1 - tg) * (1 - th)
            + t[i + 1, j] * tg * (1 - th)
            + t[i, j + 1] * (1 - tg) * th
            + t[i + 1, j + 1] * tg * th
        )


def cam_lookup(cam: CamGrid, gate_position: float, h_net: float) -> float:
    return cam.lookup(gate_position, h_net)


def default_cam(
    gate_step: float = 10.0,
    head_min: float = 20.0,
    head_max: float = 42.0,
    head_step: float = 2.0,
) -> CamGrid:
    """The shipped index-test surface: blade rises with gate, eases with head."""
    gate_axis = np.arange(0.0, 100.0 + gate_step / 2, gate_step)
    head_axis = np.arange(head_min, head_max + head_step / 2, head_step)
    gg, hh = np.meshgrid(gate_axis, head_axis, indexing="ij")
    table = np.clip(5.0 + 0.85 * gg + 0.4 * (hh - 34.0), 0.0, 100.0)
    return CamGrid(gate_axis, head_axis, table)


def blade_command(
    bp_cam: float,
    bp_bias: float,
    prev_bp: float | None = None,
    rate_limit: float | None = None,
) -> float:
    """Blade control target: cam output plus bias, clamped to [0, 100].

    When prev_bp and rate_limit (% per tick) are given, the move away from
    prev_bp is additionally limited to the actuator rate.
    """
    if not (math.isfinite(bp_cam) and math.isfinite(bp_bias)):
        raise ValueError("blade command inputs must be finite")
    bp = min(100.0, max(0.0, bp_cam + bp_bias))
    if prev_bp is not None and rate_limit is not None:
        bp = min(prev_bp + rate_limit, max(prev_bp - rate_limit, bp))
    return bp


def with_q_bias(cmd: BiasCommand, q_bias: float) -> BiasCommand:
    return replace(cmd, q_bias=q_bias)


def with_bp_bias(cmd: BiasCommand, bp_bias: float) -> BiasCommand:
    return replace(cmd, bp_bias=bp_bias)
