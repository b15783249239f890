"""Ground-truth plant model and the deterministic one-minute tick engine.

The truth efficiency surface is an analytic quadratic hill whose blade
peak is deliberately offset from the cam surface, so the recoverable
capacity the agents search for exists by construction and is verifiable
analytically. Everything here is deterministic given (config, seed):
the tick loop is the single writer of simulation state, and external
readers only ever see immutable snapshot rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .. import physics
from ..control import (
    BiasCommand,
    CamGrid,
    PidState,
    ZERO_BIAS,
    blade_command,
    default_cam,
    pid_step,
    reset_pid_to,
)
from .config import SimConfig, UnitParams


@dataclass(frozen=True)
class TruthEfficiencyModel:
    """Quadratic-penalty efficiency hill for one unit.

    eta = eta_max - curvature_bp * (bp - bp_peak)^2
                  - curvature_q * (q/q_rated - q_opt_fraction)^2
    clipped to [0, eta_max], with bp_peak = cam_blade(h, q) + bp_opt_offset.
    """

    eta_max: float
    bp_opt_offset: float
    curvature_bp: float
    curvature_q: float
    q_opt_fraction: float
    q_rated: float
    cam_blade: Callable[[float, float], float]  # (h_net, q) -> cam blade %

    @classmethod
    def for_unit(cls, params: UnitParams, cam: CamGrid) -> "TruthEfficiencyModel":
        def cam_blade(h_net: float, q: float) -> float:
            return cam.lookup(params.gate_for_flow(q), h_net)

        return cls(
            eta_max=params.eta_max,
            bp_opt_offset=params.bp_opt_offset,
            curvature_bp=params.curvature_bp,
            curvature_q=params.curvature_q,
            q_opt_fraction=params.q_opt_fraction,
            q_rated=params.q_max,
            cam_blade=cam_blade,
        )

    def peak_blade(self, h_net: float, q: float) -> float:
        return self.cam_blade(h_net, q) + self.bp_opt_offset


def true_efficiency(m: TruthEfficiencyModel, h_net: float, q_act: float, bp: float) -> float:
    """Efficiency fraction at the given head, flow, and blade position."""
    if q_act <= 0.0 or h_net <= 0.0:
        return 0.0
    bp_dev = bp - m.peak_blade(h_net, q_act)
    q_dev = q_act / m.q_rated - m.q_opt_fraction
    eta = m.eta_max - m.curvature_bp * bp_dev * bp_dev - m.curvature_q * q_dev * q_dev
    return min(m.eta_max, max(0.0, eta))


def update_stator_thermal(
    temp: float,
    power: float,
    rated: float,
    dt: float,
    gain: float = 1.2,
    cooling: float = 0.05,
    overload_fraction: float = 0.80,
    ambient: float = 90.0,
) -> float:
    """First-order stator winding temperature, °F.

    Heat input is proportional to power above the overload knee; cooling
    is proportional to the rise over ambient.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    overload = max(0.0, power - overload_fraction * rated)
    temp = temp + dt * (gain * overload - cooling * (temp - ambient))
    return max(ambient, temp)


def update_trash(drawdown: float, q_act: float, dt: float, rate: float = 1e-7) -> float:
    """Trash-rack head loss growth, ft; proportional to through-flow."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return drawdown + rate * q_act * dt


@dataclass
class UnitSimState:
    """Full physical + control state of one unit at a tick (truth side)."""

    gate_position: float = 0.0  # %
    blade_position: float = 0.0  # %
    q_act: float = 0.0  # CFS
    q_sp: float = 0.0  # CFS, effective setpoint incl. agent bias
    power: float = 0.0  # MW
    stator_temp: float = 90.0  # °F
    vibration: float = 2.0  # mils
    drawdown: float = 0.0  # ft
    online: bool = True
    eject_timer: float = 0.0  # minutes remaining, 0 when not ejecting

    @property
    def ejecting(self) -> bool:
        return self.eject_timer > 0.0


def load_eject(state: UnitSimState, duration_min: float = 15.0) -> None:
    """Start a load eject: abrupt shutdown that back-flushes the trash rack.

    The unit produces nothing for the eject duration; drawdown resets to
    zero when it completes. Generation lost during the outage is the cost.
    """
    if not state.online:
        raise ValueError("unit is offline")
    if state.ejecting:
        raise ValueError("load eject already in progress")
    state.eject_timer = duration_min
    state.online = False
    state.q_act = 0.0
    state.power = 0.0
    state.gate_position = 0.0


@dataclass(frozen=True)
class Alarm:
    minute: float
    unit: int  # 1-based
    kind: str  # 'stator_temp' | 'vibration'
    value: float


@dataclass(frozen=True)
class UnitTelemetry:
    gp: float
    bp: float
    h_net: float
    q_act: float
    q_sp: float
    p: float
    stator_temp: float
    vibration: float


@dataclass(frozen=True)
class TelemetryRow:
    minute: float
    units: tuple[UnitTelemetry, ...]
    plant_h_net: float
    plant_sum_q_act: float
    plant_sum_q_sp: float
    plant_sum_p: float
    alarms: tuple[Alarm, ...] = ()


def evaluate_alarms(
    minute: float,
    unit_id: int,
    stator_temp: float,
    hot_minutes: float,
    vibration: float,
    stator_threshold: float = 180.0,
    stator_sustain: float = 10.0,
    vibration_threshold: float = 8.0,
) -> list[Alarm]:
    """Active alarms for one unit at one tick.

    Stator HI requires the temperature to have been above threshold for
    strictly more than the sustain time; vibration alarms immediately.
    """
    alarms = []
    if stator_temp > stator_threshold and hot_minutes > stator_sustain:
        alarms.append(Alarm(minute, unit_id, "stator_temp", stator_temp))
    if vibration > vibration_threshold:
        alarms.append(Alarm(minute, unit_id, "vibration", vibration))
    return alarms


class PlantSimulation:
    """Three units, a shared pool, and the stock control loops.

    Single-writer: only step() mutates state. Operator actions (flow split
    offsets, manual blade offsets, flow cuts) and agent biases enter as
    inputs to step(); directives and scenario events are applied between
    ticks by the owner of the loop.
    """

    def __init__(self, config: SimConfig, cam: CamGrid | None = None):
        self.config = config
        self.cam = cam if cam is not None else default_cam()
        self.truth = [TruthEfficiencyModel.for_unit(u, self.cam) for u in config.units]
        n = config.n_units
        self.minute = 0.0
        self.season = config.initial_season
        self.plant_q_sp = config.initial_plant_flow
        self.h_up = config.river.h_up(self.season)
        self.units = [UnitSimState() for _ in range(n)]
        self.pid_states = [PidState() for _ in range(n)]
        # operator-side inputs (history emulation); all zero in plain runs
        self.split_offsets = [0.0] * n
        self.operator_cuts = [0.0] * n
        self.manual_bp_offsets = [0.0] * n
        # forced trouble conditions (scenario injection), end minute per unit
        self.forced_stator_until = [0.0] * n
        self.forced_vib_until = [0.0] * n
        self._hot_minutes = [0.0] * n
        self._total_flow_prev = 0.0
        self._rng_meas = np.random.default_rng(
            np.random.SeedSequence(config.rng_seed).spawn(1)[0]
        )
        self._seed_operating_point()

    # -- setup ---------------------------------------------------------

    def _seed_operating_point(self) -> None:
        """Start settled at the initial allocation instead of winding up."""
        alloc = self._allocations()
        self._total_flow_prev = sum(alloc)
        h_net = self.net_head_gross(self._total_flow_prev)
        for i, u in enumerate(self.units):
            p = self.config.units[i]
            q = alloc[i]
            gate = p.gate_for_flow(q)
            bp = self.cam.lookup(gate, h_net)
            eta = true_efficiency(self.truth[i], h_net, q, bp)
            power = physics.available_power(physics.K_DEFAULT, eta, q, h_net)
            overload = max(0.0, power - p.overload_fraction * p.rated_power_mw)
            u.gate_position = gate
            u.blade_position = bp
            u.q_act = q
            u.q_sp = q
            u.power = power
            u.stator_temp = p.ambient_temp_f + (p.thermal_gain / p.thermal_cooling) * overload
            self.pid_states[i] = reset_pid_to(self.config.pid, gate)

    # -- helpers -------------------------------------------------------

    def net_head_gross(self, total_flow: float) -> float:
        return self.h_up - self.config.river.h_down(total_flow)

    def _allocations(self) -> list[float]:
        """Per-unit flow setpoints before agent bias."""
        online = [i for i, u in enumerate(self.units) if u.online and not u.ejecting]
        alloc = [0.0] * self.config.n_units
        if not online:
            return alloc
        base = self.plant_q_sp / len(online)
        for i in online:
            alloc[i] = max(0.0, base + self.split_offsets[i] - self.operator_cuts[i])
        return alloc

    def stator_overload_fraction(self, i: int) -> float:
        p = self.config.units[i]
        if self.minute < self.forced_stator_until[i]:
            return p.forced_overload_fraction
        return p.overload_fraction

    def hot_minutes(self, i: int) -> float:
        return self._hot_minutes[i]

    # -- events --------------------------------------------------------

    def force_stator_hot(self, unit: int, duration_min: float) -> None:
        self.forced_stator_until[unit - 1] = self.minute + duration_min

    def force_vibration(self, unit: int, duration_min: float) -> None:
        self.forced_vib_until[unit - 1] = self.minute + duration_min

    def set_plant_flow(self, q_sp: float) -> None:
        if q_sp < 0:
            raise ValueError("plant flow setpoint must be >= 0")
        self.plant_q_sp = q_sp

    def set_season(self, season: int) -> None:
        if season not in (1, 2):
            raise ValueError("season must be 1 or 2")
        self.season = season
        self.h_up = self.config.river.h_up(season)

    def start_load_eject(self, unit: int) -> None:
        load_eject(self.units[unit - 1], self.config.eject_duration_min)
        self.pid_states[unit - 1] = PidState()

    # -- the tick ------------------------------------------------------

    def step(self, biases: Sequence[BiasCommand] | None = None) -> TelemetryRow:
        """Advance one dt with the stock control loops computing commands.

        biases: per-unit agent commands injected per the two bias points
        (None = all zero, reproducing the agentless control scheme).
        """
        cfg = self.config
        n = cfg.n_units
        if biases is None:
            biases = [ZERO_BIAS] * n
        if len(biases) != n:
            raise ValueError(f"expected {n} bias commands, got {len(biases)}")

        dt = cfg.dt_min
        h_gross = self.h_up - cfg.river.h_down(self._total_flow_prev)
        alloc = self._allocations()
        commands: list[tuple[float, float]] = []
        setpoints: list[float] = []
        for i in range(n):
            u = self.units[i]
            if u.ejecting or not u.online:
                commands.append((0.0, u.blade_position))
                setpoints.append(0.0)
                continue
            bias = biases[i]
            gate, self.pid_states[i] = pid_step(
                cfg.pid, self.pid_states[i], alloc[i], u.q_act, bias.q_bias, dt * 60.0
            )
            h_eff = max(0.0, h_gross - u.drawdown)
            bp_target = blade_command(
                self.cam.lookup(gate, h_eff),
                bias.bp_bias + self.manual_bp_offsets[i],
            )
            commands.append((gate, bp_target))
            setpoints.append(max(0.0, alloc[i] + bias.q_bias))
        return self.apply_commands(commands, setpoints)

    def apply_commands(
        self,
        commands: Sequence[tuple[float, float]],
        setpoints: Sequence[float] | None = None,
    ) -> TelemetryRow:
        """Advance the physics one dt under raw (gate %, blade %) commands.

        Blade commands are actuator targets and get rate-limited here;
        flow responds to gate through a first-order lag. setpoints are the
        effective per-unit flow setpoints recorded in telemetry (defaults
        to the gate's steady-state flow demand).
        """
        cfg = self.config
        dt = cfg.dt_min
        n = cfg.n_units
        if len(commands) != n:
            raise ValueError(f"expected {n} commands, got {len(commands)}")

        self.minute += dt
        minute = self.minute
        h_gross = self.h_up - cfg.river.h_down(self._total_flow_prev)

        # fixed-size noise block per tick keeps the stream independent of
        # control flow, so agent activity can never perturb the plant draws
        noise = self._rng_meas.standard_normal(5 * n)

        alarms: list[Alarm] = []
        unit_rows: list[UnitTelemetry] = []
        for i in range(n):
            p = cfg.units[i]
            u = self.units[i]
            gate_cmd, bp_cmd = commands[i]

            if u.ejecting:
                u.eject_timer = max(0.0, u.eject_timer - dt)
                u.q_act = 0.0
                u.power = 0.0
                u.gate_position = 0.0
                u.q_sp = 0.0
                if u.eject_timer == 0.0:
                    u.drawdown = 0.0
                    u.online = True
            elif not u.online:
                u.q_act = 0.0
                u.power = 0.0
                u.q_sp = 0.0
            else:
                # first-order gate-to-flow response, exact step
                q_demand = p.flow_for_gate(gate_cmd)
                decay = math.exp(-dt / p.tau_q_min)
                q_act = q_demand + (u.q_act - q_demand) * decay

                u.drawdown = update_trash(u.drawdown, q_act, dt, p.trash_rate)
                h_eff = max(0.0, h_gross - u.drawdown)

                bp = blade_command(
                    bp_cmd, 0.0, prev_bp=u.blade_position,
                    rate_limit=p.blade_rate_limit * dt,
                )

                eta = true_efficiency(self.truth[i], h_eff, q_act, bp)
                power = physics.available_power(physics.K_DEFAULT, eta, q_act, h_eff)

                u.gate_position = gate_cmd
                u.blade_position = bp
                u.q_act = q_act
                u.q_sp = setpoints[i] if setpoints is not None else q_demand
                u.power = power

            u.stator_temp = update_stator_thermal(
                u.stator_temp,
                u.power,
                p.rated_power_mw,
                dt,
                gain=p.thermal_gain,
                cooling=p.thermal_cooling,
                overload_fraction=self.stator_overload_fraction(i),
                ambient=p.ambient_temp_f,
            )
            if u.stator_temp > cfg.stator_alarm_temp_f:
                self._hot_minutes[i] += dt
            else:
                self._hot_minutes[i] = 0.0

            vib = 2.0
            for zone in cfg.rough_zones:
                if u.online and not u.ejecting and zone.contains(u.gate_position, u.blade_position):
                    vib = max(vib, zone.severity_mils)
            if minute <= self.forced_vib_until[i]:
                vib = max(vib, 12.0)
            u.vibration = vib

            alarms.extend(
                evaluate_alarms(
                    minute,
                    i + 1,
                    u.stator_temp,
                    self._hot_minutes[i],
                    u.vibration,
                    stator_threshold=cfg.stator_alarm_temp_f,
                    stator_sustain=cfg.stator_alarm_sustain_min,
                    vibration_threshold=cfg.vibration_alarm_mils,
                )
            )

            k = 5 * i
            unit_rows.append(
                UnitTelemetry(
                    gp=u.gate_position,
                    bp=u.blade_position,
                    h_net=max(0.0, h_gross - u.drawdown) + cfg.noise_h_ft * noise[k],
                    q_act=u.q_act + cfg.noise_q_cfs * noise[k + 1],
                    q_sp=u.q_sp,
                    p=u.power + cfg.noise_p_mw * noise[k + 2],
                    stator_temp=u.stator_temp + cfg.noise_temp_f * noise[k + 3],
                    vibration=u.vibration + cfg.noise_vib_mils * noise[k + 4],
                )
            )

        self._total_flow_prev = sum(u.q_act for u in self.units)

        row = TelemetryRow(
            minute=minute,
            units=tuple(unit_rows),
            plant_h_net=h_gross,
            plant_sum_q_act=sum(t.q_act for t in unit_rows),
            plant_sum_q_sp=sum(t.q_sp for t in unit_rows),
            plant_sum_p=sum(t.p for t in unit_rows),
            alarms=tuple(alarms),
        )
        return row

    def active_alarms(self) -> list[Alarm]:
        """Alarms as of the last completed tick (no state change)."""
        cfg = self.config
        out: list[Alarm] = []
        for i, u in enumerate(self.units):
            out.extend(
                evaluate_alarms(
                    self.minute,
                    i + 1,
                    u.stator_temp,
                    self._hot_minutes[i],
                    u.vibration,
                    stator_threshold=cfg.stator_alarm_temp_f,
                    stator_sustain=cfg.stator_alarm_sustain_min,
                    vibration_threshold=cfg.vibration_alarm_mils,
                )
            )
        return out


def tick(
    sim: PlantSimulation,
    commands: Sequence[tuple[float, float]] | None = None,
    biases: Sequence[BiasCommand] | None = None,
) -> TelemetryRow:
    """One simulation step.

    With explicit (gate, blade) commands the physics is driven directly;
    otherwise the stock control loops compute the commands from the
    current setpoints and the given agent biases.
    """
    if commands is not None:
        return sim.apply_commands(commands)
    return sim.step(biases)
