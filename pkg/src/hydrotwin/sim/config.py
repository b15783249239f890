"""Simulation configuration, per-unit parameters, and scenario files."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..control import PidGains

#: Event kinds accepted in scenario files and from live directives.
EVENT_KINDS = frozenset(
    {
        "set_plant_flow",
        "set_load_target",
        "force_stator_hot",
        "force_vibration",
        "set_river_season",
        "enable_agent",
        "disable_agent",
    }
)

#: Kinds that must name a unit.
UNIT_EVENT_KINDS = frozenset({"force_stator_hot", "force_vibration"})


@dataclass(frozen=True)
class UnitParams:
    """Physical and truth-model parameters of one generating unit.

    The efficiency surface is a quadratic hill over blade deviation from
    its true peak and flow deviation from the unit's sweet spot. The true
    blade peak sits bp_opt_offset above the cam surface, which is what
    leaves recoverable capacity for the optimization agents to find. The
    per-unit q_opt_fraction spread is what makes flow redistribution
    between units worthwhile.
    """

    unit_id: int
    rated_power_mw: float = 25.0
    q_max: float = 11000.0  # CFS
    q_min_stable: float = 2000.0  # CFS
    eta_max: float = 0.93
    bp_opt_offset: float = 4.0  # % blade
    curvature_bp: float = 0.0015  # eta per (% blade)^2
    curvature_q: float = 1.0  # eta per (flow fraction)^2
    q_opt_fraction: float = 0.70
    thermal_gain: float = 1.2  # °F per MW-overload per minute
    thermal_cooling: float = 0.05  # per minute
    overload_fraction: float = 0.80  # of rated power
    forced_overload_fraction: float = 0.55  # used while a stator event is forced
    ambient_temp_f: float = 90.0
    trash_rate: float = 1e-7  # ft per CFS-minute
    blade_rate_limit: float = 1.0  # % per minute
    tau_q_min: float = 3.0  # gate-to-flow lag, minutes

    def gate_for_flow(self, q: float) -> float:
        return 100.0 * min(max(q, 0.0), self.q_max) / self.q_max

    def flow_for_gate(self, gate: float) -> float:
        return self.q_max * min(max(gate, 0.0), 100.0) / 100.0


def default_unit_params(n_units: int = 3) -> tuple[UnitParams, ...]:
    """The shipped three-unit parameter set.

    Unit 1 peaks at low flow, unit 2 at high flow, unit 3 in between;
    unit 3 runs hottest and unit 2 coolest. Calibrated so that lattice
    redistribution from equal flows at 34 ft gains about 1 MW and a
    blade moved onto its true peak gains about 0.55 MW per unit at
    8000 CFS.
    """
    q_opts = (0.50, 0.85, 0.68)
    q_curves = (0.6, 1.2, 1.0)
    overloads = (0.75, 0.89, 0.745)
    units = tuple(
        UnitParams(
            unit_id=i + 1,
            q_opt_fraction=q_opts[i % 3],
            curvature_q=q_curves[i % 3],
            overload_fraction=overloads[i % 3],
        )
        for i in range(n_units)
    )
    return units


@dataclass(frozen=True)
class RoughZone:
    """A (gate %, blade %) box where the runner vibrates."""

    gate_lo: float
    gate_hi: float
    bp_lo: float
    bp_hi: float
    severity_mils: float = 12.0

    def contains(self, gate: float, bp: float) -> bool:
        return self.gate_lo <= gate <= self.gate_hi and self.bp_lo <= bp <= self.bp_hi


@dataclass(frozen=True)
class RiverModel:
    """Two-season river boundary conditions.

    Season 1 (late spring through early fall): high head, low flow.
    Season 2 (late fall through early spring): lower head target, high
    flow. Tailwater elevation rises linearly with total plant discharge.
    """

    season1_h_up: float = 455.0  # ft, the Corps' normal pool target
    season2_h_up: float = 452.0  # ft, reduced to pass flood flows
    tailwater_base: float = 420.0  # ft at zero discharge
    tailwater_slope: float = 4.2e-5  # ft per CFS
    season1_flow_base: float = 24000.0  # CFS typically allocated
    season2_flow_base: float = 30000.0

    def h_up(self, season: int) -> float:
        return self.season1_h_up if season == 1 else self.season2_h_up

    def h_down(self, total_flow: float) -> float:
        return self.tailwater_base + self.tailwater_slope * total_flow


@dataclass(frozen=True)
class ScenarioEvent:
    at_minute: float
    kind: str
    unit: int | None = None  # 1-based; None = plant-wide / all units
    value: float = 0.0

    def __post_init__(self):
        if self.at_minute < 0:
            raise ValueError(f"event time must be >= 0, got {self.at_minute}")
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.kind in UNIT_EVENT_KINDS and self.unit is None:
            raise ValueError(f"{self.kind} requires unit=<n>")
        if self.kind == "set_plant_flow" and self.value < 0:
            raise ValueError("plant flow must be >= 0")
        if self.kind == "set_river_season" and int(self.value) not in (1, 2):
            raise ValueError("season must be 1 or 2")
        if self.kind in ("force_stator_hot", "force_vibration") and self.value <= 0:
            raise ValueError(f"{self.kind} duration must be positive minutes")


@dataclass
class SimConfig:
    """Everything that defines a reproducible run."""

    n_units: int = 3
    dt_min: float = 1.0
    rng_seed: int = 20240401
    units: tuple[UnitParams, ...] = field(default_factory=default_unit_params)
    pid: PidGains = field(default_factory=PidGains)
    river: RiverModel = field(default_factory=RiverModel)
    rough_zones: tuple[RoughZone, ...] = (RoughZone(30.0, 42.0, 20.0, 32.0),)
    stator_alarm_temp_f: float = 180.0
    stator_alarm_sustain_min: float = 10.0
    vibration_alarm_mils: float = 8.0
    eject_duration_min: float = 15.0
    initial_season: int = 1
    initial_plant_flow: float = 24000.0
    # measurement noise (1-sigma) applied to recorded telemetry only
    noise_q_cfs: float = 0.0
    noise_h_ft: float = 0.0
    noise_p_mw: float = 0.0
    noise_temp_f: float = 0.0
    noise_vib_mils: float = 0.0

    def __post_init__(self):
        if self.n_units < 1:
            raise ValueError("need at least one unit")
        if self.dt_min <= 0:
            raise ValueError("dt must be positive")
        if len(self.units) != self.n_units:
            raise ValueError("units list must match n_units")

    def with_history_noise(self) -> "SimConfig":
        """Measurement-noise levels used when synthesizing archive data."""
        return replace(
            self,
            noise_q_cfs=8.0,
            noise_h_ft=0.02,
            noise_p_mw=0.02,
            noise_temp_f=0.3,
            noise_vib_mils=0.05,
        )


def parse_scenario(text: str, scenario_id: str = "scenario") -> list[ScenarioEvent]:
    """Parse the scenario file grammar.

    One event per line: ``<minute> <kind> [unit=<n>] [<value>]``.
    Blank lines and ``#`` comments are ignored. Events may appear in any
    order; the returned list is sorted by time.
    """
    events = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ValueError(f"{scenario_id}:{lineno}: expected '<minute> <kind> ...'")
        try:
            at = float(parts[0])
        except ValueError:
            raise ValueError(f"{scenario_id}:{lineno}: bad minute {parts[0]!r}") from None
        kind = parts[1]
        unit = None
        value = 0.0
        for tok in parts[2:]:
            if tok.startswith("unit="):
                try:
                    unit = int(tok[5:])
                except ValueError:
                    raise ValueError(f"{scenario_id}:{lineno}: bad unit {tok!r}") from None
            else:
                try:
                    value = float(tok)
                except ValueError:
                    raise ValueError(f"{scenario_id}:{lineno}: bad value {tok!r}") from None
        try:
            events.append(ScenarioEvent(at_minute=at, kind=kind, unit=unit, value=value))
        except ValueError as e:
            raise ValueError(f"{scenario_id}:{lineno}: {e}") from None
    events.sort(key=lambda e: (e.at_minute, e.kind, e.unit or 0))
    return events


def load_scenario(path) -> list[ScenarioEvent]:
    with open(path) as f:
        return parse_scenario(f.read(), scenario_id=str(path))
