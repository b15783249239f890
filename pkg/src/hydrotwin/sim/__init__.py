from .config import (
    RiverModel,
    ScenarioEvent,
    SimConfig,
    UnitParams,
    default_unit_params,
    load_scenario,
    parse_scenario,
)
from .plant import (
    Alarm,
    PlantSimulation,
    TelemetryRow,
    TruthEfficiencyModel,
    UnitSimState,
    evaluate_alarms,
    load_eject,
    tick,
    true_efficiency,
    update_stator_thermal,
    update_trash,
)
from .history import ALARM_HEADER, TELEMETRY_HEADER, synthesize_history, telemetry_header

__all__ = [
    "ALARM_HEADER",
    "Alarm",
    "PlantSimulation",
    "RiverModel",
    "ScenarioEvent",
    "SimConfig",
    "TELEMETRY_HEADER",
    "TelemetryRow",
    "TruthEfficiencyModel",
    "UnitParams",
    "UnitSimState",
    "default_unit_params",
    "evaluate_alarms",
    "load_eject",
    "load_scenario",
    "parse_scenario",
    "synthesize_history",
    "telemetry_header",
    "tick",
    "true_efficiency",
    "update_stator_thermal",
    "update_trash",
]
