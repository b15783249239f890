from .runner import (
    Directive,
    PlantRunner,
    RunReport,
    TickRecord,
    campaign_savings,
    run_scenario,
)

__all__ = [
    "Directive",
    "PlantRunner",
    "RunReport",
    "TickRecord",
    "campaign_savings",
    "run_scenario",
]
