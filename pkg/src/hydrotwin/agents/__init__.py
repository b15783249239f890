from .coordination import (
    RedistributionResult,
    UnitAllocation,
    allocate_shed_flow,
    load_eject_decision,
    predicted_power,
    redistribute_flow,
    redistribution_trajectory,
    release_order,
)
from .modes import MAJOR_MODES, MINOR_MODES, TROUBLE_MODES, AgentMode
from .rules import (
    DEFAULT_RULES_TEXT,
    Rule,
    RuleEngine,
    RuleSyntaxError,
    compile_condition,
    default_rules,
    load_rules,
    parse_rules,
)
from .unit_agent import (
    AgentCycleResult,
    AgentParams,
    AgentStatus,
    BusScan,
    PlantView,
    UnitAgent,
    UnitView,
)

__all__ = [
    "AgentCycleResult",
    "AgentMode",
    "AgentParams",
    "AgentStatus",
    "BusScan",
    "DEFAULT_RULES_TEXT",
    "MAJOR_MODES",
    "MINOR_MODES",
    "PlantView",
    "RedistributionResult",
    "Rule",
    "RuleEngine",
    "RuleSyntaxError",
    "TROUBLE_MODES",
    "UnitAgent",
    "UnitAllocation",
    "UnitView",
    "allocate_shed_flow",
    "compile_condition",
    "default_rules",
    "load_eject_decision",
    "load_rules",
    "parse_rules",
    "predicted_power",
    "redistribute_flow",
    "redistribution_trajectory",
    "release_order",
]
