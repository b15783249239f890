"""Agent state space: five major states and two transient minor states."""

from __future__ import annotations

from enum import Enum


class AgentMode(Enum):
    STEADY_STATE_OPTIMIZATION = "steady_state"
    HANDLE_PLANT_FLOW_DIRECTIVE = "plant_flow"
    HANDLE_GENERATION_DIRECTIVE = "generation"
    HANDLE_TEMPERATURE_TROUBLE = "temperature"
    HANDLE_VIBRATION_TROUBLE = "vibration"
    # minor states: entered from a major state while a new bias takes
    # effect, then control returns to the major state within the cycle
    MODIFY_FLOW_SETPOINT = "modify_flow_setpoint"
    MODIFY_BLADE_POSITION = "modify_blade_position"


MAJOR_MODES = frozenset(
    {
        AgentMode.STEADY_STATE_OPTIMIZATION,
        AgentMode.HANDLE_PLANT_FLOW_DIRECTIVE,
        AgentMode.HANDLE_GENERATION_DIRECTIVE,
        AgentMode.HANDLE_TEMPERATURE_TROUBLE,
        AgentMode.HANDLE_VIBRATION_TROUBLE,
    }
)

MINOR_MODES = frozenset(
    {AgentMode.MODIFY_FLOW_SETPOINT, AgentMode.MODIFY_BLADE_POSITION}
)

TROUBLE_MODES = frozenset(
    {AgentMode.HANDLE_TEMPERATURE_TROUBLE, AgentMode.HANDLE_VIBRATION_TROUBLE}
)
