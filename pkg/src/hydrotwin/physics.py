"""Hydraulic, power, and emissions-offset arithmetic for the plant.

Pure functions over plain values. Plant-wide unit conventions: feet for
head, CFS for flow, MW for power. The conversion factor k = 1/11810
bakes those units in; there is no unit-system abstraction.
"""

from __future__ import annotations

from dataclasses import dataclass

#: MW per (CFS * ft) at 100% efficiency.
K_DEFAULT = 1.0 / 11810.0

#: Flow the Corps withholds from the plant for lock operations (CFS).
LOCKING_RESERVE_CFS = 5000.0


@dataclass(frozen=True)
class HeadConditions:
    """Upstream / downstream river elevations in ft above sea level."""

    h_up: float
    h_down: float


@dataclass(frozen=True)
class PhysicsConstants:
    """Unit-conversion factor for power = k * eta * Q * H."""

    k: float = K_DEFAULT

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")


@dataclass(frozen=True)
class FlowState:
    """Flow setpoint and measured actual flow for one unit (CFS)."""

    q_sp: float
    q_act: float


@dataclass(frozen=True)
class EmissionsParams:
    """Coal-plant comparison figures for offset accounting.

    The CO2 formula multiplies coal tonnage by co2_per_carbon and then by
    carbon_fraction. The shipped defaults follow the printed formula; both
    coefficients are parameters because the printed formula and the
    headline number it is supposed to produce disagree (1252.4 vs ~1670
    tons from 912.5 tons of coal), and stoichiometric CO2/C would be 3.67
    rather than 1.83. We do not guess intent; callers can set either
    reading. See also coal/co2 offset functions below.
    """

    heat_rate: float = 10.0  # MBTU/MWhr
    hhv: float = 24.0  # MBTU/ton
    carbon_fraction: float = 0.75
    co2_per_carbon: float = 1.83

    def __post_init__(self):
        for name in ("heat_rate", "hhv", "carbon_fraction", "co2_per_carbon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.carbon_fraction > 1.0:
            raise ValueError("carbon_fraction must be <= 1")


def net_head(hc: HeadConditions) -> float:
    """Net head across the unit, ft. Negative means non-generating."""
    return hc.h_up - hc.h_down


def available_power(k: float, eta: float, q_act: float, h_net: float) -> float:
    """Power available for generation, MW: k * eta * Q_act * H_net."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"efficiency must be in [0, 1], got {eta}")
    if q_act < 0:
        raise ValueError(f"flow must be non-negative, got {q_act}")
    return k * eta * q_act * h_net

def drawdown_power_loss(
    k: float,
    eta: float,
    q_act: float,
    h_net: float,
    q_act_reduced: float,
    h_net_reduced: float,
) -> float:
    """Power lost to trash-rack drawdown, MW.

    k * eta * (Q*H - Q'*H') where the primed values are the flow and head
    reduced by the accumulated restriction.
    """
    return k * eta * (q_act * h_net - q_act_reduced * h_net_reduced)


def coal_offset_tons_per_year(annual_energy_mwhr: float, p: EmissionsParams) -> float:
    """Tons of coal per year displaced by the given annual energy."""
    return annual_energy_mwhr * p.heat_rate / p.hhv


def co2_offset_tons_per_year(coal_tons: float, p: EmissionsParams) -> float:
    """Tons of CO2 per year avoided for the given coal tonnage."""
    if coal_tons < 0:
        raise ValueError(f"coal tonnage must be non-negative, got {coal_tons}")
    return coal_tons * p.co2_per_carbon * p.carbon_fraction


def corps_available_flow(
    required_river_flow: float, locking_reserve: float = LOCKING_RESERVE_CFS
) -> float:
    """Flow available to the plant after the Corps' locking reserve, CFS.

    The result becomes the plant's total flow setpoint. Clamped at zero
    when the river requirement is below the reserve.
    """
    if required_river_flow < 0:
        raise ValueError("required river flow must be non-negative")
    if locking_reserve < 0:
        raise ValueError("locking reserve must be non-negative")
    return max(0.0, required_river_flow - locking_reserve)


def plant_totals(
    unit_values: list[tuple[float, float, float]],
) -> tuple[float, float, float]:
    """Component-wise sums of per-unit (q_act, q_sp, power) tuples."""
    if not unit_values:
        raise ValueError("need at least one unit")
    sum_q_act = sum(v[0] for v in unit_values)
    sum_q_sp = sum(v[1] for v in unit_values)
    sum_p = sum(v[2] for v in unit_values)
    return (sum_q_act, sum_q_sp, sum_p)
