"""Emulated pre-agent operator and Corps behavior.

The real archive this stands in for recorded humans running the plant:
the Corps adjusting the allocated flow with the seasons, operators
splitting flow across units, occasionally hand-tuning blade position and
discovering extra capacity, stepping a unit down 5 MW when its stator
ran hot, and ejecting load to clear the trash racks. Synthetic history
only needs the statistical footprint of that behavior, not the humans.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .plant import PlantSimulation

#: day-of-year bounds of season 1 (high head, low flow).
SEASON1_DOY = (121, 304)  # May 1 .. Oct 31, non-leap


def season_for_day_of_year(doy: int) -> int:
    return 1 if SEASON1_DOY[0] <= doy <= SEASON1_DOY[1] else 2


@dataclass
class OperatorPolicy:
    """Which emulated behaviors are active."""

    corps_schedule: bool = True
    split_exploration: bool = True
    blade_exploration: bool = True
    stator_response: bool = True
    eject_policy: bool = True
    start_day_of_year: int = 60  # Mar 1: two months of season 2, then season 1
    stator_cut_mw: float = 5.0
    stator_cut_step_cfs: float = 500.0
    restore_clear_min: float = 180.0
    eject_drawdown_ft: float = 0.9
    blade_episode_mean_gap_min: float = 480.0
    blade_episode_len_min: tuple[float, float] = (60.0, 240.0)
    split_dwell_mean_min: float = 360.0


class OperatorEmulator:
    """Drives the plant's operator-side inputs once per tick."""

    def __init__(self, sim: PlantSimulation, seed, policy: OperatorPolicy | None = None):
        self.sim = sim
        self.policy = policy or OperatorPolicy()
        self.rng = np.random.default_rng(seed)
        n = sim.config.n_units
        self._flow_walk = 0.0
        self._head_walk = 0.0
        self._next_flow_change = 0.0
        self._next_split_change = 0.0
        self._blade_until = [0.0] * n
        self._blade_next = [
            float(self.rng.exponential(self.policy.blade_episode_mean_gap_min))
            for _ in range(n)
        ]
        self._cut_target_mw = [None] * n  # type: list[float | None]
        self._clear_since = [None] * n  # type: list[float | None]
        self._last_trim_minute = [0.0] * n

    # one call before each sim.step()
    def before_tick(self) -> None:
        sim = self.sim
        pol = self.policy
        minute = sim.minute
        day = int(minute // 1440)

        if pol.corps_schedule:
            self._corps_schedule(minute, day)
        if pol.split_exploration:
            self._split_exploration(minute)
        if pol.blade_exploration:
            self._blade_exploration(minute)
        if pol.stator_response:
            self._stator_response(minute)
        if pol.eject_policy:
            self._eject_policy()

    # -- behaviors -----------------------------------------------------

    def _season_bounds(self, season: int) -> tuple[float, float, float]:
        river = self.sim.config.river
        if season == 1:
            return river.season1_flow_base, 15000.0, 27000.0
        return river.season2_flow_base, 24000.0, 36000.0

    def _corps_schedule(self, minute: float, day: int) -> None:
        sim = self.sim
        doy = self.policy.start_day_of_year + day
        season = season_for_day_of_year(doy)
        if season != sim.season:
            sim.set_season(season)
            self._flow_walk = 0.0
        base, lo, hi = self._season_bounds(season)
        if minute >= self._next_flow_change:
            if minute > 0:
                self._flow_walk += 1500.0 * float(self.rng.integers(-1, 2))
                self._flow_walk = float(np.clip(self._flow_walk, lo - base, hi - base))
            sim.set_plant_flow(float(np.clip(base + self._flow_walk, lo, hi)))
            # next change between 4 hours and a day out
            self._next_flow_change = minute + float(self.rng.uniform(240.0, 1440.0))
            self._head_walk = float(
                np.clip(self._head_walk + self.rng.normal(0.0, 0.05), -0.3, 0.3)
            )
            sim.h_up = sim.config.river.h_up(season) + self._head_walk

    def _split_exploration(self, minute: float) -> None:
        sim = self.sim
        n = sim.config.n_units
        if minute < self._next_split_change or n < 2:
            return
        self._next_split_change = minute + float(
            self.rng.exponential(self.policy.split_dwell_mean_min)
        )
        offsets = [0.0] * n
        if self.rng.random() < 0.8:
            i, j = self.rng.choice(n, size=2, replace=False)
            amount = 250.0 * float(self.rng.integers(1, 7))
            offsets[int(i)] = amount
            offsets[int(j)] = -amount
        sim.split_offsets = offsets

    def _blade_exploration(self, minute: float) -> None:
        sim = self.sim
        for i in range(sim.config.n_units):
            if minute >= self._blade_until[i]:
                sim.manual_bp_offsets[i] = 0.0
            if minute >= self._blade_next[i]:
                lo, hi = self.policy.blade_episode_len_min
                length = float(self.rng.uniform(lo, hi))
                # half-percent blade steps from -2 to +6
                sim.manual_bp_offsets[i] = -2.0 + 0.5 * float(self.rng.integers(0, 17))
                self._blade_until[i] = minute + length
                self._blade_next[i] = (
                    minute
                    + length
                    + float(self.rng.exponential(self.policy.blade_episode_mean_gap_min))
                )

    def _stator_response(self, minute: float) -> None:
        """Take a fixed power step off the unit until the alarm clears.

        One computed flow cut sized from the unit's current specific
        power, then at most one small trim every ten minutes; feedback
        any tighter than that fights the gate-to-flow lag and spirals.
        The step is released in one move once the alarm has stayed clear
        for the margin.
        """
        sim = self.sim
        pol = self.policy
        alarmed = {a.unit - 1 for a in sim.active_alarms() if a.kind == "stator_temp"}
        for i in range(sim.config.n_units):
            u = sim.units[i]
            if i in alarmed:
                self._clear_since[i] = None
                if self._cut_target_mw[i] is None:
                    self._cut_target_mw[i] = max(0.0, u.power - pol.stator_cut_mw)
                    if u.power > 0.1:
                        dq = pol.stator_cut_mw * u.q_act / u.power
                        sim.operator_cuts[i] += min(dq, max(0.0, u.q_act - 1000.0))
                    self._last_trim_minute[i] = minute
                elif (
                    minute - self._last_trim_minute[i] >= 10.0
                    and u.power > self._cut_target_mw[i] + 0.75
                ):
                    sim.operator_cuts[i] += 250.0
                    self._last_trim_minute[i] = minute
            elif self._cut_target_mw[i] is not None:
                if self._clear_since[i] is None:
                    self._clear_since[i] = minute
                if minute - self._clear_since[i] >= pol.restore_clear_min:
                    # the fixed step comes back out the way it went in
                    sim.operator_cuts[i] = 0.0
                    self._cut_target_mw[i] = None
                    self._clear_since[i] = None

    def _eject_policy(self) -> None:
        sim = self.sim
        if any(u.ejecting for u in sim.units):
            return
        for i, u in enumerate(sim.units):
            if u.online and u.drawdown > self.policy.eject_drawdown_ft:
                sim.start_load_eject(i + 1)
                return
