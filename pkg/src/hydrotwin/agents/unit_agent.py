"""The per-unit optimization agent: rule-based system, bias calculator,
message handler.

Each cycle runs once per simulation tick against a frozen pre-tick scan
of the point database and message board, so every agent in a tick sees
the identical world regardless of execution order. Anything an agent
publishes becomes visible to its peers at the next tick. Flow moves
between units are announced one tick ahead and applied by both sides on
the same tick, which keeps the coordination component of the plant's
biases zero-sum at every instant.

Bias bookkeeping per agent, all in CFS:
  shed       own trouble reduction (<= 0), the stator/vibration rules
  claims     flow picked up from peers' announced sheds (>= 0), per donor
  redis      redistribution exchanges (signed, zero-sum across units)
  directive  dispatch load-target reduction (<= 0)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

from ..bus import (
    AlarmItem,
    BiasReport,
    CommandItem,
    Message,
    MessageBus,
    PointAddress,
    StatusItem,
)
from ..control import BiasCommand, CamGrid
from ..physics import K_DEFAULT, drawdown_power_loss
from ..sim.config import UnitParams
from .coordination import (
    UnitAllocation,
    allocate_shed_flow,
    load_eject_decision,
    redistribute_flow,
    release_order,
)
from .modes import AgentMode, TROUBLE_MODES
from .rules import Rule, RuleEngine, default_rules

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AgentParams:
    """Tuning for one unit agent; every rate is per one-minute tick."""

    settle_ticks: int = 5
    bp_bias_limit: float = 8.0  # %
    bp_slew: float = 1.0  # % per tick toward the bias target
    min_gain_mw: float = 0.02  # ignore smaller predicted improvements
    revert_tolerance_mw: float = 0.05
    revert_cooldown_ticks: int = 30
    stator_shed_step: float = 500.0  # CFS per minute while stator HI
    vib_blade_step: float = 0.5  # % per minute during vibration
    vib_blade_max_steps: int = 10
    vib_flow_step: float = 250.0  # CFS per minute after blade steps exhaust
    gen_ramp_step: float = 500.0  # CFS per minute toward a load target
    gen_tolerance_mw: float = 0.2
    enable_redistribution: bool = True
    redistribution_step: float = 250.0
    flow_directive_hold_ticks: int = 8
    eject_lookahead_h: float = 24.0
    eject_duration_h: float = 0.25
    eject_min_drawdown_ft: float = 0.05


@dataclass(frozen=True)
class UnitView:
    """One unit's process variables as the control system reports them."""

    unit: int
    h_net: float
    q_act: float
    q_sp: float
    p: float
    gp: float
    bp: float
    stator_temp: float
    vibration: float
    drawdown: float
    online: bool
    ejecting: bool
    alarm_stator: bool
    alarm_vibration: bool


@dataclass(frozen=True)
class PlantView:
    minute: float
    plant_q_sp: float
    sum_q_act: float
    sum_p: float
    load_target: float | None
    n_units: int


@dataclass(frozen=True)
class BusScan:
    """Frozen pre-tick view of the point database and message board.

    Agents read only through the scan, so all agents in a tick see the
    identical world; their own writes become visible at the next tick.
    """

    attrs: dict[str, object] = field(default_factory=dict)  # "Point.Attr" -> AttrValue
    messages: tuple[Message, ...] = ()

    @classmethod
    def capture(cls, bus: MessageBus) -> "BusScan":
        attrs = {}
        for point in bus.points.values():
            for attr, entry in point.attributes.items():
                attrs[f"{point.name}.{attr}"] = entry
        return cls(attrs=attrs, messages=tuple(bus.messages))

    def entry(self, point: str, attr: str):
        return self.attrs.get(f"{point}.{attr}")

    def get(self, point: str, attr: str, default=None):
        entry = self.attrs.get(f"{point}.{attr}")
        return entry.value if entry is not None else default


@dataclass
class AgentStatus:
    unit: int
    mode: AgentMode
    bias: BiasCommand
    enabled: bool
    alarms: tuple[str, ...]
    benefit_mw: float = 0.0
    unallocated_cfs: float = 0.0


@dataclass(frozen=True)
class AgentCycleResult:
    bias: BiasCommand
    mode: AgentMode
    minor_visits: tuple[AgentMode, ...]
    eject_requested: bool
    status: AgentStatus


class UnitAgent:
    def __init__(
        self,
        unit_id: int,
        bus: MessageBus,
        unit_params: UnitParams,
        cam: CamGrid,
        db=None,
        rules: list[Rule] | None = None,
        params: AgentParams | None = None,
        enabled: bool = True,
    ):
        self.unit_id = unit_id
        self.bus = bus
        self.unit_params = unit_params
        self.cam = cam
        self.db = db
        self.params = params or AgentParams()
        self.engine = RuleEngine(rules if rules is not None else default_rules())
        self.enabled = enabled
        self.mode = AgentMode.STEADY_STATE_OPTIMIZATION
        # bias components
        self.shed = 0.0
        self.claims: dict[int, float] = {}
        self.redis = 0.0
        self.directive = 0.0
        self.bp_bias = 0.0
        self.bp_bias_target = 0.0
        # pending self flow change announced last tick, applied this tick
        self._pending_shed_delta = 0.0
        self._last_seen_msg = 0
        self.settle = 0
        self._revert_cooldown = 0
        self._pre_bias_power: float | None = None
        self._prev_bp_target = 0.0
        self._vib_steps = 0
        self._vib_direction = 1.0
        self._vib_last_reading: float | None = None
        self._last_stator_temp: float | None = None
        self._gen_unit_target: float | None = None
        self._qsp_version = None
        self._flow_hold = 0
        self._eject_cooldown = 0

    # -- identity helpers ------------------------------------------------

    @property
    def name(self) -> str:
        return f"unit{self.unit_id}"

    @property
    def point(self) -> str:
        return f"UnitAgent{self.unit_id}"

    def total_q_bias(self) -> float:
        return self.shed + sum(self.claims.values()) + self.redis + self.directive

    # -- the cycle ---------------------------------------------------------

    def cycle(self, view: UnitView, plant: PlantView, scan: BusScan) -> AgentCycleResult:
        outgoing: list[StatusItem] = []
        minor: list[AgentMode] = []
        eject_requested = False
        pre_q_bias = self.total_q_bias()
        pre_bp_bias = self.bp_bias

        self.enabled = bool(scan.get(self.point, "Enable", 1.0))
        if self._eject_cooldown > 0:
            self._eject_cooldown -= 1

        if not self.enabled or not view.online or view.ejecting:
            self._zero_all()
            self.mode = AgentMode.STEADY_STATE_OPTIMIZATION
            status = self._publish(view, scan, outgoing, unallocated=0.0)
            return AgentCycleResult(
                BiasCommand(0.0, 0.0), self.mode, (), False, status
            )

        inbox = [m for m in scan.messages if m.id > self._last_seen_msg]
        if inbox:
            self._last_seen_msg = max(m.id for m in inbox)
        self._apply_pending_and_peers(inbox, scan)

        namespace = self._namespace(view, plant, scan)
        fired = self.engine.evaluate(
            namespace, on_error=lambda r, e: log.warning("rule %s skipped: %s", r.id, e)
        )
        for f in fired:
            action = f.rule.action
            if action.startswith("enter_"):
                self._transition(action)
            elif action == "request_load_eject":
                if self._eject_cooldown == 0:
                    eject_requested = True
                    self._eject_cooldown = 60
                    outgoing.append(CommandItem("load_eject"))
            elif action == "emit_status":
                pass  # status always posted at cycle end
            else:
                log.warning("rule %s: unknown action %r", f.rule.id, action)

        handler = {
            AgentMode.HANDLE_TEMPERATURE_TROUBLE: self._do_temperature,
            AgentMode.HANDLE_VIBRATION_TROUBLE: self._do_vibration,
            AgentMode.HANDLE_GENERATION_DIRECTIVE: self._do_generation,
            AgentMode.HANDLE_PLANT_FLOW_DIRECTIVE: self._do_plant_flow,
            AgentMode.STEADY_STATE_OPTIMIZATION: self._do_steady_state,
        }[self.mode]
        handler(view, plant, scan, outgoing)

        self._restore_shed_if_clear(view, outgoing)
        self._slew_blade_bias(view)

        if self.settle > 0:
            self.settle -= 1
        if self._revert_cooldown > 0:
            self._revert_cooldown -= 1

        if self.total_q_bias() != pre_q_bias:
            minor.append(AgentMode.MODIFY_FLOW_SETPOINT)
            self.settle = max(self.settle, self.params.settle_ticks)
        if self.bp_bias != pre_bp_bias:
            minor.append(AgentMode.MODIFY_BLADE_POSITION)
            self.settle = max(self.settle, self.params.settle_ticks)

        unallocated = self._unallocated(scan)
        status = self._publish(view, scan, outgoing, unallocated)
        bias = BiasCommand(self.total_q_bias(), self.bp_bias)
        return AgentCycleResult(bias, self.mode, tuple(minor), eject_requested, status)

    # -- message handling --------------------------------------------------

    def _apply_pending_and_peers(self, inbox: list[Message], scan: BusScan) -> None:
        """Apply my announced flow change and react to peer announcements."""
        if self._pending_shed_delta != 0.0:
            self.shed += self._pending_shed_delta
            self.shed = min(0.0, self.shed)
            self._pending_shed_delta = 0.0

        # a donor that went away cannot announce returns; drain its claims.
        # This runs before new announcements land so a claim made this tick
        # is never judged against the donor's pre-announcement state.
        for donor in list(self.claims):
            gone = (
                not scan.get(f"UnitAgent{donor}", "Enable", 1.0)
                or float(scan.get(f"UnitAgent{donor}", "Shed", 0.0) or 0.0) == 0.0
            )
            if gone and self.claims.get(donor, 0.0) > 0.0:
                self.claims[donor] = max(
                    0.0, self.claims[donor] - self.params.stator_shed_step
                )
                if self.claims[donor] == 0.0:
                    del self.claims[donor]

        for m in inbox:
            if not m.user.startswith("unit"):
                continue
            try:
                origin = int(m.user[4:])
            except ValueError:
                log.warning("ignoring message from unparseable origin %r", m.user)
                continue
            # redistribution orders bind every party, the proposer included
            self._apply_redistribution_order(m)
            if origin == self.unit_id:
                continue  # own shed/restore announcements ride _pending_shed_delta
            for item in m.status:
                if not isinstance(item, CommandItem):
                    continue
                if item.name == "flow_available" and item.value:
                    self._claim_share(origin, item.value, scan)
                elif item.name == "flow_return" and item.value:
                    self._return_share(origin, item.value, scan)

    def _receiver_states(self, donor: int, scan: BusScan) -> list[UnitAllocation]:
        out = []
        for i in range(1, self.bus.n_units + 1):
            if i == donor:
                continue
            point = f"UnitAgent{i}"
            enabled = bool(scan.get(point, "Enable", 1.0))
            mode = scan.get(point, "Mode", AgentMode.STEADY_STATE_OPTIMIZATION.value)
            shed = float(scan.get(point, "Shed", 0.0) or 0.0)
            q_sp = scan.get(point, "QSP")
            headroom = scan.get(point, "Headroom")
            h = scan.get(point, "H")
            bp_dev = scan.get(point, "BPdev")
            healthy = (
                enabled
                and shed == 0.0
                and mode not in (m.value for m in TROUBLE_MODES)
                and q_sp is not None
                and headroom is not None
            )
            if not healthy:
                continue
            out.append(
                UnitAllocation(
                    unit=i,
                    q=float(q_sp),
                    h_net=float(h if h is not None else 30.0),
                    bp_dev=float(bp_dev if bp_dev is not None else 0.0),
                    q_min=0.0,
                    q_max=float(q_sp) + float(headroom),
                )
            )
        return out

    def _estimator(self):
        if self.db is None:
            return None

        def estimate(unit: int, h: float, q: float, bp_dev: float) -> float:
            gate = self.unit_params.gate_for_flow(q)
            bp = self.cam.lookup(gate, h) + bp_dev
            try:
                return self.db.estimate_efficiency(h, q, bp, unit=unit)
            except ValueError:
                try:
                    return self.db.estimate_efficiency(h, q, bp)
                except ValueError:
                    return 0.85

        return estimate

    def _claim_share(self, donor: int, amount: float, scan: BusScan) -> None:
        receivers = self._receiver_states(donor, scan)
        shares = allocate_shed_flow(
            amount, receivers, self._estimator(), self.params.redistribution_step
        )
        mine = shares.get(self.unit_id, 0.0)
        if mine > 0.0:
            self.claims[donor] = self.claims.get(donor, 0.0) + mine

    def _return_share(self, donor: int, amount: float, scan: BusScan) -> None:
        holdings = {}
        for i in range(1, self.bus.n_units + 1):
            if i == donor:
                continue
            held = float(scan.get(f"UnitAgent{i}", f"ClaimsFrom{donor}", 0.0) or 0.0)
            if held > 0.0:
                holdings[i] = held
        gives = release_order(holdings, amount)
        mine = gives.get(self.unit_id, 0.0)
        if mine > 0.0 and donor in self.claims:
            self.claims[donor] = max(0.0, self.claims[donor] - mine)
            if self.claims[donor] == 0.0:
                del self.claims[donor]

    def _apply_redistribution_order(self, m: Message) -> None:
        src = dst = qty = None
        for item in m.status:
            if isinstance(item, CommandItem):
                if item.name == "redistribute_from":
                    src = int(item.value)
                elif item.name == "redistribute_to":
                    dst = int(item.value)
                elif item.name == "redistribute_q":
                    qty = item.value
        if src is None or dst is None or not qty:
            return
        if self.unit_id == src:
            self.redis -= qty
        elif self.unit_id == dst:
            self.redis += qty

    # -- rule namespace and transitions -------------------------------------

    def _namespace(self, view: UnitView, plant: PlantView, scan: BusScan) -> dict:
        qsp_attr = scan.entry("Plant", "QSP")
        version = qsp_attr.version if qsp_attr is not None else None
        if version != self._qsp_version:
            if self._qsp_version is not None:
                self._flow_hold = self.params.flow_directive_hold_ticks
                # a new plant setpoint invalidates the old redistribution
                # balance for every agent on the same tick, whatever mode
                # each one is in, so the exchanges stay paired
                self.redis = 0.0
            self._qsp_version = version
        tracked = abs(plant.sum_q_act - plant.plant_q_sp) <= max(
            0.02 * max(plant.plant_q_sp, 1.0), 100.0
        )
        if self._flow_hold > 0 and tracked:
            self._flow_hold = 0
        elif self._flow_hold > 0:
            self._flow_hold -= 1

        gen_active = plant.load_target is not None and plant.load_target > 0.0
        eta = 0.0
        if view.q_act > 1.0 and view.h_net > 0.1:
            eta = min(1.0, view.p / (K_DEFAULT * view.q_act * view.h_net))
        p_loss = drawdown_power_loss(
            K_DEFAULT, eta, view.q_act, view.h_net + view.drawdown, view.q_act, view.h_net
        )
        eject_ok = (
            view.drawdown > self.params.eject_min_drawdown_ft
            and load_eject_decision(
                p_loss, view.p, self.params.eject_lookahead_h, self.params.eject_duration_h
            )
        )
        return {
            "alarm_stator": view.alarm_stator,
            "alarm_vibration": view.alarm_vibration,
            "flow_directive_pending": self._flow_hold > 0,
            "generation_directive_active": bool(gen_active) or self.directive != 0.0,
            "mode": self.mode.value,
            "settling": self.settle > 0,
            "eject_beneficial": bool(eject_ok),
            "enabled": self.enabled,
            "online": view.online,
            "power": view.p,
            "q_act": view.q_act,
            "q_sp": view.q_sp,
            "h_net": view.h_net,
            "bp": view.bp,
            "gp": view.gp,
            "drawdown": view.drawdown,
            "stator_temp": view.stator_temp,
            "vibration": view.vibration,
            "benefit": float(scan.get("Sim", f"Benefit{self.unit_id}", 0.0) or 0.0),
            "peer_shed_total": sum(
                float(scan.get(f"UnitAgent{i}", "Shed", 0.0) or 0.0)
                for i in range(1, self.bus.n_units + 1)
                if i != self.unit_id
            ),
        }

    _MODE_BY_ACTION = {
        "enter_temperature_trouble": AgentMode.HANDLE_TEMPERATURE_TROUBLE,
        "enter_vibration_trouble": AgentMode.HANDLE_VIBRATION_TROUBLE,
        "enter_plant_flow": AgentMode.HANDLE_PLANT_FLOW_DIRECTIVE,
        "enter_generation": AgentMode.HANDLE_GENERATION_DIRECTIVE,
        "enter_steady_state": AgentMode.STEADY_STATE_OPTIMIZATION,
    }

    def _transition(self, action: str) -> None:
        new_mode = self._MODE_BY_ACTION.get(action)
        if new_mode is None:
            log.warning("unknown transition action %r", action)
            return
        if new_mode is not self.mode:
            if new_mode is AgentMode.HANDLE_VIBRATION_TROUBLE:
                self._vib_steps = 0
                self._vib_direction = 1.0
                self._vib_last_reading = None
            self.mode = new_mode

    # -- mode behaviors ------------------------------------------------------

    def _announce_shed(self, amount: float, outgoing: list[StatusItem]) -> None:
        outgoing.append(CommandItem("flow_available", amount))
        self._pending_shed_delta -= amount

    def _announce_restore(self, amount: float, outgoing: list[StatusItem]) -> None:
        outgoing.append(CommandItem("flow_return", amount))
        self._pending_shed_delta += amount

    def _do_temperature(self, view, plant, scan, outgoing) -> None:
        """Shed flow one step per minute while the stator stays hot.

        The one-minute wait between decrements exists to see whether the
        stator has started cooling; while the temperature is already
        falling the current cut is held rather than deepened, so only the
        necessary amount of generation is given up.
        """
        step = self.params.stator_shed_step
        floor = -max(0.0, view.q_sp - self.unit_params.q_min_stable)
        cooling = (
            self._last_stator_temp is not None
            and view.stator_temp < self._last_stator_temp - 0.2
        )
        self._last_stator_temp = view.stator_temp
        if view.alarm_stator and not cooling and self.shed + self._pending_shed_delta > floor:
            self._announce_shed(min(step, (self.shed + self._pending_shed_delta) - floor), outgoing)

    def _do_vibration(self, view, plant, scan, outgoing) -> None:
        """Walk the blade away from the rough zone, then bias flow."""
        if not view.alarm_vibration:
            return
        p = self.params
        if self._vib_steps < p.vib_blade_max_steps:
            if (
                self._vib_last_reading is not None
                and view.vibration > self._vib_last_reading + 1e-9
                and self._vib_steps == 1
            ):
                # first step made it worse; walk the other way
                self._vib_direction = -self._vib_direction
            self._vib_last_reading = view.vibration
            target = self.bp_bias_target + self._vib_direction * p.vib_blade_step
            self.bp_bias_target = max(-p.bp_bias_limit, min(p.bp_bias_limit, target))
            self._vib_steps += 1
        else:
            floor = -max(0.0, view.q_sp - self.unit_params.q_min_stable)
            if self.shed + self._pending_shed_delta > floor:
                self._announce_shed(
                    min(p.vib_flow_step, (self.shed + self._pending_shed_delta) - floor),
                    outgoing,
                )

    def _do_generation(self, view, plant, scan, outgoing) -> None:
        """Ramp flow until this unit carries its share of the load target."""
        p = self.params
        if plant.load_target is None or plant.load_target <= 0.0:
            # directive cleared: ramp the directive bias back out
            if self.directive < 0.0:
                self.directive = min(0.0, self.directive + p.gen_ramp_step)
            if self.directive == 0.0:
                self._gen_unit_target = None
                self.mode = AgentMode.STEADY_STATE_OPTIMIZATION
            return
        if self._gen_unit_target is None:
            enabled_units = max(1, self._count_enabled(scan))
            reduction = (plant.sum_p - plant.load_target) / enabled_units
            target = view.p - reduction
            min_p = self._power_at(view, self.unit_params.q_min_stable)
            if target < min_p:
                target = min_p
                outgoing.append(CommandItem("load_target_clamped", round(min_p, 3)))
            self._gen_unit_target = target
        error_mw = view.p - self._gen_unit_target
        if abs(error_mw) <= p.gen_tolerance_mw:
            return
        eta = 0.9
        if view.q_act > 1.0 and view.h_net > 0.1:
            eta = max(0.1, min(1.0, view.p / (K_DEFAULT * view.q_act * view.h_net)))
        dq = error_mw / (K_DEFAULT * eta * view.h_net) if view.h_net > 0.1 else 0.0
        dq = max(-p.gen_ramp_step, min(p.gen_ramp_step, dq))
        self.directive = min(0.0, self.directive - dq)

    def _do_plant_flow(self, view, plant, scan, outgoing) -> None:
        """A new plant flow setpoint invalidates redistribution state."""
        if self.redis != 0.0:
            self.redis = 0.0
            outgoing.append(CommandItem("redistribution_cleared"))

    def _do_steady_state(self, view, plant, scan, outgoing) -> None:
        if self.settle > 0 or self.db is None:
            return
        self._check_revert(view)
        self._optimize_blade(view)
        if self.params.enable_redistribution and self._is_coordinator(scan):
            self._propose_redistribution(view, scan, outgoing)

    # -- steady-state pieces ---------------------------------------------

    def _optimize_blade(self, view: UnitView) -> None:
        if self._revert_cooldown > 0:
            return
        found = self.db.query_best_bp(view.h_net, view.q_sp, view.p, unit=self.unit_id)
        if found is None:
            return
        bp_control, _p_opt = found
        bp_cam = self.cam.lookup(view.gp, view.h_net)
        target = bp_control - bp_cam
        limit = self.params.bp_bias_limit
        target = max(-limit, min(limit, target))
        if abs(target - self.bp_bias_target) > 0.01:
            self._prev_bp_target = self.bp_bias_target
            self._pre_bias_power = view.p
            self.bp_bias_target = target

    def _check_revert(self, view: UnitView) -> None:
        """Undo a bias whose realized power fell short of where it started."""
        if self._pre_bias_power is None or self.settle > 0:
            return
        if view.p < self._pre_bias_power - self.params.revert_tolerance_mw:
            self.bp_bias_target = self._prev_bp_target
            self._revert_cooldown = self.params.revert_cooldown_ticks
        self._pre_bias_power = None

    def _is_coordinator(self, scan: BusScan) -> bool:
        state = self._eligible_for_redistribution(scan)
        eligible = [unit for unit, ok in state.items() if ok]
        return len(eligible) >= 2 and self.unit_id == min(eligible)

    def _eligible_for_redistribution(self, scan: BusScan) -> dict[int, bool]:
        out = {}
        for i in range(1, self.bus.n_units + 1):
            point = f"UnitAgent{i}"
            if i == self.unit_id:
                out[i] = self.enabled and self.mode is AgentMode.STEADY_STATE_OPTIMIZATION \
                    and self.settle == 0 and self.shed == 0.0 and self.directive == 0.0
                continue
            out[i] = (
                bool(scan.get(point, "Enable", 1.0))
                and scan.get(point, "Mode") == AgentMode.STEADY_STATE_OPTIMIZATION.value
                and float(scan.get(point, "Shed", 0.0) or 0.0) == 0.0
                and float(scan.get(point, "Directive", 0.0) or 0.0) == 0.0
                and not bool(scan.get(point, "Settling", 0.0))
                and scan.get(point, "QSP") is not None
            )
        return out

    def _propose_redistribution(self, view: UnitView, scan: BusScan, outgoing) -> None:
        estimator = self._estimator()
        if estimator is None:
            return
        eligible = self._eligible_for_redistribution(scan)
        units = []
        for i in range(1, self.bus.n_units + 1):
            if not eligible.get(i):
                continue
            if i == self.unit_id:
                q, h = view.q_sp, view.h_net
                bp_dev = view.bp - self.cam.lookup(view.gp, view.h_net)
            else:
                point = f"UnitAgent{i}"
                q = float(scan.get(point, "QSP"))
                h = float(scan.get(point, "H", view.h_net) or view.h_net)
                bp_dev = float(scan.get(point, "BPdev", 0.0) or 0.0)
            units.append(
                UnitAllocation(
                    unit=i, q=q, h_net=h, bp_dev=bp_dev,
                    q_min=self.unit_params.q_min_stable,
                    q_max=self.unit_params.q_max,
                )
            )
        if len(units) < 2:
            return
        result = redistribute_flow(units, estimator, self.params.redistribution_step)
        if not result.moves or result.predicted_gain_mw < self.params.min_gain_mw:
            return
        donor, recipient, qty = result.moves[0]
        outgoing.append(CommandItem("redistribute_from", float(donor)))
        outgoing.append(CommandItem("redistribute_to", float(recipient)))
        outgoing.append(CommandItem("redistribute_q", qty))
        self.settle = max(self.settle, self.params.settle_ticks)

    # -- shared post-phase -------------------------------------------------

    def _restore_shed_if_clear(self, view: UnitView, outgoing) -> None:
        """Give shed flow back gradually once the trouble has passed."""
        in_trouble = view.alarm_stator or view.alarm_vibration
        pending_total = self.shed + self._pending_shed_delta
        if not in_trouble and pending_total < 0.0:
            self._announce_restore(
                min(self.params.stator_shed_step, -pending_total), outgoing
            )
        if not in_trouble and self.mode in TROUBLE_MODES and pending_total >= 0.0:
            self.mode = AgentMode.STEADY_STATE_OPTIMIZATION

    def _slew_blade_bias(self, view: UnitView) -> None:
        limit = self.params.bp_slew
        gap = self.bp_bias_target - self.bp_bias
        if gap != 0.0:
            self.bp_bias += max(-limit, min(limit, gap))

    # -- publication --------------------------------------------------------

    def _count_enabled(self, scan: BusScan) -> int:
        n = 0
        for i in range(1, self.bus.n_units + 1):
            if i == self.unit_id:
                n += self.enabled
            else:
                n += bool(scan.get(f"UnitAgent{i}", "Enable", 1.0))
        return n

    def _power_at(self, view: UnitView, q: float) -> float:
        eta = 0.85
        if view.q_act > 1.0 and view.h_net > 0.1:
            eta = max(0.1, min(1.0, view.p / (K_DEFAULT * view.q_act * view.h_net)))
        return K_DEFAULT * eta * q * view.h_net

    def _unallocated(self, scan: BusScan) -> float:
        """My shed flow that no peer has picked up, per the last scan."""
        if self.shed >= 0.0:
            return 0.0
        claimed = sum(
            float(scan.get(f"UnitAgent{i}", f"ClaimsFrom{self.unit_id}", 0.0) or 0.0)
            for i in range(1, self.bus.n_units + 1)
            if i != self.unit_id
        )
        return max(0.0, -self.shed - claimed)

    def _zero_all(self) -> None:
        self.shed = 0.0
        self.claims.clear()
        self.redis = 0.0
        self.directive = 0.0
        self.bp_bias = 0.0
        self.bp_bias_target = 0.0
        self._pending_shed_delta = 0.0
        self._gen_unit_target = None
        self._pre_bias_power = None
        self.settle = 0

    def _publish(self, view, scan, outgoing: list[StatusItem], unallocated: float) -> AgentStatus:
        bias = BiasCommand(self.total_q_bias(), self.bp_bias) if self.enabled else BiasCommand(0.0, 0.0)
        write = lambda attr, value: self.bus.write_attr(
            self.name, PointAddress(self.point, attr), value
        )
        write("Qbias", bias.q_bias)
        write("BPbias", bias.bp_bias)
        write("Mode", self.mode.value)
        write("StatorAlarm", float(view.alarm_stator))
        write("VibrationAlarm", float(view.alarm_vibration))
        write("Shed", -self.shed)
        write("Redis", self.redis)
        write("Directive", self.directive)
        write("QSP", view.q_sp)
        write("H", view.h_net)
        write("BP", view.bp)
        write("BPdev", view.bp - self.cam.lookup(view.gp, view.h_net))
        write("P", view.p)
        write("Headroom", max(0.0, self.unit_params.q_max - view.q_sp))
        write("Settling", float(self.settle > 0))
        write("Unallocated", unallocated)
        for i in range(1, self.bus.n_units + 1):
            if i != self.unit_id:
                write(f"ClaimsFrom{i}", self.claims.get(i, 0.0))

        alarms = tuple(
            kind for kind, active in (
                ("stator_over_temp", view.alarm_stator),
                ("vibration", view.alarm_vibration),
            ) if active
        )
        items: list[StatusItem] = [
            BiasReport("Qbias", bias.q_bias),
            BiasReport("BPbias", bias.bp_bias),
        ]
        items.extend(AlarmItem(kind) for kind in alarms)
        items.extend(outgoing)
        self.bus.post_message(self.name, items)

        benefit = float(scan.get("Sim", f"Benefit{self.unit_id}", 0.0) or 0.0)
        return AgentStatus(
            unit=self.unit_id,
            mode=self.mode,
            bias=bias,
            enabled=self.enabled,
            alarms=alarms,
            benefit_mw=benefit,
            unallocated_cfs=unallocated,
        )
