"""Multi-unit flow coordination: redistribution and trouble-shed pickup.

Pure functions over published unit states. Every flow move is a paired
(donor, recipient) exchange of the same amount, so the coordination
component of the plant's biases sums to zero by construction. All agents
evaluate these functions over identical inputs and reach identical
conclusions, which is what lets the peer network coordinate without a
central arbiter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from ..physics import K_DEFAULT

#: (unit, h_net, q, bp_dev) -> efficiency fraction. bp_dev is the blade's
#: deviation from the cam surface: the gate follows flow and the blade
#: follows the cam automatically, so what persists as flow moves is the
#: agent's offset from the cam, not the absolute blade angle.
EtaEstimator = Callable[[int, float, float, float], float]


@dataclass(frozen=True)
class UnitAllocation:
    """One unit's flow position as seen by the coordination layer."""

    unit: int  # 1-based
    q: float  # current flow setpoint share (CFS)
    h_net: float
    bp_dev: float  # blade deviation from the cam surface (%)
    q_min: float = 2000.0
    q_max: float = 11000.0
    available: bool = True  # online, enabled, and trouble-free


@dataclass(frozen=True)
class RedistributionResult:
    deltas: dict[int, float]  # unit -> signed CFS; sums to exactly zero
    moves: list[tuple[int, int, float]]  # (donor, recipient, cfs)
    predicted_gain_mw: float
    trajectory: list[tuple[dict[int, float], float]]  # (flows, predicted plant MW)


def predicted_power(
    estimator: EtaEstimator, u: UnitAllocation, q: float
) -> float:
    """Plant-model power at flow q via the efficiency estimate (Eq. 2 form)."""
    if q <= 0.0:
        return 0.0
    eta = estimator(u.unit, u.h_net, q, u.bp_dev)
    return K_DEFAULT * eta * q * u.h_net


def _best_move(
    units: Sequence[UnitAllocation],
    flows: dict[int, float],
    estimator: EtaEstimator,
    step: float,
):
    """Single most-improving (donor, recipient) exchange, or None."""
    gains: list[tuple[float, int]] = []
    drops: list[tuple[float, int]] = []
    for u in units:
        if not u.available:
            continue
        q = flows[u.unit]
        if q + step <= u.q_max + 1e-9:
            gains.append(
                (predicted_power(estimator, u, q + step) - predicted_power(estimator, u, q), u.unit)
            )
        if q - step >= u.q_min - 1e-9:
            drops.append(
                (predicted_power(estimator, u, q) - predicted_power(estimator, u, q - step), u.unit)
            )
    best = None
    for gain, r in gains:
        for drop, d in drops:
            if d == r:
                continue
            value = gain - drop
            key = (value, -d, -r)  # deterministic tie-break by unit order
            if best is None or key > best[0]:
                best = (key, d, r, value)
    if best is None or best[3] <= 1e-12:
        return None
    return best[1], best[2], best[3]


def redistribute_flow(
    units: Sequence[UnitAllocation],
    estimator: EtaEstimator,
    step: float = 250.0,
    max_moves: int = 200,
) -> RedistributionResult:
    """Greedy hill-climb over the flow lattice at fixed total flow.

    Repeatedly moves `step` CFS from the unit with the lowest marginal
    power to the one with the highest, accepting a move only while the
    predicted plant total strictly increases, and stops at the first
    non-improving move. The returned deltas always sum to exactly zero.
    """
    net_moves = {u.unit: 0 for u in units}
    available = [u for u in units if u.available]

    def flows_now():
        return {u.unit: u.q + net_moves[u.unit] * step for u in units}

    flows = flows_now()
    total0 = sum(predicted_power(estimator, u, flows[u.unit]) for u in available)
    trajectory = [(flows, total0)]
    moves: list[tuple[int, int, float]] = []
    total = total0
    for _ in range(max_moves):
        found = _best_move(units, flows, estimator, step)
        if found is None:
            break
        donor, recipient, value = found
        net_moves[donor] -= 1
        net_moves[recipient] += 1
        flows = flows_now()
        total += value
        moves.append((donor, recipient, step))
        trajectory.append((flows, total))
    # integer move counts keep the conservation exact in floating point
    deltas = {u.unit: net_moves[u.unit] * step for u in units}
    assert sum(deltas.values()) == 0.0
    return RedistributionResult(
        deltas=deltas, moves=moves, predicted_gain_mw=total - total0,
        trajectory=trajectory,
    )


def redistribution_trajectory(
    units: Sequence[UnitAllocation],
    estimator: EtaEstimator,
    step: float = 250.0,
    past_peak_moves: int = 8,
) -> list[tuple[dict[int, float], float]]:
    """The greedy path extended past the peak for plotting.

    After the improving moves are exhausted the same donor keeps giving
    flow to the same recipient, showing the diminishing-returns rollover
    an agent must detect and stop before.
    """
    result = redistribute_flow(units, estimator, step)
    trajectory = list(result.trajectory)
    flows = dict(trajectory[-1][0])
    lookup = {u.unit: u for u in units}
    avail = [u for u in units if u.available]
    if result.moves:
        donor = lookup[result.moves[-1][0]]
        recipient = lookup[result.moves[-1][1]]
    else:
        # never-improving case: drain the weakest marginal into the best
        donor = min(
            avail,
            key=lambda u: predicted_power(estimator, u, flows[u.unit])
            - predicted_power(estimator, u, flows[u.unit] - step),
        )
        recipient = max(
            (u for u in avail if u is not donor),
            key=lambda u: predicted_power(estimator, u, flows[u.unit] + step)
            - predicted_power(estimator, u, flows[u.unit]),
        )
    for _ in range(past_peak_moves):
        if (
            flows[donor.unit] - step < donor.q_min - 1e-9
            or flows[recipient.unit] + step > recipient.q_max + 1e-9
        ):
            break
        flows[donor.unit] -= step
        flows[recipient.unit] += step
        total = sum(predicted_power(estimator, lookup[n], q) for n, q in flows.items())
        trajectory.append((dict(flows), total))
    return trajectory


def allocate_shed_flow(
    amount: float,
    receivers: Sequence[UnitAllocation],
    estimator: EtaEstimator | None,
    step: float = 250.0,
) -> dict[int, float]:
    """Distribute shed flow to healthy units by marginal-power priority.

    Allocates in `step` quanta (plus one final partial quantum) to the
    receiver with the best marginal gain that still has headroom. With no
    estimator the priority degrades to most-headroom-first. The returned
    shares sum to min(amount, total headroom); any shortfall is the
    caller's unallocated remainder.
    """
    if amount <= 0.0 or not receivers:
        return {}
    shares = {u.unit: 0.0 for u in receivers if u.available}
    if not shares:
        return {}
    lookup = {u.unit: u for u in receivers}
    remaining = amount
    while remaining > 1e-9:
        quantum = min(step, remaining)
        best = None
        for unit, share in shares.items():
            u = lookup[unit]
            q_now = u.q + share
            if q_now + quantum > u.q_max + 1e-9:
                continue
            if estimator is not None:
                value = predicted_power(estimator, u, q_now + quantum) - predicted_power(
                    estimator, u, q_now
                )
            else:
                value = u.q_max - q_now
            key = (value, -share, -unit)  # ties: smaller share, then unit order
            if best is None or key > best[0]:
                best = (key, unit)
        if best is None:
            break
        shares[best[1]] += quantum
        remaining -= quantum
    return {unit: share for unit, share in shares.items() if share > 0.0}


def release_order(holdings: dict[int, float], amount: float) -> dict[int, float]:
    """Deterministic give-back of claimed flow when a donor restores.

    Largest holding first, ties by unit order; returned amounts sum to
    min(amount, total holdings) exactly.
    """
    out: dict[int, float] = {}
    remaining = amount
    for unit in sorted(holdings, key=lambda u: (-holdings[u], u)):
        if remaining <= 1e-9:
            break
        give = min(holdings[unit], remaining)
        if give > 0.0:
            out[unit] = give
            remaining -= give
    return out


def load_eject_decision(
    p_loss_mw: float,
    power_mw: float,
    lookahead_h: float = 24.0,
    eject_duration_h: float = 0.25,
) -> bool:
    """Eject when the projected recovery beats the outage cost.

    Compares the drawdown loss accumulated over the lookahead horizon
    against the generation lost while the unit is down.
    """
    if p_loss_mw <= 0.0:
        return False
    return p_loss_mw * lookahead_h > power_mw * eject_duration_h
