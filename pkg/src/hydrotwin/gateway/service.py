"""HTTP face of the live simulation: snapshots, directives, streaming.

All writes funnel through the runner's mailbox and take effect at tick
boundaries, so a served session is replayable: the resolved event log
fed back through a batch run reproduces the trajectory exactly. Roles
come from a static token table; a directive outside the caller's role
is refused and audited, never applied.
"""

from __future__ import annotations

import json
import queue
import threading
from dataclasses import dataclass, field

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.responses import PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from ..bus import render_message
from ..sim import ScenarioEvent, SimConfig
from .runner import Directive, DirectiveError, PlantRunner, ROLE_DIRECTIVES


@dataclass
class ServiceConfig:
    tokens: dict[str, str] = field(
        default_factory=lambda: {
            "operator-token": "operator",
            "dispatch-token": "dispatch",
            "corps-token": "corps",
        }
    )
    tick_interval_s: float = 0.25  # wall seconds per simulated minute
    max_ticks: int | None = None


class SimulationService:
    """Owns the background tick loop and publishes immutable snapshots."""

    def __init__(self, runner: PlantRunner, config: ServiceConfig | None = None):
        self.runner = runner
        self.config = config or ServiceConfig()
        self._lock = threading.Lock()
        self._latest: dict | None = None
        self._tick_count = 0
        self._subscribers: list[queue.Queue] = []
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self.resolved_events: list[ScenarioEvent] = []
        self.audit: list[dict] = []

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        if self._thread is not None:
            raise RuntimeError("service already started")
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=10.0)
            self._thread = None

    def _loop(self) -> None:
        while not self._stop.is_set():
            if (
                self.config.max_ticks is not None
                and self._tick_count >= self.config.max_ticks
            ):
                break
            self.tick()
            if self.config.tick_interval_s > 0:
                self._stop.wait(self.config.tick_interval_s)

    def tick(self) -> None:
        """One simulation step; safe to call directly when not started."""
        with self._lock:
            before = len(self.runner.directive_log)
            record = self.runner.tick_once()
            for minute, d in self.runner.directive_log[before:]:
                self.resolved_events.append(
                    self.runner._directive_to_event(d) if d.kind == "load_shed"
                    else ScenarioEvent(minute, d.kind, d.unit, d.value)
                )
            snapshot = self._snapshot(record)
            self._latest = snapshot
            self._tick_count += 1
            for q in list(self._subscribers):
                try:
                    q.put_nowait(snapshot)
                except queue.Full:
                    pass

    # -- directives -----------------------------------------------------------

    def submit(self, role: str, kind: str, unit: int | None, value: float) -> Directive:
        d = Directive(role=role, kind=kind, unit=unit, value=value)
        with self._lock:
            self.runner.submit(d)
        self.audit.append(
            {"role": role, "kind": kind, "unit": unit, "value": value, "ok": True}
        )
        return d

    # -- snapshots ------------------------------------------------------------

    def _snapshot(self, record) -> dict:
        row = record.row
        units = []
        for i, t in enumerate(row.units):
            u = {
                "unit": i + 1,
                "gp_pct": round(t.gp, 3),
                "bp_pct": round(t.bp, 3),
                "h_net_ft": round(t.h_net, 4),
                "q_act_cfs": round(t.q_act, 2),
                "q_sp_cfs": round(t.q_sp, 2),
                "p_mw": round(t.p, 5),
                "stator_temp_f": round(t.stator_temp, 2),
                "vibration_mils": round(t.vibration, 2),
                "online": self.runner.sim.units[i].online,
            }
            if record.statuses:
                s = record.statuses[i]
                u["agent"] = {
                    "mode": s.mode.value,
                    "enabled": s.enabled,
                    "q_bias_cfs": round(s.bias.q_bias, 2),
                    "bp_bias_pct": round(s.bias.bp_bias, 3),
                    "benefit_mw": round(s.benefit_mw, 4),
                    "alarms": list(s.alarms),
                    "unallocated_cfs": round(s.unallocated_cfs, 1),
                }
            units.append(u)
        return {
            "minute": row.minute,
            "units": units,
            "plant": {
                "h_net_ft": round(row.plant_h_net, 4),
                "sum_q_act_cfs": round(row.plant_sum_q_act, 2),
                "sum_q_sp_cfs": round(row.plant_sum_q_sp, 2),
                "sum_p_mw": round(row.plant_sum_p, 5),
                "q_sp_target_cfs": self.runner.sim.plant_q_sp,
                "load_target_mw": self.runner.load_target,
                "season": self.runner.sim.season,
                "benefit_mw": round(record.benefit_mw, 4),
                "benefit_mwh": round(sum(self.runner.benefit_mwh), 4),
            },
            "alarms": [
                {"unit": a.unit, "kind": a.kind, "value": round(a.value, 2)}
                for a in row.alarms
            ],
        }

    @property
    def latest(self) -> dict | None:
        return self._latest

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=256)
        self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        if q in self._subscribers:
            self._subscribers.remove(q)


class DirectiveBody(BaseModel):
    kind: str
    unit: int | None = None
    value: float = 0.0


def create_app(service: SimulationService) -> FastAPI:
    app = FastAPI(title="hydrotwin gateway", docs_url=None, redoc_url=None)

    def role_for(x_auth_token: str = Header(default="")) -> str:
        role = service.config.tokens.get(x_auth_token)
        if role is None:
            raise HTTPException(status_code=401, detail="unknown token")
        return role

    @app.get("/whoami")
    def whoami(role: str = Depends(role_for)):
        return {"role": role}

    @app.get("/plant")
    def plant(role: str = Depends(role_for)):
        if service.latest is None:
            raise HTTPException(status_code=503, detail="no tick yet")
        return service.latest["plant"] | {"minute": service.latest["minute"]}

    @app.get("/units")
    def units(role: str = Depends(role_for)):
        if service.latest is None:
            raise HTTPException(status_code=503, detail="no tick yet")
        return {"minute": service.latest["minute"], "units": service.latest["units"]}

    @app.get("/snapshot")
    def snapshot(role: str = Depends(role_for)):
        if service.latest is None:
            raise HTTPException(status_code=503, detail="no tick yet")
        return service.latest

    @app.get("/agents")
    def agents(role: str = Depends(role_for)):
        if service.latest is None:
            raise HTTPException(status_code=503, detail="no tick yet")
        return {
            "minute": service.latest["minute"],
            "agents": [
                {"unit": u["unit"], **u["agent"]}
                for u in service.latest["units"]
                if "agent" in u
            ],
        }

    @app.get("/messages")
    def messages(since_id: int = 0, role: str = Depends(role_for)):
        msgs = service.runner.bus.poll_messages(since_id)
        return {"messages": [render_message(m) for m in msgs[-500:]]}

    @app.get("/directive-log")
    def directive_log(role: str = Depends(role_for)):
        return {
            "resolved_events": [
                {"at_minute": e.at_minute, "kind": e.kind, "unit": e.unit, "value": e.value}
                for e in service.resolved_events
            ]
        }

    @app.post("/directives")
    def directives(body: DirectiveBody, role: str = Depends(role_for)):
        allowed = ROLE_DIRECTIVES.get(role, frozenset())
        if body.kind not in allowed:
            service.audit.append(
                {"role": role, "kind": body.kind, "unit": body.unit,
                 "value": body.value, "ok": False}
            )
            raise HTTPException(
                status_code=403, detail=f"role {role!r} may not issue {body.kind!r}"
            )
        try:
            service.submit(role, body.kind, body.unit, body.value)
        except DirectiveError as e:
            raise HTTPException(status_code=400, detail=str(e)) from None
        return {"accepted": True, "kind": body.kind, "role": role}

    @app.get("/stream")
    def stream(role: str = Depends(role_for)):
        def gen():
            q = service.subscribe()
            try:
                if service.latest is not None:
                    yield json.dumps(service.latest, separators=(",", ":")) + "\n"
                while True:
                    try:
                        snapshot = q.get(timeout=30.0)
                    except queue.Empty:
                        break
                    yield json.dumps(snapshot, separators=(",", ":")) + "\n"
            finally:
                service.unsubscribe(q)

        return StreamingResponse(gen(), media_type="application/x-ndjson")

    @app.get("/audit", response_class=PlainTextResponse)
    def audit(role: str = Depends(role_for)):
        return service.runner.bus.audit_csv()

    return app


def serve(
    config: SimConfig,
    db=None,
    service_config: ServiceConfig | None = None,
    host: str = "127.0.0.1",
    port: int = 8171,
    with_agents: bool = True,
):
    """Run the gateway under uvicorn (blocking)."""
    import uvicorn

    runner = PlantRunner(config, db=db, with_agents=with_agents)
    service = SimulationService(runner, service_config)
    app = create_app(service)
    service.start()
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        service.stop()
