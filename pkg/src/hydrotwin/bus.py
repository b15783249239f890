"""Process-point message fabric.

Communication runs over point.attribute structures the way a control
system's own point database would carry it: each agent writes only its
own point but can read any other, SCADA roles get explicit write grants,
and messages ride an in-process ordered board with bus-assigned ids.
Everything is tick-synchronous and deterministic; timestamps come from
the simulation clock, never the wall clock.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

DEFAULT_USERS = ("operator", "corps", "dispatch")


class BusPermissionError(PermissionError):
    """Write to a point the writer neither owns nor is granted."""


def _canon_float(v: float, signed: bool = False) -> str:
    """Shortest exact rendering; integral values drop the trailing .0."""
    text = repr(int(v)) if v == int(v) and abs(v) < 1e15 else repr(float(v))
    if signed and v >= 0:
        text = "+" + text
    return text


class AddressNotFound(KeyError):
    """Read of a point or attribute that has never been written."""


class MessageParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


@dataclass(frozen=True)
class PointAddress:
    """point.attribute address, e.g. UnitAgent1.Qbias."""

    point: str
    attribute: str

    def __post_init__(self):
        if not self.point or not self.attribute:
            raise ValueError("point and attribute must be non-empty")
        if "." in self.point:
            raise ValueError("point name must not contain '.'")

    def render(self) -> str:
        return f"{self.point}.{self.attribute}"

    @classmethod
    def parse(cls, text: str) -> "PointAddress":
        point, sep, attr = text.partition(".")
        if not sep:
            raise ValueError(f"address {text!r} is not in point.attribute form")
        return cls(point, attr)


@dataclass(frozen=True)
class AttrValue:
    value: Union[float, str]
    minute: float
    version: int


@dataclass
class ProcessPoint:
    """Named multi-attribute structure with single-writer ownership."""

    name: str
    owner: str
    attributes: dict[str, AttrValue] = field(default_factory=dict)


# -- message status items (tagged union) --------------------------------

@dataclass(frozen=True)
class BiasReport:
    """Qbias=+1000CFS or BPbias=+10%."""

    name: str  # 'Qbias' | 'BPbias'
    value: float

    _UNITS = {"Qbias": "CFS", "BPbias": "%"}

    def __post_init__(self):
        if self.name not in self._UNITS:
            raise ValueError(f"unknown bias report {self.name!r}")

    def render(self) -> str:
        return f"{self.name}={_canon_float(self.value, signed=True)}{self._UNITS[self.name]}"


@dataclass(frozen=True)
class AlarmItem:
    """alarm:stator_over_temp and friends."""

    kind: str

    def __post_init__(self):
        if not re.fullmatch(r"[a-z][a-z0-9_]*", self.kind):
            raise ValueError(f"alarm kind {self.kind!r} must be a lowercase identifier")

    def render(self) -> str:
        return f"alarm:{self.kind}"


@dataclass(frozen=True)
class CommandItem:
    """cmd:new_qsp=25000, cmd:load_shed=2.5, cmd:disable_agent=2 ..."""

    name: str
    value: float | None = None

    def __post_init__(self):
        if not re.fullmatch(r"[a-z][a-z0-9_]*", self.name):
            raise ValueError(f"command name {self.name!r} must be a lowercase identifier")

    def render(self) -> str:
        if self.value is None:
            return f"cmd:{self.name}"
        return f"cmd:{self.name}={_canon_float(self.value)}"


StatusItem = Union[BiasReport, AlarmItem, CommandItem]

_BIAS_RE = re.compile(r"(Qbias|BPbias)=([+-][0-9.eE+-]+)(CFS|%)\Z")
_ALARM_RE = re.compile(r"alarm:([a-z][a-z0-9_]*)\Z")
_CMD_RE = re.compile(r"cmd:([a-z][a-z0-9_]*)(?:=([0-9.eE+-]+))?\Z")


def parse_status_item(text: str, offset: int = 0) -> StatusItem:
    m = _BIAS_RE.match(text)
    if m:
        name, raw, unit = m.groups()
        if BiasReport._UNITS[name] != unit:
            raise MessageParseError(f"wrong unit {unit!r} for {name}", offset)
        return BiasReport(name, float(raw))
    m = _ALARM_RE.match(text)
    if m:
        return AlarmItem(m.group(1))
    m = _CMD_RE.match(text)
    if m:
        name, raw = m.groups()
        return CommandItem(name, float(raw) if raw is not None else None)
    raise MessageParseError(f"unrecognized status item {text!r}", offset)


@dataclass(frozen=True)
class Message:
    id: int
    user: str
    status: tuple[StatusItem, ...]

    def __post_init__(self):
        if not self.status:
            raise ValueError("status list must be non-empty")


def render_message(m: Message) -> str:
    body = ";".join(item.render() for item in m.status)
    return f"ID:{m.id}|User:{m.user}|Status:{body}"


def parse_message(text: str, known_users: Iterable[str] | None = None) -> Message:
    """Parse the canonical encoding; failures carry offset diagnostics."""
    fields = text.split("|")
    if len(fields) != 3:
        raise MessageParseError("expected 'ID:|User:|Status:' fields", 0)
    offset = 0
    parts = []
    for label, fld in zip(("ID:", "User:", "Status:"), fields):
        if not fld.startswith(label):
            raise MessageParseError(f"expected field {label!r}", offset)
        parts.append(fld[len(label):])
        offset += len(fld) + 1
    try:
        mid = int(parts[0])
    except ValueError:
        raise MessageParseError(f"bad message id {parts[0]!r}", 3) from None
    user = parts[1]
    if known_users is not None and user not in set(known_users):
        raise MessageParseError(f"unknown user {user!r}", len(fields[0]) + 1)
    items = []
    offset = len(fields[0]) + len(fields[1]) + 2 + len("Status:")
    body = parts[2]
    if not body:
        raise MessageParseError("empty status list", offset)
    for chunk in body.split(";"):
        items.append(parse_status_item(chunk, offset))
        offset += len(chunk) + 1
    return Message(mid, user, tuple(items))


# -- the bus -------------------------------------------------------------

@dataclass(frozen=True)
class AuditEntry:
    minute: float
    identity: str
    address: str
    action: str  # 'write' | 'write-denied' | 'post'
    detail: str = ""


@dataclass(frozen=True)
class WriteGrant:
    """Role-based write permission for one point attribute.

    point may end with '*' to grant a prefix family (UnitAgent*).
    """

    identity: str
    point: str
    attribute: str

    def allows(self, identity: str, point: str, attribute: str) -> bool:
        if identity != self.identity or attribute != self.attribute:
            return False
        if self.point.endswith("*"):
            return point.startswith(self.point[:-1])
        return point == self.point


def default_grants() -> tuple[WriteGrant, ...]:
    return (
        WriteGrant("corps", "Plant", "QSP"),
        WriteGrant("dispatch", "Plant", "LoadTarget"),
        WriteGrant("dispatch", "Plant", "LoadShed"),
        WriteGrant("operator", "UnitAgent*", "Enable"),
    )


class MessageBus:
    """In-process, tick-synchronous point database and message board."""

    def __init__(self, n_units: int = 3, grants: Iterable[WriteGrant] | None = None):
        self.n_units = n_units
        self.users = tuple(DEFAULT_USERS) + tuple(f"unit{i}" for i in range(1, n_units + 1))
        self.grants = tuple(grants) if grants is not None else default_grants()
        self.points: dict[str, ProcessPoint] = {}
        self.messages: list[Message] = []
        self.audit_log: list[AuditEntry] = []
        self.minute = 0.0
        self._next_id = 1
        self._last_id_by_origin: dict[str, int] = {}
        self.define_point("Plant", owner="sim")
        self.define_point("Sim", owner="sim")
        for i in range(1, n_units + 1):
            self.define_point(f"UnitAgent{i}", owner=f"unit{i}")

    def set_clock(self, minute: float) -> None:
        self.minute = minute

    def define_point(self, name: str, owner: str) -> None:
        if name in self.points:
            raise ValueError(f"point {name} already defined")
        self.points[name] = ProcessPoint(name=name, owner=owner)

    def _may_write(self, identity: str, point: ProcessPoint, attribute: str) -> bool:
        if identity == point.owner:
            return True
        return any(g.allows(identity, point.name, attribute) for g in self.grants)

    def write_attr(self, identity: str, addr: PointAddress, value: Union[float, str]) -> None:
        point = self.points.get(addr.point)
        if point is None:
            raise AddressNotFound(addr.render())
        if not self._may_write(identity, point, addr.attribute):
            self.audit_log.append(
                AuditEntry(self.minute, identity, addr.render(), "write-denied")
            )
            raise BusPermissionError(
                f"{identity} may not write {addr.render()} (owner {point.owner})"
            )
        prev = point.attributes.get(addr.attribute)
        version = (prev.version + 1) if prev is not None else 1
        point.attributes[addr.attribute] = AttrValue(value, self.minute, version)
        self.audit_log.append(
            AuditEntry(self.minute, identity, addr.render(), "write", str(value))
        )

    def read_attr(self, identity: str, addr: PointAddress) -> AttrValue:
        point = self.points.get(addr.point)
        if point is None or addr.attribute not in point.attributes:
            raise AddressNotFound(addr.render())
        return point.attributes[addr.attribute]

    def try_read(self, identity: str, addr: PointAddress):
        try:
            return self.read_attr(identity, addr)
        except AddressNotFound:
            return None

    def post_message(self, user: str, status: Iterable[StatusItem]) -> Message:
        if user not in self.users:
            raise ValueError(f"unknown user {user!r}")
        items = tuple(status)
        message = Message(self._next_id, user, items)  # validates non-empty
        last = self._last_id_by_origin.get(user, 0)
        assert message.id > last, "bus id assignment broke per-origin monotonicity"
        self._next_id += 1
        self._last_id_by_origin[user] = message.id
        self.messages.append(message)
        self.audit_log.append(
            AuditEntry(self.minute, user, "", "post", render_message(message))
        )
        return message

    def poll_messages(self, since_id: int = 0) -> list[Message]:
        """Messages with id > since_id, in id order."""
        return [m for m in self.messages if m.id > since_id]

    # -- debugging aids --------------------------------------------------

    def dump_points(self) -> str:
        lines = []
        for name in sorted(self.points):
            point = self.points[name]
            lines.append(f"[{name}] owner={point.owner}")
            for attr in sorted(point.attributes):
                v = point.attributes[attr]
                lines.append(f"  {name}.{attr} = {v.value} @m{v.minute:g} v{v.version}")
        return "\n".join(lines)

    def audit_csv(self) -> str:
        lines = ["minute,identity,address,action,detail"]
        for e in self.audit_log:
            detail = e.detail.replace('"', "'")
            lines.append(f'{e.minute:g},{e.identity},{e.address},{e.action},"{detail}"')
        return "\n".join(lines)
