"""Operating-state database mined from archived telemetry.

Steady-state detection is run-length based: a maximal run of consecutive
minutes in which head, flow, and blade position all hold within tolerance
bands becomes one cluster, provided it has the minimal support. Patterns
are "adjacent" in time, so this is deterministic and auditable, unlike a
distance-based clusterer. Alarm-contaminated and offline minutes are not
eligible: the database is meant to describe healthy achievable states.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .physics import K_DEFAULT

#: per-unit telemetry fields, in CSV column order
UNIT_FIELDS = ("gp", "bp", "h_net", "q_act", "q_sp", "p", "stator_temp", "vibration")
PLANT_FIELDS = ("plant_h_net", "plant_sum_q_act", "plant_sum_q_sp", "plant_sum_p")

#: default (h, q) bin widths for the cluster index
H_BIN_FT = 0.5
Q_BIN_CFS = 250.0

#: relative mismatch allowed between plant sums and per-unit sums
SUM_VALIDATION_REL = 1e-3


class SchemaError(ValueError):
    """Telemetry header does not match the documented schema."""


@dataclass(frozen=True, slots=True)
class UnitPatternRow:
    gp: float
    bp: float
    h_net: float
    q_act: float
    q_sp: float
    p: float
    stator_temp: float
    vibration: float


@dataclass(frozen=True, slots=True)
class OperatingPattern:
    """One time-stamped one-minute sample of the whole plant."""

    timestamp: float  # minutes
    units: tuple[UnitPatternRow, ...]
    plant_h_net: float
    plant_sum_q_act: float
    plant_sum_q_sp: float
    plant_sum_p: float


@dataclass(frozen=True)
class ClusterRecord:
    """One steady-state operating point, mean over its member minutes."""

    unit: int  # 1-based source unit
    h_net: float
    q_sp: float
    q_act: float
    gp: float
    bp: float
    p: float
    eta: float
    support: int
    start_minute: float
    end_minute: float


@dataclass(frozen=True)
class SteadyStateTolerances:
    """Bands a run must hold to count as one steady state."""

    h_band_ft: float = 0.2
    q_rel_band: float = 0.02
    bp_band_pct: float = 0.5
    min_support: int = 15

    def __post_init__(self):
        if self.min_support < 1:
            raise ValueError("min_support must be >= 1")


@dataclass(frozen=True, slots=True)
class AlarmLogRow:
    minute: float
    unit: int
    kind: str
    value: float


def expected_header(n_units: int) -> list[str]:
    cols = ["minute"]
    for i in range(1, n_units + 1):
        cols.extend(f"u{i}_{f}" for f in UNIT_FIELDS)
    cols.extend(PLANT_FIELDS)
    return cols


def _n_units_from_header(header: list[str]) -> int:
    n = sum(1 for c in header if c.endswith("_gp") and c.startswith("u"))
    if n < 1 or header != expected_header(n):
        raise SchemaError(
            f"telemetry header does not match the documented schema "
            f"(got {len(header)} columns)"
        )
    return n


def ingest_iter(
    path, diagnostics: list[str] | None = None
) -> Iterator[OperatingPattern]:
    """Stream validated patterns from a telemetry CSV.

    Malformed rows and rows whose plant sums disagree with the per-unit
    sums by more than 0.1% are skipped; a line-numbered diagnostic is
    appended to `diagnostics` when given.
    """
    nf = len(UNIT_FIELDS)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected a telemetry header")
        n = _n_units_from_header(header)
        width = 1 + n * nf + len(PLANT_FIELDS)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != width:
                if diagnostics is not None:
                    diagnostics.append(f"line {lineno}: expected {width} fields, got {len(row)}")
                continue
            try:
                vals = [float(x) for x in row]
            except ValueError as e:
                if diagnostics is not None:
                    diagnostics.append(f"line {lineno}: {e}")
                continue
            units = tuple(
                UnitPatternRow(*vals[1 + i * nf : 1 + (i + 1) * nf]) for i in range(n)
            )
            plant = vals[1 + n * nf :]
            sums = (
                sum(u.q_act for u in units),
                sum(u.q_sp for u in units),
                sum(u.p for u in units),
            )
            ok = True
            for got, expect, name in zip(
                (plant[1], plant[2], plant[3]), sums, ("q_act", "q_sp", "p")
            ):
                if abs(got - expect) > SUM_VALIDATION_REL * max(abs(got), 1.0):
                    if diagnostics is not None:
                        diagnostics.append(
                            f"line {lineno}: plant {name} {got} != unit sum {expect}"
                        )
                    ok = False
                    break
            if not ok:
                continue
            yield OperatingPattern(
                timestamp=vals[0],
                units=units,
                plant_h_net=plant[0],
                plant_sum_q_act=plant[1],
                plant_sum_q_sp=plant[2],
                plant_sum_p=plant[3],
            )


def ingest(path, diagnostics: list[str] | None = None) -> list[OperatingPattern]:
    """Parse and validate a telemetry CSV into patterns."""
    return list(ingest_iter(path, diagnostics))


def load_alarm_log(path) -> list[AlarmLogRow]:
    rows = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["minute", "unit", "kind", "value"]:
            raise SchemaError(f"{path}: bad alarm log header {header}")
        for row in reader:
            rows.append(AlarmLogRow(float(row[0]), int(row[1]), row[2], float(row[3])))
    return rows


def alarmed_minutes(rows: Iterable[AlarmLogRow]) -> dict[int, set[float]]:
    """Per-unit set of contaminated minutes."""
    out: dict[int, set[float]] = {}
    for r in rows:
        out.setdefault(r.unit, set()).add(r.minute)
    return out


class _Run:
    """Accumulator for one candidate steady-state run of a single unit."""

    __slots__ = ("count", "start", "end", "h_lo", "h_hi", "q_lo", "q_hi",
                 "bp_lo", "bp_hi", "sums")

    def __init__(self, minute: float, u: UnitPatternRow):
        self.count = 1
        self.start = minute
        self.end = minute
        self.h_lo = self.h_hi = u.h_net
        self.q_lo = self.q_hi = u.q_act
        self.bp_lo = self.bp_hi = u.bp
        self.sums = [u.h_net, u.q_sp, u.q_act, u.gp, u.bp, u.p]

    def fits(self, u: UnitPatternRow, tol: SteadyStateTolerances) -> bool:
        h_lo, h_hi = min(self.h_lo, u.h_net), max(self.h_hi, u.h_net)
        q_lo, q_hi = min(self.q_lo, u.q_act), max(self.q_hi, u.q_act)
        bp_lo, bp_hi = min(self.bp_lo, u.bp), max(self.bp_hi, u.bp)
        q_mean = (self.sums[2] + u.q_act) / (self.count + 1)
        return (
            h_hi - h_lo <= tol.h_band_ft
            and q_hi - q_lo <= tol.q_rel_band * max(q_mean, 1.0)
            and bp_hi - bp_lo <= tol.bp_band_pct
        )

    def add(self, minute: float, u: UnitPatternRow) -> None:
        self.count += 1
        self.end = minute
        self.h_lo = min(self.h_lo, u.h_net)
        self.h_hi = max(self.h_hi, u.h_net)
        self.q_lo = min(self.q_lo, u.q_act)
        self.q_hi = max(self.q_hi, u.q_act)
        self.bp_lo = min(self.bp_lo, u.bp)
        self.bp_hi = max(self.bp_hi, u.bp)
        s = self.sums
        s[0] += u.h_net
        s[1] += u.q_sp
        s[2] += u.q_act
        s[3] += u.gp
        s[4] += u.bp
        s[5] += u.p

    def to_cluster(self, unit: int) -> ClusterRecord | None:
        n = self.count
        h, q_sp, q_act, gp, bp, p = (v / n for v in self.sums)
        if q_sp <= 0.0 or h <= 0.0 or p <= 0.0:
            return None
        eta = p / (K_DEFAULT * q_sp * h)
        if not 0.0 < eta <= 1.0:
            return None
        return ClusterRecord(
            unit=unit, h_net=h, q_sp=q_sp, q_act=q_act, gp=gp, bp=bp, p=p,
            eta=eta, support=n, start_minute=self.start, end_minute=self.end,
        )


class StateDb:
    """Clusters indexed by (h bin, q bin) with per-unit provenance."""

    def __init__(
        self,
        clusters: list[ClusterRecord],
        h_bin_ft: float = H_BIN_FT,
        q_bin_cfs: float = Q_BIN_CFS,
        source: str = "",
    ):
        self.clusters = list(clusters)
        self.h_bin_ft = h_bin_ft
        self.q_bin_cfs = q_bin_cfs
        self.source = source
        self._index: dict[tuple[int, int], list[ClusterRecord]] = {}
        for c in self.clusters:
            self._index.setdefault(self.bin_of(c.h_net, c.q_sp), []).append(c)
        self._coord_cache: dict[int | None, tuple[np.ndarray, list[ClusterRecord]]] = {}

    def __len__(self) -> int:
        return len(self.clusters)

    def bin_of(self, h_net: float, q: float) -> tuple[int, int]:
        return (int(np.floor(h_net / self.h_bin_ft)), int(np.floor(q / self.q_bin_cfs)))

    def clusters_in_bin(self, key: tuple[int, int]) -> list[ClusterRecord]:
        return self._index.get(key, [])

    def query_best_bp(
        self, h_net: float, q_sp: float, p_act: float, unit: int | None = None
    ) -> tuple[float, float] | None:
        """Best known blade position for similar head and flow.

        Searches the query bin and its eight neighbours; returns
        (bp_control, p_opt) of the highest-power matching cluster only if
        that power strictly beats p_act.
        """
        hb, qb = self.bin_of(h_net, q_sp)
        best: ClusterRecord | None = None
        for dh in (-1, 0, 1):
            for dq in (-1, 0, 1):
                for c in self._index.get((hb + dh, qb + dq), ()):
                    if unit is not None and c.unit != unit:
                        continue
                    if best is None or c.p > best.p + 1e-12 or (
                        abs(c.p - best.p) <= 1e-12 and (c.unit, c.start_minute)
                        < (best.unit, best.start_minute)
                    ):
                        best = c
        if best is None or best.p <= p_act:
            return None
        return (best.bp, best.p)

    def _coords(self, unit: int | None):
        if unit not in self._coord_cache:
            subset = [c for c in self.clusters if unit is None or c.unit == unit]
            arr = np.array(
                [[c.h_net / self.h_bin_ft, c.q_sp / self.q_bin_cfs, c.bp] for c in subset]
            ) if subset else np.empty((0, 3))
            self._coord_cache[unit] = (arr, subset)
        return self._coord_cache[unit]

    def estimate_efficiency(
        self, h_net: float, q: float, bp: float, unit: int | None = None, k: int = 4
    ) -> float:
        """Inverse-distance-weighted efficiency over the k nearest clusters.

        Distances are taken in normalized (h, q, bp) space; a query that
        lands exactly on a cluster returns that cluster's efficiency.
        """
        coords, subset = self._coords(unit)
        if not subset:
            raise ValueError("state database has no matching clusters")
        query = np.array([h_net / self.h_bin_ft, q / self.q_bin_cfs, bp])
        d2 = np.sum((coords - query) ** 2, axis=1)
        order = np.argsort(d2, kind="stable")[: max(1, k)]
        nearest = d2[order]
        if nearest[0] < 1e-18:
            return subset[int(order[0])].eta
        weights = 1.0 / nearest
        etas = np.array([subset[int(i)].eta for i in order])
        return float(np.sum(weights * etas) / np.sum(weights))

    # -- persistence ----------------------------------------------------

    _CSV_HEADER = [
        "unit", "h_net", "q_sp", "q_act", "gp", "bp", "p", "eta", "support",
        "start_minute", "end_minute",
    ]

    def save(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(self._CSV_HEADER)
            for c in self.clusters:
                w.writerow(
                    [c.unit] + [repr(float(v)) for v in (
                        c.h_net, c.q_sp, c.q_act, c.gp, c.bp, c.p, c.eta)]
                    + [c.support, repr(float(c.start_minute)), repr(float(c.end_minute))]
                )

    @classmethod
    def load(cls, path, h_bin_ft: float = H_BIN_FT, q_bin_cfs: float = Q_BIN_CFS) -> "StateDb":
        clusters = []
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != cls._CSV_HEADER:
                raise SchemaError(f"{path}: bad cluster database header")
            for row in reader:
                clusters.append(
                    ClusterRecord(
                        unit=int(row[0]),
                        h_net=float(row[1]), q_sp=float(row[2]), q_act=float(row[3]),
                        gp=float(row[4]), bp=float(row[5]), p=float(row[6]),
                        eta=float(row[7]), support=int(row[8]),
                        start_minute=float(row[9]), end_minute=float(row[10]),
                    )
                )
        return cls(clusters, h_bin_ft=h_bin_ft, q_bin_cfs=q_bin_cfs, source=str(path))


def cluster(
    patterns: Iterable[OperatingPattern],
    tolerances: SteadyStateTolerances | None = None,
    alarm_rows: Iterable[AlarmLogRow] | None = None,
    h_bin_ft: float = H_BIN_FT,
    q_bin_cfs: float = Q_BIN_CFS,
    dt_min: float = 1.0,
    min_eligible_flow: float = 100.0,
    source: str = "",
) -> StateDb:
    """Mine steady-state clusters from time-ordered patterns.

    A cluster is a maximal run of consecutive eligible minutes whose
    per-unit h_net, q_act, and bp all stay inside the tolerance bands;
    runs shorter than the minimal support are discarded. Only online,
    alarm-free minutes are eligible.
    """
    tol = tolerances or SteadyStateTolerances()
    contaminated = alarmed_minutes(alarm_rows) if alarm_rows is not None else {}
    runs: dict[int, _Run | None] = {}
    last_minute: dict[int, float] = {}
    clusters: list[ClusterRecord] = []

    def close(unit: int) -> None:
        run = runs.get(unit)
        if run is not None and run.count >= tol.min_support:
            rec = run.to_cluster(unit)
            if rec is not None:
                clusters.append(rec)
        runs[unit] = None

    n_units = 0
    for pat in patterns:
        n_units = max(n_units, len(pat.units))
        for idx, u in enumerate(pat.units):
            unit = idx + 1
            eligible = (
                u.q_act > min_eligible_flow
                and pat.timestamp not in contaminated.get(unit, ())
            )
            run = runs.get(unit)
            contiguous = (
                run is not None
                and abs(pat.timestamp - last_minute.get(unit, -1e18) - dt_min) < 1e-9
            )
            if not eligible:
                close(unit)
            elif run is not None and contiguous and run.fits(u, tol):
                run.add(pat.timestamp, u)
            else:
                close(unit)
                runs[unit] = _Run(pat.timestamp, u)
            last_minute[unit] = pat.timestamp
    for unit in list(runs):
        close(unit)

    clusters.sort(key=lambda c: (c.unit, c.start_minute))
    return StateDb(clusters, h_bin_ft=h_bin_ft, q_bin_cfs=q_bin_cfs, source=source)


def count_events(
    rows: Iterable[AlarmLogRow],
    kind: str,
    threshold: float,
    min_duration: float,
    dt_min: float = 1.0,
) -> dict[int, int]:
    """Count maximal over-threshold episodes strictly longer than min_duration.

    An episode is a run of consecutive minutes (per unit) whose logged
    value exceeds the threshold. Duration is row count times dt.
    """
    episodes: dict[int, int] = {}
    current: dict[int, tuple[float, int]] = {}  # unit -> (last minute, length)

    def finish(unit: int) -> None:
        last = current.pop(unit, None)
        if last is not None and last[1] * dt_min > min_duration:
            episodes[unit] = episodes.get(unit, 0) + 1

    for r in rows:
        if r.kind != kind:
            continue
        if r.value <= threshold:
            finish(r.unit)
            continue
        prev = current.get(r.unit)
        if prev is not None and abs(r.minute - prev[0] - dt_min) < 1e-9:
            current[r.unit] = (r.minute, prev[1] + 1)
        else:
            finish(r.unit)
            current[r.unit] = (r.minute, 1)
    for unit in list(current):
        finish(unit)
    return episodes
