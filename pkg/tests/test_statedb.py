import math

import numpy as np
import pytest

from hydrotwin.control import default_cam
from hydrotwin.physics import K_DEFAULT
from hydrotwin.sim import SimConfig, TruthEfficiencyModel, UnitParams, synthesize_history, true_efficiency
from hydrotwin.statedb import (
    AlarmLogRow,
    ClusterRecord,
    OperatingPattern,
    SchemaError,
    StateDb,
    SteadyStateTolerances,
    UnitPatternRow,
    alarmed_minutes,
    cluster,
    count_events,
    expected_header,
    ingest,
    ingest_iter,
    load_alarm_log,
)


def unit_row(q=8000.0, h=34.0, bp=62.0, p=20.5, gp=72.0):
    return UnitPatternRow(gp=gp, bp=bp, h_net=h, q_act=q, q_sp=q, p=p,
                          stator_temp=120.0, vibration=2.0)


def pattern(minute, rows):
    return OperatingPattern(
        timestamp=minute,
        units=tuple(rows),
        plant_h_net=rows[0].h_net,
        plant_sum_q_act=sum(r.q_act for r in rows),
        plant_sum_q_sp=sum(r.q_sp for r in rows),
        plant_sum_p=sum(r.p for r in rows),
    )


def steady_patterns(count, start=0.0, **kw):
    return [pattern(start + m, [unit_row(**kw)]) for m in range(count)]


@pytest.fixture(scope="module")
def one_day_files(tmp_path_factory):
    base = tmp_path_factory.mktemp("archive")
    tele, alarm = base / "history.csv", base / "alarms.csv"
    synthesize_history(SimConfig(rng_seed=5), days=1, telemetry_path=tele, alarm_path=alarm)
    return tele, alarm


class TestIngest:
    def test_count_preservation(self, one_day_files):
        tele, _ = one_day_files
        diags = []
        patterns = ingest(tele, diagnostics=diags)
        assert len(patterns) == 1440
        assert diags == []

    def test_bad_sum_row_rejected_with_line_number(self, one_day_files, tmp_path):
        tele, _ = one_day_files
        lines = tele.read_text().splitlines()
        parts = lines[10].split(",")
        parts[-3] = str(float(parts[-3]) * 1.5)  # corrupt plant_sum_q_act
        lines[10] = ",".join(parts)
        bad = tmp_path / "tampered.csv"
        bad.write_text("\n".join(lines) + "\n")
        diags = []
        patterns = ingest(bad, diagnostics=diags)
        assert len(patterns) == 1439
        assert len(diags) == 1 and "line 11" in diags[0]

    def test_empty_file_with_header(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(",".join(expected_header(3)) + "\n")
        assert ingest(path) == []

    def test_schema_mismatch_is_hard_error(self, tmp_path):
        path = tmp_path / "bad_header.csv"
        path.write_text("time,stuff\n1,2\n")
        with pytest.raises(SchemaError):
            ingest(path)

    def test_unparseable_row_skipped(self, tmp_path):
        header = ",".join(expected_header(1))
        good = "1," + ",".join(["1"] * 8) + ",34,1,1,1"
        bad = "2," + ",".join(["x"] * 8) + ",34,1,1,1"
        path = tmp_path / "mixed.csv"
        path.write_text(f"{header}\n{good}\n{bad}\n")
        diags = []
        assert len(ingest(path, diagnostics=diags)) == 1
        assert len(diags) == 1 and "line 3" in diags[0]


class TestClustering:
    def test_minimal_support_met(self):
        db = cluster(steady_patterns(15))
        assert len(db) == 1
        assert db.clusters[0].support == 15

    def test_below_support_discarded(self):
        pats = steady_patterns(14) + steady_patterns(14, start=14.0, q=10000.0, bp=70.0)
        db = cluster(pats)
        assert len(db) == 0

    def test_maximal_run_not_split(self):
        db = cluster(steady_patterns(45))
        assert len(db) == 1
        assert db.clusters[0].support == 45

    def test_band_violation_starts_new_run(self):
        pats = steady_patterns(20) + steady_patterns(20, start=20.0, h=35.0)
        db = cluster(pats)
        assert len(db) == 2
        assert {round(c.h_net, 1) for c in db.clusters} == {34.0, 35.0}

    def test_time_gap_breaks_run(self):
        pats = steady_patterns(10) + steady_patterns(10, start=100.0)
        assert len(cluster(pats)) == 0

    def test_offline_minutes_ineligible(self):
        pats = steady_patterns(10) + steady_patterns(5, start=10.0, q=0.0, p=0.0) \
            + steady_patterns(10, start=15.0)
        assert len(cluster(pats)) == 0

    def test_alarmed_minutes_excluded(self):
        pats = steady_patterns(30)
        alarms = [AlarmLogRow(minute=float(m), unit=1, kind="stator_temp", value=185.0)
                  for m in range(12, 18)]
        db = cluster(pats, alarm_rows=alarms)
        # the alarm punches a hole: 12 + 12 minutes, both below support
        assert len(db) == 0
        db_all = cluster(pats)
        assert len(db_all) == 1

    def test_cluster_mean_within_bands_of_members(self):
        rng = np.random.default_rng(3)
        pats = []
        for m in range(40):
            pats.append(pattern(float(m), [unit_row(
                q=8000.0 + rng.uniform(-60, 60),
                h=34.0 + rng.uniform(-0.08, 0.08),
                bp=62.0 + rng.uniform(-0.2, 0.2),
            )]))
        db = cluster(pats)
        assert len(db) == 1
        c = db.clusters[0]
        tol = SteadyStateTolerances()
        for p in pats:
            u = p.units[0]
            assert abs(u.h_net - c.h_net) <= tol.h_band_ft
            assert abs(u.q_act - c.q_act) <= tol.q_rel_band * c.q_act
            assert abs(u.bp - c.bp) <= tol.bp_band_pct

    def test_internal_eq2_consistency(self):
        db = cluster(steady_patterns(20))
        c = db.clusters[0]
        assert abs(c.p - K_DEFAULT * c.eta * c.q_sp * c.h_net) < 1e-9

    def test_deterministic(self):
        pats = steady_patterns(60)
        assert cluster(pats).clusters == cluster(pats).clusters


class TestQueryBestBp:
    def make_db(self, specs):
        clusters = []
        for i, (h, q, bp, p) in enumerate(specs):
            eta = p / (K_DEFAULT * q * h)
            clusters.append(ClusterRecord(
                unit=1, h_net=h, q_sp=q, q_act=q, gp=70.0, bp=bp, p=p, eta=eta,
                support=15, start_minute=float(i * 100), end_minute=float(i * 100 + 14),
            ))
        return StateDb(clusters)

    def test_argmax_selection(self):
        db = self.make_db([(34.0, 8000.0, 60.0, 20.0), (34.0, 8000.0, 64.0, 20.5)])
        assert db.query_best_bp(34.0, 8000.0, p_act=20.0) == (64.0, 20.5)

    def test_strict_improvement_required(self):
        db = self.make_db([(34.0, 8000.0, 64.0, 20.5)])
        assert db.query_best_bp(34.0, 8000.0, p_act=20.6) is None
        assert db.query_best_bp(34.0, 8000.0, p_act=20.5) is None

    def test_neighbouring_bins_searched(self):
        db = self.make_db([(34.4, 8240.0, 64.0, 21.0)])
        assert db.query_best_bp(34.1, 8010.0, p_act=20.0) == (64.0, 21.0)

    def test_far_bins_ignored(self):
        db = self.make_db([(38.0, 8000.0, 64.0, 22.0)])
        assert db.query_best_bp(34.0, 8000.0, p_act=20.0) is None

    def test_randomized_matches_exhaustive_scan(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = int(rng.integers(1, 60))
            clusters = []
            for i in range(n):
                h = float(rng.uniform(26, 40))
                q = float(rng.uniform(3000, 11000))
                eta = float(rng.uniform(0.5, 0.93))
                p = K_DEFAULT * eta * q * h
                clusters.append(ClusterRecord(
                    unit=int(rng.integers(1, 4)), h_net=h, q_sp=q, q_act=q,
                    gp=70.0, bp=float(rng.uniform(40, 80)), p=p, eta=eta,
                    support=15, start_minute=float(i), end_minute=float(i + 14),
                ))
            db = StateDb(clusters)
            h = float(rng.uniform(26, 40))
            q = float(rng.uniform(3000, 11000))
            p_act = float(rng.uniform(5, 25))
            got = db.query_best_bp(h, q, p_act)
            # independent oracle: exhaustive scan with the bin rule
            hb, qb = int(np.floor(h / 0.5)), int(np.floor(q / 250.0))
            matching = [
                c for c in clusters
                if abs(int(np.floor(c.h_net / 0.5)) - hb) <= 1
                and abs(int(np.floor(c.q_sp / 250.0)) - qb) <= 1
            ]
            want = None
            if matching:
                best = max(matching, key=lambda c: c.p)
                if best.p > p_act:
                    want = (best.bp, best.p)
            assert got == want


class TestEstimateEfficiency:
    def test_exact_at_cluster_coordinates(self):
        c = ClusterRecord(unit=1, h_net=34.0, q_sp=8000.0, q_act=8000.0, gp=70.0,
                          bp=62.0, p=20.0, eta=0.86, support=15,
                          start_minute=0.0, end_minute=14.0)
        db = StateDb([c])
        assert db.estimate_efficiency(34.0, 8000.0, 62.0) == 0.86

    def test_symmetric_midpoint(self):
        mk = lambda bp, eta: ClusterRecord(
            unit=1, h_net=34.0, q_sp=8000.0, q_act=8000.0, gp=70.0, bp=bp,
            p=K_DEFAULT * eta * 8000.0 * 34.0, eta=eta, support=15,
            start_minute=0.0, end_minute=14.0)
        db = StateDb([mk(60.0, 0.88), mk(64.0, 0.90)])
        assert db.estimate_efficiency(34.0, 8000.0, 62.0) == pytest.approx(0.89)

    def test_unit_filter(self):
        mk = lambda unit, eta: ClusterRecord(
            unit=unit, h_net=34.0, q_sp=8000.0, q_act=8000.0, gp=70.0, bp=62.0,
            p=K_DEFAULT * eta * 8000.0 * 34.0, eta=eta, support=15,
            start_minute=0.0, end_minute=14.0)
        db = StateDb([mk(1, 0.85), mk(2, 0.91)])
        assert db.estimate_efficiency(34.0, 8000.0, 62.0, unit=2) == 0.91

    def test_empty_db_raises(self):
        db = StateDb([])
        with pytest.raises(ValueError):
            db.estimate_efficiency(34.0, 8000.0, 62.0)

    def test_cross_validation_against_truth_surface(self):
        params = UnitParams(unit_id=1)
        truth = TruthEfficiencyModel.for_unit(params, default_cam())
        clusters = []
        i = 0
        for h in np.arange(33.0, 35.01, 0.5):
            for q in np.arange(6000.0, 10000.1, 250.0):
                for dbp in (-1.0, 0.0, 1.0, 2.0):
                    bp = truth.cam_blade(h, q) + dbp
                    eta = true_efficiency(truth, h, q, bp)
                    clusters.append(ClusterRecord(
                        unit=1, h_net=float(h), q_sp=float(q), q_act=float(q),
                        gp=params.gate_for_flow(q), bp=bp,
                        p=K_DEFAULT * eta * q * h, eta=eta, support=15,
                        start_minute=float(i), end_minute=float(i + 14)))
                    i += 1
        db = StateDb(clusters)
        rng = np.random.default_rng(7)
        errors = []
        for _ in range(400):
            h = float(rng.uniform(33.2, 34.8))
            q = float(rng.uniform(6200, 9800))
            bp = truth.cam_blade(h, q) + float(rng.uniform(-0.8, 1.8))
            est = db.estimate_efficiency(h, q, bp)
            errors.append(abs(est - true_efficiency(truth, h, q, bp)))
        assert float(np.mean(errors)) < 0.01


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path):
        pats = steady_patterns(20) + steady_patterns(25, start=20.0, h=36.0, bp=65.0)
        db = cluster(pats)
        path = tmp_path / "clusters.csv"
        db.save(path)
        loaded = StateDb.load(path)
        assert loaded.clusters == db.clusters

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "nope.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(SchemaError):
            StateDb.load(path)


class TestCountEvents:
    def rows(self, unit, minutes, value=185.0, kind="stator_temp"):
        return [AlarmLogRow(float(m), unit, kind, value) for m in minutes]

    def test_constructed_episodes(self):
        log = (
            self.rows(1, range(0, 12))          # 12 min -> counts
            + self.rows(1, range(100, 120))     # 20 min -> counts
            + self.rows(1, range(300, 305))     # 5 min -> no
            + self.rows(1, range(400, 412))     # 12 min -> counts
        )
        assert count_events(log, "stator_temp", 180.0, 10.0) == {1: 3}

    def test_exactly_threshold_duration_not_counted(self):
        log = self.rows(2, range(0, 10))  # exactly 10 min
        assert count_events(log, "stator_temp", 180.0, 10.0) == {}
        log = self.rows(2, range(0, 11))  # 11 min
        assert count_events(log, "stator_temp", 180.0, 10.0) == {2: 1}

    def test_empty_log(self):
        assert count_events([], "stator_temp", 180.0, 10.0) == {}

    def test_value_at_threshold_ends_episode(self):
        log = self.rows(1, range(0, 8)) + self.rows(1, [8], value=180.0) \
            + self.rows(1, range(9, 17))
        assert count_events(log, "stator_temp", 180.0, 10.0) == {}

    def test_kinds_do_not_mix(self):
        log = self.rows(1, range(0, 12)) + self.rows(1, range(0, 12), kind="vibration", value=12.0)
        out = count_events(log, "vibration", 8.0, 0.0)
        assert out == {1: 1}

    def test_alarm_log_round_trip(self, one_day_files, tmp_path):
        _, alarm = one_day_files
        rows = load_alarm_log(alarm)
        for r in rows:
            assert r.kind in ("stator_temp", "vibration")
        mins = alarmed_minutes(rows)
        assert all(isinstance(k, int) for k in mins)
