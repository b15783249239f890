import pytest

from hydrotwin import statedb
from hydrotwin.sim import SimConfig, synthesize_history

#: seed of the calibrated archive the acceptance pipeline rebuilds
ARCHIVE_SEED = 20240401


@pytest.fixture(scope="session")
def archive_paths(tmp_path_factory):
    """The full 200-day synthetic archive (telemetry + alarm log)."""
    base = tmp_path_factory.mktemp("archive-200d")
    tele = base / "history.csv"
    alarm = base / "alarms.csv"
    info = synthesize_history(
        SimConfig(rng_seed=ARCHIVE_SEED), days=200,
        telemetry_path=tele, alarm_path=alarm,
    )
    assert info["ticks"] == 288000
    return tele, alarm


@pytest.fixture(scope="session")
def archive_db(archive_paths):
    """Cluster database mined from the 200-day archive."""
    tele, alarm = archive_paths
    alarm_rows = statedb.load_alarm_log(alarm)
    db = statedb.cluster(
        statedb.ingest_iter(tele), alarm_rows=alarm_rows, source=str(tele)
    )
    assert len(db) > 1000
    return db
