import numpy as np
import pytest

from qrlsim.errors import ParseError
from qrlsim.estimator import MomentAccumulator
from qrlsim.experiments import parallel_teleport_schedule
from qrlsim.lattice import LatticeConfig, simulate
from qrlsim.records import (
    iter_trial_records,
    read_frame,
    read_records_csv,
    write_frame,
    write_records_csv,
)

CFG = LatticeConfig(n=3, squeezing_db=4.5, seed=99)


@pytest.fixture(scope="module")
def result():
    import math

    sched = parallel_teleport_schedule(3, 1, math.pi / 2, (1.0, 0.5))
    return simulate(sched, CFG, 40)


def test_trial_record_iteration(result):
    records = list(iter_trial_records(result))
    assert len(records) == 40
    assert records[7].trial_index == 7
    assert records[7].seed_used == CFG.seed
    assert np.array_equal(records[7].raw, result.raw[:, :, 7])


def test_csv_round_trip(tmp_path, result):
    path = tmp_path / "records.csv"
    write_records_csv(result, path)
    digest, raw, processed, kept = read_records_csv(path)
    assert digest == result.run_digest
    assert np.array_equal(kept, result.kept)
    assert np.array_equal(raw, result.raw)
    assert np.array_equal(processed, result.processed)


def test_frame_round_trip(tmp_path, result):
    path = tmp_path / "records.qrlf"
    write_frame(result, path)
    digest, raw, processed, kept, seed = read_frame(path)
    assert digest == result.run_digest
    assert seed == CFG.seed
    assert np.array_equal(kept, result.kept)
    assert np.array_equal(raw, result.raw)
    assert np.array_equal(processed, result.processed)


def test_frame_rejects_garbage(tmp_path):
    path = tmp_path / "bad.qrlf"
    path.write_bytes(b"definitely not a frame")
    with pytest.raises(ParseError):
        read_frame(path)


def test_digest_tags_block_mismatched_merges(result):
    # Accumulators tagged with different run digests refuse to merge, so
    # records from different configurations cannot be pooled accidentally.
    other = simulate(result.schedule, LatticeConfig(n=3, squeezing_db=3.0, seed=99), 10)
    a = MomentAccumulator(4, tag=result.run_digest).add(result.processed[0])
    b = MomentAccumulator(4, tag=other.run_digest).add(other.processed[0])
    with pytest.raises(Exception):
        a.merge(b)
    same = MomentAccumulator(4, tag=result.run_digest).add(result.processed[1])
    a.merge(same)
    assert a.count == 80
