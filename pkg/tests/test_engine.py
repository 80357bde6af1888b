import struct
import threading
import time

import pytest

from mrtsp.engine import (Engine, EngineError, FileStore, JobFailedError,
                          JobSpec, MemoryStore, Record, StoreError,
                          default_partition, identity_mapper, pack_records,
                          task_rng, unpack_records)


def passthrough_reducer(key, values, rng):
    return [Record(key, v) for v in values]


def spec_for(input_name, *, job_id=0, maps=2, reduces=2, mapper=identity_mapper,
             reducer=passthrough_reducer, seed=0):
    return JobSpec(job_id=job_id, input=input_name, num_map_tasks=maps,
                   num_reduce_tasks=reduces, mapper=mapper,
                   partitioner=default_partition, reducer=reducer,
                   master_seed=seed)


def test_identity_pipeline_preserves_multiset():
    store = MemoryStore()
    records = [Record(i % 3, bytes([i])) for i in range(10)]
    store.put("in", records)
    engine = Engine(store, workers=2)
    out = engine.run_job(spec_for("in", maps=3, reduces=3))
    assert sorted(store.read(out)) == sorted(records)


def test_grouping_contract():
    store = MemoryStore()
    keys = [0, 0, 1, 2, 2, 2]
    store.put("in", [Record(k, bytes([i])) for i, k in enumerate(keys)])
    seen = {}

    def reducer(key, values, rng):
        seen[key] = list(values)
        return [Record(key, b"".join(values))]

    Engine(store, workers=1).run_job(spec_for("in", maps=2, reduces=3, reducer=reducer))
    assert seen[2] == [bytes([3]), bytes([4]), bytes([5])]  # all 3 values, input order
    assert seen[0] == [bytes([0]), bytes([1])]
    assert seen[1] == [bytes([2])]


def test_keys_ascending_within_reduce_task():
    store = MemoryStore()
    # keys 6,3,0 all route to task 0 of 3; reducer must see them ascending
    store.put("in", [Record(6, b"x"), Record(3, b"y"), Record(0, b"z")])
    calls = []

    def reducer(key, values, rng):
        calls.append(key)
        return []

    Engine(store, workers=1).run_job(spec_for("in", reduces=3, reducer=reducer))
    assert calls == [0, 3, 6]


def test_values_keep_input_sequence_order():
    store = MemoryStore()
    payload = [Record(1, bytes([i])) for i in range(20)]
    store.put("in", payload)
    got = {}

    def reducer(key, values, rng):
        got[key] = list(values)
        return []

    # order must survive any map-task split
    for maps in (1, 3, 7, 20):
        got.clear()
        engine = Engine(MemoryStore(), workers=4)
        engine.store.put("in", payload)
        engine.run_job(spec_for("in", maps=maps, reducer=reducer))
        assert got[1] == [bytes([i]) for i in range(20)]


def test_exactly_once_mapping():
    store = MemoryStore()
    records = [Record(i, bytes([i])) for i in range(37)]
    store.put("in", records)
    count = [0]
    lock = threading.Lock()

    def counting_mapper(record):
        with lock:
            count[0] += 1
        return [record]

    Engine(store, workers=4).run_job(spec_for("in", maps=5, mapper=counting_mapper))
    assert count[0] == len(records)


def test_key_co_location():
    store = MemoryStore()
    store.put("in", [Record(k, bytes([k, i])) for i in range(4) for k in range(6)])
    engine = Engine(store, workers=4)
    out = engine.run_job(spec_for("in", maps=3, reduces=3))
    parts = store.read_parts(out)
    homes = {}
    for task, part in enumerate(parts):
        for rec in part:
            homes.setdefault(rec.key, set()).add(task)
    assert all(len(tasks) == 1 for tasks in homes.values())
    assert all(tasks == {key % 3} for key, tasks in homes.items())


def test_phase_barrier_under_concurrency():
    store = MemoryStore()
    store.put("in", [Record(i, b"") for i in range(8)])
    events = []

    def slow_mapper(record):
        time.sleep(0.02)
        return [record]

    engine = Engine(store, workers=4, task_observer=events.append)
    engine.run_job(spec_for("in", maps=8, reduces=4, mapper=slow_mapper))
    map_ends = [e["time"] for e in events if e["kind"] == "map" and e["event"] == "end"]
    reduce_starts = [e["time"] for e in events if e["kind"] == "reduce" and e["event"] == "start"]
    assert len(map_ends) == 8 and len(reduce_starts) == 4
    assert max(map_ends) <= min(reduce_starts)


class FlakyReducer:
    """Draws from the task rng, then fails the first attempt for key 2."""

    def __init__(self):
        self.failed = False

    def __call__(self, key, values, rng):
        out = [Record(key, f"{rng.random():.17f}".encode()) for _ in values]
        if key == 2 and not self.failed:
            self.failed = True
            raise RuntimeError("injected fault")
        return out


def test_retry_transparency():
    def run(reducer):
        store = MemoryStore()
        store.put("in", [Record(k, bytes([k])) for k in range(4)])
        out = Engine(store, workers=1).run_job(spec_for("in", reduces=4, reducer=reducer))
        return store.snapshot()[out]

    flaky = FlakyReducer()
    clean = FlakyReducer()
    clean.failed = True  # never raises
    assert run(flaky) == run(clean)
    assert flaky.failed


def test_retries_exhausted_fail_with_task_identity():
    store = MemoryStore()
    store.put("in", [Record(0, b""), Record(1, b"")])
    attempts = [0]

    def bad_mapper(record):
        attempts[0] += 1
        raise ValueError("boom")

    engine = Engine(store, workers=1, max_task_retries=2)
    with pytest.raises(JobFailedError) as err:
        engine.run_job(spec_for("in", job_id=9, maps=1, mapper=bad_mapper))
    assert err.value.job_id == 9
    assert err.value.task_kind == "map"
    assert err.value.task_index == 0
    assert attempts[0] == 3  # first try + 2 retries


def test_failed_attempts_emit_events():
    store = MemoryStore()
    store.put("in", [Record(0, b"")])
    events = []

    def bad_mapper(record):
        raise RuntimeError("nope")

    engine = Engine(store, workers=1, max_task_retries=1, task_observer=events.append)
    with pytest.raises(JobFailedError):
        engine.run_job(spec_for("in", maps=1, mapper=bad_mapper))
    fails = [e for e in events if e["event"] == "fail"]
    assert [e["attempt"] for e in fails] == [0, 1]


def test_store_immutability():
    store = MemoryStore()
    store.put("in", [Record(0, b"a")])
    with pytest.raises(StoreError):
        store.put("in", [Record(0, b"b")])
    engine = Engine(store, workers=1)
    out = engine.run_job(spec_for("in", maps=1, reduces=1))
    before = store.snapshot()[out]
    with pytest.raises(StoreError):
        store.write_parts(out, [[Record(0, b"overwrite")]])
    # later jobs leave sealed sets untouched
    store.put("in2", [Record(0, b"c")])
    engine.run_job(spec_for("in2", job_id=1, maps=1, reduces=1))
    assert store.snapshot()[out] == before


def test_read_missing_set():
    with pytest.raises(StoreError):
        MemoryStore().read("ghost")


def test_determinism_same_seed_same_bytes():
    def reducer(key, values, rng):
        return [Record(key, struct.pack("<d", rng.random())) for _ in values]

    def run(workers, executor="thread"):
        store = MemoryStore()
        store.put("in", [Record(i % 5, bytes([i])) for i in range(23)])
        out = Engine(store, workers=workers, executor=executor).run_job(
            spec_for("in", maps=4, reduces=5, reducer=reducer, seed=77))
        return store.snapshot()[out]

    baseline = run(1, executor="serial")
    assert run(1) == baseline
    assert run(4) == baseline
    assert run(8) == baseline


def test_different_master_seed_changes_bytes():
    def reducer(key, values, rng):
        return [Record(key, struct.pack("<d", rng.random()))]

    def run(seed):
        store = MemoryStore()
        store.put("in", [Record(0, b"")])
        out = Engine(store, workers=1).run_job(
            spec_for("in", maps=1, reduces=1, reducer=reducer, seed=seed))
        return store.snapshot()[out]

    assert run(1) != run(2)


WORDS = {"the": 0, "cat": 1, "sat": 2, "mat": 3}


def test_word_count_fixture():
    store = MemoryStore()
    store.put("docs", [
        Record(0, b"the cat sat"),
        Record(1, b"the cat"),
        Record(2, b"the mat"),
    ])

    def tokenize(record):
        return [Record(WORDS[w], b"1") for w in record.value.decode().split()]

    def total(key, values, rng):
        return [Record(key, str(sum(int(v) for v in values)).encode())]

    engine = Engine(store, workers=2)
    out = engine.run_job(spec_for("docs", maps=2, reduces=2, mapper=tokenize, reducer=total))
    counts = {rec.key: int(rec.value) for rec in store.read(out)}
    assert counts == {WORDS["the"]: 3, WORDS["cat"]: 2, WORDS["sat"]: 1, WORDS["mat"]: 1}


def test_more_map_tasks_than_records():
    store = MemoryStore()
    store.put("in", [Record(0, b"x")])
    out = Engine(store, workers=2).run_job(spec_for("in", maps=6, reduces=1))
    assert store.read(out) == [Record(0, b"x")]


def test_partitioner_out_of_range_rejected():
    store = MemoryStore()
    store.put("in", [Record(0, b"")])
    spec = JobSpec(job_id=0, input="in", num_map_tasks=1, num_reduce_tasks=2,
                   mapper=identity_mapper, partitioner=lambda key, n: n,
                   reducer=passthrough_reducer, master_seed=0)
    with pytest.raises(EngineError):
        Engine(store, workers=1).run_job(spec)


def test_malformed_mapper_output_fails_job():
    store = MemoryStore()
    store.put("in", [Record(0, b"")])

    def bad(record):
        return ["not a record"]

    with pytest.raises(JobFailedError):
        Engine(store, workers=1).run_job(spec_for("in", maps=1, mapper=bad))


def test_jobspec_validation():
    with pytest.raises(ValueError):
        spec_for("in", job_id=-1)
    with pytest.raises(ValueError):
        spec_for("in", maps=0)
    with pytest.raises(ValueError):
        spec_for("in", reduces=0)
    with pytest.raises(ValueError):
        Engine(MemoryStore(), executor="warp")


def test_default_partition():
    assert default_partition(3, 10) == 3
    assert default_partition(7, 3) == 1
    assert [default_partition(k, 10) for k in range(10)] == list(range(10))
    with pytest.raises(ValueError):
        default_partition(-1, 4)
    with pytest.raises(ValueError):
        default_partition(0, 0)


def test_task_rng_streams():
    a = [task_rng(5, 0, "reduce", 0).random() for _ in range(100)]
    b = [task_rng(5, 0, "reduce", 0).random() for _ in range(100)]
    assert a == b
    assert a != [task_rng(5, 0, "reduce", 1).random() for _ in range(100)]
    assert a != [task_rng(5, 1, "reduce", 0).random() for _ in range(100)]
    assert a != [task_rng(6, 0, "reduce", 0).random() for _ in range(100)]
    assert a != [task_rng(5, 0, "map", 0).random() for _ in range(100)]


def test_record_framing_round_trip():
    records = [Record(0, b""), Record(2**32 - 1, b"\x00\xff"), Record(7, b"abc")]
    assert unpack_records(pack_records(records)) == records
    with pytest.raises(StoreError):
        unpack_records(pack_records(records)[:-1])
    with pytest.raises(StoreError):
        pack_records([Record(2**32, b"")])


def test_file_store_layout_and_framing(tmp_path):
    store = FileStore(tmp_path)
    store.put("in", [Record(1, b"ab")])
    engine = Engine(store, workers=1)
    out = engine.run_job(spec_for("in", job_id=3, maps=1, reduces=2))
    assert out == "job3"
    assert (tmp_path / "job3" / "_SUCCESS").exists()
    assert (tmp_path / "job3" / "part-0").read_bytes() == b""
    golden = struct.pack("<II", 1, 2) + b"ab"
    assert (tmp_path / "job3" / "part-1").read_bytes() == golden
    assert store.read_parts("job3") == [[], [Record(1, b"ab")]]


def test_file_store_seal_semantics(tmp_path):
    store = FileStore(tmp_path)
    with pytest.raises(StoreError):
        store.read("nothing")
    store.put("x", [Record(0, b"v")])
    with pytest.raises(StoreError):
        store.put("x", [Record(0, b"v")])
    with pytest.raises(StoreError):
        store.put("sub/dir", [])
    assert store.names() == ["x"]


def test_file_and_memory_stores_agree(tmp_path):
    def reducer(key, values, rng):
        return [Record(key, f"{rng.random():.15f}".encode()) for _ in values]

    def run(store):
        store.put("in", [Record(i % 3, bytes([i])) for i in range(9)])
        Engine(store, workers=2).run_job(spec_for("in", maps=2, reduces=3,
                                                  reducer=reducer, seed=5))
        return store.snapshot()

    assert run(MemoryStore()) == run(FileStore(tmp_path))
