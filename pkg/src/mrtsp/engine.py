"""A minimal iterative map/shuffle/reduce engine over keyed byte records.

One job = map every input record, route intermediates through a partitioner,
group them per reduce task with keys ascending and values in production
order, then reduce. Reduce tasks get their own deterministically seeded rng,
so job outputs are byte-identical for a fixed master seed no matter how many
workers run or how the scheduler interleaves them.

The record store stands in for a distributed file system: sets of records
are named, written once by a completed job, and immutable afterwards.
"""

from __future__ import annotations

import hashlib
import os
import random
import struct
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, ThreadPoolExecutor, wait
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, NamedTuple


class Record(NamedTuple):
    key: int
    value: bytes


class StoreError(Exception):
    pass


class EngineError(Exception):
    pass


class JobFailedError(EngineError):
    """A task exhausted its retries; carries the failing task's identity."""

    def __init__(self, job_id: int, task_kind: str, task_index: int, cause: BaseException):
        super().__init__(f"job {job_id}: {task_kind} task {task_index} failed after retries: {cause!r}")
        self.job_id = job_id
        self.task_kind = task_kind
        self.task_index = task_index


_RECORD_HEADER = struct.Struct("<II")


def pack_records(records: Iterable[Record]) -> bytes:
    """Length-prefixed framing: key (4-byte LE), value length (4-byte LE), value."""
    chunks = []
    for rec in records:
        if not 0 <= rec.key < 2**32:
            raise StoreError(f"record key {rec.key} does not fit an unsigned 32-bit field")
        chunks.append(_RECORD_HEADER.pack(rec.key, len(rec.value)))
        chunks.append(rec.value)
    return b"".join(chunks)


def unpack_records(data: bytes) -> list[Record]:
    records = []
    offset = 0
    while offset < len(data):
        if offset + _RECORD_HEADER.size > len(data):
            raise StoreError("truncated record header")
        key, size = _RECORD_HEADER.unpack_from(data, offset)
        offset += _RECORD_HEADER.size
        if offset + size > len(data):
            raise StoreError("truncated record value")
        records.append(Record(key, data[offset:offset + size]))
        offset += size
    return records


class MemoryStore:
    """Default backend for tests and in-process runs."""

    def __init__(self):
        self._sets: dict[str, tuple[tuple[Record, ...], ...]] = {}

    def put(self, name: str, records: Iterable[Record]) -> str:
        self.write_parts(name, [list(records)])
        return name

    def write_parts(self, name: str, parts: list[list[Record]]) -> str:
        if name in self._sets:
            raise StoreError(f"record set {name!r} is sealed and cannot be rewritten")
        self._sets[name] = tuple(tuple(part) for part in parts)
        return name

    def read(self, name: str) -> list[Record]:
        return [rec for part in self.read_parts(name) for rec in part]

    def read_parts(self, name: str) -> list[list[Record]]:
        if name not in self._sets:
            raise StoreError(f"no record set named {name!r}")
        return [list(part) for part in self._sets[name]]

    def names(self) -> list[str]:
        return sorted(self._sets)

    def snapshot(self) -> dict[str, list[bytes]]:
        """Canonical bytes of every sealed set, for determinism diffs."""
        return {name: [pack_records(part) for part in parts]
                for name, parts in self._sets.items()}


class FileStore:
    """Directory backend: one subdirectory per record set, one part file per
    reduce task (part-<task>), sealed by a _SUCCESS marker."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _dir(self, name: str) -> Path:
        if "/" in name or "\\" in name or name in ("", ".", ".."):
            raise StoreError(f"invalid record set name {name!r}")
        return self.root / name

    def put(self, name: str, records: Iterable[Record]) -> str:
        self.write_parts(name, [list(records)])
        return name

    def write_parts(self, name: str, parts: list[list[Record]]) -> str:
        target = self._dir(name)
        if (target / "_SUCCESS").exists():
            raise StoreError(f"record set {name!r} is sealed and cannot be rewritten")
        target.mkdir(parents=True, exist_ok=True)
        for idx, part in enumerate(parts):
            (target / f"part-{idx}").write_bytes(pack_records(part))
        (target / "_SUCCESS").write_text(f"{len(parts)}\n")
        return name

    def read(self, name: str) -> list[Record]:
        return [rec for part in self.read_parts(name) for rec in part]

    def read_parts(self, name: str) -> list[list[Record]]:
        target = self._dir(name)
        marker = target / "_SUCCESS"
        if not marker.exists():
            raise StoreError(f"no sealed record set named {name!r}")
        count = int(marker.read_text().strip())
        return [unpack_records((target / f"part-{idx}").read_bytes()) for idx in range(count)]

    def names(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir()
                      if p.is_dir() and (p / "_SUCCESS").exists())

    def snapshot(self) -> dict[str, list[bytes]]:
        out = {}
        for name in self.names():
            target = self._dir(name)
            count = int((target / "_SUCCESS").read_text().strip())
            out[name] = [(target / f"part-{idx}").read_bytes() for idx in range(count)]
        return out


def default_partition(key: int, num_reduce_tasks: int) -> int:
    """key mod tasks; the identity routing when one task exists per key."""
    if num_reduce_tasks < 1:
        raise ValueError(f"num_reduce_tasks must be >= 1, got {num_reduce_tasks}")
    if key < 0:
        raise ValueError(f"record keys must be non-negative, got {key}")
    return key % num_reduce_tasks


def task_rng(master_seed: int, job_id: int, task_kind: str, task_index: int) -> random.Random:
    """Independent, reproducible rng stream per (seed, job, kind, index)."""
    digest = hashlib.sha256(
        f"{master_seed}|{job_id}|{task_kind}|{task_index}".encode()
    ).digest()
    return random.Random(int.from_bytes(digest[:8], "little"))


Mapper = Callable[[Record], Iterable[Record]]
Partitioner = Callable[[int, int], int]
Reducer = Callable[[int, list[bytes], random.Random], Iterable[Record]]


@dataclass(frozen=True)
class JobSpec:
    job_id: int
    input: str
    num_map_tasks: int
    num_reduce_tasks: int
    mapper: Mapper
    partitioner: Partitioner
    reducer: Reducer
    master_seed: int = 0

    def __post_init__(self):
        if self.job_id < 0:
            raise ValueError(f"job_id must be >= 0, got {self.job_id}")
        if self.num_map_tasks < 1 or self.num_reduce_tasks < 1:
            raise ValueError("num_map_tasks and num_reduce_tasks must be >= 1")


def identity_mapper(record: Record) -> list[Record]:
    return [record]


def _normalize(produced, origin: str) -> list[Record]:
    out = []
    for item in produced:
        if isinstance(item, Record):
            rec = item
        elif isinstance(item, tuple) and len(item) == 2:
            rec = Record(*item)
        else:
            raise EngineError(f"{origin} produced {item!r}, expected a Record")
        if not isinstance(rec.key, int) or not isinstance(rec.value, bytes):
            raise EngineError(f"{origin} produced a malformed record {rec!r}")
        out.append(rec)
    return out


def _map_task(mapper: Mapper, records: list[Record]) -> list[Record]:
    out = []
    for rec in records:
        out.extend(_normalize(mapper(rec), "mapper"))
    return out


def _reduce_task(reducer: Reducer, grouped: list[tuple[int, list[bytes]]],
                 master_seed: int, job_id: int, index: int) -> list[Record]:
    rng = task_rng(master_seed, job_id, "reduce", index)
    out = []
    for key, values in grouped:
        out.extend(_normalize(reducer(key, values, rng), "reducer"))
    return out


def _chunk(records: list[Record], pieces: int) -> list[list[Record]]:
    n = len(records)
    bounds = [i * n // pieces for i in range(pieces + 1)]
    return [records[bounds[i]:bounds[i + 1]] for i in range(pieces)]


class Engine:
    """Runs JobSpecs against a record store on a bounded worker pool.

    executor: "serial", "thread" (default) or "process". Process mode needs
    picklable mapper/reducer/partitioner callables and skips task events.
    The task_observer callback (thread/serial only) receives a dict per task
    start/end/fail, timestamped inside the worker; tests use it to verify the
    map->reduce barrier and retry behaviour.
    """

    def __init__(self, store, workers: int | None = None, executor: str = "thread",
                 max_task_retries: int = 2, task_observer: Callable[[dict], None] | None = None):
        if executor not in ("serial", "thread", "process"):
            raise ValueError(f"unknown executor {executor!r}")
        self.store = store
        if workers is None:
            workers = os.cpu_count() or 1
        self.workers = 1 if executor == "serial" else max(1, workers)
        self.executor_kind = "serial" if self.workers == 1 else executor
        self.max_task_retries = max_task_retries
        self.task_observer = task_observer

    # -- phases ------------------------------------------------------------

    def _emit(self, job_id: int, kind: str, index: int, attempt: int, event: str):
        if self.task_observer is not None:
            self.task_observer({"job_id": job_id, "kind": kind, "index": index,
                                "attempt": attempt, "event": event,
                                "time": time.monotonic()})

    def _run_with_retries(self, job_id: int, kind: str, index: int, fn, args):
        last_exc: BaseException | None = None
        for attempt in range(self.max_task_retries + 1):
            self._emit(job_id, kind, index, attempt, "start")
            try:
                result = fn(*args)
            except Exception as exc:
                last_exc = exc
                self._emit(job_id, kind, index, attempt, "fail")
                continue
            self._emit(job_id, kind, index, attempt, "end")
            return result
        assert last_exc is not None
        raise JobFailedError(job_id, kind, index, last_exc)

    def _run_phase(self, job_id: int, kind: str, payloads: list[tuple]) -> list[list[Record]]:
        # payloads: (fn, args) per task index
        n = len(payloads)
        if self.executor_kind == "process":
            return self._run_phase_process(job_id, kind, payloads)
        if self.executor_kind == "serial" or n <= 1:
            return [self._run_with_retries(job_id, kind, i, fn, args)
                    for i, (fn, args) in enumerate(payloads)]
        results: list[list[Record] | None] = [None] * n
        with ThreadPoolExecutor(max_workers=min(self.workers, n)) as pool:
            futures = {pool.submit(self._run_with_retries, job_id, kind, i, fn, args): i
                       for i, (fn, args) in enumerate(payloads)}
            for future, i in futures.items():
                results[i] = future.result()
        return results  # type: ignore[return-value]

    def _run_phase_process(self, job_id: int, kind: str, payloads: list[tuple]) -> list[list[Record]]:
        n = len(payloads)
        results: list[list[Record] | None] = [None] * n
        attempts = [0] * n
        with ProcessPoolExecutor(max_workers=min(self.workers, n)) as pool:
            pending = {pool.submit(fn, *args): i for i, (fn, args) in enumerate(payloads)}
            while pending:
                done, _ = wait(pending, return_when=FIRST_COMPLETED)
                for future in done:
                    i = pending.pop(future)
                    try:
                        results[i] = future.result()
                    except Exception as exc:
                        attempts[i] += 1
                        if attempts[i] > self.max_task_retries:
                            raise JobFailedError(job_id, kind, i, exc) from exc
                        fn, args = payloads[i]
                        pending[pool.submit(fn, *args)] = i
        return results  # type: ignore[return-value]

    # -- shuffle -----------------------------------------------------------

    def _route(self, spec: JobSpec, intermediate: list[Record]) -> list[list[tuple[int, list[bytes]]]]:
        buckets: list[dict[int, list[bytes]]] = [{} for _ in range(spec.num_reduce_tasks)]
        for rec in intermediate:
            task = spec.partitioner(rec.key, spec.num_reduce_tasks)
            if not isinstance(task, int) or not 0 <= task < spec.num_reduce_tasks:
                raise EngineError(
                    f"partitioner returned {task!r} for key {rec.key}, "
                    f"outside [0, {spec.num_reduce_tasks})")
            buckets[task].setdefault(rec.key, []).append(rec.value)
        return [sorted(bucket.items()) for bucket in buckets]

    # -- driver ------------------------------------------------------------

    def run_job(self, spec: JobSpec) -> str:
        """Execute one job; returns the sealed output record-set handle."""
        input_records = self.store.read(spec.input)
        chunks = _chunk(input_records, spec.num_map_tasks)
        map_payloads = [(_map_task, (spec.mapper, chunk)) for chunk in chunks]
        map_outputs = self._run_phase(spec.job_id, "map", map_payloads)

        intermediate = [rec for out in map_outputs for rec in out]
        grouped = self._route(spec, intermediate)

        reduce_payloads = [
            (_reduce_task, (spec.reducer, grouped[t], spec.master_seed, spec.job_id, t))
            for t in range(spec.num_reduce_tasks)
        ]
        reduce_outputs = self._run_phase(spec.job_id, "reduce", reduce_payloads)
        return self.store.write_parts(f"job{spec.job_id}", reduce_outputs)
