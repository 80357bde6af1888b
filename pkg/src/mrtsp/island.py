"""Island-model parallel GA run as iterated map/reduce jobs.

Every island is one reduce task. A job evolves each island independently
for migration_interval generations, then migration rides the shuffle: the
task emits its best tour re-keyed to every other island, so next round's
grouping delivers migrants together with the residents and the receiving
task drops its worst members to make room. The driver loops jobs until the
generation budget, a stagnation window or an optional target length stops
the run.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .codec import decode_chromosome, encode_chromosome, peek_length
from .engine import (Engine, EngineError, FileStore, JobSpec, MemoryStore,
                     Record, default_partition, identity_mapper)
from .ga import (Chromosome, GaParams, Population, assign_fitness,
                 next_generation, random_tour, stop_reason, tour_length)
from .reports import RunReport, accuracy_percent
from .tsplib import Instance


@dataclass(frozen=True)
class IslandParams:
    num_islands: int = 10
    migration_interval: int = 50
    ga: GaParams = field(default_factory=GaParams)
    max_total_generations: int = 50_000
    convergence_patience: int | None = 20
    target_length: float | None = None

    def __post_init__(self):
        if self.num_islands < 2:
            raise ValueError(f"num_islands must be >= 2, got {self.num_islands}")
        if self.migration_interval < 1:
            raise ValueError(f"migration_interval must be >= 1, got {self.migration_interval}")
        if self.max_total_generations < self.migration_interval:
            raise ValueError("max_total_generations must cover at least one round "
                             f"({self.max_total_generations} < {self.migration_interval})")
        if self.convergence_patience is not None and self.convergence_patience < 0:
            raise ValueError("convergence_patience must be >= 0 or None")


@dataclass(frozen=True)
class RoundSummary:
    """Driver-side view of one evolve job."""

    round: int
    island_bests: tuple[float, ...]
    best_length: float
    best_tour: tuple[int, ...]
    generations: int
    wall_seconds: float


class InitReducer:
    """Reduce task i emits population_size random tours keyed to island i."""

    def __init__(self, instance: Instance, population_size: int):
        self.instance = instance
        self.population_size = population_size

    def __call__(self, key, values, rng):
        n = self.instance.dimension
        out = []
        for _ in range(self.population_size):
            genes = random_tour(n, rng)
            out.append(Record(key, encode_chromosome(genes, tour_length(genes, self.instance), key)))
        return out


class EvolveReducer:
    """Reduce task i: absorb migrants, evolve, emit residents plus its best
    re-keyed to every other island.

    Arriving records may exceed population_size (residents + inbound
    migrants); the worst extras are dropped before evolution, which is the
    batch form of each migrant replacing the current worst member. Migrant
    records carry the destination's pop_id, matching their new key.
    """

    def __init__(self, instance: Instance, params: IslandParams):
        self.instance = instance
        self.params = params

    def __call__(self, key, values, rng):
        members = []
        for value in values:
            decoded = decode_chromosome(value)
            if decoded.pop_id != key:
                raise EngineError(
                    f"record keyed {key} decodes to pop_id {decoded.pop_id}")
            members.append(Chromosome(decoded.genes, decoded.length, key))
        size = self.params.ga.population_size
        if len(members) > size:
            members = sorted(members, key=lambda m: m.length)[:size]
        population = assign_fitness(Population.from_members(key, members))
        for _ in range(self.params.migration_interval):
            population = next_generation(population, self.instance, rng, self.params.ga)

        out = [Record(key, encode_chromosome(m.genes, m.length, key))
               for m in population.members]
        best = population.best_member
        for other in range(self.params.num_islands):
            if other != key:
                out.append(Record(other, encode_chromosome(best.genes, best.length, other)))
        return out


def init_job(engine: Engine, instance: Instance, params: IslandParams,
             master_seed: int) -> str:
    """Job 0: build every island's starting population in its own task."""
    engine.store.put("seed", [Record(i, b"") for i in range(params.num_islands)])
    spec = JobSpec(
        job_id=0,
        input="seed",
        num_map_tasks=params.num_islands,
        num_reduce_tasks=params.num_islands,
        mapper=identity_mapper,
        partitioner=default_partition,
        reducer=InitReducer(instance, params.ga.population_size),
        master_seed=master_seed,
    )
    return engine.run_job(spec)


def evolve_job(engine: Engine, input_handle: str, instance: Instance,
               params: IslandParams, round_number: int, master_seed: int) -> str:
    """One migration round; job id doubles as the round number."""
    counts = [0] * params.num_islands
    for rec in engine.store.read(input_handle):
        if not 0 <= rec.key < params.num_islands:
            raise EngineError(
                f"record keyed {rec.key} outside islands 0..{params.num_islands - 1}")
        counts[rec.key] += 1
    for island, count in enumerate(counts):
        if count == 0:
            raise EngineError(
                f"round {round_number}: island {island} has no input records "
                f"in {input_handle!r}")
    spec = JobSpec(
        job_id=round_number,
        input=input_handle,
        num_map_tasks=params.num_islands,
        num_reduce_tasks=params.num_islands,
        mapper=identity_mapper,
        partitioner=default_partition,
        reducer=EvolveReducer(instance, params),
        master_seed=master_seed,
    )
    return engine.run_job(spec)


def check_convergence(history: Sequence[RoundSummary], params: IslandParams) -> str | None:
    """Stop reason after the latest round ("budget", "stagnation", "target"),
    or None to continue. Stagnation means the global best was identical over
    the last convergence_patience rounds; patience None or 0 disables it."""
    if not history:
        raise ValueError("history must not be empty")
    bests = [summary.best_length for summary in history]
    return stop_reason(bests, history[-1].generations, params.max_total_generations,
                       params.convergence_patience, params.target_length)


def _residents(parts: list[list[Record]]) -> list[tuple[int, Record]]:
    """(island, record) for records living where they are keyed, part order."""
    found = []
    for island, part in enumerate(parts):
        for rec in part:
            if rec.key == island:
                found.append((island, rec))
    return found


def _scan_parts(parts: list[list[Record]]) -> tuple[list[float], Record]:
    """Per-island best lengths plus the globally best resident record."""
    island_bests: list[float] = []
    best_record = None
    best_length = None
    for island, part in enumerate(parts):
        local = None
        for rec in part:
            if rec.key != island:
                continue
            length = peek_length(rec.value)
            if local is None or length < local:
                local = length
                if best_length is None or length < best_length:
                    best_length = length
                    best_record = rec
        if local is None:
            raise EngineError(f"island {island} has no resident records")
        island_bests.append(local)
    assert best_record is not None
    return island_bests, best_record


def format_population_dump(parts: list[list[Record]]) -> str:
    """One resident per line: pop_id, tour length, then the city sequence."""
    lines = []
    for _, rec in _residents(parts):
        decoded = decode_chromosome(rec.value)
        cities = " ".join(str(c) for c in decoded.genes)
        lines.append(f"{decoded.pop_id} {decoded.length} {cities}")
    return "\n".join(lines) + "\n"


def run_pga(instance: Instance, params: IslandParams | None = None,
            master_seed: int = 0, workers: int | None = None, store=None,
            executor: str = "thread", dump_path=None) -> RunReport:
    """Drive init_job plus evolve_job rounds until convergence.

    Reported generations are per-island cumulative (rounds times
    migration_interval). The final populations are additionally written as
    a readable text dump: to dump_path when given, or next to the binary
    parts when the store lives on disk.
    """
    params = params if params is not None else IslandParams()
    start = time.perf_counter()
    store = store if store is not None else MemoryStore()
    engine = Engine(store, workers=workers, executor=executor)

    handle = init_job(engine, instance, params, master_seed)
    island_bests, _ = _scan_parts(store.read_parts(handle))
    trajectory = [min(island_bests)]

    rounds: list[RoundSummary] = []
    reason = None
    while reason is None:
        round_number = len(rounds) + 1
        handle = evolve_job(engine, handle, instance, params, round_number, master_seed)
        island_bests, best_record = _scan_parts(store.read_parts(handle))
        rounds.append(RoundSummary(
            round=round_number,
            island_bests=tuple(island_bests),
            best_length=min(island_bests),
            best_tour=decode_chromosome(best_record.value).genes,
            generations=round_number * params.migration_interval,
            wall_seconds=time.perf_counter() - start,
        ))
        trajectory.append(rounds[-1].best_length)
        reason = check_convergence(rounds, params)

    if dump_path is None and isinstance(store, FileStore):
        dump_path = store.root / "final-population.txt"
    if dump_path is not None:
        Path(dump_path).write_text(format_population_dump(store.read_parts(handle)))

    final = rounds[-1]
    return RunReport(
        algo="pga",
        instance_name=instance.name,
        seed=master_seed,
        params={**asdict(params), "workers": engine.workers},
        best_length=final.best_length,
        best_tour=final.best_tour,
        trajectory=trajectory,
        generations=final.generations,
        wall_seconds=time.perf_counter() - start,
        stop_reason=reason,
        accuracy=accuracy_percent(instance.known_optimum, final.best_length),
        rounds=rounds,
    )
