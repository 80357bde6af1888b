"""Genetic operators for permutation-encoded TSP tours, plus the sequential GA.

Tours are directed: on asymmetric instances the cost of a tour and of its
reversal differ. All randomness flows through an explicit random.Random so
fixed seeds reproduce runs exactly.
"""

from __future__ import annotations

import random
import time
from bisect import bisect_right
from dataclasses import dataclass, field, asdict

from .reports import RunReport, accuracy_percent
from .tsplib import Instance


@dataclass(slots=True)
class Chromosome:
    genes: tuple[int, ...]
    length: float
    pop_id: int
    fitness: float = 0.0
    _canon: tuple[int, ...] | None = field(default=None, repr=False)

    def canonical(self) -> tuple[int, ...]:
        """Tour rotated so city 0 sits at index 0 (cached)."""
        if self._canon is None:
            i = self.genes.index(0)
            self._canon = self.genes[i:] + self.genes[:i]
        return self._canon


@dataclass(frozen=True)
class GaParams:
    population_size: int = 100
    crossover_prob: float = 0.99
    mutation_prob: float = 0.021
    similarity_threshold: float = 0.80
    elite_count: int = 1
    max_parent_retries: int = 32

    def __post_init__(self):
        for name in ("crossover_prob", "mutation_prob", "similarity_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.population_size < 2:
            raise ValueError(f"population_size must be >= 2, got {self.population_size}")
        if not 0 < self.elite_count < self.population_size:
            raise ValueError(f"elite_count must be in (0, population_size), got {self.elite_count}")
        if self.max_parent_retries < 1:
            raise ValueError(f"max_parent_retries must be >= 1, got {self.max_parent_retries}")


@dataclass
class Population:
    id: int
    members: list[Chromosome]
    best: int

    @classmethod
    def from_members(cls, pop_id: int, members: list[Chromosome]) -> "Population":
        if not members:
            raise ValueError("population must not be empty")
        for m in members:
            if m.pop_id != pop_id:
                raise ValueError(f"member pop_id {m.pop_id} != population id {pop_id}")
        best = min(range(len(members)), key=lambda i: members[i].length)
        return cls(id=pop_id, members=members, best=best)

    @property
    def best_member(self) -> Chromosome:
        return self.members[self.best]


def random_tour(n: int, rng: random.Random) -> list[int]:
    """Uniform random permutation of 0..n-1."""
    if n < 2:
        raise ValueError(f"need at least 2 cities, got {n}")
    tour = list(range(n))
    rng.shuffle(tour)
    return tour


def tour_length(genes, instance: Instance) -> float:
    """Directed cost of the closed tour, closing edge included."""
    rows = instance.rows
    total = 0
    prev = genes[0]
    for city in genes[1:]:
        total += rows[prev][city]
        prev = city
    total += rows[prev][genes[0]]
    return total


def make_chromosome(genes, instance: Instance, pop_id: int) -> Chromosome:
    return Chromosome(genes=tuple(genes), length=tour_length(genes, instance), pop_id=pop_id)


def assign_fitness(population: Population) -> Population:
    """fitness_i = length_i / sum of lengths; lower is better, sums to 1."""
    members = population.members
    if not members:
        raise ValueError("cannot assign fitness to an empty population")
    total = sum(m.length for m in members)
    for m in members:
        m.fitness = m.length / total
    return population


def rank_probabilities(population_size: int) -> list[float]:
    """Selection probability per rank, worst (rank 1) first; sums to 1."""
    if population_size < 2:
        raise ValueError(f"population_size must be >= 2, got {population_size}")
    total = population_size * (population_size + 1) // 2
    return [r / total for r in range(1, population_size + 1)]


def similarity(a: Chromosome, b: Chromosome) -> float:
    """Fraction of matching positions after rotating both tours to start at 0.

    Rotation-invariant; reversal is NOT canonicalized because tours are
    directed on asymmetric instances.
    """
    if len(a.genes) != len(b.genes):
        raise ValueError("chromosomes must have the same number of cities")
    ca, cb = a.canonical(), b.canonical()
    if ca == cb:
        return 1.0
    return sum(x == y for x, y in zip(ca, cb)) / len(ca)


class Ranking:
    """Rank-selection context: members ordered worst to best with cumulative
    draw probabilities. Ties in length keep the original member order."""

    def __init__(self, members: list[Chromosome]):
        n = len(members)
        self.members = members
        self.order = sorted(range(n), key=lambda i: members[i].length, reverse=True)
        total = n * (n + 1) // 2
        cum, acc = [], 0
        for r in range(1, n + 1):
            acc += r
            cum.append(acc / total)
        self.cum = cum

    def draw(self, rng: random.Random) -> int:
        """Index (into the member list) of one rank-proportional draw."""
        return self.order[bisect_right(self.cum, rng.random())]


def select_parents(population: Population, rng: random.Random, params: GaParams,
                   ranking: Ranking | None = None) -> tuple[Chromosome, Chromosome]:
    """Two distinct members drawn by rank; pairs more similar than the
    threshold are redrawn, and after max_parent_retries failures the
    constraint is waived so converged populations cannot livelock."""
    members = population.members
    if ranking is None:
        ranking = Ranking(members)
    threshold = params.similarity_threshold
    pair = None
    for _ in range(params.max_parent_retries):
        ia = ranking.draw(rng)
        ib = ranking.draw(rng)
        while ib == ia:
            ib = ranking.draw(rng)
        pair = (members[ia], members[ib])
        if similarity(pair[0], pair[1]) <= threshold:
            return pair
    assert pair is not None
    return pair


def greedy_crossover(parent_a: Chromosome, parent_b: Chromosome,
                     instance: Instance, rng: random.Random) -> list[int]:
    """Build a child from parent successor edges, shortest first.

    Starting at parent_a's first city: take the cheaper of the two parental
    successors of the current city (tie goes to parent_a's); if only one is
    unvisited take that one; if both are visited pick uniformly among the
    unvisited cities in ascending city order via one rng.randrange draw.
    """
    a, b = parent_a.genes, parent_b.genes
    n = len(a)
    rows = instance.rows
    pos_a = [0] * n
    pos_b = [0] * n
    for idx in range(n):
        pos_a[a[idx]] = idx
        pos_b[b[idx]] = idx

    visited = bytearray(n)
    current = a[0]
    child = [current]
    visited[current] = 1
    for _ in range(n - 1):
        ea = a[(pos_a[current] + 1) % n]
        eb = b[(pos_b[current] + 1) % n]
        if not visited[ea]:
            if not visited[eb] and eb != ea:
                row = rows[current]
                nxt = ea if row[ea] <= row[eb] else eb
            else:
                nxt = ea
        elif not visited[eb]:
            nxt = eb
        else:
            open_cities = [c for c in range(n) if not visited[c]]
            nxt = open_cities[rng.randrange(len(open_cities))]
        child.append(nxt)
        visited[nxt] = 1
        current = nxt
    return child


def mutate(genes, rng: random.Random, mutation_prob: float):
    """With the given probability, swap two distinct uniformly random genes.

    Applied once per offspring; returns the input untouched when the draw
    does not fire.
    """
    if mutation_prob > 0.0 and rng.random() < mutation_prob:
        n = len(genes)
        i = rng.randrange(n)
        j = rng.randrange(n - 1)
        if j >= i:
            j += 1
        swapped = list(genes)
        swapped[i], swapped[j] = swapped[j], swapped[i]
        return swapped
    return genes


def next_generation(population: Population, instance: Instance,
                    rng: random.Random, params: GaParams) -> Population:
    """One generation: elites copied unchanged, the rest bred by rank
    selection, greedy crossover (else a copy of the better parent) and
    mutation. Output size equals input size."""
    members = population.members
    size = len(members)
    if size <= params.elite_count:
        raise ValueError("population smaller than elite_count + 1")

    by_length = sorted(range(size), key=lambda i: members[i].length)
    new_members = [
        Chromosome(genes=members[i].genes, length=members[i].length, pop_id=population.id)
        for i in by_length[:params.elite_count]
    ]

    ranking = Ranking(members)
    while len(new_members) < size:
        pa, pb = select_parents(population, rng, params, ranking=ranking)
        if rng.random() < params.crossover_prob:
            genes = greedy_crossover(pa, pb, instance, rng)
        else:
            genes = (pa if pa.length <= pb.length else pb).genes
        genes = mutate(genes, rng, params.mutation_prob)
        new_members.append(make_chromosome(genes, instance, population.id))

    return assign_fitness(Population.from_members(population.id, new_members))


def random_population(instance: Instance, params: GaParams, pop_id: int,
                      rng: random.Random) -> Population:
    members = [make_chromosome(random_tour(instance.dimension, rng), instance, pop_id)
               for _ in range(params.population_size)]
    return assign_fitness(Population.from_members(pop_id, members))


@dataclass(frozen=True)
class TerminationPolicy:
    """Optional early-stop rules shared by the sequential and island GAs."""

    target_length: float | None = None
    patience: int | None = None


def stop_reason(best_history: list[float], generations_used: int, budget: int,
                patience: int | None, target_length: float | None) -> str | None:
    """Why a run should stop now, or None to continue.

    Checked in order: generation budget exhausted, best unchanged over the
    last `patience` recorded entries, best at or below the target.
    """
    if generations_used >= budget:
        return "budget"
    if patience and len(best_history) >= patience:
        tail = best_history[-patience:]
        if all(v == tail[0] for v in tail):
            return "stagnation"
    if target_length is not None and best_history and best_history[-1] <= target_length:
        return "target"
    return None


def run_sga(instance: Instance, params: GaParams, max_generations: int,
            termination: TerminationPolicy | None = None, seed: int = 0) -> RunReport:
    """Sequential GA: random initial population, then next_generation until
    the budget or the termination policy ends the run."""
    if max_generations < 1:
        raise ValueError(f"max_generations must be >= 1, got {max_generations}")
    term = termination or TerminationPolicy()
    rng = random.Random(seed)
    t0 = time.perf_counter()

    population = random_population(instance, params, pop_id=0, rng=rng)
    trajectory = [population.best_member.length]
    generations = 0
    reason = None
    while reason is None:
        population = next_generation(population, instance, rng, params)
        generations += 1
        trajectory.append(population.best_member.length)
        reason = stop_reason(trajectory, generations, max_generations,
                             term.patience, term.target_length)

    best = population.best_member
    snapshot = asdict(params)
    snapshot.update(max_generations=max_generations,
                    target_length=term.target_length, patience=term.patience)
    return RunReport(
        algo="sga",
        instance_name=instance.name,
        seed=seed,
        params=snapshot,
        best_length=best.length,
        best_tour=best.genes,
        trajectory=trajectory,
        generations=generations,
        wall_seconds=time.perf_counter() - t0,
        stop_reason=reason,
        accuracy=accuracy_percent(instance.known_optimum, best.length),
    )
