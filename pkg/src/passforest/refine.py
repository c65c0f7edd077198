"""Structural refinement of a fixed pass sequence.

The pass order found by the main search is kept fixed; what remains open
is where the sequence is cut into manager blocks. Boundaries between
passes of different levels always cut (the arrangements they could
distinguish execute identically), so the only real choices sit between
same-level neighbors: the decision points. A bit per decision point
(0 = join, 1 = split) spans the full space of partitions, which is
searched exhaustively when small and by a small genetic algorithm
otherwise. The refined pipeline is never worse than the seed.
"""

import itertools
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ChromosomeLengthMismatch
from .forest import (
    Leaf,
    Manager,
    PipelineForest,
    adaptor_chain,
    leaf_paths,
    leaf_sequence,
    wrap_in_chain,
)
from .grammar import print_pipeline
from .registry import PassLevel

TypedSequence = Sequence[Tuple[str, PassLevel]]


@dataclass(frozen=True)
class PartitionProblem:
    """A typed pass sequence plus its joinable boundary indices.

    Boundary i sits between sequence[i] and sequence[i+1]; it is a
    decision point iff the two passes share a level.
    """

    sequence: Tuple[Tuple[str, PassLevel], ...]
    decision_points: Tuple[int, ...]

    def space_size(self) -> int:
        return 2 ** len(self.decision_points)


@dataclass(frozen=True)
class PartitionChromosome:
    """Join/split bit per decision point: 0 joins, 1 splits."""

    bits: Tuple[int, ...]


def decision_points(sequence: TypedSequence) -> PartitionProblem:
    seq = tuple((name, level) for name, level in sequence)
    if not seq:
        raise ValueError("sequence is empty")
    points = tuple(
        i for i in range(len(seq) - 1) if seq[i][1] == seq[i + 1][1]
    )
    return PartitionProblem(sequence=seq, decision_points=points)


def _blocks(
    problem: PartitionProblem, chromosome: PartitionChromosome
) -> List[Tuple[PassLevel, List[str], bool]]:
    """Cut the sequence into blocks.

    Returns (level, names, split_before) triples; split_before is True
    when the cut before the block came from a decision-point bit rather
    than a forced level change.
    """
    bit_at = dict(zip(problem.decision_points, chromosome.bits))
    blocks: List[Tuple[PassLevel, List[str], bool]] = []
    current: List[str] = [problem.sequence[0][0]]
    level = problem.sequence[0][1]
    split_before = False
    for i in range(1, len(problem.sequence)):
        name, nxt_level = problem.sequence[i]
        boundary = i - 1
        if boundary in bit_at:
            cut = bool(bit_at[boundary])
            chosen = True
        else:
            cut = True
            chosen = False
        if cut:
            blocks.append((level, current, split_before))
            current, level, split_before = [name], nxt_level, chosen
        else:
            current.append(name)
    blocks.append((level, current, split_before))
    return blocks


def decode(
    problem: PartitionProblem, chromosome: PartitionChromosome
) -> PipelineForest:
    """Materialize a partition as a forest.

    Each block becomes one innermost manager wrapped in its adaptor
    chain; blocks sit as siblings inside a shared module tree. Module-
    level blocks place their passes directly under the module root, so a
    split between two module-level blocks starts a new tree instead
    (nested module managers are never produced). The leaf sequence of
    the result equals the input sequence.
    """
    if len(chromosome.bits) != len(problem.decision_points):
        raise ChromosomeLengthMismatch(
            f"chromosome length {len(chromosome.bits)} != "
            f"{len(problem.decision_points)} decision points"
        )
    trees: List[List] = [[]]
    for level, names, split_before in _blocks(problem, chromosome):
        leaves = [Leaf(name, level) for name in names]
        if level == PassLevel.MODULE:
            if split_before and trees[-1]:
                trees.append([])
            trees[-1].extend(leaves)
        else:
            chain = adaptor_chain(PassLevel.MODULE, level)
            trees[-1].append(wrap_in_chain(chain, tuple(leaves)))
    return PipelineForest(
        tuple(Manager(PassLevel.MODULE, tuple(children)) for children in trees)
    )


def encode(forest: PipelineForest) -> Tuple[PartitionProblem, PartitionChromosome]:
    """Read a forest back into partition space.

    Bit i is 0 iff passes i and i+1 share their innermost manager. Seeds
    with same-level manager nesting or multi-tree splits collapse onto
    their flat equivalence class; the leaf sequence is always preserved.
    """
    problem = decision_points(leaf_sequence(forest))
    parents = [path[:-1] for path, _ in leaf_paths(forest)]
    bits = tuple(
        0 if parents[i] == parents[i + 1] else 1
        for i in problem.decision_points
    )
    return problem, PartitionChromosome(bits)


@dataclass
class RefineConfig:
    exhaustive_budget: int = 4096
    population_size: int = 16
    generations: int = 10
    mutation_rate: Optional[float] = None  # default 1/|D|
    crossover_rate: float = 0.9
    tournament_size: int = 3
    seed: int = 0


@dataclass
class RefinementResult:
    forest: PipelineForest
    seed_pipeline: str
    seed_ic: Optional[int]
    refined_pipeline: str
    refined_ic: Optional[int]
    decision_point_count: int
    evaluations_used: int

    def to_dict(self) -> dict:
        return {
            "seed_pipeline": self.seed_pipeline,
            "seed_ic": self.seed_ic,
            "refined_pipeline": self.refined_pipeline,
            "refined_ic": self.refined_ic,
            "decision_point_count": self.decision_point_count,
            "evaluations_used": self.evaluations_used,
        }


class _CountCache:
    """Instruction counts per pipeline string; failures count as +inf."""

    def __init__(self, backend, program, parallel: int):
        self.backend = backend
        self.program = program
        self.parallel = parallel
        self.counts: Dict[str, float] = {}

    def fill(self, forests: Sequence[PipelineForest]) -> None:
        todo: List[Tuple[str, PipelineForest]] = []
        for forest in forests:
            key = print_pipeline(forest)
            if key not in self.counts and all(k != key for k, _ in todo):
                todo.append((key, forest))
        pending = [forest for _, forest in todo]
        if self.parallel > 1 and len(pending) > 1:
            with ThreadPoolExecutor(max_workers=self.parallel) as pool:
                results = list(
                    pool.map(
                        lambda f: self.backend.evaluate(self.program, f), pending
                    )
                )
        else:
            results = [self.backend.evaluate(self.program, f) for f in pending]
        for (key, _), res in zip(todo, results):
            self.counts[key] = res.instruction_count if res.ok else float("inf")

    def count_of(self, forest: PipelineForest) -> float:
        key = print_pipeline(forest)
        if key not in self.counts:
            self.fill([forest])
        return self.counts[key]


def _all_chromosomes(k: int):
    for bits in itertools.product((0, 1), repeat=k):
        yield PartitionChromosome(bits)


def refine(
    seed_forest: PipelineForest,
    program,
    backend,
    config: Optional[RefineConfig] = None,
    parallel: int = 1,
) -> RefinementResult:
    """Search the partition space of the seed's pass sequence.

    Exhaustive when 2^|D| fits the budget, genetic otherwise (the seed's
    own chromosome joins the initial population). Ties between decoded
    candidates break toward the lexicographically smallest pipeline
    string; the seed wins unless a candidate is strictly better, so the
    result never regresses.
    """
    config = config or RefineConfig()
    cache = _CountCache(backend, program, parallel)
    seed_string = print_pipeline(seed_forest)
    seed_count = cache.count_of(seed_forest)
    problem, seed_chromosome = encode(seed_forest)
    k = len(problem.decision_points)

    best_forest, best_count = None, float("inf")
    if k > 0:
        if problem.space_size() <= config.exhaustive_budget:
            candidates = [
                decode(problem, chromosome)
                for chromosome in _all_chromosomes(k)
            ]
            cache.fill(candidates)
        else:
            candidates = _genetic_partition_search(
                problem, seed_chromosome, cache, config
            )
        best_forest = min(
            candidates,
            key=lambda f: (cache.count_of(f), print_pipeline(f)),
        )
        best_count = cache.count_of(best_forest)

    if best_forest is None or not best_count < seed_count:
        best_forest, best_count = seed_forest, seed_count
    return RefinementResult(
        forest=best_forest,
        seed_pipeline=seed_string,
        seed_ic=None if seed_count == float("inf") else int(seed_count),
        refined_pipeline=print_pipeline(best_forest),
        refined_ic=None if best_count == float("inf") else int(best_count),
        decision_point_count=k,
        evaluations_used=len(cache.counts),
    )


def _genetic_partition_search(
    problem: PartitionProblem,
    seed_chromosome: PartitionChromosome,
    cache: _CountCache,
    config: RefineConfig,
) -> List[PipelineForest]:
    """Bit-vector GA over decision points; returns every decoded forest."""
    rng = random.Random(config.seed)
    k = len(problem.decision_points)
    mutation_rate = (
        config.mutation_rate if config.mutation_rate is not None else 1.0 / k
    )

    population = [seed_chromosome]
    while len(population) < config.population_size:
        population.append(
            PartitionChromosome(tuple(rng.randint(0, 1) for _ in range(k)))
        )
    evaluated: List[PipelineForest] = []

    def fitness(chromosome):
        return -cache.count_of(decode(problem, chromosome))

    for _ in range(config.generations + 1):
        forests = [decode(problem, ch) for ch in population]
        cache.fill(forests)
        evaluated.extend(forests)
        ranked = sorted(
            population,
            key=lambda ch: (-fitness(ch), print_pipeline(decode(problem, ch))),
        )
        next_population = [ranked[0]]
        while len(next_population) < config.population_size:
            parents = []
            for _ in range(2):
                contenders = [
                    population[rng.randrange(len(population))]
                    for _ in range(config.tournament_size)
                ]
                parents.append(max(contenders, key=fitness))
            bits_a, bits_b = parents[0].bits, parents[1].bits
            if rng.random() < config.crossover_rate and k > 1:
                point = rng.randrange(1, k)
                bits_a, bits_b = (
                    bits_a[:point] + bits_b[point:],
                    bits_b[:point] + bits_a[point:],
                )
            for bits in (bits_a, bits_b):
                if len(next_population) >= config.population_size:
                    break
                flipped = tuple(
                    (1 - b) if rng.random() < mutation_rate else b for b in bits
                )
                next_population.append(PartitionChromosome(flipped))
        population = next_population
    return evaluated
