"""Structure-aware genetic search over pipeline forests.

Individuals are whole forests, valid by construction: initialization
walks the synergy graph and places each pass according to its edge type,
crossover swaps manager-rooted subtrees and discards any swap that
breaks a nesting rule, and mutation grows or rewrites the forest around
a randomly chosen anchor pass. The net effect is that no candidate ever
needs repair and no evaluation is wasted on an invalid pipeline.

All randomness flows through one seeded stream consumed in a fixed
order, so a run is a pure function of (program, graph, config); fitness
evaluations may be parallel without changing the result.
"""

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .forest import (
    Leaf,
    PipelineForest,
    adaptor_chain,
    get_node,
    insert_child,
    insert_tree,
    is_valid,
    leaf_count,
    leaf_paths,
    manager_paths,
    minimal_wrap,
    random_forest,
    replace_node,
    trim_to_length,
    wrap_in_chain,
)
from .grammar import print_pipeline
from .registry import PassLevel, PassRegistry
from .synergy import SynergyGraph


@dataclass(frozen=True)
class Individual:
    forest: PipelineForest
    fitness: Optional[int] = None


@dataclass
class SearchConfig:
    population_size: int = 50
    generations: int = 20
    max_sequence_length: int = 24
    crossover_rate: float = 0.9
    mutation_rate: float = 0.3
    tournament_size: int = 3
    elitism: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.max_sequence_length < 1:
            raise ValueError("max_sequence_length must be >= 1")
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        for rate in (self.crossover_rate, self.mutation_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("rates must lie in [0, 1]")


def _weighted_pick(rng: random.Random, items: Sequence, weights: Sequence[float]):
    return rng.choices(list(items), weights=list(weights), k=1)[0]


def _leaf_path_to(level: PassLevel) -> Tuple[int, ...]:
    # tree index, then one step per manager of the minimal wrap chain
    return (0,) * (len(adaptor_chain(PassLevel.MODULE, level)) + 2)


def _place_after_anchor(
    forest: PipelineForest,
    anchor_path: Tuple[int, ...],
    name: str,
    level: PassLevel,
) -> Tuple[PipelineForest, Tuple[int, ...]]:
    """Insert a pass next to the anchor leaf, respecting its level.

    Same level: next sibling in the anchor's manager. Deeper level: a
    fresh manager chain opened right after the anchor. Shallower level:
    a new minimal-wrap tree right after the anchor's tree.
    """
    anchor = get_node(forest, anchor_path)
    parent_path, idx = anchor_path[:-1], anchor_path[-1]
    if level == anchor.level:
        new_forest = insert_child(forest, parent_path, idx + 1, Leaf(name, level))
        return new_forest, parent_path + (idx + 1,)
    if level > anchor.level:
        chain = adaptor_chain(anchor.level, level)
        node = wrap_in_chain(chain, (Leaf(name, level),))
        new_forest = insert_child(forest, parent_path, idx + 1, node)
        return new_forest, parent_path + (idx + 1,) + (0,) * len(chain)
    tree_index = anchor_path[0] + 1
    new_forest = insert_tree(forest, tree_index, minimal_wrap(name, level))
    return new_forest, (tree_index,) + _leaf_path_to(level)[1:]


def weighted_walk_init(
    graph: SynergyGraph,
    registry: PassRegistry,
    config: SearchConfig,
    rng: random.Random,
) -> Individual:
    """Seed one individual by a weighted random walk on the graph.

    The start pass follows the mined start distribution; each successor
    is drawn proportionally to its synergy weight and placed according
    to the edge's level relationship. An empty graph falls back to a
    uniformly random valid forest.
    """
    names = [
        name
        for name in graph.start_weights
        if name in registry and registry.level_of(name) is not None
    ]
    if not names:
        return Individual(
            random_forest(rng, registry, max_leaves=config.max_sequence_length)
        )
    start = _weighted_pick(rng, names, [graph.start_weights[n] for n in names])
    level = registry.level_of(start)
    forest = PipelineForest((minimal_wrap(start, level),))
    anchor_path = _leaf_path_to(level)
    current = start
    while leaf_count(forest) < config.max_sequence_length:
        successors = [
            e
            for e in graph.successors(current)
            if e.dst in registry and registry.level_of(e.dst) is not None
        ]
        if not successors:
            break
        edge = _weighted_pick(rng, successors, [e.weight for e in successors])
        nxt_level = registry.level_of(edge.dst)
        forest, anchor_path = _place_after_anchor(
            forest, anchor_path, edge.dst, nxt_level
        )
        current = edge.dst
    return Individual(forest)


def crossover(
    parent_a: Individual,
    parent_b: Individual,
    rng: random.Random,
    max_sequence_length: Optional[int] = None,
) -> Optional[Tuple[Individual, Individual]]:
    """Swap one random manager-rooted subtree between the parents.

    Returns None (parents unchanged) when either offspring would break a
    nesting rule. Oversized offspring are trimmed from the tail.
    """
    path_a, node_a = rng.choice(manager_paths(parent_a.forest))
    path_b, node_b = rng.choice(manager_paths(parent_b.forest))
    child_a = replace_node(parent_a.forest, path_a, node_b)
    child_b = replace_node(parent_b.forest, path_b, node_a)
    if not (is_valid(child_a) and is_valid(child_b)):
        return None
    if max_sequence_length is not None:
        child_a = trim_to_length(child_a, max_sequence_length)
        child_b = trim_to_length(child_b, max_sequence_length)
    return Individual(child_a), Individual(child_b)


def mutate(
    individual: Individual,
    graph: SynergyGraph,
    registry: PassRegistry,
    rng: random.Random,
) -> Individual:
    """Grow or rewrite the forest around a random anchor pass.

    A synergy partner of the anchor is preferred; without one, a random
    concrete pass keeps the population diverse. Half the time the chosen
    pass replaces another leaf of its own level, otherwise it is
    inserted next to the anchor the same way the walk would place it.
    """
    forest = individual.forest
    leaves = leaf_paths(forest)
    anchor_path, anchor = rng.choice(leaves)
    successors = [
        e
        for e in graph.successors(anchor.name)
        if e.dst in registry and registry.level_of(e.dst) is not None
    ]
    if successors:
        edge = _weighted_pick(rng, successors, [e.weight for e in successors])
        partner = edge.dst
        partner_level = registry.level_of(partner)
    else:
        info = rng.choice(list(registry.concrete_passes()))
        partner, partner_level = info.name, info.level
    if rng.random() < 0.5:
        candidates = [
            path
            for path, leaf in leaves
            if path != anchor_path and leaf.level == partner_level
        ]
        if candidates:
            target = rng.choice(candidates)
            return Individual(
                replace_node(forest, target, Leaf(partner, partner_level))
            )
    new_forest, _ = _place_after_anchor(forest, anchor_path, partner, partner_level)
    return Individual(new_forest)


def _tournament(
    rng: random.Random, population: List[Individual], size: int
) -> Individual:
    contenders = [population[rng.randrange(len(population))] for _ in range(size)]
    return max(contenders, key=lambda ind: ind.fitness)


class _FitnessCache:
    """Maps pipeline strings to fitness; one backend call per pipeline."""

    def __init__(self, backend, program, ic_orig: int, parallel: int):
        self.backend = backend
        self.program = program
        self.worst = -ic_orig - 1
        self.ic_orig = ic_orig
        self.parallel = parallel
        self._cache: Dict[str, int] = {}

    def fill(self, population: List[Individual]) -> List[Individual]:
        todo: List[Tuple[str, PipelineForest]] = []
        seen = set()
        for ind in population:
            key = print_pipeline(ind.forest)
            if key not in self._cache and key not in seen:
                seen.add(key)
                todo.append((key, ind.forest))
        forests = [forest for _, forest in todo]
        if self.parallel > 1 and len(forests) > 1:
            with ThreadPoolExecutor(max_workers=self.parallel) as pool:
                results = list(
                    pool.map(
                        lambda f: self.backend.evaluate(self.program, f), forests
                    )
                )
        else:
            results = [self.backend.evaluate(self.program, f) for f in forests]
        for (key, _), res in zip(todo, results):
            self._cache[key] = (
                self.ic_orig - res.instruction_count if res.ok else self.worst
            )
        return [
            replace(ind, fitness=self._cache[print_pipeline(ind.forest)])
            for ind in population
        ]


def run_search(
    program,
    graph: SynergyGraph,
    registry: PassRegistry,
    backend,
    config: SearchConfig,
    parallel: int = 1,
) -> Tuple[Individual, List[dict]]:
    """Evolve pipelines for one program; returns (best-ever, log).

    Fitness is the instruction-count reduction against the unoptimized
    program; failed evaluations rank strictly below "no change". The log
    holds one record per generation with the best-so-far fitness (which
    is nondecreasing) and the population mean.
    """
    rng = random.Random(config.seed)
    ic_orig = backend.original_count(program)
    cache = _FitnessCache(backend, program, ic_orig, parallel)

    population = [
        weighted_walk_init(graph, registry, config, rng)
        for _ in range(config.population_size)
    ]
    population = cache.fill(population)
    best = max(population, key=lambda ind: ind.fitness)
    log: List[dict] = [_log_record(0, best, population)]

    for generation in range(1, config.generations + 1):
        ranked = sorted(population, key=lambda ind: ind.fitness, reverse=True)
        next_population: List[Individual] = list(ranked[: config.elitism])
        while len(next_population) < config.population_size:
            parent_a = _tournament(rng, population, config.tournament_size)
            parent_b = _tournament(rng, population, config.tournament_size)
            children: Tuple[Individual, Individual] = (parent_a, parent_b)
            if rng.random() < config.crossover_rate:
                swapped = crossover(
                    parent_a, parent_b, rng, config.max_sequence_length
                )
                if swapped is not None:
                    children = swapped
            for child in children:
                if len(next_population) >= config.population_size:
                    break
                if rng.random() < config.mutation_rate:
                    child = mutate(child, graph, registry, rng)
                    child = Individual(
                        trim_to_length(child.forest, config.max_sequence_length)
                    )
                next_population.append(child)
        population = cache.fill(next_population)
        generation_best = max(population, key=lambda ind: ind.fitness)
        if generation_best.fitness > best.fitness:
            best = generation_best
        log.append(_log_record(generation, best, population))
    return best, log


def _log_record(generation: int, best: Individual, population) -> dict:
    fitnesses = [ind.fitness for ind in population]
    return {
        "generation": generation,
        "best_fitness": best.fitness,
        "mean_fitness": sum(fitnesses) / len(fitnesses),
        "best_pipeline_string": print_pipeline(best.forest),
    }
