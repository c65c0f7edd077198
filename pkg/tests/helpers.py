"""Shared random generators for property and acceptance tests."""

import random
from typing import List, Tuple

from passforest import (
    Leaf,
    Manager,
    MockFunction,
    MockProgram,
    PassLevel,
    PassRegistry,
    PipelineForest,
    load_registry,
)
from passforest.forest import (
    ELEMENT_RULE,
    MANAGER_RULE,
    get_node,
    manager_paths,
    replace_node,
)

LEVELS = (PassLevel.MODULE, PassLevel.CGSCC, PassLevel.FUNCTION, PassLevel.LOOP)


def synthetic_registry(n_passes: int, rng: random.Random) -> PassRegistry:
    """Registry of p0..pN at random levels, every level represented."""
    lines = []
    for i in range(n_passes):
        level = LEVELS[i % 4] if i < 4 else rng.choice(LEVELS)
        lines.append(f"p{i}={level.token}")
    return load_registry("\n".join(lines) + "\n")


def random_mock_program(
    registry: PassRegistry,
    rng: random.Random,
    n_functions: int = None,
    synergy_density: float = 0.3,
    coupling_density: float = 0.3,
) -> MockProgram:
    """Random DAG of functions with random pass effects and bonuses."""
    if n_functions is None:
        n_functions = rng.randint(1, 4)
    functions = tuple(
        MockFunction(f"f{i}", rng.randint(20, 120)) for i in range(n_functions)
    )
    edges = []
    for i in range(n_functions):
        for j in range(i + 1, n_functions):
            if rng.random() < 0.4:
                edges.append((f"f{i}", f"f{j}"))
    names = [p.name for p in registry.concrete_passes()]
    effects = {name: rng.randint(0, 6) for name in names}
    synergy = {}
    coupling = {}
    for p in names:
        for q in names:
            if rng.random() < synergy_density:
                synergy[(p, q)] = rng.randint(1, 5)
            if edges and rng.random() < coupling_density:
                coupling[(p, q)] = rng.randint(1, 6)
    return MockProgram(functions, tuple(edges), effects, synergy, coupling)


def random_typed_sequence(
    registry: PassRegistry, rng: random.Random, length: int
) -> List[Tuple[str, PassLevel]]:
    names = list(registry.concrete_passes())
    picks = [rng.choice(names) for _ in range(length)]
    return [(p.name, p.level) for p in picks]


# ---------------------------------------------------------------------------
# Single-rule mutants for the grammar-soundness checks.
# ---------------------------------------------------------------------------

def make_single_rule_mutant(
    forest: PipelineForest, registry: PassRegistry, rng: random.Random
) -> Tuple[PipelineForest, str]:
    """Break exactly one grammar rule; returns (mutant, violated rule)."""
    kinds = ["root", "empty", "bad-manager-child", "retyped-leaf"]
    while True:
        kind = rng.choice(kinds)
        if kind == "root":
            index = rng.randrange(len(forest.trees))
            root = forest.trees[index]
            bad_level = rng.choice(
                (PassLevel.CGSCC, PassLevel.FUNCTION, PassLevel.LOOP)
            )
            # keep the subtree internally valid: a single leaf of the level
            name = _name_at(registry, bad_level, rng)
            trees = list(forest.trees)
            trees[index] = Manager(bad_level, (Leaf(name, bad_level),))
            return PipelineForest(tuple(trees)), "R1"
        if kind == "empty":
            path, mgr = rng.choice(manager_paths(forest))
            return (
                replace_node(forest, path, Manager(mgr.level, ())),
                MANAGER_RULE[mgr.level],
            )
        if kind == "bad-manager-child":
            path, mgr = rng.choice(manager_paths(forest))
            illegal = _illegal_child_level(mgr.level)
            if illegal is None:
                continue
            name = _name_at(registry, illegal, rng)
            bad = Manager(illegal, (Leaf(name, illegal),))
            mutated = Manager(mgr.level, mgr.children + (bad,))
            return replace_node(forest, path, mutated), ELEMENT_RULE[mgr.level]
        if kind == "retyped-leaf":
            leaf_sites = [
                (p, n)
                for p, n in _leaf_sites(forest)
            ]
            path, leaf = rng.choice(leaf_sites)
            parent = get_node(forest, path[:-1])
            wrong = rng.choice([lvl for lvl in LEVELS if lvl != parent.level])
            return (
                replace_node(forest, path, Leaf(leaf.name, wrong)),
                ELEMENT_RULE[parent.level],
            )


def _leaf_sites(forest):
    from passforest.forest import leaf_paths

    return leaf_paths(forest)


def _name_at(registry, level, rng):
    candidates = [p.name for p in registry.passes_at(level)]
    return rng.choice(candidates) if candidates else f"ghost-{level.token}"


def _illegal_child_level(level: PassLevel):
    if level == PassLevel.MODULE:
        return PassLevel.LOOP
    if level == PassLevel.CGSCC:
        return PassLevel.LOOP
    if level == PassLevel.FUNCTION:
        return PassLevel.CGSCC
    return PassLevel.FUNCTION  # function managers never nest under loop
