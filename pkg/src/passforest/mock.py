"""Deterministic synthetic programs for oracle-backed evaluation.

A MockProgram is a handful of functions with base instruction counts, an
acyclic call graph, and three tables describing how passes shrink them:
flat per-function effects, order-dependent same-function pair bonuses,
and cross-function coupling bonuses that fire only when a caller is
optimized after all of its callees. Because the bonuses depend on event
order, the mock distinguishes pipeline structures exactly the way the
hierarchical execution model does.

Execution semantics of a forest over a mock program:

* trees run in order; within a module manager, children run in order;
* a module-level leaf touches the whole module: one event per function,
  all functions before the next sibling starts;
* cgscc and function managers are function-at-a-time units: the entire
  leaf block they contain is applied to one function before the next
  (loop managers inside simply contribute their leaves to the block);
* sibling managers and separate trees each complete over all functions
  before the next begins.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Tuple, Union

from .errors import SchemaError
from .evaluation import EvaluationResult
from .forest import Leaf, Manager, PipelineForest, iter_leaves
from .registry import PassLevel


@dataclass(frozen=True)
class MockFunction:
    name: str
    base_ic: int


@dataclass(frozen=True)
class MockProgram:
    """Synthetic module; see the module docstring for the semantics."""

    functions: Tuple[MockFunction, ...]
    call_edges: Tuple[Tuple[str, str], ...] = ()
    pass_effects: Mapping[str, int] = field(default_factory=dict)
    pair_synergy: Mapping[Tuple[str, str], int] = field(default_factory=dict)
    coupling: Mapping[Tuple[str, str], int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "call_edges", tuple(tuple(e) for e in self.call_edges))
        object.__setattr__(self, "pass_effects", dict(self.pass_effects))
        object.__setattr__(
            self, "pair_synergy", {tuple(k): v for k, v in dict(self.pair_synergy).items()}
        )
        object.__setattr__(
            self, "coupling", {tuple(k): v for k, v in dict(self.coupling).items()}
        )
        names = [f.name for f in self.functions]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate function names")
        known = set(names)
        for f in self.functions:
            if f.base_ic < 0:
                raise SchemaError(f"negative base_ic for {f.name!r}")
        for caller, callee in self.call_edges:
            if caller not in known or callee not in known:
                raise SchemaError(f"call edge ({caller}, {callee}) names unknown function")
        if any(v < 0 for v in self.pass_effects.values()):
            raise SchemaError("pass effects must be nonnegative")
        self._check_acyclic()

    def _check_acyclic(self):
        out: Dict[str, List[str]] = {}
        for caller, callee in self.call_edges:
            out.setdefault(caller, []).append(callee)
        WHITE, GRAY, BLACK = 0, 1, 2
        color = {f.name: WHITE for f in self.functions}

        def visit(node):
            color[node] = GRAY
            for nxt in out.get(node, ()):
                if color[nxt] == GRAY:
                    raise SchemaError("call graph has a cycle")
                if color[nxt] == WHITE:
                    visit(nxt)
            color[node] = BLACK

        for name in color:
            if color[name] == WHITE:
                visit(name)

    def callees_of(self, name: str) -> Tuple[str, ...]:
        return tuple(callee for caller, callee in self.call_edges if caller == name)

    def total_base_ic(self) -> int:
        return sum(f.base_ic for f in self.functions)


def schedule_of(forest: PipelineForest, program: MockProgram) -> List[Tuple[str, str]]:
    """Ordered (pass, function) application events for a forest."""
    fnames = [f.name for f in program.functions]
    events: List[Tuple[str, str]] = []

    def run_module_manager(mgr: Manager):
        for child in mgr.children:
            if isinstance(child, Leaf):
                events.extend((child.name, fname) for fname in fnames)
            elif child.level == PassLevel.MODULE:
                run_module_manager(child)
            else:
                # cgscc/function manager: whole leaf block per function
                block = [leaf.name for leaf in iter_leaves(child)]
                for fname in fnames:
                    events.extend((p, fname) for p in block)

    for tree in forest.trees:
        run_module_manager(tree)
    return events


def mock_evaluate(program: MockProgram, forest: PipelineForest) -> EvaluationResult:
    """Apply a forest's schedule and report the resulting count.

    Each event (q, f) reduces f by the flat effect of q, plus every pair
    bonus (p, q) whose p already ran on f, plus every coupling bonus
    (p, q) when f has callees and p already ran on all of them. Function
    counts clamp at zero.
    """
    synergy_by_target: Dict[str, List[Tuple[str, int]]] = {}
    for (p, q), bonus in program.pair_synergy.items():
        synergy_by_target.setdefault(q, []).append((p, bonus))
    coupling_by_target: Dict[str, List[Tuple[str, int]]] = {}
    for (p, q), bonus in program.coupling.items():
        coupling_by_target.setdefault(q, []).append((p, bonus))
    callees = {f.name: program.callees_of(f.name) for f in program.functions}

    ran_on: Dict[str, set] = {f.name: set() for f in program.functions}
    reduction: Dict[str, int] = {f.name: 0 for f in program.functions}

    for q, fname in schedule_of(forest, program):
        amount = program.pass_effects.get(q, 0)
        for p, bonus in synergy_by_target.get(q, ()):
            if p in ran_on[fname]:
                amount += bonus
        if callees[fname]:
            for p, bonus in coupling_by_target.get(q, ()):
                if all(p in ran_on[c] for c in callees[fname]):
                    amount += bonus
        reduction[fname] += amount
        ran_on[fname].add(q)

    total = sum(
        max(0, f.base_ic - reduction[f.name]) for f in program.functions
    )
    return EvaluationResult(instruction_count=total, status="ok")


# ---------------------------------------------------------------------------
# JSON spec files.
# ---------------------------------------------------------------------------

def mock_program_from_dict(spec: Mapping) -> MockProgram:
    try:
        functions = tuple(
            MockFunction(f["name"], int(f["base_ic"])) for f in spec["functions"]
        )
        call_edges = tuple((c[0], c[1]) for c in spec.get("calls", ()))
        effects = {str(k): int(v) for k, v in spec.get("effects", {}).items()}
        synergy = {
            (e["p"], e["q"]): int(e["bonus"]) for e in spec.get("pair_synergy", ())
        }
        coupling = {
            (e["p"], e["q"]): int(e["bonus"]) for e in spec.get("coupling", ())
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad mock program spec: {exc}") from exc
    return MockProgram(functions, call_edges, effects, synergy, coupling)


def mock_program_to_dict(program: MockProgram) -> dict:
    return {
        "functions": [
            {"name": f.name, "base_ic": f.base_ic} for f in program.functions
        ],
        "calls": [list(edge) for edge in program.call_edges],
        "effects": dict(program.pass_effects),
        "pair_synergy": [
            {"p": p, "q": q, "bonus": bonus}
            for (p, q), bonus in program.pair_synergy.items()
        ],
        "coupling": [
            {"p": p, "q": q, "bonus": bonus}
            for (p, q), bonus in program.coupling.items()
        ],
    }


def load_mock_program(path: Union[str, Path]) -> MockProgram:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    return mock_program_from_dict(spec)


def save_mock_program(program: MockProgram, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mock_program_to_dict(program), fh, indent=2, sort_keys=True)
        fh.write("\n")


class MockBackend:
    """Evaluation backend over mock programs; pure and thread-safe.

    Program references may be MockProgram instances or paths to JSON
    spec files (cached after first load).
    """

    name = "mock"

    def __init__(self):
        self._cache: Dict[str, MockProgram] = {}

    def resolve(self, program: Union[MockProgram, str, Path]) -> MockProgram:
        if isinstance(program, MockProgram):
            return program
        key = str(program)
        if key not in self._cache:
            self._cache[key] = load_mock_program(key)
        return self._cache[key]

    def evaluate(self, program, forest: PipelineForest) -> EvaluationResult:
        return mock_evaluate(self.resolve(program), forest)

    def original_count(self, program) -> int:
        return self.resolve(program).total_base_ic()
