import stat

import pytest

import helpers
from passforest import (
    BackendUnavailable,
    EvaluationRequest,
    InvalidPipeline,
    Leaf,
    MalformedIR,
    Manager,
    MockBackend,
    MockFunction,
    MockProgram,
    OptBackend,
    PassLevel,
    PipelineForest,
    SchemaError,
    count_ir_instructions,
    evaluate,
    load_mock_program,
    mock_evaluate,
    opt_backend_evaluate,
    parse_pipeline,
    save_mock_program,
    schedule_of,
)

SAMPLE_IR = """\
; ModuleID = 'demo'
target triple = "x86_64-unknown-linux-gnu"

declare i32 @puts(i8*)

define i32 @add(i32 %a, i32 %b) {
entry:
  %1 = add i32 %a, %b
  ret i32 %1
}
"""


# ---------------------------------------------------------------------------
# count_ir_instructions
# ---------------------------------------------------------------------------

def test_count_simple_body():
    assert count_ir_instructions(SAMPLE_IR) == 2


def test_count_declarations_only():
    assert count_ir_instructions("declare i32 @puts(i8*)\n") == 0


def test_count_is_additive_over_functions():
    two = """\
define void @a() {
  %1 = add i32 1, 2
  %2 = add i32 %1, 3
  ret void
}

define void @b() {
bb:
  %1 = mul i32 2, 2
  %2 = mul i32 %1, 2
  br label %done

done:                       ; preds = %bb
  ret void
}
"""
    assert count_ir_instructions(two) == 3 + 4


def test_count_skips_labels_comments_blanks():
    body = """\
define void @f() {
entry:
  ; a comment
  %1 = add i32 1, 1  ; trailing comment

42:                  ; preds = %entry
  ret void
}
"""
    assert count_ir_instructions(body) == 2


def test_count_unbalanced_raises():
    with pytest.raises(MalformedIR):
        count_ir_instructions("define void @f() {\n  ret void\n")
    with pytest.raises(MalformedIR):
        count_ir_instructions("}\n")
    with pytest.raises(MalformedIR):
        count_ir_instructions(
            "define void @f() {\ndefine void @g() {\n}\n}\n"
        )


# ---------------------------------------------------------------------------
# schedule_of (hierarchical execution semantics)
# ---------------------------------------------------------------------------

@pytest.fixture
def two_functions():
    return MockProgram(
        functions=(MockFunction("f1", 10), MockFunction("f2", 10)),
        pass_effects={},
    )


def test_schedule_interleaved(two_functions, ab_registry):
    forest = parse_pipeline("module(function(a,b))", ab_registry)
    assert schedule_of(forest, two_functions) == [
        ("a", "f1"), ("b", "f1"), ("a", "f2"), ("b", "f2"),
    ]


def test_schedule_sibling_managers(two_functions, ab_registry):
    forest = parse_pipeline("module(function(a),function(b))", ab_registry)
    assert schedule_of(forest, two_functions) == [
        ("a", "f1"), ("a", "f2"), ("b", "f1"), ("b", "f2"),
    ]


def test_schedule_module_pass_module_wide(two_functions):
    forest = PipelineForest(
        (Manager(PassLevel.MODULE, (Leaf("m", PassLevel.MODULE),)),)
    )
    assert schedule_of(forest, two_functions) == [("m", "f1"), ("m", "f2")]


def test_schedule_separate_trees_match_siblings(two_functions, ab_registry):
    siblings = parse_pipeline("module(function(a),function(b))", ab_registry)
    trees = parse_pipeline("module(function(a)),module(function(b))", ab_registry)
    assert schedule_of(siblings, two_functions) == schedule_of(trees, two_functions)


def test_schedule_loop_manager_inherits_traversal(two_functions):
    reg_lines = "f=function\nl=loop\n"
    from passforest import load_registry

    registry = load_registry(reg_lines)
    forest = parse_pipeline("module(function(f,loop(l)))", registry)
    assert schedule_of(forest, two_functions) == [
        ("f", "f1"), ("l", "f1"), ("f", "f2"), ("l", "f2"),
    ]


def test_schedule_cgscc_manager_function_at_a_time(two_functions):
    from passforest import load_registry

    registry = load_registry("c=cgscc\nf=function\n")
    nested = parse_pipeline("module(cgscc(c,function(f)))", registry)
    assert schedule_of(nested, two_functions) == [
        ("c", "f1"), ("f", "f1"), ("c", "f2"), ("f", "f2"),
    ]
    staged = parse_pipeline("module(cgscc(c)),module(function(f))", registry)
    assert schedule_of(staged, two_functions) == [
        ("c", "f1"), ("c", "f2"), ("f", "f1"), ("f", "f2"),
    ]


# ---------------------------------------------------------------------------
# mock evaluation
# ---------------------------------------------------------------------------

def test_mock_m1_pair_synergy(m1, ab_registry, backend):
    joined = parse_pipeline("module(function(a,b))", ab_registry)
    reversed_ = parse_pipeline("module(function(b,a))", ab_registry)
    assert backend.evaluate(m1, joined).instruction_count == 82
    assert backend.evaluate(m1, reversed_).instruction_count == 85


def test_mock_m2_coupling(m2, ab_registry, backend):
    split = parse_pipeline("module(function(a),function(b))", ab_registry)
    joined = parse_pipeline("module(function(a,b))", ab_registry)
    assert backend.evaluate(m2, split).instruction_count == 50 + 50 - 20 - 7
    assert backend.evaluate(m2, joined).instruction_count == 80


def test_mock_clamps_at_zero(ab_registry):
    program = MockProgram(
        functions=(MockFunction("f1", 3),), pass_effects={"a": 100}
    )
    forest = parse_pipeline("module(function(a))", ab_registry)
    assert mock_evaluate(program, forest).instruction_count == 0


def test_mock_zero_effect_pass_is_neutral(m1, ab_registry, backend):
    zreg = helpers.load_registry("a=function\nb=function\nz=function\n")
    base = backend.evaluate(m1, parse_pipeline("module(function(a,b))", zreg))
    with_z = backend.evaluate(m1, parse_pipeline("module(function(a,b,z))", zreg))
    assert base.instruction_count == with_z.instruction_count


def test_mock_determinism(m2, ab_registry, backend):
    forest = parse_pipeline("module(function(a),function(b))", ab_registry)
    results = {backend.evaluate(m2, forest).instruction_count for _ in range(5)}
    assert len(results) == 1


def test_heterogeneous_boundary_equivalence_examples(backend):
    from passforest import load_registry

    registry = load_registry("m=module\nf=function\n")
    program = MockProgram(
        functions=(MockFunction("f1", 40), MockFunction("f2", 40)),
        call_edges=(("f1", "f2"),),
        pass_effects={"m": 2, "f": 3},
        pair_synergy={("m", "f"): 4},
        coupling={("m", "f"): 5},
    )
    joined = parse_pipeline("module(m,function(f))", registry)
    split = parse_pipeline("module(m),module(function(f))", registry)
    assert (
        backend.evaluate(program, joined).instruction_count
        == backend.evaluate(program, split).instruction_count
    )


# ---------------------------------------------------------------------------
# MockProgram schema and JSON round trip
# ---------------------------------------------------------------------------

def test_mock_rejects_call_cycle():
    with pytest.raises(SchemaError):
        MockProgram(
            functions=(MockFunction("f1", 1), MockFunction("f2", 1)),
            call_edges=(("f1", "f2"), ("f2", "f1")),
        )


def test_mock_rejects_unknown_edge_name():
    with pytest.raises(SchemaError):
        MockProgram(
            functions=(MockFunction("f1", 1),), call_edges=(("f1", "zz"),)
        )


def test_mock_rejects_negative_effect():
    with pytest.raises(SchemaError):
        MockProgram(functions=(MockFunction("f1", 1),), pass_effects={"a": -1})


def test_mock_json_round_trip(m2, tmp_path):
    path = tmp_path / "m2.json"
    save_mock_program(m2, path)
    assert load_mock_program(path) == m2


def test_mock_backend_loads_spec_files(m1, tmp_path, ab_registry):
    path = tmp_path / "m1.json"
    save_mock_program(m1, path)
    backend = MockBackend()
    forest = parse_pipeline("module(function(a,b))", ab_registry)
    assert backend.evaluate(str(path), forest).instruction_count == 82
    assert backend.original_count(str(path)) == 100


# ---------------------------------------------------------------------------
# evaluate(): validation happens before any backend call
# ---------------------------------------------------------------------------

class _RecordingBackend:
    def __init__(self):
        self.calls = 0

    def evaluate(self, program, forest):
        self.calls += 1
        raise AssertionError("backend must not be reached")


def test_evaluate_rejects_invalid_pipeline_before_backend(m1):
    backend = _RecordingBackend()
    empty = PipelineForest((Manager(PassLevel.MODULE, ()),))
    with pytest.raises(InvalidPipeline):
        evaluate(EvaluationRequest(m1, empty), backend)
    assert backend.calls == 0


def test_evaluate_dispatches_valid_pipeline(m1, ab_registry, backend):
    forest = parse_pipeline("module(function(a,b))", ab_registry)
    result = evaluate(EvaluationRequest(m1, forest), backend, ab_registry)
    assert result.ok and result.instruction_count == 82


# ---------------------------------------------------------------------------
# opt subprocess backend (via fake opt executables)
# ---------------------------------------------------------------------------

def _write_script(path, body):
    path.write_text("#!/bin/sh\n" + body)
    path.chmod(path.stat().st_mode | stat.S_IXUSR)
    return str(path)


@pytest.fixture
def ir_file(tmp_path):
    path = tmp_path / "input.ll"
    path.write_text(SAMPLE_IR)
    return path


def test_opt_backend_counts_output(tmp_path, ir_file):
    fake = _write_script(tmp_path / "opt", f"cat {ir_file}\nexit 0\n")
    result = opt_backend_evaluate(ir_file, "module(globalopt)", opt_path=fake)
    assert result.ok and result.instruction_count == 2


def test_opt_backend_nonzero_exit(tmp_path, ir_file):
    fake = _write_script(
        tmp_path / "opt", "echo 'unknown pass' >&2\nexit 1\n"
    )
    result = opt_backend_evaluate(ir_file, "module(nonsense)", opt_path=fake)
    assert not result.ok
    assert "unknown pass" in result.detail


def test_opt_backend_empty_pipeline_fails(tmp_path, ir_file):
    fake = _write_script(
        tmp_path / "opt", "echo 'usage: opt' >&2\nexit 1\n"
    )
    result = opt_backend_evaluate(ir_file, "", opt_path=fake)
    assert not result.ok


def test_opt_backend_timeout(tmp_path, ir_file):
    fake = _write_script(tmp_path / "opt", "sleep 5\n")
    result = opt_backend_evaluate(
        ir_file, "module(globalopt)", opt_path=fake, timeout=0.2
    )
    assert not result.ok
    assert "timeout" in result.detail


def test_opt_backend_missing_binary(ir_file):
    with pytest.raises(BackendUnavailable):
        opt_backend_evaluate(
            ir_file, "module(globalopt)", opt_path="/does/not/exist/opt"
        )


def test_opt_backend_missing_input(tmp_path, registry):
    backend = OptBackend(opt_path=str(tmp_path / "opt"))
    forest = parse_pipeline("module(globalopt)", registry)
    result = backend.evaluate(tmp_path / "missing.ll", forest)
    assert not result.ok
    with pytest.raises(BackendUnavailable):
        backend.original_count(tmp_path / "missing.ll")


def test_opt_backend_original_count(tmp_path, ir_file):
    backend = OptBackend(opt_path=str(tmp_path / "unused"))
    assert backend.original_count(ir_file) == 2


def test_opt_path_env_var(tmp_path, ir_file, monkeypatch):
    fake = _write_script(tmp_path / "opt-env", f"cat {ir_file}\n")
    monkeypatch.setenv("PASSFOREST_OPT", fake)
    result = opt_backend_evaluate(ir_file, "module(globalopt)")
    assert result.ok and result.instruction_count == 2
