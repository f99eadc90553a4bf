import random

from ml1.diagnostics import E_NO_ENTRY, E_NO_FRAME
from ml1.interp import IntV, UnitV, Interpreter, run
from ml1.resolve import resolve_units
from ml1.rewrite import Intrinsic, apply_rewriter, builtin_registry
from ml1.scopes import build_scope_graph

from conftest import build_project, parse_fixture, parse_source
from gen import program_unit, random_program, simulate


def run_program(*units, entry):
    """Rewrite with the defer intrinsic where imported, then evaluate."""
    graph = build_project(*units)
    registry = builtin_registry()
    rewritten = []
    for unit in units:
        if any(clause.path == ("go", "defer") for clause in unit.top_imports()):
            new_unit, _ = apply_rewriter(Intrinsic("go.defer.rewriter"), unit, registry)
        else:
            new_unit = unit
        rewritten.append(new_unit)
    final = build_scope_graph(rewritten)
    resolution = resolve_units(final, rewritten)
    assert not final.diagnostics and not resolution.diagnostics, (
        [d.render() for d in final.diagnostics + resolution.diagnostics]
    )
    return run(final, resolution, entry)


GO_DEFER = parse_fixture("lib", "go_defer.ml1")


def test_hello_world_trace():
    unit = parse_source('object Main {\n  def main() = {\n    print("hi")\n  }\n}', "m.ml1")
    trace = run_program(unit, entry="Main.main")
    assert trace.events == ["hi"]
    assert not trace.failed
    assert trace.value == UnitV()


def test_copy_program_unwinds_lifo():
    unit = parse_fixture("defer", "copy.ml1")
    trace = run_program(GO_DEFER, unit, entry="copyfile.Main.main")
    assert trace.events == ["open-in", "open-out", "transfer", "close-out", "close-in"]
    assert not trace.failed


def test_copy_program_runs_defers_on_error():
    unit = parse_fixture("defer", "copy_boom.ml1")
    trace = run_program(GO_DEFER, unit, entry="copyfile.Main.main")
    assert trace.events == ["open-in", "open-out", "transfer", "close-out", "close-in"]
    assert trace.failed
    assert trace.error.message == "boom"
    assert trace.error.suppressed == []


def test_repeated_dynamic_registration_unwinds_in_reverse():
    unit = parse_fixture("defer", "loop.ml1")
    trace = run_program(GO_DEFER, unit, entry="loopdemo.Main.main")
    assert trace.events == ["work", "3", "2", "1", "outer"]


def test_literals_and_blocks():
    unit = parse_source(
        "object Main {\n  def main() = {\n    val x = 1\n    print(x)\n    print({ val y = 2; y })\n  }\n}",
        "m.ml1",
    )
    trace = run_program(unit, entry="Main.main")
    assert trace.events == ["1", "2"]


def test_empty_block_value_is_unit():
    unit = parse_source("object Main {\n  def main() = {\n    print({})\n  }\n}", "m.ml1")
    trace = run_program(unit, entry="Main.main")
    assert trace.events == ["()"]


def test_member_val_and_qualified_access():
    units = [
        parse_source("object Config {\n  val limit = 42\n}", "config.ml1"),
        parse_source(
            "object Main {\n  def main() = {\n    print(Config.limit)\n  }\n}", "m.ml1"
        ),
    ]
    trace = run_program(*units, entry="Main.main")
    assert trace.events == ["42"]


def test_builtin_arithmetic_and_concat():
    unit = parse_source(
        'object Main {\n  def main() = {\n    print(add(2, sub(5, 1)))\n    print(concat("n=", 3))\n  }\n}',
        "m.ml1",
    )
    trace = run_program(unit, entry="Main.main")
    assert trace.events == ["6", "n=3"]


def test_missing_entry_is_reported():
    unit = parse_source("object Main {\n}", "m.ml1")
    trace = run_program(unit, entry="Main.main")
    assert trace.failed
    assert trace.error.code == E_NO_ENTRY


def test_entry_must_be_zero_arg():
    unit = parse_source("object Main {\n  def main(x) = {\n    x\n  }\n}", "m.ml1")
    trace = run_program(unit, entry="Main.main")
    assert trace.failed
    assert trace.error.code == E_NO_ENTRY


def test_arity_mismatch_fails():
    unit = parse_source(
        "object Main {\n  def f(a, b) = {\n    a\n  }\n  def main() = {\n    f(1)\n  }\n}",
        "m.ml1",
    )
    trace = run_program(unit, entry="Main.main")
    assert trace.failed
    assert "expects 2 arguments" in trace.error.message


def test_calling_a_value_fails():
    unit = parse_source(
        "object Main {\n  val v = 1\n  def main() = {\n    v()\n  }\n}", "m.ml1"
    )
    trace = run_program(unit, entry="Main.main")
    assert trace.failed
    assert "not callable" in trace.error.message


def test_unrewritten_defer_has_no_semantics():
    unit = parse_source(
        "object Main {\n  def main() = {\n    defer {\n      print(1)\n    }\n  }\n}",
        "m.ml1",
    )
    trace = run_program(unit, entry="Main.main")
    assert trace.failed
    assert "not rewritten" in trace.error.message


def test_register_without_frame_is_an_invariant_violation():
    unit = parse_source(
        "object Main {\n  def main() = {\n    __defer(thunk {\n      print(1)\n    })\n  }\n}",
        "m.ml1",
    )
    trace = run_program(unit, entry="Main.main")
    assert trace.failed
    assert trace.error.code == E_NO_FRAME


def test_zero_defers_behaves_like_a_plain_body():
    unit = parse_source(
        "object Main {\n  def main() = __frame {\n    print(1)\n    2\n  }\n}", "m.ml1"
    )
    trace = run_program(unit, entry="Main.main")
    assert trace.events == ["1"]
    assert trace.value == IntV(2)


def test_return_value_is_fixed_before_thunks_run():
    unit = parse_source(
        "import go.defer._\n\nobject Main {\n"
        "  def f() = {\n    defer {\n      print(\"late\")\n    }\n    \"early\"\n  }\n"
        "  def main() = {\n    val r = f()\n    print(r)\n  }\n}",
        "m.ml1",
    )
    trace = run_program(GO_DEFER, unit, entry="Main.main")
    assert trace.events == ["late", "early"]


def test_thunk_error_on_normal_exit_becomes_primary():
    unit = parse_source(
        "import go.defer._\n\nobject Main {\n  def main() = {\n"
        "    defer {\n      print(\"t1\")\n    }\n"
        "    defer {\n      error(\"t2-fail\")\n    }\n"
        "    defer {\n      error(\"t3-fail\")\n    }\n"
        "    print(\"body\")\n  }\n}",
        "m.ml1",
    )
    trace = run_program(GO_DEFER, unit, entry="Main.main")
    # LIFO: t3 fails first and becomes primary; t2's failure is suppressed;
    # t1 still runs.
    assert trace.events == ["body", "t1"]
    assert trace.failed
    assert trace.error.message == "t3-fail"
    assert [s.message for s in trace.error.suppressed] == ["t2-fail"]


def test_body_error_wins_over_thunk_errors():
    unit = parse_source(
        "import go.defer._\n\nobject Main {\n  def main() = {\n"
        "    defer {\n      error(\"cleanup-fail\")\n    }\n"
        "    error(\"body-fail\")\n  }\n}",
        "m.ml1",
    )
    trace = run_program(GO_DEFER, unit, entry="Main.main")
    assert trace.failed
    assert trace.error.message == "body-fail"
    assert [s.message for s in trace.error.suppressed] == ["cleanup-fail"]


def test_frame_stack_is_balanced_after_runs():
    unit = parse_fixture("defer", "copy.ml1")
    graph = build_project(GO_DEFER, unit)
    registry = builtin_registry()
    lowered, _ = apply_rewriter(Intrinsic("go.defer.rewriter"), unit, registry)
    final = build_scope_graph([GO_DEFER, lowered])
    resolution = resolve_units(final, [GO_DEFER, lowered])
    machine = Interpreter(final, resolution)
    machine.run("copyfile.Main.main")
    assert machine.frames == []


def test_defer_in_untaken_path_never_runs():
    # The registering helper is simply not called, so nothing unwinds.
    unit = parse_source(
        "import go.defer._\n\nobject Main {\n"
        "  def skipped() = {\n    defer {\n      print(\"never\")\n    }\n  }\n"
        "  def main() = {\n    defer {\n      print(\"only\")\n    }\n    print(\"body\")\n  }\n}",
        "m.ml1",
    )
    trace = run_program(GO_DEFER, unit, entry="Main.main")
    assert trace.events == ["body", "only"]


def test_generated_programs_match_the_simulator():
    rng = random.Random(101)
    registry = builtin_registry()
    for index in range(120):
        program = random_program(rng)
        events, primary, suppressed = simulate(program)
        unit = program_unit(program)
        lowered, _ = apply_rewriter(Intrinsic("go.defer.rewriter"), unit, registry)
        graph = build_scope_graph([GO_DEFER, lowered])
        resolution = resolve_units(graph, [GO_DEFER, lowered])
        assert not resolution.diagnostics
        trace = run(graph, resolution, "Main.main")
        assert trace.events == events, f"program #{index} diverged"
        if primary is None:
            assert not trace.failed
        else:
            assert trace.failed and trace.error.message == primary
            assert [s.message for s in trace.error.suppressed] == suppressed
