import random

from hypothesis import given, settings, strategies as st

from ml1 import ast
from ml1.parser import parse_unit
from ml1.printer import pretty_print
from ml1.tokens import tokenize

from conftest import FIXTURES, parse_fixture, parse_source
from gen import random_unit


def round_trip(unit: ast.CompilationUnit) -> ast.CompilationUnit:
    return parse_unit(tokenize(pretty_print(unit)), unit.source_name)


def test_import_hub_listing_round_trips():
    unit = parse_fixture("salat", "hub.ml1")
    assert round_trip(unit) == unit


def test_empty_unit_prints_a_single_newline():
    unit = ast.CompilationUnit((), ())
    assert pretty_print(unit) == "\n"
    assert round_trip(unit) == unit


def test_fixture_files_are_in_canonical_form():
    for relative in ("defer/copy.ml1", "defer/copy_plain.ml1", "defer/copy_boom.ml1"):
        path = FIXTURES / relative
        source = path.read_text(encoding="utf-8")
        assert pretty_print(parse_unit(tokenize(source), relative)) == source


def test_single_plain_selector_prints_dotted():
    unit = parse_source("import a.b.{c}")
    assert pretty_print(unit) == "import a.b.c\n"
    assert round_trip(unit) == unit


def test_lowered_output_round_trips():
    source = (
        "object A {\n"
        "  def f() = __frame {\n"
        "    __defer(thunk {\n"
        "      g()\n"
        "    })\n"
        "  }\n"
        "}\n"
    )
    unit = parse_source(source)
    assert pretty_print(unit) == source


def test_string_escapes_round_trip():
    unit = parse_source('object A { val x = "a\\"b\\\\c\\nd\\te" }')
    assert round_trip(unit) == unit


def test_seeded_units_round_trip():
    rng = random.Random(2024)
    for index in range(220):
        unit = random_unit(rng)
        again = round_trip(unit)
        assert again == unit, f"unit #{index} changed across print/parse"


ident = st.sampled_from(["alpha", "f", "g", "value", "x9"])


@st.composite
def exprs(draw, depth=2):
    if depth == 0:
        return draw(
            st.one_of(
                st.integers(0, 99).map(ast.IntLit),
                st.text(alphabet="ab \t", max_size=4).map(ast.StrLit),
            )
        )
    return draw(
        st.one_of(
            st.integers(0, 99).map(ast.IntLit),
            st.builds(
                ast.Call,
                st.builds(ast.Ref, st.lists(ident, min_size=1, max_size=2).map(tuple)),
                st.lists(exprs(depth=depth - 1), max_size=2).map(tuple),
            ),
            st.builds(ast.Block, st.lists(exprs(depth=depth - 1), max_size=2).map(tuple)),
        )
    )


@settings(max_examples=120, deadline=None)
@given(body=st.lists(exprs(), min_size=0, max_size=3).map(tuple))
def test_hypothesis_def_bodies_round_trip(body):
    decl = ast.DefDecl("f", ("a",), ast.Block(body), False)
    template = ast.TemplateDef(ast.OBJECT, "T", (), (decl,))
    unit = ast.CompilationUnit((), (template,), "<hyp>")
    assert round_trip(unit) == unit
