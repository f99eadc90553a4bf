import pytest

from ml1 import ast
from ml1.parser import E_ANNOTATION_AT_TOP_LEVEL, ParseError, parse_unit
from ml1.tokens import tokenize

from conftest import parse_fixture, parse_source


def test_import_hub_listing_parses_to_three_annotated_clauses():
    unit = parse_fixture("salat", "hub.ml1")
    assert unit.package_path == ("com", "mycompany")
    (template,) = list(unit.templates())
    assert template.kind == ast.PACKAGE_OBJECT
    assert template.name == "salat"
    clauses = [s for s in template.stats if isinstance(s, ast.ImportClause)]
    assert len(clauses) == 3
    assert all(c.annotations == ("exported",) for c in clauses)
    assert clauses[0].path == ("com", "mongodb", "casbah", "Imports")
    assert clauses[0].selectors == ast.WILDCARD


def test_minimal_object_with_def():
    unit = parse_source("object A { def f() = { 1 } }")
    (template,) = list(unit.templates())
    assert template.kind == ast.OBJECT
    (decl,) = template.stats
    assert isinstance(decl, ast.DefDecl)
    assert not decl.is_val
    assert decl.body == ast.Block((ast.IntLit(1),))


def test_annotated_import_at_top_level_is_rejected():
    with pytest.raises(ParseError) as err:
        parse_source("@exported import x._")
    assert err.value.code == E_ANNOTATION_AT_TOP_LEVEL


def test_annotated_import_inside_template_is_accepted():
    unit = parse_source("object A {\n  @exported import x._\n}")
    (template,) = list(unit.templates())
    (clause,) = template.stats
    assert clause.annotations == ("exported",)


def test_unknown_annotations_parse_and_survive_verbatim():
    unit = parse_source("object A {\n  @foo import a._\n}")
    (clause,) = next(unit.templates()).stats
    assert clause.annotations == ("foo",)


def test_keyword_segments_allowed_after_first_dot():
    unit = parse_source("import go.defer._")
    (clause,) = list(unit.top_imports())
    assert clause.path == ("go", "defer")


def test_package_declaration_with_keyword_segment():
    unit = parse_source("package go.defer\n\nimplicit object rewriter extends DefaultRewriter {\n}")
    assert unit.package_path == ("go", "defer")
    (template,) = list(unit.templates())
    assert template.is_implicit
    assert template.parents == (("DefaultRewriter",),)


def test_selector_forms():
    unit = parse_source("import a.{x, y => z, w => _, _}")
    (clause,) = list(unit.top_imports())
    sel = clause.selectors
    assert sel.wildcard
    assert sel.names == (
        ast.Selector("x", "x"),
        ast.Selector("y", "z"),
        ast.Selector("w", None),
    )
    assert sel.apply("x") == "x"
    assert sel.apply("y") == "z"
    assert sel.apply("w") is None
    assert sel.apply("other") == "other"


def test_single_name_import_is_a_named_selector():
    unit = parse_source("import a.b.c")
    (clause,) = list(unit.top_imports())
    assert clause.path == ("a", "b")
    assert clause.selectors == ast.ImportSelectors(False, (ast.Selector("c", "c"),))


def test_duplicate_rename_targets_are_rejected():
    with pytest.raises(ParseError):
        parse_source("import a.{x => t, y => t}")


def test_wildcard_selector_must_be_last():
    with pytest.raises(ParseError):
        parse_source("import a.{_, x}")


def test_implicit_applies_only_to_objects():
    with pytest.raises(ParseError):
        parse_source("implicit trait T {\n}")
    with pytest.raises(ParseError):
        parse_source("package p\n\nimplicit package object q {\n}")


def test_statements_need_newline_or_semicolon():
    with pytest.raises(ParseError):
        parse_source("object A { def f() = { g() h() } }")
    unit = parse_source("object A { def f() = { g(); h() } }")
    (decl,) = next(unit.templates()).stats
    assert len(decl.body.stats) == 2


def test_call_parenthesis_must_share_the_callee_line():
    # `g` alone ends the statement; a '(' on the next line cannot start one.
    with pytest.raises(ParseError):
        parse_source("object A { def f() = { g\n(1) } }")


def test_defer_produces_a_candidate_node():
    unit = parse_source("object A { def f() = { defer { g() }\n1 } }")
    (decl,) = next(unit.templates()).stats
    candidate = decl.body.stats[0]
    assert isinstance(candidate, ast.DeferCandidate)
    assert candidate.body == ast.Block((ast.Call(ast.Ref(("g",)), ()),))


def test_lowered_intrinsics_parse():
    source = (
        "object A {\n"
        "  def f() = __frame {\n"
        "    __defer(thunk {\n"
        "      g()\n"
        "    })\n"
        "    1\n"
        "  }\n"
        "}\n"
    )
    unit = parse_source(source)
    (decl,) = next(unit.templates()).stats
    (frame,) = decl.body.stats
    assert isinstance(frame, ast.FrameExpr)
    register = frame.body.stats[0]
    assert isinstance(register, ast.DeferRegister)
    assert isinstance(register.thunk, ast.ThunkExpr)


def test_defer_register_requires_a_thunk():
    with pytest.raises(ParseError):
        parse_source("object A { def f() = { __defer(1) } }")


def test_expressions_cannot_appear_at_top_level():
    with pytest.raises(ParseError):
        parse_source("f(1)")


def test_templates_cannot_nest():
    with pytest.raises(ParseError):
        parse_source("object A { object B { } }")


def test_spans_cover_node_extents():
    source = "object A {\n  val x = 12\n}"
    unit = parse_source(source)
    (template,) = list(unit.templates())
    assert source[template.span.start : template.span.end] == source
    (decl,) = template.stats
    assert source[decl.span.start : decl.span.end] == "val x = 12"


def test_parse_is_pure():
    tokens = tokenize("object A {\n  val x = 1\n}")
    assert parse_unit(tokens, "a.ml1") == parse_unit(tokens, "a.ml1")
