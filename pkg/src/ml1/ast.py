"""Syntax tree for ml1 compilation units.

All nodes are immutable dataclasses. Spans (and unit source names) are
excluded from equality so that two trees compare structurally: a unit is
equal to the result of parsing its own pretty-printed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterator, Union

from ml1.tokens import Span

NO_SPAN = Span(0, 0)

QualName = tuple[str, ...]

OBJECT = "object"
TRAIT = "trait"
PACKAGE_OBJECT = "packageObject"

HIDDEN = None  # selector target for the `name => _` hide form


def dotted(parts: QualName) -> str:
    return ".".join(parts)


@dataclass(frozen=True)
class Selector:
    """One name filter of an import clause.

    target is the visible name, HIDDEN (None) for `source => _`, and equal
    to source for the plain form.
    """

    source: str
    target: str | None


@dataclass(frozen=True)
class ImportSelectors:
    """Selector part of an import: a bare wildcard, or a named list with an
    optional trailing wildcard."""

    wildcard: bool
    names: tuple[Selector, ...] = ()

    def mentions(self, name: str) -> bool:
        return any(s.source == name for s in self.names)

    def apply(self, name: str) -> str | None:
        """Visible name this filter gives `name`, or None when filtered out."""
        for sel in self.names:
            if sel.source == name:
                return sel.target
        return name if self.wildcard else None


WILDCARD = ImportSelectors(wildcard=True)


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class StrLit:
    value: str
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Ref:
    parts: QualName
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Call:
    callee: "Expr"
    args: tuple["Expr", ...]
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Block:
    stats: tuple["Stat", ...]
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class DeferCandidate:
    """Surface `defer { ... }`. Carries no semantics until a rewriter
    assigns one."""

    body: Block
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class FrameExpr:
    """`__frame { ... }`: runs the body under a fresh deferred-thunk frame."""

    body: Block
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class ThunkExpr:
    """`thunk { ... }`: evaluates to a delayed body closing over the
    current environment."""

    body: Block
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class DeferRegister:
    """`__defer(thunk { ... })`: pushes the thunk onto the innermost frame."""

    thunk: ThunkExpr
    span: Span = field(default=NO_SPAN, compare=False)


Expr = Union[IntLit, StrLit, Ref, Call, Block, DeferCandidate, FrameExpr, ThunkExpr, DeferRegister]


@dataclass(frozen=True)
class DefDecl:
    name: str
    params: tuple[str, ...]
    body: Expr  # a Block for defs; any expression for vals
    is_val: bool
    span: Span = field(default=NO_SPAN, compare=False)


Stat = Union[DefDecl, Expr]


@dataclass(frozen=True)
class ImportClause:
    annotations: tuple[str, ...]
    path: QualName
    selectors: ImportSelectors
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class TemplateDef:
    kind: str  # OBJECT | TRAIT | PACKAGE_OBJECT
    name: str
    parents: tuple[QualName, ...]
    stats: tuple["TemplateStat", ...]
    is_implicit: bool = False
    span: Span = field(default=NO_SPAN, compare=False)


TemplateStat = Union[ImportClause, DefDecl, Expr]
TopStat = Union[ImportClause, TemplateDef]


@dataclass(frozen=True)
class CompilationUnit:
    package_path: QualName
    top_stats: tuple[TopStat, ...]
    source_name: str = field(default="<unit>", compare=False)

    def templates(self) -> Iterator[TemplateDef]:
        for stat in self.top_stats:
            if isinstance(stat, TemplateDef):
                yield stat

    def top_imports(self) -> Iterator[ImportClause]:
        for stat in self.top_stats:
            if isinstance(stat, ImportClause):
                yield stat


def child_nodes(node) -> Iterator[object]:
    """Direct AST children of a node, in source order."""
    if isinstance(node, CompilationUnit):
        yield from node.top_stats
    elif isinstance(node, TemplateDef):
        yield from node.stats
    elif isinstance(node, DefDecl):
        yield node.body
    elif isinstance(node, Call):
        yield node.callee
        yield from node.args
    elif isinstance(node, Block):
        yield from node.stats
    elif isinstance(node, (DeferCandidate, FrameExpr, ThunkExpr)):
        yield node.body
    elif isinstance(node, DeferRegister):
        yield node.thunk


def walk(node) -> Iterator[object]:
    """The node and all its descendants, depth-first."""
    yield node
    for child in child_nodes(node):
        yield from walk(child)


def count_nodes(node) -> int:
    return sum(1 for _ in walk(node))


def strip_import_annotations(unit: CompilationUnit) -> CompilationUnit:
    """Copy of `unit` with annotations removed from every import clause."""

    def strip_clause(clause: ImportClause) -> ImportClause:
        if not clause.annotations:
            return clause
        return replace(clause, annotations=())

    changed = False
    top: list[TopStat] = []
    for stat in unit.top_stats:
        if isinstance(stat, ImportClause):
            new = strip_clause(stat)
        elif isinstance(stat, TemplateDef):
            body = tuple(
                strip_clause(s) if isinstance(s, ImportClause) else s for s in stat.stats
            )
            new = stat if body == stat.stats else replace(stat, stats=body)
        else:
            new = stat
        changed = changed or new is not stat
        top.append(new)
    if not changed:
        return unit
    return replace(unit, top_stats=tuple(top))


def _camel(name: str) -> str:
    if name == "kind":  # the node-kind key is reserved for the type name
        return "templateKind"
    head, *rest = name.split("_")
    return head + "".join(part.capitalize() for part in rest)


def to_dict(node) -> object:
    """Deterministic JSON-ready form: kind first, then span, then fields in
    declaration order (camelCased)."""
    if isinstance(node, tuple):
        return [to_dict(item) for item in node]
    if isinstance(node, Span):
        return [node.start, node.end]
    if not hasattr(node, "__dataclass_fields__"):
        return node
    out: dict[str, object] = {"kind": type(node).__name__}
    span = getattr(node, "span", None)
    if isinstance(span, Span):
        out["span"] = to_dict(span)
    for f in fields(node):
        if f.name == "span":
            continue
        out[_camel(f.name)] = to_dict(getattr(node, f.name))
    return out
