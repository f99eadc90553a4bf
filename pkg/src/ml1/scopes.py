"""Project scope graph: symbols, inheritance, and re-export edges.

A template's `@exported` imports become edges; the names they make visible
(directly or through further exported imports) form the template's export
closure. Closure traversal keeps a per-path visited set, so cyclic edges
terminate while every finitely derivable name is still found.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ml1 import ast
from ml1.diagnostics import (
    Diagnostic,
    E_DUPLICATE_SYMBOL,
    E_UNKNOWN_IMPORT_ANNOTATION,
    E_UNRESOLVED_IMPORT_PATH,
    E_UNRESOLVED_PARENT,
)
from ml1.tokens import Span

TEMPLATE = "template"
DEF = "def"
VAL = "val"
PACKAGE = "package"

# FQN suffix for the synthetic template symbol behind a package object;
# keeps it distinct from the package itself ("package" cannot be a member
# name, so nothing else can take this slot).
PACKAGE_OBJECT_MEMBER = "package"

REWRITER_MARKER = "DefaultRewriter"


@dataclass(frozen=True)
class SymbolId:
    fqn: str
    kind: str

    def short_name(self) -> str:
        return self.fqn.rsplit(".", 1)[-1]


@dataclass(frozen=True)
class ExportEdge:
    """One `@exported` import clause of a template."""

    origin: str
    import_path: ast.QualName
    selectors: ast.ImportSelectors
    resolved_target: str
    span: Span = field(compare=False, default=ast.NO_SPAN)
    index: int = 0

    def label(self) -> str:
        return f"{self.origin}[{self.index}]=>{self.resolved_target}"


@dataclass(frozen=True)
class ClosureEntry:
    visible_name: str
    symbol: SymbolId
    path: tuple[ExportEdge, ...]


@dataclass(frozen=True)
class ExportClosure:
    entries: frozenset[ClosureEntry]

    def pairs(self) -> set[tuple[str, str]]:
        return {(e.visible_name, e.symbol.fqn) for e in self.entries}


@dataclass
class ScopeGraph:
    symbols: dict[str, SymbolId] = field(default_factory=dict)
    members: dict[str, list[SymbolId]] = field(default_factory=dict)
    inherits: dict[str, list[str]] = field(default_factory=dict)
    exports: dict[str, list[ExportEdge]] = field(default_factory=dict)
    package_objects: dict[str, str] = field(default_factory=dict)
    package_members: dict[str, list[SymbolId]] = field(default_factory=dict)
    decls: dict[str, object] = field(default_factory=dict)
    owner_unit: dict[str, str] = field(default_factory=dict)
    units_by_name: dict[str, ast.CompilationUnit] = field(default_factory=dict)
    import_targets: dict[int, str] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    # Lookup helpers.

    def template_members(self, tfqn: str) -> dict[str, SymbolId]:
        return {sym.short_name(): sym for sym in self.members.get(tfqn, ())}

    def package_scope_members(self, pkg: str) -> dict[str, SymbolId]:
        """Names a wildcard import of package `pkg` provides directly:
        its templates and subpackages, plus its package object's members."""
        out = {sym.short_name(): sym for sym in self.package_members.get(pkg, ())}
        pkgobj = self.package_objects.get(pkg)
        if pkgobj is not None:
            out.update(self.template_members(pkgobj))
        return out

    def scope_members(self, fqn: str) -> dict[str, SymbolId]:
        sym = self.symbols.get(fqn)
        if sym is None:
            return {}
        if sym.kind == PACKAGE:
            return self.package_scope_members(fqn)
        if sym.kind == TEMPLATE:
            return self.template_members(fqn)
        return {}

    def edges_of(self, fqn: str) -> list[ExportEdge]:
        sym = self.symbols.get(fqn)
        if sym is not None and sym.kind == PACKAGE:
            pkgobj = self.package_objects.get(fqn)
            return self.exports.get(pkgobj, []) if pkgobj else []
        return self.exports.get(fqn, [])

    def linearized_parents(self, tfqn: str) -> list[str]:
        """Transitive parents, left-to-right depth-first, first occurrence
        kept."""
        order: list[str] = []

        def visit(fqn: str) -> None:
            for parent in self.inherits.get(fqn, ()):
                if parent not in order:
                    order.append(parent)
                    visit(parent)

        visit(tfqn)
        return order

    def ancestors(self, tfqn: str) -> set[str]:
        return set(self.linearized_parents(tfqn))


def _visited_ids(graph: ScopeGraph, fqn: str) -> set[str]:
    """A scope and its aliases for cycle prevention: a package and its
    package object count as one visit."""
    ids = {fqn}
    sym = graph.symbols.get(fqn)
    if sym is not None and sym.kind == PACKAGE:
        pkgobj = graph.package_objects.get(fqn)
        if pkgobj:
            ids.add(pkgobj)
    return ids


def export_closure(graph: ScopeGraph, fqn: str) -> ExportClosure:
    """All (visible name, symbol, edge path) triples reachable from `fqn`
    through exported imports.

    Each path may enter a scope at most once; selector filters compose
    along the path, so a rename or hide on an outer edge applies to every
    name carried through it.
    """
    if fqn not in graph.symbols:
        raise KeyError(f"unknown scope: {fqn}")
    entries: list[ClosureEntry] = []

    def walk(scope: str, visited: set[str], path: tuple[ExportEdge, ...], filters) -> None:
        for edge in graph.edges_of(scope):
            target = edge.resolved_target
            if target in visited:
                continue
            edge_path = path + (edge,)
            edge_filters = filters + (edge.selectors,)
            for name, sym in graph.scope_members(target).items():
                visible = _apply_filters(name, edge_filters)
                if visible is not None:
                    entries.append(ClosureEntry(visible, sym, edge_path))
            walk(target, visited | _visited_ids(graph, target), edge_path, edge_filters)

    walk(fqn, _visited_ids(graph, fqn), (), ())
    return ExportClosure(frozenset(entries))


def _apply_filters(name: str, filters: tuple[ast.ImportSelectors, ...]) -> str | None:
    # Innermost edge filter first, then outward toward the closure origin.
    current: str | None = name
    for sel in reversed(filters):
        current = sel.apply(current)
        if current is None:
            return None
    return current


def inherited_exports(graph: ScopeGraph, tfqn: str) -> ExportClosure:
    """Union of the export closures of a template's transitive parents."""
    entries: set[ClosureEntry] = set()
    for parent in graph.linearized_parents(tfqn):
        entries |= export_closure(graph, parent).entries
    return ExportClosure(frozenset(entries))


# Graph construction ---------------------------------------------------------


def build_scope_graph(units: list[ast.CompilationUnit]) -> ScopeGraph:
    graph = ScopeGraph()
    for unit in units:
        graph.units_by_name[unit.source_name] = unit
        _declare_unit(graph, unit)
    if REWRITER_MARKER not in graph.symbols:
        _inject_rewriter_marker(graph)
    for unit in units:
        _link_imports(graph, unit)
    for unit in units:
        _link_parents(graph, unit)
    return graph


def _inject_rewriter_marker(graph: ScopeGraph) -> None:
    # The host always provides the marker trait rewriter objects extend,
    # unless the project defines its own.
    sym = SymbolId(REWRITER_MARKER, TEMPLATE)
    graph.symbols[REWRITER_MARKER] = sym
    graph.members[REWRITER_MARKER] = []
    graph.inherits[REWRITER_MARKER] = []
    decl = ast.TemplateDef(ast.TRAIT, REWRITER_MARKER, (), ())
    graph.decls[REWRITER_MARKER] = decl
    graph.owner_unit[REWRITER_MARKER] = "<host>"
    graph.package_members.setdefault("", []).append(sym)


def _ensure_package(graph: ScopeGraph, path: ast.QualName, unit: ast.CompilationUnit) -> None:
    graph.package_members.setdefault("", [])
    for depth in range(1, len(path) + 1):
        fqn = ".".join(path[:depth])
        existing = graph.symbols.get(fqn)
        if existing is not None:
            if existing.kind != PACKAGE:
                graph.diagnostics.append(
                    Diagnostic(
                        E_DUPLICATE_SYMBOL,
                        f"package {fqn} collides with a {existing.kind} of the same name",
                        unit.source_name,
                    )
                )
            continue
        sym = SymbolId(fqn, PACKAGE)
        graph.symbols[fqn] = sym
        graph.package_members[fqn] = []
        parent = ".".join(path[: depth - 1])
        graph.package_members.setdefault(parent, []).append(sym)


def _declare_symbol(graph: ScopeGraph, sym: SymbolId, decl, unit_name: str) -> bool:
    if sym.fqn in graph.symbols:
        graph.diagnostics.append(
            Diagnostic(
                E_DUPLICATE_SYMBOL,
                f"{sym.fqn} is already defined",
                unit_name,
                getattr(decl, "span", None),
            )
        )
        return False
    graph.symbols[sym.fqn] = sym
    graph.decls[sym.fqn] = decl
    graph.owner_unit[sym.fqn] = unit_name
    return True


def _declare_unit(graph: ScopeGraph, unit: ast.CompilationUnit) -> None:
    _ensure_package(graph, unit.package_path, unit)
    pkg = ast.dotted(unit.package_path)
    for tpl in unit.templates():
        if tpl.kind == ast.PACKAGE_OBJECT:
            owned = f"{pkg}.{tpl.name}" if pkg else tpl.name
            _ensure_package(graph, tuple(owned.split(".")), unit)
            tfqn = f"{owned}.{PACKAGE_OBJECT_MEMBER}"
            member_prefix = owned
            sym = SymbolId(tfqn, TEMPLATE)
            if not _declare_symbol(graph, sym, tpl, unit.source_name):
                continue
            graph.package_objects[owned] = tfqn
        else:
            tfqn = f"{pkg}.{tpl.name}" if pkg else tpl.name
            member_prefix = tfqn
            sym = SymbolId(tfqn, TEMPLATE)
            if not _declare_symbol(graph, sym, tpl, unit.source_name):
                continue
            graph.package_members.setdefault(pkg, []).append(sym)
        graph.members[tfqn] = []
        graph.inherits[tfqn] = []
        graph.exports[tfqn] = []
        for stat in tpl.stats:
            if isinstance(stat, ast.DefDecl):
                kind = VAL if stat.is_val else DEF
                msym = SymbolId(f"{member_prefix}.{stat.name}", kind)
                if _declare_symbol(graph, msym, stat, unit.source_name):
                    graph.members[tfqn].append(msym)


def resolve_import_path(graph: ScopeGraph, path: ast.QualName) -> str | None:
    """Resolve an absolute import path to a package or template FQN."""
    current = ""
    for i, segment in enumerate(path):
        sym = graph.package_scope_members(current).get(segment)
        if sym is None:
            return None
        if sym.kind == PACKAGE:
            current = sym.fqn
            continue
        if sym.kind == TEMPLATE:
            return sym.fqn if i == len(path) - 1 else None
        return None
    return current or None


def _link_imports(graph: ScopeGraph, unit: ast.CompilationUnit) -> None:
    def resolve_clause(clause: ast.ImportClause) -> None:
        target = resolve_import_path(graph, clause.path)
        if target is None:
            graph.diagnostics.append(
                Diagnostic(
                    E_UNRESOLVED_IMPORT_PATH,
                    f"import path {ast.dotted(clause.path)} does not name a template or package",
                    unit.source_name,
                    clause.span,
                )
            )
            return
        graph.import_targets[id(clause)] = target

    for clause in unit.top_imports():
        resolve_clause(clause)
    for tpl in unit.templates():
        tfqn = _template_fqn(graph, unit, tpl)
        for stat in tpl.stats:
            if not isinstance(stat, ast.ImportClause):
                continue
            if stat.annotations and stat.annotations != ("exported",):
                graph.diagnostics.append(
                    Diagnostic(
                        E_UNKNOWN_IMPORT_ANNOTATION,
                        "only @exported is understood on imports, found "
                        + ", ".join(f"@{a}" for a in stat.annotations),
                        unit.source_name,
                        stat.span,
                    )
                )
                continue
            resolve_clause(stat)
            target = graph.import_targets.get(id(stat))
            if stat.annotations == ("exported",) and target is not None and tfqn is not None:
                edges = graph.exports[tfqn]
                edges.append(
                    ExportEdge(
                        origin=tfqn,
                        import_path=stat.path,
                        selectors=stat.selectors,
                        resolved_target=target,
                        span=stat.span,
                        index=len(edges),
                    )
                )


def template_fqn_of(unit: ast.CompilationUnit, tpl: ast.TemplateDef) -> str:
    """FQN a top-level template declares, derived purely from structure."""
    pkg = ast.dotted(unit.package_path)
    if tpl.kind == ast.PACKAGE_OBJECT:
        owned = f"{pkg}.{tpl.name}" if pkg else tpl.name
        return f"{owned}.{PACKAGE_OBJECT_MEMBER}"
    return f"{pkg}.{tpl.name}" if pkg else tpl.name


def _template_fqn(graph: ScopeGraph, unit: ast.CompilationUnit, tpl: ast.TemplateDef) -> str | None:
    fqn = template_fqn_of(unit, tpl)
    return fqn if graph.decls.get(fqn) is tpl else None


def _link_parents(graph: ScopeGraph, unit: ast.CompilationUnit) -> None:
    for tpl in unit.templates():
        tfqn = _template_fqn(graph, unit, tpl)
        if tfqn is None:
            continue
        resolved: list[str] = []
        for parent in tpl.parents:
            sym = lookup_at_unit_scope(graph, unit, parent)
            if sym is None or sym.kind != TEMPLATE:
                graph.diagnostics.append(
                    Diagnostic(
                        E_UNRESOLVED_PARENT,
                        f"parent {ast.dotted(parent)} of {tfqn} does not resolve to a template",
                        unit.source_name,
                        tpl.span,
                    )
                )
                continue
            resolved.append(sym.fqn)
        graph.inherits[tfqn] = resolved


# Per-clause lookup primitives. The full resolver composes these into its
# precedence tiers; graph construction reuses them for parent names.


def scope_lookup(graph: ScopeGraph, scope_fqn: str, name: str) -> tuple[SymbolId, ...]:
    """Symbols scope `scope_fqn` provides under `name`: a direct member
    beats re-exported names; distinct re-exported symbols stay ambiguous."""
    direct = graph.scope_members(scope_fqn).get(name)
    if direct is not None:
        return (direct,)
    matches = {
        entry.symbol
        for entry in export_closure(graph, scope_fqn).entries
        if entry.visible_name == name
    }
    return tuple(sorted(matches, key=lambda s: s.fqn))


def clause_target(graph: ScopeGraph, clause: ast.ImportClause) -> str | None:
    """The scope a clause imports from. Clause objects may be rebuilt (for
    example by annotation erasure), so fall back to the absolute path when
    the build-time identity cache misses."""
    hit = graph.import_targets.get(id(clause))
    if hit is None:
        hit = resolve_import_path(graph, clause.path)
    return hit


def clause_named_lookup(graph: ScopeGraph, clause: ast.ImportClause, name: str) -> tuple[SymbolId, ...]:
    """Hits under `name` via this clause's named selectors (renames apply)."""
    target = clause_target(graph, clause)
    if target is None:
        return ()
    for sel in clause.selectors.names:
        if sel.target == name:
            return scope_lookup(graph, target, sel.source)
    return ()


def clause_wildcard_lookup(graph: ScopeGraph, clause: ast.ImportClause, name: str) -> tuple[SymbolId, ...]:
    """Hits under `name` via this clause's wildcard part; names mentioned by
    a selector (renamed away or hidden) are excluded."""
    target = clause_target(graph, clause)
    if target is None or not clause.selectors.wildcard:
        return ()
    if clause.selectors.mentions(name):
        return ()
    return scope_lookup(graph, target, name)


def package_walk_lookup(graph: ScopeGraph, package_path: ast.QualName, name: str) -> SymbolId | None:
    """Innermost enclosing package outward to the root; each package offers
    its direct members, then its package object's members."""
    for depth in range(len(package_path), -1, -1):
        pkg = ".".join(package_path[:depth])
        members = {sym.short_name(): sym for sym in graph.package_members.get(pkg, ())}
        if name in members:
            return members[name]
        pkgobj = graph.package_objects.get(pkg)
        if pkgobj is not None:
            hit = graph.template_members(pkgobj).get(name)
            if hit is not None:
                return hit
    return None


def lookup_at_unit_scope(graph: ScopeGraph, unit: ast.CompilationUnit, parts: ast.QualName) -> SymbolId | None:
    """Resolve a qualified name using only the unit's top imports and its
    enclosing packages. Ambiguous heads miss; the full resolver reports
    ambiguity with candidates."""
    head = _head_at_unit_scope(graph, unit, parts[0])
    if head is None:
        return None
    return navigate(graph, head, parts[1:])


def _head_at_unit_scope(graph: ScopeGraph, unit: ast.CompilationUnit, name: str) -> SymbolId | None:
    clauses = list(unit.top_imports())
    for clause in reversed(clauses):  # later imports shadow earlier ones
        hits = clause_named_lookup(graph, clause, name)
        if len(hits) == 1:
            return hits[0]
        if hits:
            return None
    for clause in reversed(clauses):
        hits = clause_wildcard_lookup(graph, clause, name)
        if len(hits) == 1:
            return hits[0]
        if hits:
            return None
    return package_walk_lookup(graph, unit.package_path, name)


def navigate(graph: ScopeGraph, base: SymbolId, rest: ast.QualName) -> SymbolId | None:
    """Follow qualified-name segments through packages and templates,
    consulting export closures when a direct member is missing."""
    current = base
    for segment in rest:
        if current.kind not in (PACKAGE, TEMPLATE):
            return None
        hits = scope_lookup(graph, current.fqn, segment)
        if len(hits) != 1:
            return None
        current = hits[0]
    return current
