"""Recursive-descent parser for ml1 compilation units.

Statements inside braces are separated by newlines or `;`. A call's `(`
must sit on the same line as its callee; the intrinsic block forms
(`__frame {`, `thunk {`) likewise require the `{` on the same line, which
keeps statement boundaries unambiguous without semicolon inference.
"""

from __future__ import annotations

from ml1 import ast
from ml1.tokens import IDENT, KEYWORD, LITERAL, PUNCT, Span, Token, string_value

# Annotated imports are only legal as template statements.
E_ANNOTATION_AT_TOP_LEVEL = "E_ANNOTATION_AT_TOP_LEVEL"

_EXPR_KEYWORDS = frozenset({"defer"})


class ParseError(Exception):
    def __init__(self, span: Span, expected: str, found: str, code: str | None = None):
        super().__init__(f"{span.start}-{span.end}: expected {expected}, found {found}")
        self.span = span
        self.expected = expected
        self.found = found
        self.code = code


def parse_unit(tokens: list[Token], source_name: str = "<unit>") -> ast.CompilationUnit:
    return _Parser(tokens, source_name).unit()


class _Parser:
    def __init__(self, tokens: list[Token], source_name: str):
        self.tokens = tokens
        self.pos = 0
        self.source_name = source_name

    # Token access helpers.

    def peek(self, offset: int = 0) -> Token | None:
        index = self.pos + offset
        return self.tokens[index] if index < len(self.tokens) else None

    def at(self, text: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok is not None and tok.text == text

    def at_kind(self, kind: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok is not None and tok.kind == kind

    def take(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise self.error("a token", "end of input")
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok is None or tok.text != text:
            raise self.error(repr(text), tok.text if tok else "end of input")
        return self.take()

    def expect_ident(self, what: str = "an identifier") -> Token:
        tok = self.peek()
        if tok is None or tok.kind != IDENT:
            raise self.error(what, tok.text if tok else "end of input")
        return self.take()

    def error(self, expected: str, found: str, code: str | None = None) -> ParseError:
        tok = self.peek()
        span = tok.span if tok else (self.tokens[-1].span if self.tokens else Span(0, 0))
        return ParseError(span, expected, found, code)

    def prev_line(self) -> int:
        return self.tokens[self.pos - 1].line if self.pos > 0 else 0

    def same_line(self, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok is not None and tok.line == self.prev_line()

    def span_from(self, start: int) -> Span:
        end = self.tokens[self.pos - 1].span.end if self.pos > 0 else 0
        return Span(start, end)

    # Grammar productions.

    def unit(self) -> ast.CompilationUnit:
        package: ast.QualName = ()
        if self.at("package") and not self.at("object", 1):
            self.take()
            package = self.qual_id()
        stats: list[ast.TopStat] = []
        while self.peek() is not None:
            if stats or package:
                self.statement_boundary()
            if self.peek() is None:
                break
            stats.append(self.top_stat())
        return ast.CompilationUnit(package, tuple(stats), self.source_name)

    def top_stat(self) -> ast.TopStat:
        if self.at("@"):
            raise self.error(
                "a top-level statement",
                "an annotated import (only allowed inside templates)",
                code=E_ANNOTATION_AT_TOP_LEVEL,
            )
        if self.at("import"):
            return self.import_clause(())
        if self.at("implicit") or self.at("object") or self.at("trait") or self.at("package"):
            return self.template_def()
        tok = self.peek()
        raise self.error("'import' or a template definition", tok.text if tok else "end of input")

    def template_def(self) -> ast.TemplateDef:
        start = self.peek().span.start
        is_implicit = False
        if self.at("implicit"):
            self.take()
            is_implicit = True
        if self.at("package"):
            self.take()
            self.expect("object")
            kind = ast.PACKAGE_OBJECT
        elif self.at("trait"):
            self.take()
            kind = ast.TRAIT
        else:
            self.expect("object")
            kind = ast.OBJECT
        if is_implicit and kind != ast.OBJECT:
            raise ParseError(
                Span(start, self.peek().span.end if self.peek() else start),
                "'object' after 'implicit'",
                kind,
            )
        name = self.expect_ident("a template name").text
        parents: list[ast.QualName] = []
        if self.at("extends"):
            self.take()
            parents.append(self.qual_id())
            while self.at("with"):
                self.take()
                parents.append(self.qual_id())
        self.expect("{")
        stats: list[ast.TemplateStat] = []
        while not self.at("}"):
            if stats:
                self.statement_boundary()
            if self.at("}"):
                break
            stats.append(self.template_stat())
        self.expect("}")
        return ast.TemplateDef(kind, name, tuple(parents), tuple(stats), is_implicit, self.span_from(start))

    def template_stat(self) -> ast.TemplateStat:
        if self.at("@"):
            annotations = self.annotations()
            if not self.at("import"):
                tok = self.peek()
                raise self.error("'import' after annotations", tok.text if tok else "end of input")
            return self.import_clause(annotations)
        if self.at("import"):
            return self.import_clause(())
        if self.at("def") or self.at("val"):
            return self.def_decl()
        return self.expr()

    def annotations(self) -> tuple[str, ...]:
        names: list[str] = []
        while self.at("@"):
            self.take()
            names.append(self.expect_ident("an annotation name").text)
        return tuple(names)

    def import_clause(self, annotations: tuple[str, ...]) -> ast.ImportClause:
        start = self.expect("import").span.start
        parts = [self.expect_ident("an import path").text]
        selectors: ast.ImportSelectors | None = None
        while True:
            self.expect(".")
            tok = self.peek()
            if tok is None:
                raise self.error("an import selector", "end of input")
            if tok.text == "_" and tok.kind == PUNCT:
                self.take()
                selectors = ast.WILDCARD
                break
            if tok.text == "{":
                selectors = self.selector_list()
                break
            if tok.kind not in (IDENT, KEYWORD):
                raise self.error("an identifier, '_' or '{'", tok.text)
            # Keywords are allowed as path segments after the first dot.
            if self.at(".", 1):
                parts.append(self.take().text)
                continue
            name = self.take().text
            selectors = ast.ImportSelectors(wildcard=False, names=(ast.Selector(name, name),))
            break
        if len(parts) < 1 or selectors is None:
            raise self.error("an import path", "nothing")
        return ast.ImportClause(annotations, tuple(parts), selectors, self.span_from(start))

    def selector_list(self) -> ast.ImportSelectors:
        self.expect("{")
        names: list[ast.Selector] = []
        wildcard = False
        while True:
            tok = self.peek()
            if tok is None:
                raise self.error("an import selector", "end of input")
            if tok.text == "_" and tok.kind == PUNCT:
                self.take()
                wildcard = True
                break
            source = self.expect_ident("a selector name").text
            target: str | None = source
            if self.at("=>"):
                self.take()
                if self.at("_"):
                    self.take()
                    target = ast.HIDDEN
                else:
                    target = self.expect_ident("a rename target or '_'").text
            names.append(ast.Selector(source, target))
            if not self.at(","):
                break
            self.take()
        self.expect("}")
        targets = [s.target for s in names if s.target is not None]
        if len(set(targets)) != len(targets):
            raise self.error("distinct selector targets", "a duplicate rename target")
        return ast.ImportSelectors(wildcard=wildcard, names=tuple(names))

    def def_decl(self) -> ast.DefDecl:
        start = self.peek().span.start
        if self.at("val"):
            self.take()
            name = self.expect_ident("a val name").text
            self.expect("=")
            body = self.expr()
            return ast.DefDecl(name, (), body, True, self.span_from(start))
        self.expect("def")
        name = self.expect_ident("a def name").text
        self.expect("(")
        params: list[str] = []
        if not self.at(")"):
            params.append(self.expect_ident("a parameter name").text)
            while self.at(","):
                self.take()
                params.append(self.expect_ident("a parameter name").text)
        self.expect(")")
        self.expect("=")
        if self.at("{"):
            body: ast.Expr = self.block()
        else:
            framed = self.expr()
            if not isinstance(framed, ast.FrameExpr):
                raise ParseError(framed.span, "a block body", "an expression")
            body = ast.Block((framed,), framed.span)
        return ast.DefDecl(name, tuple(params), body, False, self.span_from(start))

    def block(self) -> ast.Block:
        start = self.expect("{").span.start
        stats: list[ast.Stat] = []
        while not self.at("}"):
            if stats:
                self.statement_boundary()
            if self.at("}"):
                break
            if self.at("def") or self.at("val"):
                stats.append(self.def_decl())
            else:
                stats.append(self.expr())
        self.expect("}")
        return ast.Block(tuple(stats), self.span_from(start))

    def statement_boundary(self) -> None:
        """Require `;`, a line break, or a closing brace between statements."""
        tok = self.peek()
        if tok is None or tok.text == "}":
            return
        if tok.text == ";":
            self.take()
            return
        if tok.line > self.prev_line():
            return
        raise self.error("a newline or ';' between statements", tok.text)

    def expr(self) -> ast.Expr:
        tok = self.peek()
        if tok is None:
            raise self.error("an expression", "end of input")
        if tok.kind == LITERAL:
            self.take()
            if tok.text.startswith('"'):
                return ast.StrLit(string_value(tok.text), tok.span)
            return ast.IntLit(int(tok.text), tok.span)
        if tok.text == "{":
            return self.block()
        if tok.text == "defer":
            self.take()
            body = self.block()
            return ast.DeferCandidate(body, Span(tok.span.start, body.span.end))
        if tok.kind == IDENT:
            if tok.text == "__frame" and self.at("{", 1) and self.peek(1).line == tok.line:
                self.take()
                body = self.block()
                return ast.FrameExpr(body, Span(tok.span.start, body.span.end))
            if tok.text == "thunk" and self.at("{", 1) and self.peek(1).line == tok.line:
                self.take()
                body = self.block()
                return ast.ThunkExpr(body, Span(tok.span.start, body.span.end))
            return self.ref_or_call()
        raise self.error("an expression", tok.text)

    def ref_or_call(self) -> ast.Expr:
        start = self.peek().span.start
        parts = [self.expect_ident("a reference").text]
        while self.at(".") and self.peek(1) is not None and self.peek(1).kind in (IDENT, KEYWORD):
            self.take()
            parts.append(self.take().text)
        ref = ast.Ref(tuple(parts), self.span_from(start))
        if not (self.at("(") and self.same_line()):
            return ref
        self.take()
        args: list[ast.Expr] = []
        if not self.at(")"):
            args.append(self.expr())
            while self.at(","):
                self.take()
                args.append(self.expr())
        self.expect(")")
        span = self.span_from(start)
        if parts == ["__defer"]:
            if len(args) != 1 or not isinstance(args[0], ast.ThunkExpr):
                raise ParseError(span, "__defer(thunk { ... })", "other arguments")
            return ast.DeferRegister(args[0], span)
        return ast.Call(ref, tuple(args), span)

    def qual_id(self) -> ast.QualName:
        parts = [self.expect_ident("a qualified name").text]
        while self.at(".") and self.peek(1) is not None and self.peek(1).kind in (IDENT, KEYWORD):
            self.take()
            parts.append(self.take().text)
        return tuple(parts)
