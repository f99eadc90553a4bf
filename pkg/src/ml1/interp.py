"""Tree-walking evaluator with deferred-thunk frames.

`__frame { ... }` pushes a frame for the duration of the body; thunks
registered via `__defer(thunk { ... })` run when the frame is left, in
reverse registration order, on normal and failing exits alike. The frame's
result (or its original error) is fixed before any thunk runs; errors
raised by thunks are kept on the suppressed list of the primary error, and
on a normal exit the first thunk error becomes the primary one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ml1 import ast
from ml1.diagnostics import E_NO_ENTRY, E_NO_FRAME
from ml1.resolve import Resolution
from ml1.scopes import DEF, PACKAGE, TEMPLATE, VAL, ScopeGraph, SymbolId
from ml1.tokens import Span

_MAX_CALL_DEPTH = 200


@dataclass(frozen=True)
class IntV:
    value: int


@dataclass(frozen=True)
class StrV:
    value: str


@dataclass(frozen=True)
class UnitV:
    pass


UNIT = UnitV()


@dataclass(frozen=True)
class ObjRef:
    fqn: str


class ThunkV:
    """A delayed block closing over the environment it was created in.
    Runs at most once, when its frame unwinds."""

    def __init__(self, env: "Env | None", body: ast.Block):
        self.env = env
        self.body = body


class DefV:
    """A callable def; local defs close over their defining environment."""

    def __init__(self, env: "Env | None", decl: ast.DefDecl):
        self.env = env
        self.decl = decl


class BuiltinV:
    def __init__(self, name: str):
        self.name = name


Value = IntV | StrV | UnitV | ObjRef | ThunkV | DefV | BuiltinV


class EvalError(Exception):
    def __init__(self, message: str, span: Span | None = None, code: str = "E_RUNTIME"):
        super().__init__(message)
        self.message = message
        self.span = span
        self.code = code
        self.suppressed: list[EvalError] = []


@dataclass
class Trace:
    events: list[str] = field(default_factory=list)
    value: Value | None = None
    error: EvalError | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


class Env:
    def __init__(self, parent: "Env | None" = None):
        self.parent = parent
        self.bindings: dict[str, Value] = {}

    def bind(self, name: str, value: Value) -> None:
        self.bindings[name] = value

    def lookup(self, name: str) -> Value:
        env: Env | None = self
        while env is not None:
            if name in env.bindings:
                return env.bindings[name]
            env = env.parent
        raise EvalError(f"{name} is not bound at runtime")


def render(value: Value) -> str:
    if isinstance(value, IntV):
        return str(value.value)
    if isinstance(value, StrV):
        return value.value
    if isinstance(value, UnitV):
        return "()"
    if isinstance(value, ObjRef):
        return value.fqn
    if isinstance(value, ThunkV):
        return "<thunk>"
    if isinstance(value, DefV):
        return f"<def {value.decl.name}>"
    return f"<builtin {value.name}>"


class Interpreter:
    def __init__(self, graph: ScopeGraph, resolution: Resolution):
        self.graph = graph
        self.resolution = resolution
        self.frames: list[list[ThunkV]] = []
        self.events: list[str] = []
        self.depth = 0

    # Entry ------------------------------------------------------------------

    def run(self, entry_fqn: str) -> Trace:
        trace = Trace(events=self.events)
        sym = self.graph.symbols.get(entry_fqn)
        decl = self.graph.decls.get(entry_fqn)
        if sym is None or sym.kind != DEF or not isinstance(decl, ast.DefDecl) or decl.params:
            trace.error = EvalError(
                f"{entry_fqn} is not a zero-argument def", code=E_NO_ENTRY
            )
            return trace
        try:
            trace.value = self.call_def(DefV(None, decl), [], decl.span)
        except EvalError as err:
            trace.error = err
        return trace

    # Evaluation -------------------------------------------------------------

    def eval_expr(self, env: Env, expr: ast.Expr) -> Value:
        if isinstance(expr, ast.IntLit):
            return IntV(expr.value)
        if isinstance(expr, ast.StrLit):
            return StrV(expr.value)
        if isinstance(expr, ast.Ref):
            return self.eval_ref(env, expr)
        if isinstance(expr, ast.Call):
            callee = self.eval_ref(env, expr.callee)
            args = [self.eval_expr(env, a) for a in expr.args]
            return self.apply(callee, args, expr.span)
        if isinstance(expr, ast.Block):
            return self.eval_block(env, expr)
        if isinstance(expr, ast.FrameExpr):
            return self.frame_eval(env, expr.body)
        if isinstance(expr, ast.ThunkExpr):
            return ThunkV(env, expr.body)
        if isinstance(expr, ast.DeferRegister):
            thunk = self.eval_expr(env, expr.thunk)
            assert isinstance(thunk, ThunkV)
            return self.defer_register(thunk, expr.span)
        if isinstance(expr, ast.DeferCandidate):
            raise EvalError(
                "defer has no meaning here; the unit was not rewritten",
                expr.span,
            )
        raise EvalError(f"cannot evaluate {type(expr).__name__}", getattr(expr, "span", None))

    def eval_ref(self, env: Env, ref: ast.Ref) -> Value:
        symbol = self.resolution.symbol_for(ref)
        if symbol is None:
            raise EvalError(f"{ast.dotted(ref.parts)} was not resolved", ref.span)
        return self.value_of(env, symbol, ref)

    def value_of(self, env: Env, symbol: SymbolId, ref: ast.Ref) -> Value:
        if symbol.fqn.startswith("<builtin>."):
            return BuiltinV(symbol.short_name())
        decl = self.graph.decls.get(symbol.fqn)
        if decl is None:
            # A block-local binding: the innermost run-time binding wins.
            return env.lookup(ref.parts[-1])
        if symbol.kind == VAL and isinstance(decl, ast.DefDecl):
            return self.eval_expr(Env(), decl.body)
        if symbol.kind == DEF and isinstance(decl, ast.DefDecl):
            return DefV(None, decl)
        if symbol.kind in (TEMPLATE, PACKAGE):
            return ObjRef(symbol.fqn)
        raise EvalError(f"{symbol.fqn} has no runtime value", ref.span)

    def eval_block(self, env: Env, block: ast.Block) -> Value:
        inner = Env(env)
        result: Value = UNIT
        for stat in block.stats:
            if isinstance(stat, ast.DefDecl):
                if stat.is_val:
                    inner.bind(stat.name, self.eval_expr(inner, stat.body))
                else:
                    inner.bind(stat.name, DefV(inner, stat))
                result = UNIT
            else:
                result = self.eval_expr(inner, stat)
        return result

    def apply(self, callee: Value, args: list[Value], span: Span) -> Value:
        if isinstance(callee, BuiltinV):
            return self.call_builtin(callee.name, args, span)
        if isinstance(callee, DefV):
            return self.call_def(callee, args, span)
        raise EvalError(f"{render(callee)} is not callable", span)

    def call_def(self, fn: DefV, args: list[Value], span: Span) -> Value:
        decl = fn.decl
        if len(args) != len(decl.params):
            raise EvalError(
                f"{decl.name} expects {len(decl.params)} arguments, got {len(args)}", span
            )
        if self.depth >= _MAX_CALL_DEPTH:
            raise EvalError("call depth exceeded", span)
        env = Env(fn.env)
        for param, arg in zip(decl.params, args):
            env.bind(param, arg)
        self.depth += 1
        try:
            body = decl.body
            if isinstance(body, ast.Block):
                return self.eval_block(env, body)
            return self.eval_expr(env, body)
        finally:
            self.depth -= 1

    # Deferred frames ----------------------------------------------------------

    def frame_eval(self, env: Env, body: ast.Block) -> Value:
        frame: list[ThunkV] = []
        self.frames.append(frame)
        primary: EvalError | None = None
        value: Value = UNIT
        try:
            value = self.eval_block(env, body)
        except EvalError as err:
            primary = err
        finally:
            self.frames.pop()
        for thunk in reversed(frame):
            try:
                self.eval_block(Env(thunk.env), thunk.body)
            except EvalError as err:
                if primary is None:
                    primary = err
                else:
                    primary.suppressed.append(err)
        if primary is not None:
            raise primary
        return value

    def defer_register(self, thunk: ThunkV, span: Span) -> Value:
        if not self.frames:
            raise EvalError(
                "no deferred-thunk frame is active; this indicates a rewriter bug",
                span,
                code=E_NO_FRAME,
            )
        self.frames[-1].append(thunk)
        return UNIT

    # Builtins -----------------------------------------------------------------

    def call_builtin(self, name: str, args: list[Value], span: Span) -> Value:
        if name == "print":
            self._arity(name, args, 1, span)
            self.events.append(render(args[0]))
            return UNIT
        if name == "error":
            self._arity(name, args, 1, span)
            raise EvalError(render(args[0]), span)
        if name == "concat":
            self._arity(name, args, 2, span)
            return StrV(render(args[0]) + render(args[1]))
        if name in ("add", "sub"):
            self._arity(name, args, 2, span)
            a, b = args
            if not isinstance(a, IntV) or not isinstance(b, IntV):
                raise EvalError(f"{name} needs integer arguments", span)
            return IntV(a.value + b.value if name == "add" else a.value - b.value)
        if name == "compose":
            raise EvalError("compose is interpreted at rewrite time, not at runtime", span)
        raise EvalError(f"unknown builtin {name}", span)

    @staticmethod
    def _arity(name: str, args: list[Value], n: int, span: Span) -> None:
        if len(args) != n:
            raise EvalError(f"{name} expects {n} arguments, got {len(args)}", span)


def run(graph: ScopeGraph, resolution: Resolution, entry_fqn: str) -> Trace:
    """Evaluate the zero-argument def `entry_fqn` and collect its trace."""
    return Interpreter(graph, resolution).run(entry_fqn)
