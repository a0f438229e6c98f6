"""AST, source-unit, and diagnostic types for the MiniSol contract subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class AnchorKind(Enum):
    EXT_CALL = "e"
    STATE_UPD = "s"
    CHECK = "CHECK"
    EFFECT = "EFFECT"
    INTERACTION = "INTERACTION"


ANCHOR_TOKENS = {
    "//e": AnchorKind.EXT_CALL,
    "//s": AnchorKind.STATE_UPD,
    "//CHECK": AnchorKind.CHECK,
    "//EFFECT": AnchorKind.EFFECT,
    "//INTERACTION": AnchorKind.INTERACTION,
}


@dataclass(frozen=True)
class Diagnostic:
    line: int
    code: str
    msg: str

    def to_json(self) -> dict:
        return {"line": self.line, "code": self.code, "msg": self.msg}


class ParseError(Exception):
    """Raised when a source unit cannot be parsed; carries all diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(f"L{d.line} {d.code}: {d.msg}" for d in diagnostics))


@dataclass
class SourceUnit:
    """Raw text plus the 1-indexed line table and anchor map."""

    text: str
    lines: list[str]
    anchors: dict[int, AnchorKind]


# ---------------------------------------------------------------------------
# Expressions.
#
# Expressions are small trees; access paths are kept symbolic so that two
# paths alias exactly when their normalized strings are equal.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Literal(Expr):
    text: str


@dataclass(frozen=True)
class PathExpr(Expr):
    """A normalized access path: base identifier plus [index] / .member segments."""

    base: str
    segments: tuple[str, ...] = ()  # each segment is "[<expr>]" or ".<ident>"

    def normalized(self) -> str:
        return self.base + "".join(self.segments)


@dataclass(frozen=True)
class CastExpr(Expr):
    type_name: str
    inner: Expr


@dataclass(frozen=True)
class CallExpr(Expr):
    """An external invocation `target.method(args)` with optional {value: v}."""

    target: Expr  # PathExpr or CastExpr
    method: str
    args: tuple[Expr, ...]
    value: Optional[Expr] = None


@dataclass(frozen=True)
class UnaryExpr(Expr):
    op: str
    operand: Expr


@dataclass(frozen=True)
class BinaryExpr(Expr):
    op: str
    left: Expr
    right: Expr


# ---------------------------------------------------------------------------
# Statements.  One statement per source line; `line` is the 1-indexed
# coordinate every factor definition is stated over.
# ---------------------------------------------------------------------------


class AssignOp(Enum):
    PLAIN = "="
    PLUS = "+="
    MINUS = "-="


@dataclass
class Stmt:
    line: int


@dataclass
class VarDeclStmt(Stmt):
    var_type: str = ""
    name: str = ""
    init: Optional[Expr] = None


@dataclass
class AssignStmt(Stmt):
    lhs: PathExpr = None  # type: ignore[assignment]
    op: AssignOp = AssignOp.PLAIN
    rhs: Expr = None  # type: ignore[assignment]


@dataclass
class TupleCaptureStmt(Stmt):
    """`(bool ok, ) = target.call{value: v}("")` low-level capture form."""

    names: tuple[str, ...] = ()
    types: tuple[str, ...] = ()
    rhs: Expr = None  # type: ignore[assignment]


@dataclass
class RequireStmt(Stmt):
    cond: Expr = None  # type: ignore[assignment]


@dataclass
class IfStmt(Stmt):
    cond: Expr = None  # type: ignore[assignment]
    then_branch: list[Stmt] = field(default_factory=list)
    else_branch: list[Stmt] = field(default_factory=list)


@dataclass
class ReturnStmt(Stmt):
    value: Optional[Expr] = None


@dataclass
class ExprStmt(Stmt):
    expr: Expr = None  # type: ignore[assignment]


@dataclass
class VarDecl:
    """Contract-scope state variable declaration."""

    var_type: str
    name: str
    visibility: str = ""
    constant: bool = False
    init: Optional[Expr] = None
    line: int = 0


@dataclass
class Param:
    param_type: str
    name: str


@dataclass
class FunctionDef:
    name: str
    params: list[Param]
    visibility: str
    mutability: str
    returns: Optional[str]
    body: list[Stmt]
    line: int = 0


@dataclass
class Ast:
    contract_name: str
    state_vars: list[VarDecl]
    functions: list[FunctionDef]
    pragma: str = ""
    imports: list[str] = field(default_factory=list)

    def all_statements(self) -> list[Stmt]:
        """Flatten every statement in source order (If bodies included)."""
        out: list[Stmt] = []

        def walk(stmts: list[Stmt]) -> None:
            for s in stmts:
                out.append(s)
                if isinstance(s, IfStmt):
                    walk(s.then_branch)
                    walk(s.else_branch)

        for fn in self.functions:
            walk(fn.body)
        return out
