"""Control-flow and def-use construction over parsed MiniSol.

The CFG is always a DAG (the subset has no loops), so every acyclic
entry-to-exit path is feasible under some branch outcome assignment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .nodes import (
    AssignOp,
    AssignStmt,
    Ast,
    BinaryExpr,
    CallExpr,
    CastExpr,
    Expr,
    ExprStmt,
    IfStmt,
    Literal,
    PathExpr,
    RequireStmt,
    ReturnStmt,
    Stmt,
    TupleCaptureStmt,
    UnaryExpr,
    VarDeclStmt,
)

ENTRY = 0
EXIT = 1


@dataclass
class Cfg:
    """Basic blocks over flattened statement indices.

    Block ids 0 and 1 are the virtual entry/exit nodes and hold no
    statements; `real_blocks` excludes them.
    """

    blocks: list[list[int]] = field(default_factory=list)
    edges: list[tuple[int, int, str]] = field(default_factory=list)
    entry: int = ENTRY
    exit: int = EXIT
    dead_blocks: list[int] = field(default_factory=list)

    @property
    def real_blocks(self) -> list[list[int]]:
        return [b for i, b in enumerate(self.blocks) if i not in (self.entry, self.exit)]

    def successors(self, block_id: int) -> list[int]:
        return [dst for src, dst, _ in self.edges if src == block_id]

    def paths(self) -> list[list[int]]:
        """All entry-to-exit paths as flattened statement index sequences."""
        out: list[list[int]] = []

        def dfs(block_id: int, acc: list[int]) -> None:
            acc = acc + self.blocks[block_id]
            if block_id == self.exit:
                out.append(acc)
                return
            for nxt in self.successors(block_id):
                dfs(nxt, acc)

        dfs(self.entry, [])
        return out


class _CfgBuilder:
    def __init__(self) -> None:
        self.blocks: list[list[int]] = [[], []]  # entry, exit
        self.edges: list[tuple[int, int, str]] = []
        self.dead: list[int] = []

    def new_block(self) -> int:
        self.blocks.append([])
        return len(self.blocks) - 1

    def edge(self, src: int, dst: int, kind: str) -> None:
        self.edges.append((src, dst, kind))

    def build(self, stmts: list[Stmt], index_of: dict[int, int]) -> Cfg:
        first = self.new_block()
        self.edge(ENTRY, first, "fallthrough")
        out = self._scan(stmts, first, index_of)
        if out is not None:
            self.edge(out, EXIT, "fallthrough")
        self._prune_empty_orphans()
        return Cfg(self.blocks, self.edges, ENTRY, EXIT, self.dead)

    def _scan(self, stmts: list[Stmt], cur: int, index_of: dict[int, int]) -> Optional[int]:
        """Append statements to `cur`; returns the fall-out block or None."""
        terminated = False
        for stmt in stmts:
            idx = index_of[id(stmt)]
            if terminated:
                # dead code after a return; keep the statements addressable
                cur = self.new_block()
                self.dead.append(cur)
                terminated = False
            if isinstance(stmt, ReturnStmt):
                self.blocks[cur].append(idx)
                self.edge(cur, EXIT, "return")
                terminated = True
                continue
            if isinstance(stmt, IfStmt):
                self.blocks[cur].append(idx)
                then_entry = self.new_block()
                self.edge(cur, then_entry, "then")
                then_out = self._scan(stmt.then_branch, then_entry, index_of)
                join = self.new_block()
                if stmt.else_branch:
                    else_entry = self.new_block()
                    self.edge(cur, else_entry, "else")
                    else_out = self._scan(stmt.else_branch, else_entry, index_of)
                    if else_out is not None:
                        self.edge(else_out, join, "fallthrough")
                else:
                    self.edge(cur, join, "else")
                if then_out is not None:
                    self.edge(then_out, join, "fallthrough")
                cur = join
                continue
            self.blocks[cur].append(idx)
        return None if terminated else cur

    def _prune_empty_orphans(self) -> None:
        # joins left unreachable when both branches return
        changed = True
        while changed:
            changed = False
            has_in = {dst for _, dst, _ in self.edges}
            for bid in range(2, len(self.blocks)):
                if self.blocks[bid] or bid in has_in:
                    continue
                before = len(self.edges)
                self.edges = [(s, d, k) for s, d, k in self.edges if s != bid]
                if len(self.edges) != before:
                    changed = True


def build_cfg(ast: Ast) -> Cfg:
    """CFG for the first externally visible function (or the only function)."""
    fn = primary_function(ast)
    stmts = fn.body if fn is not None else []
    flat = _flatten(stmts)
    index_of = {id(s): i for i, s in enumerate(flat)}
    return _CfgBuilder().build(stmts, index_of)


def primary_function(ast: Ast):
    for fn in ast.functions:
        if fn.visibility in ("external", "public"):
            return fn
    return ast.functions[0] if ast.functions else None


def _flatten(stmts: list[Stmt]) -> list[Stmt]:
    out: list[Stmt] = []

    def walk(ss: list[Stmt]) -> None:
        for s in ss:
            out.append(s)
            if isinstance(s, IfStmt):
                walk(s.then_branch)
                walk(s.else_branch)

    walk(stmts)
    return out


def flat_statements(ast: Ast) -> list[Stmt]:
    fn = primary_function(ast)
    return _flatten(fn.body) if fn is not None else []


# ---------------------------------------------------------------------------
# Def-use extraction.  Reads and writes are sets of normalized maximal access
# paths; index sub-expressions are folded into the path string rather than
# listed as separate reads.
# ---------------------------------------------------------------------------


def paths_in_expr(expr: Optional[Expr]) -> set[str]:
    if expr is None:
        return set()
    if isinstance(expr, Literal):
        return set()
    if isinstance(expr, PathExpr):
        return {expr.normalized()}
    if isinstance(expr, CastExpr):
        return paths_in_expr(expr.inner)
    if isinstance(expr, CallExpr):
        out = paths_in_expr(expr.target)
        for a in expr.args:
            out |= paths_in_expr(a)
        out |= paths_in_expr(expr.value)
        return out
    if isinstance(expr, UnaryExpr):
        return paths_in_expr(expr.operand)
    if isinstance(expr, BinaryExpr):
        return paths_in_expr(expr.left) | paths_in_expr(expr.right)
    raise TypeError(f"unsupported expression {expr!r}")


@dataclass
class DefUse:
    reads: list[set[str]]
    writes: list[set[str]]


def stmt_reads_writes(stmt: Stmt) -> tuple[set[str], set[str]]:
    if isinstance(stmt, VarDeclStmt):
        return paths_in_expr(stmt.init), {stmt.name}
    if isinstance(stmt, AssignStmt):
        reads = paths_in_expr(stmt.rhs)
        if stmt.op != AssignOp.PLAIN:
            reads = reads | {stmt.lhs.normalized()}
        return reads, {stmt.lhs.normalized()}
    if isinstance(stmt, TupleCaptureStmt):
        return paths_in_expr(stmt.rhs), {n for n in stmt.names if n}
    if isinstance(stmt, RequireStmt):
        return paths_in_expr(stmt.cond), set()
    if isinstance(stmt, IfStmt):
        return paths_in_expr(stmt.cond), set()
    if isinstance(stmt, ReturnStmt):
        return paths_in_expr(stmt.value), set()
    if isinstance(stmt, ExprStmt):
        return paths_in_expr(stmt.expr), set()
    raise TypeError(f"unsupported statement {stmt!r}")


def build_defuse(ast: Ast) -> DefUse:
    flat = flat_statements(ast)
    reads: list[set[str]] = []
    writes: list[set[str]] = []
    for stmt in flat:
        r, w = stmt_reads_writes(stmt)
        reads.append(r)
        writes.append(w)
    return DefUse(reads, writes)


def find_call(expr: Optional[Expr]) -> Optional[CallExpr]:
    """The single external call inside an expression tree, if any."""
    if expr is None or isinstance(expr, (Literal, PathExpr)):
        return None
    if isinstance(expr, CallExpr):
        return expr
    if isinstance(expr, CastExpr):
        return find_call(expr.inner)
    if isinstance(expr, UnaryExpr):
        return find_call(expr.operand)
    if isinstance(expr, BinaryExpr):
        return find_call(expr.left) or find_call(expr.right)
    raise TypeError(f"unsupported expression {expr!r}")


def stmt_call(stmt: Stmt) -> Optional[CallExpr]:
    if isinstance(stmt, VarDeclStmt):
        return find_call(stmt.init)
    if isinstance(stmt, AssignStmt):
        return find_call(stmt.rhs)
    if isinstance(stmt, TupleCaptureStmt):
        return find_call(stmt.rhs)
    if isinstance(stmt, RequireStmt):
        return find_call(stmt.cond)
    if isinstance(stmt, ReturnStmt):
        return find_call(stmt.value)
    if isinstance(stmt, ExprStmt):
        return find_call(stmt.expr)
    return None


def stmt_capture(stmt: Stmt) -> Optional[str]:
    """The path written by a call-bearing statement, if it captures."""
    if stmt_call(stmt) is None:
        return None
    if isinstance(stmt, VarDeclStmt):
        return stmt.name
    if isinstance(stmt, AssignStmt):
        return stmt.lhs.normalized()
    if isinstance(stmt, TupleCaptureStmt):
        for name in stmt.names:
            if name:
                return name
    return None
