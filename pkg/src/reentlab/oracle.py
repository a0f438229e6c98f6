"""Brute-force factor oracle: explicit path enumeration over the AST.

This is the verification twin of `factors.compute_factors`.  It never
touches the CFG or the def-use module: execution paths are enumerated by
walking the AST structurally, read/write sets are re-derived with a
separate extractor, and dependencies/ordering are recomputed by taint
simulation along each concrete path.  Outputs must match the analytic
computation exactly on every program within the size bound.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .factors import DepKind, FactorSet, ProgramUnit, empty_factor_set
from .minisol.nodes import (
    AssignOp,
    AssignStmt,
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

MAX_BRANCHES = 2
MAX_LINES = 25
MAX_PATHS = 4

LOW_LEVEL = {"call", "delegatecall", "staticcall"}


class TooLarge(Exception):
    pass


def _collect_paths(expr: Optional[Expr]) -> set[str]:
    """Maximal access paths, gathered with an explicit work stack."""
    out: set[str] = set()
    stack = [expr]
    while stack:
        e = stack.pop()
        if e is None or isinstance(e, Literal):
            continue
        if isinstance(e, PathExpr):
            out.add(e.base + "".join(e.segments))
        elif isinstance(e, CastExpr):
            stack.append(e.inner)
        elif isinstance(e, CallExpr):
            stack.append(e.target)
            stack.extend(e.args)
            stack.append(e.value)
        elif isinstance(e, UnaryExpr):
            stack.append(e.operand)
        elif isinstance(e, BinaryExpr):
            stack.append(e.left)
            stack.append(e.right)
        else:
            raise TypeError(f"unsupported expression {e!r}")
    return out


def _find_call(expr: Optional[Expr]) -> Optional[CallExpr]:
    stack = [expr]
    while stack:
        e = stack.pop()
        if isinstance(e, CallExpr):
            return e
        if isinstance(e, CastExpr):
            stack.append(e.inner)
        elif isinstance(e, UnaryExpr):
            stack.append(e.operand)
        elif isinstance(e, BinaryExpr):
            stack.extend((e.left, e.right))
    return None


class _StmtView:
    """Per-statement facts re-derived independently of the def-use module."""

    def __init__(self, stmt: Stmt, state_names: set[str]):
        self.stmt = stmt
        self.line = stmt.line
        if isinstance(stmt, VarDeclStmt):
            self.reads = _collect_paths(stmt.init)
            self.writes = {stmt.name}
            call_home = stmt.init
            self.capture = stmt.name if _find_call(stmt.init) else None
        elif isinstance(stmt, AssignStmt):
            lhs = stmt.lhs.base + "".join(stmt.lhs.segments)
            self.reads = _collect_paths(stmt.rhs) | ({lhs} if stmt.op != AssignOp.PLAIN else set())
            self.writes = {lhs}
            call_home = stmt.rhs
            self.capture = lhs if _find_call(stmt.rhs) else None
        elif isinstance(stmt, TupleCaptureStmt):
            self.reads = _collect_paths(stmt.rhs)
            self.writes = {n for n in stmt.names if n}
            call_home = stmt.rhs
            self.capture = next((n for n in stmt.names if n), None) if _find_call(stmt.rhs) else None
        elif isinstance(stmt, RequireStmt):
            self.reads = _collect_paths(stmt.cond)
            self.writes = set()
            call_home = stmt.cond
            self.capture = None
        elif isinstance(stmt, IfStmt):
            self.reads = _collect_paths(stmt.cond)
            self.writes = set()
            call_home = None
            self.capture = None
        elif isinstance(stmt, ReturnStmt):
            self.reads = _collect_paths(stmt.value)
            self.writes = set()
            call_home = stmt.value
            self.capture = None
        elif isinstance(stmt, ExprStmt):
            self.reads = _collect_paths(stmt.expr)
            self.writes = set()
            call_home = stmt.expr
            self.capture = None
        else:
            raise TypeError(f"unsupported statement {stmt!r}")

        self.call = _find_call(call_home)
        self.is_call = self.call is not None
        self.call_kind = ""
        self.arg_paths: set[str] = set()
        if self.call is not None:
            self.call_kind = "low_level" if self.call.method in LOW_LEVEL else "high_level"
            for a in self.call.args:
                self.arg_paths |= _collect_paths(a)
            self.arg_paths |= _collect_paths(self.call.value)
            self.target_paths = _collect_paths(self.call.target)
        else:
            self.target_paths = set()
        self.state_writes = {w for w in self.writes if _base_of(w) in state_names}
        self.is_update = bool(self.state_writes)
        self.is_local_writer = bool(self.writes) and not self.is_update


def _base_of(path: str) -> str:
    for i, ch in enumerate(path):
        if ch in "[.":
            return path[:i]
    return path


def _enumerate_paths(stmts: list[Stmt]) -> list[tuple[list[Stmt], bool]]:
    """All execution sequences (statement lists) with a returned flag."""
    seqs: list[tuple[list[Stmt], bool]] = [([], False)]
    for s in stmts:
        nxt: list[tuple[list[Stmt], bool]] = []
        for seq, done in seqs:
            if done:
                nxt.append((seq, done))
                continue
            if isinstance(s, IfStmt):
                for sub, sub_done in _enumerate_paths(s.then_branch):
                    nxt.append((seq + [s] + sub, sub_done))
                for sub, sub_done in _enumerate_paths(s.else_branch):
                    nxt.append((seq + [s] + sub, sub_done))
            elif isinstance(s, ReturnStmt):
                nxt.append((seq + [s], True))
            else:
                nxt.append((seq + [s], False))
        seqs = nxt
    return seqs


def brute_force_oracle(p: ProgramUnit, include_ctrl: bool = True) -> FactorSet:
    n_branches = sum(isinstance(s, IfStmt) for s in p.flat)
    if n_branches > MAX_BRANCHES or p.n_lines > MAX_LINES:
        raise TooLarge(f"{p.n_lines} lines / {n_branches} branches exceed the oracle bound")

    state_names = {sv.name for sv in p.ast.state_vars}
    views = {id(s): _StmtView(s, state_names) for s in p.flat}
    fn_body = p.ast.functions[0].body if p.ast.functions else []
    for fn in p.ast.functions:
        if fn.visibility in ("external", "public"):
            fn_body = fn.body
            break
    raw_paths = _enumerate_paths(fn_body)
    if len(raw_paths) > MAX_PATHS:
        raise TooLarge(f"{len(raw_paths)} paths exceed the oracle bound")
    paths: list[list[_StmtView]] = [[views[id(s)] for s in seq] for seq, _ in raw_paths]

    fs = empty_factor_set(p.n_lines, "line")
    calls = [v for v in views.values() if v.is_call]
    updates = [v for v in views.values() if v.is_update]
    for v in calls:
        fs.phi_E[v.line - 1] = 1
        fs.call_kinds[v.line] = v.call_kind
    for v in updates:
        fs.phi_S[v.line - 1] = 1
    fs.n_branches = n_branches

    branch_views = [views[id(s)] for s in p.flat if isinstance(s, IfStmt)]

    for c in calls:
        for u in updates:
            if c is u:
                continue
            kind, why = _dependency_on_paths(paths, branch_views, c, u, include_ctrl)
            if kind == DepKind.NONE:
                continue
            ci, ui = c.line - 1, u.line - 1
            fs.phi_D[ci, ui] = 1
            fs.dep_kind[ci, ui] = kind
            fs.witnesses.append((c.line, u.line, why))
            fs.phi_O[ci, ui] = _order_on_paths(paths, c, u)
            if fs.phi_O[ci, ui] == -1 and _pair_avoidable(paths, c, u):
                fs.path_sensitive_pairs.add((c.line, u.line))
    return fs


def _dependency_on_paths(paths, branch_views, c: _StmtView, u: _StmtView, include_ctrl: bool):
    if c.capture is not None and c.capture in u.reads:
        return DepKind.DIRECT, f"DIRECT: update reads captured return '{c.capture}'"
    shared = c.arg_paths & (u.reads | u.writes)
    if shared:
        return DepKind.DIRECT, f"DIRECT: update and call share path '{sorted(shared)[0]}'"

    for path in paths:
        hop = _taint_chain(path, c, {c.capture} if c.capture else set(), u, u.reads)
        if hop is not None:
            return DepKind.INDIRECT, f"INDIRECT: chain through local '{hop}'"
        hop = _taint_chain(path, u, set(u.state_writes), c, c.arg_paths | c.target_paths)
        if hop is not None:
            return DepKind.INDIRECT, f"INDIRECT: chain through local '{hop}'"

    if include_ctrl and c.capture is not None:
        for b in branch_views:
            if c.capture not in b.reads:
                continue
            if not _reaches_untransformed(paths, c, b):
                continue
            if _path_control_dependent(paths, u, b):
                return DepKind.CTRL, f"CTRL: branch at line {b.line} guards the update"
    return DepKind.NONE, ""


def _taint_chain(path: list[_StmtView], src: _StmtView, seeds: set[str],
                 dst: _StmtView, dst_reads: set[str]) -> Optional[str]:
    """First intermediate local of a >=2-edge def-use chain realized on `path`."""
    seeds = {s for s in seeds if s}
    if not seeds or src is dst:
        return None
    try:
        start = path.index(src)
    except ValueError:
        return None
    taint: dict[str, tuple[int, str]] = {s: (0, "") for s in seeds}
    for view in path[start + 1:]:
        if view is dst:
            best = None
            for r in view.reads & set(taint):
                depth, first = taint[r]
                if depth >= 1 and (best is None or depth < best[0]):
                    best = (depth, first)
            if best is not None:
                return best[1]
            # dst seen with no qualifying taint on this path; a second
            # occurrence is impossible (statements are unique), keep scanning
            # only for documentation symmetry
            continue
        tainted_reads = view.reads & set(taint)
        if tainted_reads and view.is_local_writer and view is not src:
            depth = min(taint[r][0] for r in tainted_reads)
            first = min(
                (taint[r] for r in tainted_reads), key=lambda t: t[0]
            )[1]
            for w in view.writes:
                hop_first = first if first else w
                taint[w] = (depth + 1, hop_first)
        else:
            for w in view.writes:
                taint.pop(w, None)
    return None


def _reaches_untransformed(paths, c: _StmtView, b: _StmtView) -> bool:
    """The capture of c arrives at branch b unoverwritten on some path."""
    assert c.capture is not None
    for path in paths:
        if c not in path or b not in path:
            continue
        i, j = path.index(c), path.index(b)
        if i >= j:
            continue
        if any(c.capture in mid.writes for mid in path[i + 1:j]):
            continue
        return True
    return False


def _path_control_dependent(paths, u: _StmtView, b: _StmtView) -> bool:
    """u is controlled by branch b, in path-quantifier form."""
    containing_u = [p for p in paths if u in p]
    if not containing_u:
        return False
    for p in containing_u:
        if b not in p or p.index(b) > p.index(u):
            return False
    return any(b in p and u not in p for p in paths)


def _order_on_paths(paths, c: _StmtView, u: _StmtView) -> int:
    call_first = False
    update_first_paths = []
    for p in paths:
        if c not in p or u not in p:
            continue
        i, j = p.index(c), p.index(u)
        if i < j:
            call_first = True
        else:
            update_first_paths.append((p, j, i))
    if call_first:
        return -1
    if not update_first_paths:
        return 0
    for p, j, i in update_first_paths:
        for mid in p[j + 1:i]:
            if mid.writes & u.state_writes:
                return 0  # value overwritten before the call on this path
    return 1


def _pair_avoidable(paths, c: _StmtView, u: _StmtView) -> bool:
    return any(c not in p or u not in p for p in paths)
