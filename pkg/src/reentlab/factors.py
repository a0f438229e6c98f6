"""The four atomic factor analyses over a parsed contract.

Factors are computed at line granularity: unit index i corresponds to
source line i+1.  The dependency matrix and ordering matrix are indexed
[call_unit, update_unit].  Sign convention for the ordering factor:
+1 when the state update precedes the call on every common path and its
value reaches the call unoverwritten; -1 when some feasible path runs
the call before the update (a single bad path suffices to flag risk).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

import numpy as np

from .minisol.graphs import (
    Cfg,
    DefUse,
    build_cfg,
    build_defuse,
    flat_statements,
    paths_in_expr,
    primary_function,
    stmt_call,
    stmt_capture,
    stmt_reads_writes,
)
from .minisol.nodes import Ast, CallExpr, IfStmt, ParseError, SourceUnit, Stmt
from .minisol.parser import LOW_LEVEL_METHODS, parse


class DepKind(IntEnum):
    NONE = 0
    DIRECT = 1
    INDIRECT = 2
    CTRL = 3


@dataclass
class FactorSet:
    n_units: int
    unit_kind: str  # "line" or "block"
    phi_E: np.ndarray
    phi_S: np.ndarray
    phi_D: np.ndarray
    phi_O: np.ndarray
    dep_kind: np.ndarray
    witnesses: list[tuple[int, int, str]] = field(default_factory=list)
    call_kinds: dict[int, str] = field(default_factory=dict)
    n_branches: int = 0
    path_sensitive_pairs: set[tuple[int, int]] = field(default_factory=set)

    def unit_id(self, index: int) -> int:
        """Public unit coordinate: 1-based line number or 0-based block id."""
        return index + 1 if self.unit_kind == "line" else index

    def index_of(self, unit_id: int) -> int:
        return unit_id - 1 if self.unit_kind == "line" else unit_id

    def signature(self) -> tuple:
        return (
            self.n_units,
            self.unit_kind,
            self.phi_E.tobytes(),
            self.phi_S.tobytes(),
            self.phi_D.tobytes(),
            self.phi_O.tobytes(),
            self.dep_kind.tobytes(),
            tuple(sorted((c, u) for c, u, _ in self.witnesses)),
            tuple(sorted(self.call_kinds.items())),
            self.n_branches,
            tuple(sorted(self.path_sensitive_pairs)),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FactorSet):
            return NotImplemented
        return self.signature() == other.signature()

    def check_invariants(self) -> None:
        nz = np.argwhere(self.phi_O != 0)
        for c, u in nz:
            assert self.phi_D[c, u] == 1, f"phi_O nonzero without dependency at {(c, u)}"
        dz = np.argwhere(self.phi_D == 1)
        for c, u in dz:
            assert self.phi_E[c] == 1 and self.phi_S[u] == 1, f"dependency outside candidates at {(c, u)}"
        assert np.array_equal(self.dep_kind == DepKind.NONE, self.phi_D == 0)

    def to_json(self) -> dict:
        units = [self.unit_id(i) for i in range(self.n_units)]
        return {
            "unit_kind": self.unit_kind,
            "n_units": self.n_units,
            "phi_E": [int(units[i]) for i in np.flatnonzero(self.phi_E)],
            "phi_S": [int(units[i]) for i in np.flatnonzero(self.phi_S)],
            "phi_D": [
                {"call": int(units[c]), "update": int(units[u]), "kind": DepKind(self.dep_kind[c, u]).name}
                for c, u in np.argwhere(self.phi_D == 1)
            ],
            "phi_O": [
                {"call": int(units[c]), "update": int(units[u]), "order": int(self.phi_O[c, u])}
                for c, u in np.argwhere(self.phi_O != 0)
            ],
            "witnesses": [
                {"call": c, "update": u, "why": why} for c, u, why in self.witnesses
            ],
            "call_kinds": {str(k): v for k, v in sorted(self.call_kinds.items())},
            "n_branches": self.n_branches,
            "path_sensitive": sorted(list(p) for p in self.path_sensitive_pairs),
        }


def empty_factor_set(n_units: int, unit_kind: str = "line") -> FactorSet:
    return FactorSet(
        n_units=n_units,
        unit_kind=unit_kind,
        phi_E=np.zeros(n_units, dtype=np.uint8),
        phi_S=np.zeros(n_units, dtype=np.uint8),
        phi_D=np.zeros((n_units, n_units), dtype=np.uint8),
        phi_O=np.zeros((n_units, n_units), dtype=np.int8),
        dep_kind=np.zeros((n_units, n_units), dtype=np.int8),
    )


# ---------------------------------------------------------------------------
# ProgramUnit: the analyzed carrier shared by all factor computations.
# ---------------------------------------------------------------------------


@dataclass
class CallSite:
    stmt_index: int
    line: int
    call: CallExpr
    capture: Optional[str]
    arg_paths: set[str]
    kind: str  # "high_level" or "low_level"


@dataclass
class ProgramUnit:
    unit: SourceUnit
    ast: Ast
    cfg: Cfg
    defuse: DefUse
    flat: list[Stmt]
    state_names: set[str]
    n_lines: int

    @classmethod
    def from_source(cls, source: str) -> "ProgramUnit":
        result = parse(source)
        if not result.ok:
            raise ParseError(result.errors)
        assert result.ast is not None
        return cls.from_parsed(result.unit, result.ast)

    @classmethod
    def from_parsed(cls, unit: SourceUnit, ast: Ast) -> "ProgramUnit":
        cfg = build_cfg(ast)
        defuse = build_defuse(ast)
        flat = flat_statements(ast)
        state_names = {sv.name for sv in ast.state_vars}
        return cls(unit, ast, cfg, defuse, flat, state_names, len(unit.lines))

    def line_of(self, stmt_index: int) -> int:
        return self.flat[stmt_index].line

    def call_sites(self) -> list[CallSite]:
        sites = []
        for k, stmt in enumerate(self.flat):
            call = stmt_call(stmt)
            if call is None:
                continue
            args: set[str] = set()
            for a in call.args:
                args |= paths_in_expr(a)
            args |= paths_in_expr(call.value)
            kind = "low_level" if call.method in LOW_LEVEL_METHODS else "high_level"
            sites.append(CallSite(k, stmt.line, call, stmt_capture(stmt), args, kind))
        return sites

    def update_indices(self) -> list[int]:
        out = []
        for k, stmt in enumerate(self.flat):
            _, writes = stmt_reads_writes(stmt)
            if any(_base(p) in self.state_names for p in writes):
                out.append(k)
        return out

    def state_written_paths(self, stmt_index: int) -> set[str]:
        _, writes = stmt_reads_writes(self.flat[stmt_index])
        return {p for p in writes if _base(p) in self.state_names}


def _base(path: str) -> str:
    for i, ch in enumerate(path):
        if ch in "[.":
            return path[:i]
    return path


def analyze_source(source: str, include_ctrl: bool = True) -> tuple[ProgramUnit, FactorSet]:
    p = ProgramUnit.from_source(source)
    return p, compute_factors(p, include_ctrl=include_ctrl)


def compute_factors(p: ProgramUnit, include_ctrl: bool = True) -> FactorSet:
    fs = empty_factor_set(p.n_lines, "line")
    phi_e = external_call_units(p)
    phi_s = state_update_units(p)
    fs.phi_E = phi_e
    fs.phi_S = phi_s
    fs.phi_D, fs.dep_kind, fs.witnesses = dependency_matrix(p, include_ctrl=include_ctrl)
    fs.phi_O = ordering_matrix(p, fs.phi_D)
    for site in p.call_sites():
        fs.call_kinds[site.line] = site.kind
    fs.n_branches = sum(isinstance(s, IfStmt) for s in p.flat)
    fs.path_sensitive_pairs = _path_sensitive_pairs(p, fs.phi_O)
    return fs


def external_call_units(p: ProgramUnit) -> np.ndarray:
    phi = np.zeros(p.n_lines, dtype=np.uint8)
    for site in p.call_sites():
        phi[site.line - 1] = 1
    return phi


def state_update_units(p: ProgramUnit) -> np.ndarray:
    phi = np.zeros(p.n_lines, dtype=np.uint8)
    for k in p.update_indices():
        phi[p.line_of(k) - 1] = 1
    return phi


# ---------------------------------------------------------------------------
# Reaching definitions and derived relations (block-level fixpoint; the
# brute-force oracle re-derives the same relations by explicit path walks).
# ---------------------------------------------------------------------------


class _Flow:
    def __init__(self, p: ProgramUnit):
        self.p = p
        self.cfg = p.cfg
        self.n_stmts = len(p.flat)
        self.reads = [stmt_reads_writes(s)[0] for s in p.flat]
        self.writes = [stmt_reads_writes(s)[1] for s in p.flat]
        self.block_of = {}
        self.pos_in_block = {}
        for b, stmts in enumerate(self.cfg.blocks):
            for j, k in enumerate(stmts):
                self.block_of[k] = b
                self.pos_in_block[k] = j
        self._reach_in = self._solve_reaching()
        self._block_reach = self._solve_block_reach()
        self._dom = self._solve_dominators(forward=True)
        self._pdom = self._solve_dominators(forward=False)

    # -- reaching definitions -------------------------------------------------

    def _solve_reaching(self) -> dict[int, set[tuple[int, str]]]:
        """Def set (stmt, path) reaching the entry of each statement."""
        blocks = self.cfg.blocks
        n_blocks = len(blocks)
        preds: dict[int, list[int]] = {b: [] for b in range(n_blocks)}
        for s, d, _ in self.cfg.edges:
            preds[d].append(s)

        def transfer(defs: set[tuple[int, str]], k: int) -> set[tuple[int, str]]:
            written = self.writes[k]
            if not written:
                return defs
            kept = {(i, pth) for i, pth in defs if pth not in written}
            kept |= {(k, pth) for pth in written}
            return kept

        out: dict[int, set[tuple[int, str]]] = {b: set() for b in range(n_blocks)}
        changed = True
        while changed:
            changed = False
            for b in range(n_blocks):
                acc: set[tuple[int, str]] = set()
                for pr in preds[b]:
                    acc |= out[pr]
                for k in blocks[b]:
                    acc = transfer(acc, k)
                if acc != out[b]:
                    out[b] = acc
                    changed = True

        reach_in: dict[int, set[tuple[int, str]]] = {}
        for b in range(n_blocks):
            acc = set()
            for pr in preds[b]:
                acc |= out[pr]
            for k in blocks[b]:
                reach_in[k] = set(acc)
                acc = transfer(acc, k)
        return reach_in

    def def_reaches(self, d: int, use: int, path: str) -> bool:
        return (d, path) in self._reach_in.get(use, set())

    # -- order relations --------------------------------------------------------

    def _solve_block_reach(self) -> dict[int, set[int]]:
        succs: dict[int, list[int]] = {b: [] for b in range(len(self.cfg.blocks))}
        for s, d, _ in self.cfg.edges:
            succs[s].append(d)
        reach: dict[int, set[int]] = {}

        def dfs(b: int) -> set[int]:
            if b in reach:
                return reach[b]
            reach[b] = set()
            acc: set[int] = set()
            for nxt in succs[b]:
                acc |= {nxt} | dfs(nxt)
            reach[b] = acc
            return acc

        for b in range(len(self.cfg.blocks)):
            dfs(b)
        return reach

    def executes_before(self, a: int, b: int) -> bool:
        """Some feasible path runs statement a strictly before b."""
        ba, bb = self.block_of.get(a), self.block_of.get(b)
        if ba is None or bb is None:
            return False
        if ba == bb:
            return self.pos_in_block[a] < self.pos_in_block[b]
        return bb in self._block_reach[ba]

    def _solve_dominators(self, forward: bool) -> dict[int, set[int]]:
        n_blocks = len(self.cfg.blocks)
        if forward:
            root = self.cfg.entry
            preds = {b: [] for b in range(n_blocks)}
            for s, d, _ in self.cfg.edges:
                preds[d].append(s)
        else:
            root = self.cfg.exit
            preds = {b: [] for b in range(n_blocks)}
            for s, d, _ in self.cfg.edges:
                preds[s].append(d)
        full = set(range(n_blocks))
        dom = {b: (({b} if b == root else set(full))) for b in range(n_blocks)}
        changed = True
        while changed:
            changed = False
            for b in range(n_blocks):
                if b == root:
                    continue
                ps = preds[b]
                acc = set(full)
                for pr in ps:
                    acc &= dom[pr]
                if not ps:
                    acc = set()
                acc = acc | {b}
                if acc != dom[b]:
                    dom[b] = acc
                    changed = True
        return dom

    def on_every_path(self, stmt_index: int) -> bool:
        b = self.block_of.get(stmt_index)
        return b is not None and b in self._dom[self.cfg.exit]

    def control_dependent(self, u: int, branch: int) -> bool:
        """Classical control dependence of statement u on branch statement."""
        bu = self.block_of.get(u)
        bb = self.block_of.get(branch)
        if bu is None or bb is None:
            return False
        if bu in self._pdom[bb]:
            return False
        for s, d, _ in self.cfg.edges:
            if s == bb and bu in self._pdom[d]:
                return True
        return False


def dependency_matrix(
    p: ProgramUnit, include_ctrl: bool = True
) -> tuple[np.ndarray, np.ndarray, list[tuple[int, int, str]]]:
    n = p.n_lines
    phi_d = np.zeros((n, n), dtype=np.uint8)
    kinds = np.zeros((n, n), dtype=np.int8)
    witnesses: list[tuple[int, int, str]] = []

    calls = p.call_sites()
    updates = p.update_indices()
    if not calls or not updates:
        return phi_d, kinds, witnesses

    flow = _Flow(p)
    local_chain = _LocalChains(p, flow)

    for site in calls:
        for u in updates:
            if site.stmt_index == u:
                continue
            kind, why = _classify_dependency(p, flow, local_chain, site, u, include_ctrl)
            if kind == DepKind.NONE:
                continue
            ci, ui = site.line - 1, p.line_of(u) - 1
            phi_d[ci, ui] = 1
            kinds[ci, ui] = kind
            witnesses.append((site.line, p.line_of(u), why))
    return phi_d, kinds, witnesses


def _classify_dependency(p, flow, chains, site: CallSite, u: int, include_ctrl: bool):
    u_reads, u_writes = stmt_reads_writes(p.flat[u])
    u_state_writes = p.state_written_paths(u)

    # DIRECT: the update reads the captured return untransformed, or the
    # update and the call's inputs touch the same path (the update reading
    # a call argument, or the call passing the updated storage path).
    if site.capture is not None and site.capture in u_reads:
        return DepKind.DIRECT, f"DIRECT: update reads captured return '{site.capture}'"
    shared = site.arg_paths & (u_reads | u_writes)
    if shared:
        path = sorted(shared)[0]
        return DepKind.DIRECT, f"DIRECT: update and call share path '{path}'"

    # INDIRECT: a def-use chain of length >= 2 through intermediate locals.
    hop = chains.chain(site.stmt_index, {site.capture} if site.capture else set(), u, u_reads)
    if hop is not None:
        return DepKind.INDIRECT, f"INDIRECT: chain through local '{hop}'"
    call_reads = site.arg_paths | paths_in_expr(site.call.target)
    hop = chains.chain(u, u_state_writes, site.stmt_index, call_reads)
    if hop is not None:
        return DepKind.INDIRECT, f"INDIRECT: chain through local '{hop}'"

    # CTRL: the captured return steers a branch that controls the update.
    if include_ctrl and site.capture is not None:
        for k, stmt in enumerate(p.flat):
            if not isinstance(stmt, IfStmt):
                continue
            cond_reads = stmt_reads_writes(stmt)[0]
            if site.capture not in cond_reads:
                continue
            if not flow.def_reaches(site.stmt_index, k, site.capture):
                continue
            if flow.control_dependent(u, k):
                return DepKind.CTRL, f"CTRL: branch at line {stmt.line} guards the update"
    return DepKind.NONE, ""


class _LocalChains:
    """Def-use chains through local-writing intermediates (length >= 2)."""

    def __init__(self, p: ProgramUnit, flow: _Flow):
        self.p = p
        self.flow = flow
        self.reads = flow.reads
        self.writes = flow.writes
        self.local_writers = [
            k for k in range(len(p.flat))
            if self.writes[k] and not p.state_written_paths(k)
        ]

    def chain(self, src: int, src_paths: set[str], dst: int, dst_reads: set[str]) -> Optional[str]:
        """First intermediate local on a chain src -> ... -> dst, if one exists."""
        src_paths = {s for s in src_paths if s}
        if not src_paths or src == dst:
            return None
        # frontier holds (stmt, written_path, first_hop_name); every frontier
        # element is at least one def-use edge away from src
        frontier: list[tuple[int, str, str]] = []
        seen: set[tuple[int, str]] = set()
        for k in self.local_writers:
            if k in (src, dst):
                continue
            for sp in src_paths:
                if sp in self.reads[k] and self.flow.def_reaches(src, k, sp):
                    for w in self.writes[k]:
                        if (k, w) not in seen:
                            seen.add((k, w))
                            frontier.append((k, w, w))
        while frontier:
            k, wpath, first = frontier.pop()
            if wpath in dst_reads and self.flow.def_reaches(k, dst, wpath):
                return first
            for m in self.local_writers:
                if m in (src, dst) or m == k:
                    continue
                if wpath in self.reads[m] and self.flow.def_reaches(k, m, wpath):
                    for w in self.writes[m]:
                        if (m, w) not in seen:
                            seen.add((m, w))
                            frontier.append((m, w, first))
        return None


def ordering_matrix(p: ProgramUnit, phi_d: np.ndarray) -> np.ndarray:
    n = p.n_lines
    phi_o = np.zeros((n, n), dtype=np.int8)
    pairs = np.argwhere(phi_d == 1)
    if len(pairs) == 0:
        return phi_o

    flow = _Flow(p)
    line_to_index = {s.line: k for k, s in enumerate(p.flat)}
    for ci, ui in pairs:
        c = line_to_index[ci + 1]
        u = line_to_index[ui + 1]
        if flow.executes_before(c, u):
            phi_o[ci, ui] = -1
        elif flow.executes_before(u, c):
            if not _overwritten_between(p, flow, u, c):
                phi_o[ci, ui] = 1
            # an intermediate rewrite leaves the pair unordered (never
            # produced by the generators)
    return phi_o


def _overwritten_between(p: ProgramUnit, flow: _Flow, u: int, c: int) -> bool:
    targets = p.state_written_paths(u)
    if not targets:
        targets = stmt_reads_writes(p.flat[u])[1]
    for w in range(len(p.flat)):
        if w in (u, c):
            continue
        if not (stmt_reads_writes(p.flat[w])[1] & targets):
            continue
        if flow.executes_before(u, w) and flow.executes_before(w, c):
            return True
    return False


def call_first_possible(p: ProgramUnit, call_line: int, update_line: int) -> bool:
    """Some feasible path executes the statement at call_line before the
    one at update_line (positional order probe, independent of phi_D)."""
    flow = _Flow(p)
    line_to_index = {s.line: k for k, s in enumerate(p.flat)}
    if call_line not in line_to_index or update_line not in line_to_index:
        return False
    return flow.executes_before(line_to_index[call_line], line_to_index[update_line])


def _path_sensitive_pairs(p: ProgramUnit, phi_o: np.ndarray) -> set[tuple[int, int]]:
    risky = np.argwhere(phi_o == -1)
    if len(risky) == 0:
        return set()
    flow = _Flow(p)
    line_to_index = {s.line: k for k, s in enumerate(p.flat)}
    out = set()
    for ci, ui in risky:
        c = line_to_index[ci + 1]
        u = line_to_index[ui + 1]
        if not (flow.on_every_path(c) and flow.on_every_path(u)):
            out.add((int(ci) + 1, int(ui) + 1))
    return out
