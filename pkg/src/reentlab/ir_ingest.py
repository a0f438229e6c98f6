"""Ingest compiler-aware JSON records (bytecode call lists and tagged
IR-DFG blocks) and convert them to block-granularity factor sets.

This is the second input path: it bypasses source parsing entirely and
trusts the record's own dependency edges as ground-truth data flow.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .factors import DepKind, FactorSet, empty_factor_set

OPCODE_WHITELIST = {"HIGH_LEVEL_CALL", "CALL", "LOW_LEVEL_CALL", "DELEGATECALL", "STATICCALL"}
TAG_WHITELIST = {"EFFECT", "INTERACTION", "CHECK", "OTHER"}
OP_TYPES = {"STATE_WRITE", "CALL", "READ", "GUARD"}

LOW_LEVEL_OPCODES = {"CALL", "LOW_LEVEL_CALL", "DELEGATECALL", "STATICCALL"}


class MalformedJson(Exception):
    pass


class UnknownOpcode(Exception):
    pass


class CyclicDependsOn(Exception):
    pass


@dataclass
class BytecodeCallEntry:
    opcode: str
    to_source: str
    value: Optional[str] = None
    likely_src_fn: Optional[str] = None
    source_hint: Optional[str] = None


@dataclass
class IrOp:
    op_id: str
    op_type: str
    opcode: Optional[str] = None
    to_source: Optional[str] = None
    reads: list[str] = field(default_factory=list)
    writes: list[str] = field(default_factory=list)
    source_hint: Optional[str] = None


@dataclass
class IrBlock:
    block_id: int
    tag: str
    block_depends_on: list[int] = field(default_factory=list)
    statements: list[str] = field(default_factory=list)
    operations: list[IrOp] = field(default_factory=list)

    def has_call(self) -> bool:
        return self.tag == "INTERACTION" or any(op.op_type == "CALL" for op in self.operations)

    def has_state_write(self) -> bool:
        return self.tag == "EFFECT" or any(op.op_type == "STATE_WRITE" for op in self.operations)

    def read_paths(self) -> set[str]:
        out: set[str] = set()
        for op in self.operations:
            out |= set(op.reads)
            if op.to_source:
                out.add(op.to_source)
        return out

    def write_paths(self) -> set[str]:
        out: set[str] = set()
        for op in self.operations:
            out |= set(op.writes)
        return out

    def call_kind(self) -> str:
        for op in self.operations:
            if op.op_type == "CALL":
                if op.opcode in LOW_LEVEL_OPCODES:
                    return "low_level"
                return "high_level"
        return "high_level"


@dataclass
class IrRecord:
    record_id: Optional[int] = None
    sol_name: Optional[str] = None
    sol_path: Optional[str] = None
    bytecode_calls: list[BytecodeCallEntry] = field(default_factory=list)
    blocks: list[IrBlock] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


_CALL_FIELDS = {"opcode", "to_source", "value", "likely_src_fn", "source_hint"}
_OP_FIELDS = {"id", "type", "opcode", "to_source", "reads", "writes", "source_hint"}
_BLOCK_FIELDS = {"block_id", "tag", "block_depends_on", "statements", "operations"}
_RECORD_FIELDS = {"id", "sol_name", "sol_path", "bytecode_calls", "blocks", "IR-DFG"}


def parse_ir_record(json_text: str, strict: bool = False) -> IrRecord:
    try:
        obj = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(str(exc)) from exc
    if not isinstance(obj, dict):
        raise MalformedJson("record must be a JSON object")
    return record_from_obj(obj, strict=strict)


def parse_ir_stream(text: str, strict: bool = False) -> list[IrRecord]:
    """A single JSON record or a JSONL stream of records."""
    stripped = text.strip()
    if not stripped:
        return []
    try:
        obj = json.loads(stripped)
        if isinstance(obj, list):
            return [record_from_obj(o, strict=strict) for o in obj]
        return [record_from_obj(obj, strict=strict)]
    except json.JSONDecodeError:
        pass
    records = []
    for line in stripped.split("\n"):
        line = line.strip()
        if line:
            records.append(parse_ir_record(line, strict=strict))
    return records


def record_from_obj(obj: dict, strict: bool = False) -> IrRecord:
    warnings: list[str] = []

    def note_unknown(fields: dict, known: set[str], where: str) -> None:
        for key in fields:
            if key not in known:
                warnings.append(f"unknown field {key!r} in {where} ignored")

    note_unknown(obj, _RECORD_FIELDS, "record")
    record = IrRecord(
        record_id=obj.get("id"),
        sol_name=obj.get("sol_name"),
        sol_path=obj.get("sol_path"),
    )

    for entry in obj.get("bytecode_calls", []) or []:
        note_unknown(entry, _CALL_FIELDS, "bytecode_calls entry")
        opcode = entry.get("opcode", "")
        if opcode not in OPCODE_WHITELIST:
            if strict:
                raise UnknownOpcode(f"opcode {opcode!r} is not whitelisted")
            warnings.append(f"unknown opcode {opcode!r} accepted leniently")
        to_source = entry.get("to_source", "")
        if not to_source:
            raise MalformedJson("bytecode call entry requires a non-empty to_source")
        record.bytecode_calls.append(
            BytecodeCallEntry(
                opcode=opcode,
                to_source=to_source,
                value=entry.get("value"),
                likely_src_fn=entry.get("likely_src_fn"),
                source_hint=entry.get("source_hint"),
            )
        )

    blocks_obj = obj.get("blocks")
    if blocks_obj is None and isinstance(obj.get("IR-DFG"), dict):
        note_unknown(obj["IR-DFG"], {"blocks"}, "IR-DFG")
        blocks_obj = obj["IR-DFG"].get("blocks")
    for raw in blocks_obj or []:
        note_unknown(raw, _BLOCK_FIELDS, "block")
        tag = raw.get("tag", "OTHER")
        if tag not in TAG_WHITELIST:
            warnings.append(f"unknown tag {tag!r} mapped to OTHER")
            tag = "OTHER"
        ops = []
        for raw_op in raw.get("operations", []) or []:
            note_unknown(raw_op, _OP_FIELDS, "operation")
            op_type = raw_op.get("type", "")
            if op_type not in OP_TYPES:
                if strict:
                    raise UnknownOpcode(f"operation type {op_type!r} is not whitelisted")
                warnings.append(f"unknown operation type {op_type!r} accepted leniently")
            opcode = raw_op.get("opcode")
            if op_type == "CALL" and not opcode:
                raise MalformedJson("CALL operation requires an opcode")
            writes = list(raw_op.get("writes", []) or [])
            if op_type == "STATE_WRITE" and not writes:
                raise MalformedJson("STATE_WRITE operation requires non-empty writes")
            if opcode is not None and opcode not in OPCODE_WHITELIST:
                if strict:
                    raise UnknownOpcode(f"opcode {opcode!r} is not whitelisted")
                warnings.append(f"unknown opcode {opcode!r} accepted leniently")
            ops.append(
                IrOp(
                    op_id=str(raw_op.get("id", "")),
                    op_type=op_type,
                    opcode=opcode,
                    to_source=raw_op.get("to_source"),
                    reads=list(raw_op.get("reads", []) or []),
                    writes=writes,
                    source_hint=raw_op.get("source_hint"),
                )
            )
        record.blocks.append(
            IrBlock(
                block_id=int(raw.get("block_id", len(record.blocks))),
                tag=tag,
                block_depends_on=list(raw.get("block_depends_on", []) or []),
                statements=list(raw.get("statements", []) or []),
                operations=ops,
            )
        )

    known_ids = {b.block_id for b in record.blocks}
    for b in record.blocks:
        for dep in b.block_depends_on:
            if dep not in known_ids:
                raise MalformedJson(f"block {b.block_id} depends on unknown block {dep}")

    record.warnings = warnings
    return record


# ---------------------------------------------------------------------------
# Factor conversion at block granularity.
# ---------------------------------------------------------------------------


def record_to_factors(record: IrRecord, opcode_weights: Optional[dict[str, float]] = None) -> FactorSet:
    if record.blocks:
        return _blocks_to_factors(record.blocks, opcode_weights)
    return _calls_to_factors(record.bytecode_calls, opcode_weights)


def _included(opcode: Optional[str], opcode_weights: Optional[dict[str, float]]) -> bool:
    if opcode_weights is None or opcode is None:
        return True
    return opcode_weights.get(opcode, 1.0) > 0


def _calls_to_factors(calls: list[BytecodeCallEntry], opcode_weights) -> FactorSet:
    fs = empty_factor_set(len(calls), "block")
    for i, entry in enumerate(calls):
        if _included(entry.opcode, opcode_weights):
            fs.phi_E[i] = 1
            fs.call_kinds[i] = "low_level" if entry.opcode in LOW_LEVEL_OPCODES else "high_level"
    return fs


def _blocks_to_factors(blocks: list[IrBlock], opcode_weights) -> FactorSet:
    order = sorted(range(len(blocks)), key=lambda i: blocks[i].block_id)
    rank = {blocks[i].block_id: r for r, i in enumerate(order)}
    seq = [blocks[i] for i in order]
    n = len(seq)
    fs = empty_factor_set(n, "block")

    direct: dict[int, set[int]] = {r: set() for r in range(n)}
    for b in seq:
        for dep in b.block_depends_on:
            direct[rank[b.block_id]].add(rank[dep])
    _check_acyclic(direct)
    closure = _transitive_closure(direct)
    any_edges = any(direct[r] for r in direct)

    for r, b in enumerate(seq):
        call_opcode = next((op.opcode for op in b.operations if op.op_type == "CALL"), None)
        if b.has_call() and _included(call_opcode, opcode_weights):
            fs.phi_E[r] = 1
            fs.call_kinds[r] = b.call_kind()
        if b.has_state_write():
            fs.phi_S[r] = 1

    topo_pos = _topological_positions(direct)

    for c in range(n):
        if not fs.phi_E[c]:
            continue
        for u in range(n):
            if c == u or not fs.phi_S[u]:
                continue
            kind = DepKind.NONE
            why = ""
            if u in direct[c] or c in direct[u]:
                kind, why = DepKind.DIRECT, "DIRECT: linked by block_depends_on"
            elif u in closure[c] or c in closure[u]:
                kind, why = DepKind.INDIRECT, "INDIRECT: transitive block_depends_on"
            elif not any_edges:
                shared = seq[c].read_paths() & (seq[u].read_paths() | seq[u].write_paths())
                if shared:
                    kind = DepKind.DIRECT
                    why = f"DIRECT: shared path '{sorted(shared)[0]}'"
            if kind == DepKind.NONE:
                continue
            fs.phi_D[c, u] = 1
            fs.dep_kind[c, u] = kind
            fs.witnesses.append((c, u, why))
            fs.phi_O[c, u] = 1 if topo_pos[u] < topo_pos[c] else -1
    return fs


def _check_acyclic(direct: dict[int, set[int]]) -> None:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {r: WHITE for r in direct}

    def visit(r: int) -> None:
        color[r] = GRAY
        for d in direct[r]:
            if color[d] == GRAY:
                raise CyclicDependsOn(f"block_depends_on cycle through unit {r}")
            if color[d] == WHITE:
                visit(d)
        color[r] = BLACK

    for r in direct:
        if color[r] == WHITE:
            visit(r)


def _transitive_closure(direct: dict[int, set[int]]) -> dict[int, set[int]]:
    closure: dict[int, set[int]] = {}

    def visit(r: int) -> set[int]:
        if r in closure:
            return closure[r]
        closure[r] = set()
        acc: set[int] = set()
        for d in direct[r]:
            acc |= {d} | visit(d)
        closure[r] = acc
        return acc

    for r in direct:
        visit(r)
    return closure


def _topological_positions(direct: dict[int, set[int]]) -> dict[int, int]:
    """Dependency-respecting order; producers first, ties by unit index."""
    n = len(direct)
    remaining = set(direct)
    placed: dict[int, int] = {}
    pos = 0
    while remaining:
        ready = sorted(r for r in remaining if all(d in placed for d in direct[r]))
        for r in ready:
            placed[r] = pos
            pos += 1
            remaining.discard(r)
    return placed
