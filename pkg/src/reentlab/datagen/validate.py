"""Structural validators plus analyzer round-trip label checks.

Together these replace compiler verification for the closed grammar: the
structural pass enforces every hard template rule (header, anchors,
uniqueness, adjacency, forbidden constructs), and the round-trip pass
re-derives the stored labels with the factor analyzer and compares.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from ..factors import DepKind, ProgramUnit, call_first_possible, compute_factors
from ..minisol.nodes import AnchorKind, RequireStmt
from ..minisol.parser import parse
from ..scoring import boolean_rule
from .templates import HEADER_LICENSE, HEADER_PRAGMA, ORDER_AVOID, LabeledSample


@dataclass
class ValidationFailure:
    code: str
    msg: str
    line: int = 0

    def to_json(self) -> dict:
        return {"code": self.code, "msg": self.msg, "line": self.line}


@dataclass
class ValidationResult:
    passed: bool
    failures: list[ValidationFailure] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"passed": self.passed, "failures": [f.to_json() for f in self.failures]}


_FORBIDDEN_IDENTS = {
    "assembly", "unchecked", "try", "catch", "receive", "fallback",
    "modifier", "struct", "while", "for", "emit", "selfdestruct",
    "nonReentrant", "delegatecall", "staticcall",
}
_FORBIDDEN_SUBSTRINGS = (".call{", ".send(", "payable(", "tx.origin")

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_STRING_RE = re.compile(r'"[^"]*"')


def validate(sample: LabeledSample) -> ValidationResult:
    failures: list[ValidationFailure] = []

    def fail(code: str, msg: str, line: int = 0) -> None:
        failures.append(ValidationFailure(code, msg, line))

    lines = sample.source.split("\n")
    if lines and lines[-1] == "":
        lines = lines[:-1]

    # fixed 3-line header
    if len(lines) < 4 or lines[0] != HEADER_LICENSE:
        fail("BadHeader", "line 1 must be the license comment", 1)
    if len(lines) < 4 or lines[1] != HEADER_PRAGMA:
        fail("BadHeader", "line 2 must be the pragma line", 2)
    if len(lines) < 4 or not lines[2].startswith('import "'):
        fail("BadHeader", "line 3 must be the import statement", 3)

    for i, raw in enumerate(lines):
        if raw.strip() == "":
            fail("EmptyLine", "empty lines are not allowed", i + 1)

    stripped_src = _STRING_RE.sub('""', sample.source)
    used_idents = set(_IDENT_RE.findall(stripped_src))
    for ident in sorted(used_idents & _FORBIDDEN_IDENTS):
        fail("ForbiddenConstruct", f"construct {ident!r} is not allowed")
    compact = stripped_src.replace(" ", "")
    for token in _FORBIDDEN_SUBSTRINGS:
        if token in compact:
            fail("ForbiddenConstruct", f"construct {token!r} is not allowed")

    result = parse(sample.source)
    if not result.ok:
        for d in result.errors:
            fail("ParseFailed", f"{d.code}: {d.msg}", d.line)
        return ValidationResult(False, failures)
    assert result.ast is not None

    p = ProgramUnit.from_parsed(result.unit, result.ast)
    fs = compute_factors(p)
    anchors = result.unit.anchors
    stmt_lines = {s.line for s in p.flat}
    require_lines = {s.line for s in p.flat if isinstance(s, RequireStmt)}

    for a_line, kind in anchors.items():
        if a_line + 1 not in stmt_lines:
            fail("DanglingAnchor", f"anchor {kind.name} binds no statement", a_line)

    by_kind: dict[AnchorKind, list[int]] = {}
    for a_line, kind in sorted(anchors.items()):
        by_kind.setdefault(kind, []).append(a_line)

    n_calls = int(fs.phi_E.sum())
    n_updates = int(fs.phi_S.sum())

    if sample.task == "E":
        _validate_call_task(sample, fs, by_kind, n_calls, fail)
    elif sample.task == "D":
        _validate_dep_task(sample, p, fs, by_kind, require_lines, n_calls, n_updates, fail)
    elif sample.task == "O":
        _validate_order_task(sample, p, fs, by_kind, n_calls, fail)
    elif sample.task == "FULL":
        _validate_probe_task(sample, p, fs, fail)
    else:
        fail("UnknownTask", f"task {sample.task!r} has no validator")

    return ValidationResult(not failures, failures)


def _anchor_targets(by_kind: dict, kind: AnchorKind) -> list[int]:
    return [a + 1 for a in by_kind.get(kind, [])]


def _validate_call_task(sample, fs, by_kind, n_calls, fail) -> None:
    e_targets = _anchor_targets(by_kind, AnchorKind.EXT_CALL)
    if len(e_targets) != 1:
        fail("AnchorCount", f"call task requires exactly one //e, found {len(e_targets)}")
    if by_kind.get(AnchorKind.STATE_UPD):
        fail("AnchorCount", "call task forbids //s anchors")
    if n_calls != 1:
        fail("CallCount", f"exactly one external call required, found {n_calls}")
    call_line = sample.labels["call_line"]
    if e_targets and e_targets[0] != call_line:
        fail("LabelMismatch", f"//e binds line {e_targets[0]}, label says {call_line}")
    analyzed = [fs.unit_id(i) for i in np.flatnonzero(fs.phi_E)]
    if analyzed != [call_line]:
        fail("LabelMismatch", f"analyzer call lines {analyzed} != labeled [{call_line}]")


def _validate_dep_task(sample, p, fs, by_kind, require_lines, n_calls, n_updates, fail) -> None:
    e_targets = _anchor_targets(by_kind, AnchorKind.EXT_CALL)
    s_targets = _anchor_targets(by_kind, AnchorKind.STATE_UPD)
    if len(e_targets) != 1 or len(s_targets) != 1:
        fail("AnchorCount", "dependency task requires exactly one //e and one //s")
        return
    if s_targets[0] in require_lines:
        fail("AnchorOnGuard", "//s must anchor the state write, not a guard", s_targets[0])
    if n_calls != 1:
        fail("CallCount", f"exactly one external call required, found {n_calls}")
    if n_updates != 1:
        fail("UpdateCount", f"exactly one state update required, found {n_updates}")

    call_line, update_line = sample.labels["call_line"], sample.labels["update_line"]
    if e_targets[0] != call_line or s_targets[0] != update_line:
        fail("LabelMismatch", "anchor targets disagree with labeled lines")

    lo, hi = sorted((call_line, update_line))
    dep_paths = _stmt_paths(p, call_line) | _stmt_paths(p, update_line)
    between = [s for s in p.flat if lo < s.line < hi]
    unrelated = [s for s in between if not (_stmt_paths(p, s.line) & dep_paths)]
    if hi - lo < 2 or not between:
        fail("NonAdjacency", "call and update must not be adjacent")
    elif not unrelated:
        fail("NonAdjacency", "no unrelated statement separates call and update")

    ci, ui = fs.index_of(call_line), fs.index_of(update_line)
    got_dep = int(fs.phi_D[ci, ui])
    if got_dep != sample.labels["dep"]:
        fail("LabelMismatch", f"analyzer dependency bit {got_dep} != label {sample.labels['dep']}")
    if int(fs.phi_D.sum()) != sample.labels["dep"]:
        fail("LabelMismatch", "stray dependency pairs beyond the designated one")
    if sample.labels["dep"]:
        got_kind = DepKind(fs.dep_kind[ci, ui]).name
        if got_kind != sample.labels["kind"]:
            fail("LabelMismatch", f"analyzer kind {got_kind} != label {sample.labels['kind']}")


def _validate_order_task(sample, p, fs, by_kind, n_calls, fail) -> None:
    seq = [(line, kind) for line, kind in sorted(p.unit.anchors.items())
           if kind in (AnchorKind.CHECK, AnchorKind.EFFECT, AnchorKind.INTERACTION)]
    kinds = [k for _, k in seq]
    expected = {
        "CEI_OK": [AnchorKind.CHECK, AnchorKind.EFFECT, AnchorKind.INTERACTION],
        "SIMPLE_INT_BEFORE_EFFECT": [AnchorKind.CHECK, AnchorKind.INTERACTION, AnchorKind.EFFECT],
        "POST_INTERACTION_EFFECTS": [AnchorKind.CHECK, AnchorKind.EFFECT, AnchorKind.INTERACTION, AnchorKind.EFFECT],
        "PATH_SENSITIVE_I_BEFORE_E": [AnchorKind.CHECK, AnchorKind.INTERACTION, AnchorKind.EFFECT],
    }[sample.labels["cei_type"]]
    if kinds != expected:
        fail("AnchorOrder", f"anchor sequence {[k.name for k in kinds]} violates the pattern")
    if n_calls != 1:
        fail("CallCount", f"exactly one external call required, found {n_calls}")
    if 'string constant FP = "' not in sample.source:
        fail("MissingFingerprint", "ordering samples carry the fingerprint constant")

    stripped = _STRING_RE.sub('""', sample.source)
    used = set(_IDENT_RE.findall(stripped))
    hit = used & ORDER_AVOID
    if hit:
        fail("AvoidedIdentifier", f"blocklisted identifiers used: {sorted(hit)}")

    # anchor agreement: analyzer call/update lines match anchored lines
    i_lines = sorted(_anchor_targets(by_kind, AnchorKind.INTERACTION))
    e_lines = sorted(_anchor_targets(by_kind, AnchorKind.EFFECT))
    analyzed_calls = [fs.unit_id(i) for i in np.flatnonzero(fs.phi_E)]
    analyzed_updates = [fs.unit_id(i) for i in np.flatnonzero(fs.phi_S)]
    if analyzed_calls != i_lines:
        fail("LabelMismatch", f"calls {analyzed_calls} != interaction anchors {i_lines}")
    if analyzed_updates != e_lines:
        fail("LabelMismatch", f"updates {analyzed_updates} != effect anchors {e_lines}")

    verdict = boolean_rule(fs)
    if verdict.vulnerable != bool(sample.labels["vulnerable"]):
        fail("LabelMismatch", f"verdict {verdict.vulnerable} != label {sample.labels['vulnerable']}")
    cei = sample.labels["cei_type"]
    if cei == "CEI_OK" and (fs.phi_O == -1).any():
        fail("LabelMismatch", "compliant ordering sample shows a risky pair")
    if cei == "POST_INTERACTION_EFFECTS":
        post_effect = e_lines[-1] if e_lines else 0
        if not i_lines or fs.phi_O[fs.index_of(i_lines[0]), fs.index_of(post_effect)] != -1:
            fail("LabelMismatch", "post-interaction write must be ordered risky")
    if cei == "PATH_SENSITIVE_I_BEFORE_E" and not fs.path_sensitive_pairs:
        fail("LabelMismatch", "path-sensitive sample lacks a path-conditional risky pair")


def _validate_probe_task(sample, p, fs, fail) -> None:
    bits = sample.labels["factor_bits"]
    probes = sample.labels["probes"]
    e_line, s_line, pair = probes["e_line"], probes["s_line"], probes["pair"]
    got_e = int(fs.phi_E[fs.index_of(e_line)])
    got_s = int(fs.phi_S[fs.index_of(s_line)])
    if got_e != bits[0]:
        fail("LabelMismatch", f"call probe at line {e_line}: analyzer {got_e} != bit {bits[0]}")
    if got_s != bits[1]:
        fail("LabelMismatch", f"update probe at line {s_line}: analyzer {got_s} != bit {bits[1]}")
    if pair is None:
        if bits[2] or bits[3]:
            fail("LabelMismatch", "pair bits set without a designated pair")
    else:
        c_line, u_line = pair
        got_d = int(fs.phi_D[fs.index_of(c_line), fs.index_of(u_line)])
        if got_d != bits[2]:
            fail("LabelMismatch", f"pair dependency {got_d} != bit {bits[2]}")
        got_o = int(call_first_possible(p, c_line, u_line))
        if got_o != bits[3]:
            fail("LabelMismatch", f"pair call-first order {got_o} != bit {bits[3]}")
    verdict = boolean_rule(fs)
    if verdict.vulnerable != bool(sample.labels["vulnerable"]):
        fail("LabelMismatch", f"verdict {verdict.vulnerable} != label {sample.labels['vulnerable']}")


def _stmt_paths(p: ProgramUnit, line: int) -> set[str]:
    from ..minisol.graphs import stmt_reads_writes

    for s in p.flat:
        if s.line == line:
            r, w = stmt_reads_writes(s)
            return r | w
    return set()
