"""Rule-driven contract templates for the three factor tasks plus the
probe-bit family used for corpus stratification.

Generation is deterministic in (rule, spec, variant_seed): the seed is
decoded mixed-radix into the structural diversity axes, so distinct seeds
below the axis-product size differ in at least one structural axis, and a
running constant axis keeps larger seed ranges structurally distinct too.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..minisol.nodes import AnchorKind
from .interfaces import CATALOG, InterfaceSpec, address_param_name
from .rules import CeiPattern, DepRule, IncompatibleRule, InvalidCombination

HEADER_LICENSE = "// SPDX-License-Identifier: MIT"
HEADER_PRAGMA = "pragma solidity ^0.8.20;"

# Stage-style identifier pools for the call and dependency tasks.
TOKEN_LIKE = ("token", "asset", "base", "lpToken", "collateral", "debt")
RECEIVER_LIKE = ("to", "recipient", "vaultAddr", "sink")
OPERATOR_LIKE = ("owner", "spender", "operator", "user")
AMOUNT_LIKE = ("amount", "value", "shares", "liquidity")
MISC_LIKE = ("idx", "key", "tag", "flag", "nonce", "salt")

# The ordering task avoids a fixed identifier blocklist, so it draws from
# separate pools.
ORDER_AVOID = {
    "assets", "holdings", "balances", "bal", "owner", "owners",
    "allowance", "allowances", "approvals", "ok", "enabled", "token",
}
O_STATE = ("credits", "deposits", "escrowOf", "lockedOf", "stakeOf", "vaultShares")
O_FLAGMAP = ("marks", "signals", "receipts")
O_IFACE = ("prime", "anchorToken", "lpToken", "collateral", "debt")
O_RECEIVER = ("payee", "recipient", "sink", "vaultAddr")
O_AMOUNT = ("qty", "shares", "liquidity", "portion")
O_KEEPER = ("keeper", "custodian", "registrar")
O_CAPTURE = ("moved", "granted", "fetchedQty", "holder")

CONTRACT_NAMES = ("Vault", "Ledger", "Escrow", "Treasury", "Router", "Bridge", "Custody", "Splitter")


@dataclass
class LabeledSample:
    source: str
    task: str  # E | D | O | FULL
    labels: dict
    provenance: dict

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "task": self.task,
            "labels": self.labels,
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LabeledSample":
        return cls(obj["source"], obj["task"], obj["labels"], obj["provenance"])


def decode_axes(seed: int, axes: list[tuple[str, list]]) -> dict:
    out: dict = {}
    s = int(seed)
    for name, options in axes:
        out[name] = options[s % len(options)]
        s //= len(options)
    out["const_k"] = 1 + (int(seed) % 9973)
    return out


def _rot(pool: tuple[str, ...], k: int) -> str:
    return pool[k % len(pool)]


class _Builder:
    """Assembles a contract with the fixed 3-line header and tracks the
    1-based line number of every emitted body statement."""

    def __init__(self, name: str, import_line: str):
        self.name = name
        self.import_line = import_line
        self.state_lines: list[str] = []
        self.body: list[tuple[str, int]] = []  # (text, indent)
        self.params: list[tuple[str, str]] = []
        self._param_names: set[str] = set()

    def param(self, p_type: str, p_name: str) -> str:
        if p_name not in self._param_names:
            self._param_names.add(p_name)
            self.params.append((p_type, p_name))
        return p_name

    def state(self, decl: str) -> None:
        if decl not in self.state_lines:
            self.state_lines.append(decl)

    def add(self, text: str, indent: int = 8) -> int:
        self.body.append((text, indent))
        return self.body_line(len(self.body) - 1)

    def anchor(self, kind: AnchorKind, indent: int = 8) -> int:
        token = "//" + (kind.value if kind.value in ("e", "s") else kind.value)
        return self.add(token, indent)

    def body_line(self, body_index: int) -> int:
        return 5 + len(self.state_lines) + body_index + 1

    def next_line(self) -> int:
        return self.body_line(len(self.body))

    def render(self, fn_name: str = "run") -> str:
        params = ", ".join(f"{t} {n}" for t, n in self.params)
        lines = [
            HEADER_LICENSE,
            HEADER_PRAGMA,
            self.import_line,
            f"contract {self.name} {{",
            *[f"    {s}" for s in self.state_lines],
            f"    function {fn_name}({params}) external {{",
            *[" " * indent + text for text, indent in self.body],
            "    }",
            "}",
        ]
        return "\n".join(lines) + "\n"


def _arg_names(spec: InterfaceSpec, builder: _Builder, rot: int, pools=None) -> list[str]:
    """Declare typed parameters for every signature argument and return the
    expression strings in call order."""
    recv, oper, amount, misc = pools or (RECEIVER_LIKE, OPERATOR_LIKE, AMOUNT_LIKE, MISC_LIKE)
    addr_seen = 0
    uint_seen = 0
    out = []
    for t in spec.arg_types:
        if t == "address":
            pool = recv if addr_seen == 0 else oper
            name = builder.param("address", _rot(pool, rot + addr_seen))
            addr_seen += 1
            out.append(name)
        elif t == "uint256":
            pool = amount if uint_seen == 0 else misc
            name = builder.param("uint256", _rot(pool, rot + uint_seen))
            uint_seen += 1
            out.append(name)
        elif t == "bytes":
            out.append('""')
        else:
            raise InvalidCombination(f"argument type {t!r} is outside the template set")
    return out


def _call_target(spec: InterfaceSpec, builder: _Builder, form: str, rot: int,
                 iface_pool=TOKEN_LIKE) -> tuple[str, Optional[str]]:
    """Returns (target_expr, pre_line) where pre_line is an optional local
    cast statement that must be emitted before the call."""
    iface = spec.standard_name
    if form == "iface_state":
        var = _rot(iface_pool, rot)
        builder.state(f"{iface} public {var};")
        return var, None
    if form == "param_cast":
        apn = builder.param("address", address_param_name(spec))
        return f"{iface}({apn})", None
    if form == "local_cast":
        apn = builder.param("address", address_param_name(spec))
        local = _rot(("held", "gateway", "hub", "bound"), rot)
        return local, f"{iface} {local} = {iface}({apn});"
    if form == "mapping_elem":
        builder.state(f"mapping(uint256 => {iface}) public pools;")
        idx = builder.param("uint256", "idx")
        return f"pools[{idx}]", None
    raise InvalidCombination(f"unknown target form {form!r}")


def _apply_param_source(args: list[str], spec: InterfaceSpec, source: str, k: int) -> list[str]:
    """Vary the first uint256 argument's source expression."""
    if source == "direct":
        return args
    out = list(args)
    for i, t in enumerate(spec.arg_types):
        if t == "uint256":
            if source == "scaled":
                out[i] = f"{args[i]} * 2"
            elif source == "modulo":
                out[i] = f"{args[i]} % {k}"
            elif source == "offset":
                out[i] = f"{args[i]} + 1"
            break
    return out


CAPTURE_NAMES = ("got", "outcome", "fetched", "granted")
EXT_TARGET_FORMS = ["iface_state", "local_cast", "param_cast", "mapping_elem"]
EXT_PARAM_SOURCES = ["direct", "scaled", "modulo", "offset"]


def _valid_contexts(spec: InterfaceSpec) -> list[str]:
    ctx = ["bare", "if_block"]
    if spec.return_type is not None:
        ctx.insert(1, "capture")
        if spec.return_type in ("bool", "uint256", "address"):
            ctx.append("require_wrap")
    return ctx


def gen_external_call(spec: InterfaceSpec, variant_seed: int,
                      context: Optional[str] = None) -> LabeledSample:
    """One labeled single-call contract; deterministic in (spec, seed)."""
    valid_ctx = _valid_contexts(spec)
    if context is not None:
        if context not in valid_ctx:
            raise InvalidCombination(
                f"context {context!r} is invalid for {spec.function_signature} "
                f"(returns {spec.return_type})"
            )
        valid_ctx = [context]
    axes = decode_axes(variant_seed, [
        ("target_form", EXT_TARGET_FORMS),
        ("context", valid_ctx),
        ("param_source", EXT_PARAM_SOURCES),
        ("naming", [0, 1, 2, 3]),
    ])
    rot = axes["naming"]
    k = axes["const_k"]

    b = _Builder(CONTRACT_NAMES[variant_seed % len(CONTRACT_NAMES)], spec.import_line)
    nonce = b.param("uint256", _rot(MISC_LIKE, rot + 4))
    target, pre_line = _call_target(spec, b, axes["target_form"], rot)
    args = _apply_param_source(_arg_names(spec, b, rot), spec, axes["param_source"], k)
    call = f"{target}.{spec.method}({', '.join(args)})"

    b.add(f"uint256 tick = {nonce} + {k};")
    if pre_line:
        b.add(pre_line)

    ctx = axes["context"]
    if ctx == "if_block":
        gate_flag = b.param("bool", "fastLane")
        b.add(f"if ({gate_flag}) {{")
        b.anchor(AnchorKind.EXT_CALL, indent=12)
        call_line = b.add(f"{call};", indent=12)
        b.add("}", indent=8)
    else:
        b.anchor(AnchorKind.EXT_CALL)
        if ctx == "bare":
            call_line = b.add(f"{call};")
        elif ctx == "capture":
            cap = _rot(CAPTURE_NAMES, rot)
            call_line = b.add(f"{spec.return_type} {cap} = {call};")
        elif ctx == "require_wrap":
            if spec.return_type == "bool":
                call_line = b.add(f"require({call});")
            elif spec.return_type == "uint256":
                call_line = b.add(f"require({call} > 0);")
            else:
                other = b.param("address", _rot(OPERATOR_LIKE, rot + 1))
                call_line = b.add(f"require({call} != {other});")
        else:
            raise InvalidCombination(f"unknown context {ctx!r}")

    rng = np.random.default_rng(variant_seed)
    return LabeledSample(
        source=b.render(),
        task="E",
        labels={"call_line": call_line},
        provenance={
            "template_id": f"ext_call/{spec.standard_name}.{spec.method}",
            "seed": int(variant_seed),
            "diversity_axes": {n: axes[n] for n in ("target_form", "context", "param_source", "naming", "const_k")},
            "with_cfg_context": bool(rng.random() < 0.7),
        },
    )


# ---------------------------------------------------------------------------
# Dependency task.
# ---------------------------------------------------------------------------

_UINT_TRANSFORMS = ["{v} * 2", "{v} + 7", "{v} % 97"]


def _check_dep_compat(rule: DepRule, spec: InterfaceSpec) -> None:
    if rule.direction == "E_TO_S" and rule.dep_id in ("A_DIRECT", "B_INDIRECT", "C_CTRL"):
        if spec.return_type is None:
            raise IncompatibleRule(
                "void return forbids return-value dependencies; only Z_NONE or S_TO_E fit"
            )
    if rule.dep_id == "B_INDIRECT":
        if rule.direction == "E_TO_S" and spec.return_type == "address":
            raise IncompatibleRule("address returns admit no non-identity transformation")
        if rule.direction == "S_TO_E" and "uint256" not in spec.arg_types:
            raise IncompatibleRule("indirect update-to-call flow needs a uint256 argument slot")


def _update_templates(ret: str, b: _Builder, rot: int) -> tuple[str, str]:
    """(state declaration registered, write template with {v} placeholder)."""
    if ret == "uint256":
        holder = b.param("address", _rot(OPERATOR_LIKE, rot))
        b.state("mapping(address => uint256) public ledger;")
        return f"ledger[{holder}]", f"ledger[{holder}] = {{v}};"
    if ret == "bool":
        holder = b.param("address", _rot(RECEIVER_LIKE, rot))
        b.state("mapping(address => bool) public marks;")
        return f"marks[{holder}]", f"marks[{holder}] = {{v}};"
    if ret == "address":
        b.state("address public keeper;")
        return "keeper", "keeper = {v};"
    raise InvalidCombination(f"no state template for return type {ret!r}")


def gen_dependency(rule: DepRule, spec: InterfaceSpec, seed: int) -> LabeledSample:
    """A contract with exactly one anchored call and one anchored update
    realizing the dependency rule; negatives break the flow but keep shape."""
    _check_dep_compat(rule, spec)
    axes = decode_axes(seed, [
        ("naming", [0, 1, 2, 3]),
        ("guard", [False, True]),
        ("transform", [0, 1, 2]),
        ("variant", [0, 1]),
    ])
    rot = axes["naming"]
    k = axes["const_k"]
    ret = spec.return_type

    b = _Builder(CONTRACT_NAMES[(seed + 3) % len(CONTRACT_NAMES)], spec.import_line)
    nonce = b.param("uint256", _rot(MISC_LIKE, rot + 4))
    target, pre_line = _call_target(spec, b, ["iface_state", "param_cast"][axes["variant"]], rot)
    args = _arg_names(spec, b, rot)
    filler = f"uint256 tick = {nonce} + {k};"

    call_line = -1
    update_line = -1

    def emit_guard() -> None:
        if axes["guard"]:
            uint_params = [n for t, n in b.params if t == "uint256"]
            b.add(f"require({uint_params[0]} > 0);")

    def emit_call(expr: str) -> int:
        nonlocal call_line
        if pre_line:
            b.add(pre_line)
        b.anchor(AnchorKind.EXT_CALL)
        call_line = b.add(expr)
        return call_line

    def emit_update(write_stmt: str) -> int:
        nonlocal update_line
        b.anchor(AnchorKind.STATE_UPD)
        update_line = b.add(write_stmt)
        return update_line

    if rule.dep_id == "A_DIRECT" and rule.direction == "E_TO_S":
        cap = _rot(CAPTURE_NAMES, rot)
        _, write_tpl = _update_templates(ret, b, rot)
        emit_guard()
        emit_call(f"{ret} {cap} = {target}.{spec.method}({', '.join(args)});")
        b.add(filler)
        emit_update(write_tpl.format(v=cap))

    elif rule.dep_id == "A_DIRECT" and rule.direction == "S_TO_E":
        if "uint256" in spec.arg_types:
            path, write_tpl = _update_templates("uint256", b, rot)
            fed = list(args)
            fed[spec.arg_types.index("uint256")] = path
            amount = b.param("uint256", _rot(AMOUNT_LIKE, rot))
            emit_guard()
            emit_update(write_tpl.format(v=amount))
            b.add(filler)
            emit_call(f"{target}.{spec.method}({', '.join(fed)});")
        else:
            path, write_tpl = _update_templates("address", b, rot)
            fed = list(args)
            fed[spec.arg_types.index("address")] = path
            holder = b.param("address", _rot(OPERATOR_LIKE, rot))
            emit_guard()
            emit_update(write_tpl.format(v=holder))
            b.add(filler)
            emit_call(f"{target}.{spec.method}({', '.join(fed)});")

    elif rule.dep_id == "B_INDIRECT" and rule.direction == "E_TO_S":
        cap = _rot(CAPTURE_NAMES, rot)
        _, write_tpl = _update_templates("uint256" if ret == "uint256" else "bool", b, rot)
        emit_guard()
        emit_call(f"{ret} {cap} = {target}.{spec.method}({', '.join(args)});")
        b.add(filler)
        if ret == "uint256":
            mid = "scaled"
            b.add(f"uint256 {mid} = {_UINT_TRANSFORMS[axes['transform']].format(v=cap)};")
        else:
            mid = "flipped"
            b.add(f"bool {mid} = !{cap};")
        emit_update(write_tpl.format(v=mid))

    elif rule.dep_id == "B_INDIRECT" and rule.direction == "S_TO_E":
        path, write_tpl = _update_templates("uint256", b, rot)
        fed = list(args)
        amount = b.param("uint256", _rot(AMOUNT_LIKE, rot))
        emit_guard()
        emit_update(write_tpl.format(v=amount))
        b.add(filler)
        mid = "fee"
        b.add(f"uint256 {mid} = {path} / 2;")
        fed[spec.arg_types.index("uint256")] = mid
        emit_call(f"{target}.{spec.method}({', '.join(fed)});")

    elif rule.dep_id == "C_CTRL":
        cap = _rot(CAPTURE_NAMES, rot)
        _, write_tpl = _update_templates("uint256", b, rot)
        # the written value must stay independent of the call's data
        held = b.param("uint256", "withheld")
        cond = {"bool": cap, "uint256": f"{cap} > 0", "address": f"{cap} != {args[0]}"}[ret]
        neg = {"bool": f"!{cap}", "uint256": f"{cap} == 0", "address": f"{cap} == {args[0]}"}[ret]
        emit_guard()
        emit_call(f"{ret} {cap} = {target}.{spec.method}({', '.join(args)});")
        b.add(filler)
        if axes["variant"] == 0:
            b.add(f"if ({cond}) {{")
            b.anchor(AnchorKind.STATE_UPD, indent=12)
            update_line = b.add(write_tpl.format(v=held), indent=12)
            b.add("}", indent=8)
        else:
            b.add(f"if ({neg}) {{")
            b.add("return;", indent=12)
            b.add("}", indent=8)
            emit_update(write_tpl.format(v=held))

    elif rule.dep_id == "Z_NONE":
        b.state("uint256 public counter;")
        stride = b.param("uint256", "stride")
        unrelated = f"counter = counter + {stride};"
        emit_guard()
        if rule.direction == "E_TO_S":
            emit_call(f"{target}.{spec.method}({', '.join(args)});")
            b.add(filler)
            emit_update(unrelated)
        else:
            emit_update(unrelated)
            b.add(filler)
            emit_call(f"{target}.{spec.method}({', '.join(args)});")
    else:
        raise IncompatibleRule(f"unhandled rule {rule.dep_id}/{rule.direction}")

    kind = {"A_DIRECT": "DIRECT", "B_INDIRECT": "INDIRECT", "C_CTRL": "CTRL", "Z_NONE": "NONE"}[rule.dep_id]
    return LabeledSample(
        source=b.render(),
        task="D",
        labels={
            "rule": rule.dep_id,
            "direction": rule.direction,
            "dep": int(rule.dep_id != "Z_NONE"),
            "kind": kind,
            "call_line": call_line,
            "update_line": update_line,
        },
        provenance={
            "template_id": f"dependency/{rule.dep_id}/{rule.direction}/{spec.standard_name}.{spec.method}",
            "seed": int(seed),
            "diversity_axes": {n: axes[n] for n in ("naming", "guard", "transform", "variant", "const_k")},
        },
    )


# ---------------------------------------------------------------------------
# Ordering (CEI) task.
# ---------------------------------------------------------------------------


def _order_pools(rot: int) -> dict:
    names = {
        "state": _rot(O_STATE, rot),
        "flags": _rot(O_FLAGMAP, rot),
        "iface": _rot(O_IFACE, rot),
        "recv": _rot(O_RECEIVER, rot),
        "amount": _rot(O_AMOUNT, rot),
        "keeper": _rot(O_KEEPER, rot),
        "cap": _rot(O_CAPTURE, rot),
        "misc": _rot(("nonce", "salt", "key"), rot),
    }
    assert not (set(names.values()) & ORDER_AVOID)
    return names


def _order_call(spec: InterfaceSpec, b: _Builder, names: dict, form: str,
                fed_value: Optional[str] = None, fed_addr: Optional[str] = None) -> str:
    """Call expression for the ordering task; `fed_value` replaces the first
    uint256 slot and `fed_addr` the first address slot when given."""
    pools = ((names["recv"],), ("counterparty",), (names["amount"],), (names["misc"],))
    args = _arg_names(spec, b, 0, pools=pools)
    if fed_value is not None:
        args[spec.arg_types.index("uint256")] = fed_value
    if fed_addr is not None:
        args[spec.arg_types.index("address")] = fed_addr
    if form == "formA":
        var = names["iface"]
        b.state(f"{spec.standard_name} public {var};")
        return f"{var}.{spec.method}({', '.join(args)})"
    apn = b.param("address", "gatewayAddr")
    return f"{spec.standard_name}({apn}).{spec.method}({', '.join(args)})"


def _valid_order_forms(pattern_id: str, spec: InterfaceSpec) -> list[str]:
    if spec.method in ORDER_AVOID:
        return []  # the method name itself is on the identifier blocklist
    forms = []
    has_uint = "uint256" in spec.arg_types
    nonvoid = spec.return_type is not None
    if pattern_id == "CEI_OK":
        if has_uint:
            forms += ["drain", "indirect_mid"]
        if "address" in spec.arg_types:
            forms.append("addr_feed")
    elif pattern_id in ("SIMPLE_INT_BEFORE_EFFECT", "PATH_SENSITIVE_I_BEFORE_E"):
        if has_uint:
            forms.append("drain_zero")
        if nonvoid:
            forms.append("capture_direct")
        if spec.return_type == "uint256":
            forms.append("capture_indirect")
    elif pattern_id == "POST_INTERACTION_EFFECTS":
        if has_uint:
            forms.append("drain_both")
            if nonvoid:
                forms.append("drain_capture")
    return forms


def gen_ordering(pattern: CeiPattern, spec: InterfaceSpec, seed: int) -> LabeledSample:
    forms = _valid_order_forms(pattern.type_id, spec)
    if not forms:
        raise IncompatibleRule(
            f"{spec.function_signature} offers no dependency form for {pattern.type_id}"
        )
    axes = decode_axes(seed, [
        ("naming", [0, 1, 2, 3]),
        ("iface_form", ["formA", "formB"]),
        ("dep_form", forms),
        ("branch_kind", ["if_else", "early_return"]),
    ])
    rot = axes["naming"]
    names = _order_pools(rot)
    dep_form = axes["dep_form"]
    k = axes["const_k"]

    b = _Builder(CONTRACT_NAMES[(seed + 5) % len(CONTRACT_NAMES)], spec.import_line)
    fp = "|".join([
        axes["iface_form"], "require_ge", "ledger_write", dep_form, f"rot{rot}",
        "mid" if "indirect" in dep_form else "none", f"k{k}",
    ])
    b.state(f'string constant FP = "{fp}";')
    state = names["state"]
    b.state(f"mapping(address => uint256) public {state};")
    recv = b.param("address", names["recv"])
    qty = b.param("uint256", names["amount"])
    spath = f"{state}[{recv}]"
    anchor_lines: dict[str, list[int]] = {"CHECK": [], "EFFECT": [], "INTERACTION": []}

    def check(indent: int = 8) -> None:
        b.anchor(AnchorKind.CHECK, indent)
        anchor_lines["CHECK"].append(b.add(f"require({spath} >= {qty});", indent))

    def effect(stmt: str, indent: int = 8) -> None:
        b.anchor(AnchorKind.EFFECT, indent)
        anchor_lines["EFFECT"].append(b.add(stmt, indent))

    def interaction(call_expr: str, indent: int = 8) -> None:
        b.anchor(AnchorKind.INTERACTION, indent)
        anchor_lines["INTERACTION"].append(b.add(f"{call_expr};", indent))

    cap = names["cap"]
    ret = spec.return_type

    def capture_effect_stmt() -> str:
        if ret == "bool":
            b.state(f"mapping(address => bool) public {names['flags']};")
            return f"{names['flags']}[{recv}] = {cap};"
        if ret == "uint256":
            return f"{spath} = {cap};"
        b.state(f"address public {names['keeper']};")
        return f"{names['keeper']} = {cap};"

    if pattern.type_id == "CEI_OK":
        check()
        if dep_form == "drain":
            effect(f"{spath} = {spath} - {qty};")
            interaction(_order_call(spec, b, names, axes["iface_form"], fed_value=spath))
        elif dep_form == "indirect_mid":
            effect(f"{spath} = {spath} - {qty};")
            b.add(f"uint256 remnant = {spath} / 2;")
            interaction(_order_call(spec, b, names, axes["iface_form"], fed_value="remnant"))
        else:  # addr_feed
            b.state(f"address public {names['keeper']};")
            effect(f"{names['keeper']} = {recv};")
            interaction(_order_call(spec, b, names, axes["iface_form"], fed_addr=names["keeper"]))

    elif pattern.type_id == "SIMPLE_INT_BEFORE_EFFECT":
        check()
        if dep_form == "drain_zero":
            interaction(_order_call(spec, b, names, axes["iface_form"], fed_value=spath))
            effect(f"{spath} = 0;")
        elif dep_form == "capture_direct":
            interaction(f"{ret} {cap} = " + _order_call(spec, b, names, axes["iface_form"]))
            effect(capture_effect_stmt())
        else:  # capture_indirect
            interaction(f"uint256 {cap} = " + _order_call(spec, b, names, axes["iface_form"]))
            b.add(f"uint256 shaved = {cap} % {k};")
            effect(f"{spath} = shaved;")

    elif pattern.type_id == "POST_INTERACTION_EFFECTS":
        check()
        effect(f"{spath} = {spath} - {qty};")
        if dep_form == "drain_both":
            interaction(_order_call(spec, b, names, axes["iface_form"], fed_value=spath))
            effect(f"{spath} = {spath} + {qty};")
        else:  # drain_capture
            interaction(f"{ret} {cap} = " + _order_call(spec, b, names, axes["iface_form"], fed_value=spath))
            effect(capture_effect_stmt())

    elif pattern.type_id == "PATH_SENSITIVE_I_BEFORE_E":
        gate_flag = b.param("bool", "expressLane")
        inner = dep_form if dep_form in ("drain_zero", "capture_direct") else "drain_zero"
        if axes["branch_kind"] == "if_else":
            b.add(f"if ({gate_flag}) {{")
            check(indent=12)
            if inner == "drain_zero":
                interaction(_order_call(spec, b, names, axes["iface_form"], fed_value=spath), indent=12)
                effect(f"{spath} = 0;", indent=12)
            else:
                interaction(f"{ret} {cap} = " + _order_call(spec, b, names, axes["iface_form"]), indent=12)
                effect(capture_effect_stmt(), indent=12)
            b.add("} else {", indent=8)
            b.add(f"uint256 rest = {qty} + {k};", indent=12)
            b.add("}", indent=8)
        else:
            check()
            b.add(f"if ({gate_flag}) {{")
            b.add("return;", indent=12)
            b.add("}", indent=8)
            if inner == "drain_zero":
                interaction(_order_call(spec, b, names, axes["iface_form"], fed_value=spath))
                effect(f"{spath} = 0;")
            else:
                interaction(f"{ret} {cap} = " + _order_call(spec, b, names, axes["iface_form"]))
                effect(capture_effect_stmt())
    else:
        raise IncompatibleRule(f"unknown pattern {pattern.type_id!r}")

    return LabeledSample(
        source=b.render(fn_name="settle"),
        task="O",
        labels={
            "cei_type": pattern.type_id,
            "label": pattern.label,
            "vulnerable": int(pattern.label == "RISK"),
            "anchor_lines": anchor_lines,
        },
        provenance={
            "template_id": f"ordering/{pattern.type_id}/{spec.standard_name}.{spec.method}",
            "seed": int(seed),
            "diversity_axes": {n: axes[n] for n in ("naming", "iface_form", "dep_form", "branch_kind", "const_k")},
        },
    )


# ---------------------------------------------------------------------------
# Probe family: realizes any 4-bit probe-answer combination.  The bits are
# answers to per-factor questions about designated coordinates (a probed
# line for the call and update factors, a designated pair for dependency
# and order), so all sixteen combinations are constructible.
# ---------------------------------------------------------------------------


def gen_probe(bits: tuple[int, int, int, int], variant_seed: int) -> LabeledSample:
    e_bit, s_bit, d_bit, o_bit = (int(x) for x in bits)
    has_call = bool(e_bit or d_bit or o_bit)
    has_update = bool(s_bit or d_bit or o_bit)
    axes = decode_axes(variant_seed, [
        ("naming", [0, 1, 2, 3]),
        ("dep_form", ["drain", "capture"]),
    ])
    rot = axes["naming"]
    k = axes["const_k"]
    spec = CATALOG[0]  # transfer(address,uint256) -> bool

    b = _Builder(CONTRACT_NAMES[(variant_seed + 1) % len(CONTRACT_NAMES)], spec.import_line)
    b.state("mapping(address => uint256) public ledger;")
    recv = b.param("address", _rot(RECEIVER_LIKE, rot))
    other = b.param("address", _rot(OPERATOR_LIKE, rot))
    amount = b.param("uint256", _rot(AMOUNT_LIKE, rot))
    stray = b.param("uint256", _rot(("portionHeld", "unitCount", "backing"), rot + 1))
    nonce = b.param("uint256", _rot(MISC_LIKE, rot + 4))
    if has_call:
        b.state("IERC20 public token;")

    tick_line = b.add(f"uint256 tick = {nonce} + {k};")

    call_line = None
    update_line = None

    def emit_call_stmt() -> None:
        nonlocal call_line
        if d_bit and axes["dep_form"] == "capture" and o_bit:
            call_line = b.add(f"uint256 got = token.balanceOf({recv});")
        elif d_bit:
            call_line = b.add(f"token.transfer({recv}, ledger[{recv}]);")
        else:
            call_line = b.add(f"token.transfer({recv}, {amount});")

    def emit_update_stmt() -> None:
        nonlocal update_line
        if d_bit and axes["dep_form"] == "capture" and o_bit:
            update_line = b.add(f"ledger[{recv}] = got;")
        elif d_bit and o_bit:
            update_line = b.add(f"ledger[{recv}] = 0;")
        elif d_bit:
            update_line = b.add(f"ledger[{recv}] = {amount};")
        else:
            update_line = b.add(f"ledger[{other}] = {stray};")

    if has_call and has_update:
        first, second = (emit_call_stmt, emit_update_stmt) if o_bit else (emit_update_stmt, emit_call_stmt)
        first()
        b.add(f"uint256 gap = {nonce} + {k + 1};")
        second()
    elif has_call:
        emit_call_stmt()
    elif has_update:
        emit_update_stmt()

    wrap_line = b.add("uint256 wrap = tick * 2;")

    probes = {
        "e_line": call_line if e_bit else tick_line,
        "s_line": update_line if s_bit else wrap_line,
        "pair": [call_line, update_line] if (call_line and update_line) else None,
    }
    return LabeledSample(
        source=b.render(),
        task="FULL",
        labels={
            "factor_bits": [e_bit, s_bit, d_bit, o_bit],
            "vulnerable": int(d_bit and o_bit),
            "probes": probes,
        },
        provenance={
            "template_id": "probe",
            "seed": int(variant_seed),
            "diversity_axes": {n: axes[n] for n in ("naming", "dep_form", "const_k")},
        },
    )
