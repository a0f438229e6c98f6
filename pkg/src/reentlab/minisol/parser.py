"""Line-oriented parser for the MiniSol contract subset.

The grammar is deliberately closed: exactly the constructs the synthetic
generators may emit (declarations, `=`/`+=`/`-=` assignments, `require`,
one level of `if/else`, early `return`, interface-style calls, and the
low-level `addr.call{value: v}(...)` form).  One statement per line; line
numbers are the public coordinate system for all factor analyses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .nodes import (
    ANCHOR_TOKENS,
    AnchorKind,
    AssignOp,
    AssignStmt,
    Ast,
    BinaryExpr,
    CallExpr,
    CastExpr,
    Diagnostic,
    Expr,
    ExprStmt,
    FunctionDef,
    IfStmt,
    Literal,
    Param,
    ParseError,
    PathExpr,
    RequireStmt,
    ReturnStmt,
    SourceUnit,
    Stmt,
    TupleCaptureStmt,
    UnaryExpr,
    VarDecl,
    VarDeclStmt,
)

BUILTIN_VALUE_TYPES = {
    "uint256", "uint128", "uint64", "uint32", "uint8", "int256",
    "bool", "address", "string", "bytes32", "bytes",
}

LOW_LEVEL_METHODS = {"call", "delegatecall", "staticcall"}

# Constructs outside the subset; each keyword rejects the whole line.
FORBIDDEN_KEYWORDS = {
    "for", "while", "do", "assembly", "try", "catch", "unchecked",
    "modifier", "struct", "emit", "event", "selfdestruct", "new", "delete",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<string>"[^"]*")
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>=>|\|\||&&|==|!=|<=|>=|\+=|-=|[-+*/%<>=!(){}\[\],.;:])
  | (?P<ws>\s+)
""",
    re.VERBOSE,
)


def tokenize_line(text: str, line_no: int) -> list[str]:
    tokens: list[str] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError([Diagnostic(line_no, "BadToken", f"cannot tokenize near {text[pos:pos+12]!r}")])
        pos = m.end()
        if m.lastgroup != "ws":
            tokens.append(m.group())
    return tokens


@dataclass
class ParseResult:
    unit: SourceUnit
    ast: Optional[Ast]
    errors: list[Diagnostic] = field(default_factory=list)
    warnings: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.ast is not None and not self.errors


class _LineParser:
    """Recursive-descent expression/statement parser over one line's tokens."""

    def __init__(self, tokens: list[str], line_no: int):
        self.toks = tokens
        self.i = 0
        self.line = line_no
        self.call_count = 0

    # -- token utilities ----------------------------------------------------

    def peek(self, k: int = 0) -> Optional[str]:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            self.fail("UnexpectedEnd", "unexpected end of line")
        self.i += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.next()
        if got != tok:
            self.fail("UnexpectedToken", f"expected {tok!r}, got {got!r}")

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    def fail(self, code: str, msg: str) -> None:
        raise ParseError([Diagnostic(self.line, code, msg)])

    # -- expressions ---------------------------------------------------------

    def parse_expr(self) -> Expr:
        return self._or()

    def _or(self) -> Expr:
        node = self._and()
        while self.peek() == "||":
            self.next()
            node = BinaryExpr("||", node, self._and())
        return node

    def _and(self) -> Expr:
        node = self._cmp()
        while self.peek() == "&&":
            self.next()
            node = BinaryExpr("&&", node, self._cmp())
        return node

    def _cmp(self) -> Expr:
        node = self._add()
        while self.peek() in ("==", "!=", "<=", ">=", "<", ">"):
            op = self.next()
            node = BinaryExpr(op, node, self._add())
        return node

    def _add(self) -> Expr:
        node = self._mul()
        while self.peek() in ("+", "-"):
            op = self.next()
            node = BinaryExpr(op, node, self._mul())
        return node

    def _mul(self) -> Expr:
        node = self._unary()
        while self.peek() in ("*", "/", "%"):
            op = self.next()
            node = BinaryExpr(op, node, self._unary())
        return node

    def _unary(self) -> Expr:
        if self.peek() in ("!", "-"):
            op = self.next()
            return UnaryExpr(op, self._unary())
        return self._postfix()

    def _postfix(self) -> Expr:
        node = self._primary()
        while True:
            tok = self.peek()
            if tok == ".":
                self.next()
                member = self.next()
                if not member.isidentifier():
                    self.fail("UnexpectedToken", f"expected member name, got {member!r}")
                node = self._extend_path(node, f".{member}")
            elif tok == "[":
                self.next()
                index = self.parse_expr()
                self.expect("]")
                node = self._extend_path(node, f"[{render_expr(index)}]")
            elif tok == "(" or tok == "{":
                node = self._call_suffix(node)
            else:
                return node

    def _extend_path(self, node: Expr, segment: str) -> Expr:
        if isinstance(node, PathExpr):
            return PathExpr(node.base, node.segments + (segment,))
        if isinstance(node, (CastExpr, CallExpr)) and segment.startswith("."):
            # member access on a cast target is part of a call chain; handled
            # by _call_suffix via a pending-member marker
            return _PendingMember(node, segment[1:])
        self.fail("UnsupportedConstruct", "member/index access on unsupported expression")
        raise AssertionError

    def _call_suffix(self, node: Expr) -> Expr:
        value: Optional[Expr] = None
        if self.peek() == "{":
            self.next()
            key = self.next()
            if key != "value":
                self.fail("UnsupportedConstruct", f"unsupported call option {key!r}")
            self.expect(":")
            value = self.parse_expr()
            self.expect("}")
        self.expect("(")
        args: list[Expr] = []
        if self.peek() != ")":
            while True:
                args.append(self.parse_expr())
                if self.peek() == ",":
                    self.next()
                    continue
                break
        self.expect(")")

        if isinstance(node, PathExpr):
            if not node.segments:
                # bare identifier applied to args: a type cast
                if value is not None:
                    self.fail("UnsupportedConstruct", "call options on a cast")
                if len(args) != 1:
                    self.fail("UnsupportedConstruct", f"free function call {node.base!r} is outside the subset")
                return CastExpr(node.base, args[0])
            if node.segments[-1].startswith("."):
                method = node.segments[-1][1:]
                target = PathExpr(node.base, node.segments[:-1])
                self.call_count += 1
                if self.peek() in (".", "(", "["):
                    self.fail("NestedExternalCall", "chained calls are outside the subset")
                return CallExpr(target, method, tuple(args), value)
            self.fail("UnsupportedConstruct", "call on an index expression")
        if isinstance(node, _PendingMember):
            self.call_count += 1
            if isinstance(node.target, CallExpr):
                self.fail("NestedExternalCall", "chained calls are outside the subset")
            if self.peek() in (".", "(", "["):
                self.fail("NestedExternalCall", "chained calls are outside the subset")
            return CallExpr(node.target, node.member, tuple(args), value)
        self.fail("UnsupportedConstruct", "unsupported call target")
        raise AssertionError

    def _primary(self) -> Expr:
        tok = self.next()
        if tok == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        if tok.startswith('"'):
            return Literal(tok)
        if tok.isdigit():
            return Literal(tok)
        if tok in ("true", "false"):
            return Literal(tok)
        if tok in FORBIDDEN_KEYWORDS:
            self.fail("UnsupportedConstruct", f"{tok!r} is outside the subset")
        if tok.isidentifier():
            return PathExpr(tok)
        self.fail("UnexpectedToken", f"unexpected token {tok!r}")
        raise AssertionError


@dataclass(frozen=True)
class _PendingMember(Expr):
    target: Expr
    member: str


def render_expr(e: Expr) -> str:
    """Canonical compact rendering; path aliasing compares these strings."""
    if isinstance(e, Literal):
        return e.text
    if isinstance(e, PathExpr):
        return e.normalized()
    if isinstance(e, CastExpr):
        return f"{e.type_name}({render_expr(e.inner)})"
    if isinstance(e, CallExpr):
        opt = f"{{value: {render_expr(e.value)}}}" if e.value is not None else ""
        args = ", ".join(render_expr(a) for a in e.args)
        return f"{render_expr(e.target)}.{e.method}{opt}({args})"
    if isinstance(e, UnaryExpr):
        return f"{e.op}{render_expr(e.operand)}"
    if isinstance(e, BinaryExpr):
        return f"{render_expr(e.left)} {e.op} {render_expr(e.right)}"
    raise TypeError(f"unrenderable expression {e!r}")


def _count_calls(e: Optional[Expr]) -> int:
    if e is None:
        return 0
    if isinstance(e, CallExpr):
        return 1 + _count_calls(e.target) + sum(_count_calls(a) for a in e.args) + _count_calls(e.value)
    if isinstance(e, CastExpr):
        return _count_calls(e.inner)
    if isinstance(e, UnaryExpr):
        return _count_calls(e.operand)
    if isinstance(e, BinaryExpr):
        return _count_calls(e.left) + _count_calls(e.right)
    return 0


_SPDX_RE = re.compile(r"^\s*//\s*SPDX-License-Identifier:")
_COMMENT_RE = re.compile(r"^\s*//")


class Parser:
    def __init__(self, source: str):
        self.source = source.replace("\r\n", "\n").replace("\r", "\n")
        self.lines = self.source.split("\n")
        self.errors: list[Diagnostic] = []
        self.warnings: list[Diagnostic] = []
        self.anchors: dict[int, AnchorKind] = {}

    def error(self, line: int, code: str, msg: str) -> None:
        self.errors.append(Diagnostic(line, code, msg))

    def warn(self, line: int, code: str, msg: str) -> None:
        self.warnings.append(Diagnostic(line, code, msg))

    def parse(self) -> ParseResult:
        unit = SourceUnit(self.source, list(self.lines), self.anchors)
        try:
            ast = self._parse_unit()
        except ParseError as exc:
            self.errors.extend(exc.diagnostics)
            ast = None
        if self.errors:
            ast = None
        return ParseResult(unit, ast, self.errors, self.warnings)

    # -- unit structure ------------------------------------------------------

    def _parse_unit(self) -> Ast:
        pragma = ""
        imports: list[str] = []
        contract: Optional[Ast] = None
        idx = 0
        n = len(self.lines)
        while idx < n:
            line_no = idx + 1
            raw = self.lines[idx]
            stripped = raw.strip()
            if not stripped:
                idx += 1
                continue
            if _SPDX_RE.match(stripped):
                idx += 1
                continue
            if _COMMENT_RE.match(stripped):
                kind = self._classify_comment(stripped, line_no)
                if kind is not None:
                    self.anchors[line_no] = kind
                idx += 1
                continue
            if stripped.startswith("pragma"):
                pragma = stripped
                idx += 1
                continue
            if stripped.startswith("import"):
                imports.append(stripped)
                idx += 1
                continue
            if stripped.startswith("contract"):
                if contract is not None:
                    self.error(line_no, "MultipleContracts", "exactly one contract per unit")
                    raise ParseError([])
                contract, idx = self._parse_contract(idx)
                continue
            first = stripped.split()[0] if stripped.split() else stripped
            if first in ("interface", "library", "abstract"):
                self.error(line_no, "UnsupportedConstruct", f"{first!r} declarations are outside the subset")
                raise ParseError([])
            self.error(line_no, "UnexpectedToken", f"unexpected top-level line: {stripped[:40]!r}")
            raise ParseError([])
        if contract is None:
            self.error(1, "NoContract", "no contract declaration found")
            raise ParseError([])
        contract.pragma = pragma
        contract.imports = imports
        self._check_anchors(contract)
        self._check_visibility(contract)
        return contract

    def _classify_comment(self, stripped: str, line_no: int) -> Optional[AnchorKind]:
        body = stripped.split()[0]
        if body in ANCHOR_TOKENS:
            # anchor comments carry nothing else on the line
            if stripped != body:
                self.error(line_no, "BadAnchor", f"anchor line must contain only {body}")
            return ANCHOR_TOKENS[body]
        self.warn(line_no, "StrayComment", "non-anchor comment ignored")
        return None

    def _parse_contract(self, idx: int) -> tuple[Ast, int]:
        line_no = idx + 1
        toks = tokenize_line(self.lines[idx], line_no)
        # contract Name {
        if len(toks) != 3 or toks[0] != "contract" or toks[2] != "{":
            self.error(line_no, "UnexpectedToken", "expected `contract Name {`")
            raise ParseError([])
        name = toks[1]
        state_vars: list[VarDecl] = []
        functions: list[FunctionDef] = []
        idx += 1
        while idx < len(self.lines):
            line_no = idx + 1
            stripped = self.lines[idx].strip()
            if not stripped:
                idx += 1
                continue
            if _COMMENT_RE.match(stripped):
                if not _SPDX_RE.match(stripped):
                    kind = self._classify_comment(stripped, line_no)
                    if kind is not None:
                        self.anchors[line_no] = kind
                idx += 1
                continue
            if stripped == "}":
                return Ast(name, state_vars, functions), idx + 1
            if stripped.startswith("function"):
                fn, idx = self._parse_function(idx)
                functions.append(fn)
                continue
            first = stripped.split()[0]
            if first in ("constructor", "receive", "fallback"):
                self.error(line_no, "UnsupportedConstruct", f"{first!r} is outside the subset")
                raise ParseError([])
            if first in FORBIDDEN_KEYWORDS:
                self.error(line_no, "UnsupportedConstruct", f"{first!r} is outside the subset")
                raise ParseError([])
            state_vars.append(self._parse_state_decl(line_no))
            idx += 1
        self.error(line_no, "UnexpectedEnd", "contract body not closed")
        raise ParseError([])

    def _parse_type(self, lp: _LineParser) -> str:
        tok = lp.next()
        if tok == "mapping":
            lp.expect("(")
            depth = 1
            parts = ["mapping("]
            while depth > 0:
                t = lp.next()
                if t == "(":
                    depth += 1
                elif t == ")":
                    depth -= 1
                    if depth == 0:
                        break
                parts.append(t)
            return "".join(parts).replace("=>", " => ") + ")"
        if not tok.isidentifier():
            lp.fail("UnexpectedToken", f"expected type name, got {tok!r}")
        if lp.peek() == "[" and lp.peek(1) == "]":
            lp.next()
            lp.next()
            return tok + "[]"
        return tok

    def _parse_state_decl(self, line_no: int) -> VarDecl:
        lp = _LineParser(tokenize_line(self.lines[line_no - 1], line_no), line_no)
        var_type = self._parse_type(lp)
        visibility = ""
        constant = False
        while lp.peek() in ("public", "private", "internal", "constant"):
            tok = lp.next()
            if tok == "constant":
                constant = True
            else:
                visibility = tok
        name = lp.next()
        if not name.isidentifier():
            lp.fail("UnexpectedToken", f"expected state variable name, got {name!r}")
        init = None
        if lp.peek() == "=":
            lp.next()
            init = lp.parse_expr()
        lp.expect(";")
        if not lp.at_end():
            lp.fail("MultiStatementLine", "one declaration per line")
        if lp.call_count:
            lp.fail("UnsupportedConstruct", "calls are not allowed in state initializers")
        return VarDecl(var_type, name, visibility, constant, init, line_no)

    def _parse_function(self, idx: int) -> tuple[FunctionDef, int]:
        line_no = idx + 1
        lp = _LineParser(tokenize_line(self.lines[idx], line_no), line_no)
        lp.expect("function")
        name = lp.next()
        lp.expect("(")
        params: list[Param] = []
        if lp.peek() != ")":
            while True:
                p_type = self._parse_type(lp)
                if lp.peek() in ("memory", "calldata"):
                    lp.next()
                p_name = lp.next()
                params.append(Param(p_type, p_name))
                if lp.peek() == ",":
                    lp.next()
                    continue
                break
        lp.expect(")")
        visibility = ""
        mutability = ""
        returns: Optional[str] = None
        while not lp.at_end() and lp.peek() != "{":
            tok = lp.next()
            if tok in ("external", "public", "internal", "private"):
                visibility = tok
            elif tok in ("view", "pure", "payable", "nonpayable"):
                mutability = tok
            elif tok == "returns":
                lp.expect("(")
                returns = self._parse_type(lp)
                if lp.peek() in ("memory", "calldata"):
                    lp.next()
                lp.expect(")")
            else:
                lp.fail("UnexpectedToken", f"unexpected function modifier {tok!r}")
        lp.expect("{")
        if not lp.at_end():
            lp.fail("MultiStatementLine", "function body must start on the next line")
        body, close_idx = self._parse_block(idx + 1, closers=("}",))
        return FunctionDef(name, params, visibility, mutability, returns, body, line_no), close_idx + 1

    def _parse_block(self, idx: int, closers: tuple[str, ...]) -> tuple[list[Stmt], int]:
        """Parse statements until one of `closers`; returns (stmts, index past closer)."""
        stmts: list[Stmt] = []
        while idx < len(self.lines):
            line_no = idx + 1
            stripped = self.lines[idx].strip()
            if not stripped:
                idx += 1
                continue
            if _COMMENT_RE.match(stripped) and not _SPDX_RE.match(stripped):
                kind = self._classify_comment(stripped, line_no)
                if kind is not None:
                    self.anchors[line_no] = kind
                idx += 1
                continue
            if stripped in closers or (stripped == "} else {" and "} else {" in closers):
                return stmts, idx
            head = stripped.split("(")[0].split()
            first_word = head[0] if head else ""
            if first_word in FORBIDDEN_KEYWORDS:
                self.error(line_no, "UnsupportedConstruct", f"{first_word!r} is outside the subset")
                raise ParseError([])
            if stripped.startswith("if"):
                stmt, idx = self._parse_if(idx)
                stmts.append(stmt)
                continue
            stmts.append(self._parse_simple_stmt(line_no))
            idx += 1
        self.error(len(self.lines), "UnexpectedEnd", "block not closed")
        raise ParseError([])

    def _parse_if(self, idx: int) -> tuple[IfStmt, int]:
        line_no = idx + 1
        lp = _LineParser(tokenize_line(self.lines[idx], line_no), line_no)
        lp.expect("if")
        lp.expect("(")
        cond = lp.parse_expr()
        lp.expect(")")
        lp.expect("{")
        if not lp.at_end():
            lp.fail("MultiStatementLine", "branch body must start on the next line")
        if lp.call_count:
            lp.fail("UnsupportedConstruct", "external calls in branch conditions are outside the subset")
        then_branch, close_idx = self._parse_block(idx + 1, closers=("}", "} else {"))
        else_branch: list[Stmt] = []
        closer = self.lines[close_idx].strip()
        if closer == "} else {":
            else_branch, close_idx = self._parse_block(close_idx + 1, closers=("}",))
        return IfStmt(line=line_no, cond=cond, then_branch=then_branch, else_branch=else_branch), close_idx + 1

    def _parse_simple_stmt(self, line_no: int) -> Stmt:
        tokens = tokenize_line(self.lines[line_no - 1], line_no)
        lp = _LineParser(tokens, line_no)
        stmt = self._dispatch_stmt(lp)
        lp.expect(";")
        if not lp.at_end():
            lp.fail("MultiStatementLine", "one statement per line")
        calls = self._stmt_call_count(stmt)
        if calls > 1:
            lp.fail("NestedExternalCall", "a statement may contain exactly one external call")
        return stmt

    def _stmt_call_count(self, stmt: Stmt) -> int:
        if isinstance(stmt, VarDeclStmt):
            return _count_calls(stmt.init)
        if isinstance(stmt, AssignStmt):
            return _count_calls(stmt.rhs)
        if isinstance(stmt, TupleCaptureStmt):
            return _count_calls(stmt.rhs)
        if isinstance(stmt, RequireStmt):
            return _count_calls(stmt.cond)
        if isinstance(stmt, ReturnStmt):
            return _count_calls(stmt.value)
        if isinstance(stmt, ExprStmt):
            return _count_calls(stmt.expr)
        return 0

    def _dispatch_stmt(self, lp: _LineParser) -> Stmt:
        tok0 = lp.peek()
        tok1 = lp.peek(1)
        if tok0 == "return":
            lp.next()
            value = None if lp.peek() == ";" else lp.parse_expr()
            return ReturnStmt(line=lp.line, value=value)
        if tok0 == "require" and tok1 == "(":
            lp.next()
            lp.next()
            cond = lp.parse_expr()
            if lp.peek() == ",":  # optional revert message
                lp.next()
                msg = lp.next()
                if not msg.startswith('"'):
                    lp.fail("UnexpectedToken", "revert reason must be a string literal")
            lp.expect(")")
            return RequireStmt(line=lp.line, cond=cond)
        if tok0 == "(":
            return self._parse_tuple_capture(lp)
        if tok0 == "mapping" or (
            tok0 is not None and tok0.isidentifier() and tok1 is not None and tok1.isidentifier()
            and tok0 not in ("require",)
        ) or (tok0 in BUILTIN_VALUE_TYPES and tok1 == "["):
            var_type = self._parse_type(lp)
            name = lp.next()
            init = None
            if lp.peek() == "=":
                lp.next()
                init = lp.parse_expr()
            return VarDeclStmt(line=lp.line, var_type=var_type, name=name, init=init)
        # assignment or bare expression
        expr = lp.parse_expr()
        if lp.peek() in ("=", "+=", "-="):
            op_tok = lp.next()
            if not isinstance(expr, PathExpr):
                lp.fail("UnexpectedToken", "assignment target must be an access path")
            rhs = lp.parse_expr()
            return AssignStmt(line=lp.line, lhs=expr, op=AssignOp(op_tok), rhs=rhs)
        return ExprStmt(line=lp.line, expr=expr)

    def _parse_tuple_capture(self, lp: _LineParser) -> TupleCaptureStmt:
        lp.expect("(")
        names: list[str] = []
        types: list[str] = []
        while lp.peek() != ")":
            if lp.peek() == ",":
                lp.next()
                continue
            t = lp.next()
            if lp.peek() not in (",", ")"):
                name = lp.next()
                types.append(t)
                names.append(name)
            else:
                types.append("")
                names.append(t)
        lp.expect(")")
        lp.expect("=")
        rhs = lp.parse_expr()
        return TupleCaptureStmt(line=lp.line, names=tuple(n for n in names), types=tuple(types), rhs=rhs)

    # -- post-parse checks ----------------------------------------------------

    def _check_anchors(self, ast: Ast) -> None:
        stmt_lines = {s.line for s in ast.all_statements()}
        for anchor_line in sorted(self.anchors):
            if anchor_line + 1 not in stmt_lines:
                self.error(anchor_line, "DanglingAnchor",
                           "anchor must immediately precede a statement")

    def _check_visibility(self, ast: Ast) -> None:
        visible = [f for f in ast.functions if f.visibility in ("external", "public")]
        if len(visible) > 1:
            self.warn(visible[1].line, "MultipleExternalFunctions",
                      "more than one externally visible function")


def parse(source: str) -> ParseResult:
    """Parse MiniSol source; diagnostics carry 1-indexed line numbers."""
    return Parser(source).parse()


def parse_strict(source: str) -> tuple[SourceUnit, Ast]:
    result = parse(source)
    if not result.ok:
        raise ParseError(result.errors)
    assert result.ast is not None
    return result.unit, result.ast


# ---------------------------------------------------------------------------
# Pretty printer.  Re-parsing the output must reproduce the same Ast
# (statement structure; line numbers shift with layout).
# ---------------------------------------------------------------------------


def render_stmt(stmt: Stmt) -> str:
    if isinstance(stmt, VarDeclStmt):
        if stmt.init is not None:
            return f"{stmt.var_type} {stmt.name} = {render_expr(stmt.init)};"
        return f"{stmt.var_type} {stmt.name};"
    if isinstance(stmt, AssignStmt):
        return f"{stmt.lhs.normalized()} {stmt.op.value} {render_expr(stmt.rhs)};"
    if isinstance(stmt, TupleCaptureStmt):
        slots = ", ".join(
            (f"{t} {n}" if t else n) for t, n in zip(stmt.types, stmt.names)
        )
        return f"({slots}, ) = {render_expr(stmt.rhs)};" if len(stmt.names) == 1 else f"({slots}) = {render_expr(stmt.rhs)};"
    if isinstance(stmt, RequireStmt):
        return f"require({render_expr(stmt.cond)});"
    if isinstance(stmt, ReturnStmt):
        return f"return {render_expr(stmt.value)};" if stmt.value is not None else "return;"
    if isinstance(stmt, ExprStmt):
        return f"{render_expr(stmt.expr)};"
    raise TypeError(f"unrenderable statement {stmt!r}")


def pretty_print(ast: Ast) -> str:
    lines: list[str] = []
    if ast.pragma:
        lines.append(ast.pragma)
    lines.extend(ast.imports)
    lines.append(f"contract {ast.contract_name} {{")

    for sv in ast.state_vars:
        parts = [sv.var_type]
        if sv.visibility:
            parts.append(sv.visibility)
        if sv.constant:
            parts.append("constant")
        parts.append(sv.name)
        decl = " ".join(parts)
        if sv.init is not None:
            decl += f" = {render_expr(sv.init)}"
        lines.append(f"    {decl};")

    def emit_block(stmts: list[Stmt], indent: int) -> None:
        pad = " " * indent
        for s in stmts:
            if isinstance(s, IfStmt):
                lines.append(f"{pad}if ({render_expr(s.cond)}) {{")
                emit_block(s.then_branch, indent + 4)
                if s.else_branch:
                    lines.append(f"{pad}}} else {{")
                    emit_block(s.else_branch, indent + 4)
                lines.append(f"{pad}}}")
            else:
                lines.append(pad + render_stmt(s))

    for fn in ast.functions:
        params = ", ".join(f"{p.param_type} {p.name}" for p in fn.params)
        header = f"    function {fn.name}({params})"
        if fn.visibility:
            header += f" {fn.visibility}"
        if fn.mutability:
            header += f" {fn.mutability}"
        if fn.returns:
            header += f" returns ({fn.returns})"
        lines.append(header + " {")
        emit_block(fn.body, 8)
        lines.append("    }")
    lines.append("}")
    return "\n".join(lines) + "\n"
