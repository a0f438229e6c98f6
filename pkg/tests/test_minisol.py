import pytest

from reentlab.minisol import (
    AnchorKind,
    AssignOp,
    AssignStmt,
    IfStmt,
    RequireStmt,
    ReturnStmt,
    TupleCaptureStmt,
    VarDeclStmt,
    build_cfg,
    build_defuse,
    flat_statements,
    parse,
    parse_strict,
    pretty_print,
    render_expr,
    stmt_reads_writes,
)

from conftest import CLASSIC_WITHDRAW, DIAMOND, EARLY_RETURN, SAFE_CEI, load_golden


def wrap(body_lines, state_lines=("uint256 public tally;",), params="address to, uint256 amount"):
    lines = [
        "// SPDX-License-Identifier: MIT",
        "pragma solidity ^0.8.20;",
        'import "@openzeppelin/contracts/token/ERC20/IERC20.sol";',
        "contract Probe {",
        *[f"    {s}" for s in state_lines],
        f"    function run({params}) external {{",
        *[f"        {s}" for s in body_lines],
        "    }",
        "}",
    ]
    return "\n".join(lines) + "\n"


class TestParse:
    def test_golden_withdraw_ast(self):
        """The committed hand parse of the 8-line withdraw fixture."""
        res = parse(CLASSIC_WITHDRAW)
        assert res.ok
        golden = load_golden("withdraw_ast.json")
        ast = res.ast
        assert ast.contract_name == golden["contract_name"]
        assert [(v.var_type, v.name, v.visibility) for v in ast.state_vars] == [
            (g["type"], g["name"], g["visibility"]) for g in golden["state_vars"]
        ]
        fn = ast.functions[0]
        gfn = golden["functions"][0]
        assert fn.name == gfn["name"]
        assert [[p.param_type, p.name] for p in fn.params] == gfn["params"]
        body = fn.body
        assert [s.line for s in body] == [g["line"] for g in gfn["body"]]
        assert isinstance(body[0], RequireStmt)
        assert render_expr(body[0].cond) == gfn["body"][0]["cond"]
        cap = body[1]
        assert isinstance(cap, TupleCaptureStmt)
        assert list(cap.names) == gfn["body"][1]["names"]
        assert render_expr(cap.rhs) == gfn["body"][1]["rhs"]
        upd = body[3]
        assert isinstance(upd, AssignStmt)
        assert upd.op == AssignOp.MINUS
        assert upd.lhs.normalized() == gfn["body"][3]["lhs"]
        assert {str(k): v.value for k, v in res.unit.anchors.items()} == golden["anchors"]

    def test_empty_function_body(self):
        src = wrap([])
        res = parse(src)
        assert res.ok
        assert flat_statements(res.ast) == []
        assert res.unit.anchors == {}

    def test_anchor_binds_next_statement(self):
        src = wrap(["//s", "tally = amount;"])
        res = parse(src)
        assert res.ok
        (anchor_line,) = res.unit.anchors
        assert res.unit.anchors[anchor_line] == AnchorKind.STATE_UPD
        stmt = flat_statements(res.ast)[0]
        assert stmt.line == anchor_line + 1

    def test_dangling_anchor(self):
        src = wrap(["tally = amount;", "//e"])
        res = parse(src)
        assert not res.ok
        assert any(d.code == "DanglingAnchor" for d in res.errors)

    @pytest.mark.parametrize("stmt", [
        "for (uint256 i = 0; i < 3; i++) {",
        "while (tally > 0) {",
        "assembly {",
        "try token.transfer(to, amount) {",
    ])
    def test_unsupported_constructs(self, stmt):
        res = parse(wrap([stmt, "}"]))
        assert not res.ok
        assert any(d.code == "UnsupportedConstruct" for d in res.errors)

    def test_nested_external_call_rejected(self):
        res = parse(wrap(["tally = token.take(token.peek(to));"],
                         state_lines=("uint256 public tally;", "IERC20 public token;")))
        assert not res.ok
        assert any(d.code == "NestedExternalCall" for d in res.errors)

    def test_chained_call_rejected(self):
        res = parse(wrap(["token.route(to).push(amount);"],
                         state_lines=("IERC20 public token;",)))
        assert not res.ok
        assert any(d.code == "NestedExternalCall" for d in res.errors)

    def test_multi_statement_line_rejected(self):
        res = parse(wrap(["tally = 1; tally = 2;"]))
        assert not res.ok
        assert any(d.code == "MultiStatementLine" for d in res.errors)

    def test_multiple_visible_functions_is_warning(self):
        src = "\n".join([
            "// SPDX-License-Identifier: MIT",
            "pragma solidity ^0.8.20;",
            'import "@openzeppelin/contracts/token/ERC20/IERC20.sol";',
            "contract Multi {",
            "    uint256 public tally;",
            "    function a(uint256 n) external {",
            "        tally = n;",
            "    }",
            "    function b(uint256 n) public {",
            "        tally = n;",
            "    }",
            "}",
        ]) + "\n"
        res = parse(src)
        assert res.ok
        assert any(w.code == "MultipleExternalFunctions" for w in res.warnings)

    def test_diagnostics_carry_line_numbers(self):
        res = parse(wrap(["tally = ;"]))
        assert not res.ok
        assert all(d.line > 0 for d in res.errors)
        assert all(set(d.to_json()) == {"line", "code", "msg"} for d in res.errors)


class TestRoundTrip:
    @pytest.mark.parametrize("src", [CLASSIC_WITHDRAW, SAFE_CEI, DIAMOND, EARLY_RETURN])
    def test_pretty_print_reparses_identically(self, src):
        _, ast1 = parse_strict(src)
        printed = pretty_print(ast1)
        _, ast2 = parse_strict(printed)
        assert pretty_print(ast2) == printed
        assert _shape(ast1) == _shape(ast2)


def _shape(ast):
    def stmt_shape(s):
        if isinstance(s, IfStmt):
            return ("if", render_expr(s.cond),
                    tuple(stmt_shape(x) for x in s.then_branch),
                    tuple(stmt_shape(x) for x in s.else_branch))
        if isinstance(s, AssignStmt):
            return ("assign", s.lhs.normalized(), s.op.value, render_expr(s.rhs))
        if isinstance(s, RequireStmt):
            return ("require", render_expr(s.cond))
        if isinstance(s, ReturnStmt):
            return ("return", render_expr(s.value) if s.value else None)
        if isinstance(s, VarDeclStmt):
            return ("decl", s.var_type, s.name, render_expr(s.init) if s.init else None)
        if isinstance(s, TupleCaptureStmt):
            return ("capture", s.names, s.types, render_expr(s.rhs))
        return ("expr", render_expr(s.expr))

    return (
        ast.contract_name,
        tuple((v.var_type, v.name) for v in ast.state_vars),
        tuple(
            (f.name, tuple((p.param_type, p.name) for p in f.params),
             tuple(stmt_shape(s) for s in f.body))
            for f in ast.functions
        ),
    )


class TestCfg:
    def test_straight_line_single_block(self):
        src = wrap(["tally = 1;", "tally = 2;", "tally = 3;"])
        cfg = build_cfg(parse_strict(src)[1])
        real = [b for b in cfg.real_blocks if b]
        assert len(real) == 1
        assert real[0] == [0, 1, 2]
        assert len(cfg.paths()) == 1

    def test_if_else_diamond(self):
        cfg = build_cfg(parse_strict(DIAMOND)[1])
        assert len(cfg.real_blocks) == 4  # cond, then, else, join
        assert len(cfg.paths()) == 2
        paths = sorted(tuple(p) for p in cfg.paths())
        assert paths == [(0, 1), (0, 2)]

    def test_early_return_two_paths(self):
        cfg = build_cfg(parse_strict(EARLY_RETURN)[1])
        paths = sorted(tuple(p) for p in cfg.paths())
        assert len(paths) == 2
        assert (0, 1) in paths  # guard then return
        assert (0, 2, 3) in paths  # guard then both updates

    def test_every_statement_in_exactly_one_block(self):
        for src in (CLASSIC_WITHDRAW, SAFE_CEI, DIAMOND, EARLY_RETURN):
            ast = parse_strict(src)[1]
            cfg = build_cfg(ast)
            seen = [i for b in cfg.blocks for i in b]
            assert sorted(seen) == list(range(len(flat_statements(ast))))

    def test_paths_visit_statements_in_order(self):
        for src in (DIAMOND, EARLY_RETURN, CLASSIC_WITHDRAW):
            cfg = build_cfg(parse_strict(src)[1])
            for path in cfg.paths():
                assert path == sorted(path)


class TestDefUse:
    def test_paper_record_statement(self):
        """The compound mapping update lists exactly the two maximal paths."""
        src = wrap(["mainLedger[from][i] -= values[i];"],
                   state_lines=("mapping(address => mapping(uint256 => uint256)) public mainLedger;",),
                   params="address from, uint256 i, uint256 values")
        ast = parse_strict(src)[1]
        stmt = flat_statements(ast)[0]
        reads, writes = stmt_reads_writes(stmt)
        assert reads == {"mainLedger[from][i]", "values[i]"}
        assert writes == {"mainLedger[from][i]"}

    def test_capture_reads_target_and_args(self):
        src = wrap(["uint256 x = t.balanceOf(user);"],
                   state_lines=("IERC20 public t;",), params="address user")
        reads, writes = stmt_reads_writes(flat_statements(parse_strict(src)[1])[0])
        assert reads == {"t", "user"}
        assert writes == {"x"}

    def test_require_is_pure_read(self):
        src = wrap(["require(amount > 0);"])
        reads, writes = stmt_reads_writes(flat_statements(parse_strict(src)[1])[0])
        assert reads == {"amount"}
        assert writes == set()

    def test_low_level_capture(self):
        src = wrap(['(bool success, ) = recipient.call{value: amount}("");'],
                   params="address recipient, uint256 amount")
        reads, writes = stmt_reads_writes(flat_statements(parse_strict(src)[1])[0])
        assert reads == {"recipient", "amount"}
        assert writes == {"success"}

    def test_compound_assign_reads_and_writes_same_path(self):
        src = wrap(["tally += amount;"])
        reads, writes = stmt_reads_writes(flat_statements(parse_strict(src)[1])[0])
        assert "tally" in reads and "tally" in writes

    def test_writes_are_syntactic_lhs(self):
        """Every write set matches a left-hand side found by a regex scan."""
        import re

        for src in (CLASSIC_WITHDRAW, SAFE_CEI, DIAMOND, EARLY_RETURN):
            unit, ast = parse_strict(src)
            du = build_defuse(ast)
            lhs_tokens = set()
            for line in unit.lines:
                m = re.match(r"\s*(?:\(?\s*(?:bool|uint256|address)?\s*)?([A-Za-z_][\w\[\]\.]*)\s*(?:,\s*\))?\s*(?:=|\+=|-=)[^=]", line)
                if m:
                    lhs_tokens.add(m.group(1).replace(" ", ""))
            for w_set in du.writes:
                for w in w_set:
                    assert w in lhs_tokens
