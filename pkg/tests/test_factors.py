import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reentlab.datagen import (
    ALL_CEI_PATTERNS,
    ALL_DEP_RULES,
    CATALOG,
    IncompatibleRule,
    InvalidCombination,
    gen_dependency,
    gen_external_call,
    gen_ordering,
    gen_probe,
)
from reentlab.factors import (
    DepKind,
    ProgramUnit,
    analyze_source,
    call_first_possible,
    compute_factors,
)
from reentlab.oracle import TooLarge, brute_force_oracle

from conftest import CLASSIC_WITHDRAW, SAFE_CEI


def analyze(src):
    return analyze_source(src)


HEADER = (
    "// SPDX-License-Identifier: MIT\n"
    "pragma solidity ^0.8.20;\n"
    'import "@openzeppelin/contracts/token/ERC20/IERC20.sol";\n'
)


class TestUnitFactors:
    def test_call_and_update_lines_classic(self):
        _, fs = analyze(CLASSIC_WITHDRAW)
        assert [fs.unit_id(i) for i in np.flatnonzero(fs.phi_E)] == [9]
        assert [fs.unit_id(i) for i in np.flatnonzero(fs.phi_S)] == [12]
        assert fs.call_kinds[9] == "low_level"

    def test_no_calls_all_zero(self):
        src = HEADER + (
            "contract Calm {\n"
            "    uint256 public tally;\n"
            "    function poke(uint256 n) external {\n"
            "        uint256 twice = n * 2;\n"
            "        tally = twice;\n"
            "    }\n"
            "}\n"
        )
        _, fs = analyze(src)
        assert fs.phi_E.sum() == 0
        assert fs.phi_D.sum() == 0

    def test_interface_call_marked(self):
        _, fs = analyze(SAFE_CEI)
        calls = [fs.unit_id(i) for i in np.flatnonzero(fs.phi_E)]
        assert len(calls) == 1
        assert fs.call_kinds[calls[0]] == "high_level"

    def test_local_write_not_an_update(self):
        src = HEADER + (
            "contract Local {\n"
            "    uint256 public tally;\n"
            "    function poke(uint256 a, uint256 b) external {\n"
            "        uint256 tmp = a + b;\n"
            "        tally = tmp;\n"
            "    }\n"
            "}\n"
        )
        _, fs = analyze(src)
        assert [fs.unit_id(i) for i in np.flatnonzero(fs.phi_S)] == [8]

    def test_two_calls_two_lines(self):
        src = HEADER + (
            "contract Pair {\n"
            "    IERC20 public token;\n"
            "    function poke(address to, uint256 amount, uint256 warmth) external {\n"
            "        token.approve(to, warmth);\n"
            "        uint256 mid = warmth + 1;\n"
            "        token.transfer(to, amount);\n"
            "    }\n"
            "}\n"
        )
        _, fs = analyze(src)
        assert [fs.unit_id(i) for i in np.flatnonzero(fs.phi_E)] == [7, 9]


class TestDependencies:
    def test_direct_via_captured_return(self):
        src = HEADER + (
            "contract Direct {\n"
            "    mapping(address => uint256) public ledger;\n"
            "    IERC20 public t;\n"
            "    function poke(address u) external {\n"
            "        uint256 r = t.balanceOf(u);\n"
            "        uint256 pad = 1 + 2;\n"
            "        ledger[u] = r;\n"
            "    }\n"
            "}\n"
        )
        _, fs = analyze(src)
        assert fs.phi_D[fs.index_of(8), fs.index_of(10)] == 1
        assert DepKind(fs.dep_kind[fs.index_of(8), fs.index_of(10)]) == DepKind.DIRECT

    def test_disjoint_no_dependency(self):
        src = HEADER + (
            "contract Apart {\n"
            "    uint256 public counter;\n"
            "    IERC20 public t;\n"
            "    function poke(address to, uint256 amount, uint256 stride) external {\n"
            "        t.transfer(to, amount);\n"
            "        uint256 pad = 1 + 2;\n"
            "        counter = counter + stride;\n"
            "    }\n"
            "}\n"
        )
        _, fs = analyze(src)
        assert fs.phi_D.sum() == 0
        assert (fs.dep_kind == DepKind.NONE).all()

    def test_ctrl_dependency_through_branch(self):
        src = HEADER + (
            "contract Guarded {\n"
            "    mapping(address => uint256) public ledger;\n"
            "    IERC20 public t;\n"
            "    function poke(address a, uint256 v, uint256 held) external {\n"
            "        bool fine = t.transfer(a, v);\n"
            "        uint256 pad = 1 + 2;\n"
            "        if (fine) {\n"
            "            ledger[a] = held;\n"
            "        }\n"
            "    }\n"
            "}\n"
        )
        _, fs = analyze(src)
        c, u = fs.index_of(8), fs.index_of(11)
        assert fs.phi_D[c, u] == 1
        assert DepKind(fs.dep_kind[c, u]) == DepKind.CTRL

    def test_ctrl_excluded_in_data_only_mode(self):
        src = HEADER + (
            "contract Guarded {\n"
            "    mapping(address => uint256) public ledger;\n"
            "    IERC20 public t;\n"
            "    function poke(address a, uint256 v, uint256 held) external {\n"
            "        bool fine = t.transfer(a, v);\n"
            "        uint256 pad = 1 + 2;\n"
            "        if (fine) {\n"
            "            ledger[a] = held;\n"
            "        }\n"
            "    }\n"
            "}\n"
        )
        _, fs = analyze_source(src, include_ctrl=False)
        assert fs.phi_D.sum() == 0

    def test_indirect_chain_through_local(self):
        src = HEADER + (
            "contract Chained {\n"
            "    mapping(address => uint256) public ledger;\n"
            "    IERC20 public t;\n"
            "    function poke(address u) external {\n"
            "        uint256 r = t.balanceOf(u);\n"
            "        uint256 pad = 1 + 2;\n"
            "        uint256 m = r * 2;\n"
            "        ledger[u] = m;\n"
            "    }\n"
            "}\n"
        )
        _, fs = analyze(src)
        c, u = fs.index_of(8), fs.index_of(11)
        assert DepKind(fs.dep_kind[c, u]) == DepKind.INDIRECT

    def test_dominating_join_is_not_control_dependence(self):
        # the update after the join runs regardless of the branch outcome
        src = HEADER + (
            "contract Join {\n"
            "    mapping(address => uint256) public ledger;\n"
            "    IERC20 public t;\n"
            "    function poke(address a, uint256 held) external {\n"
            "        bool fine = t.balanceOf(a) > 0;\n"
            "        uint256 pad = 1 + 2;\n"
            "        if (fine) {\n"
            "            uint256 bump = pad + 1;\n"
            "        }\n"
            "        ledger[a] = held;\n"
            "    }\n"
            "}\n"
        )
        _, fs = analyze(src)
        assert fs.phi_D.sum() == 0


class TestOrdering:
    def test_update_before_call_plus_one(self):
        _, fs = analyze(SAFE_CEI)
        orders = fs.phi_O[fs.phi_D == 1]
        assert len(orders) == 1 and orders[0] == 1

    def test_call_before_update_minus_one(self):
        _, fs = analyze(CLASSIC_WITHDRAW)
        assert fs.phi_O[fs.index_of(9), fs.index_of(12)] == -1

    def test_per_branch_pairs_risky_side_flags(self):
        src = HEADER + (
            "contract Split {\n"
            "    mapping(address => uint256) public ledger;\n"
            "    IERC20 public t;\n"
            "    function poke(address a, uint256 v, bool fast) external {\n"
            "        if (fast) {\n"
            "            ledger[a] = v;\n"
            "            t.transfer(a, ledger[a]);\n"
            "        } else {\n"
            "            t.transfer(a, ledger[a]);\n"
            "            ledger[a] = v;\n"
            "        }\n"
            "    }\n"
            "}\n"
        )
        _, fs = analyze(src)
        assert (fs.phi_O == -1).any()
        assert (fs.phi_O == 1).any()

    def test_overwritten_value_never_plus_one(self):
        src = HEADER + (
            "contract Stale {\n"
            "    mapping(address => uint256) public ledger;\n"
            "    IERC20 public t;\n"
            "    function poke(address a, uint256 v) external {\n"
            "        ledger[a] = v;\n"
            "        ledger[a] = 0;\n"
            "        t.transfer(a, ledger[a]);\n"
            "    }\n"
            "}\n"
        )
        _, fs = analyze(src)
        first, second, call = fs.index_of(8), fs.index_of(9), fs.index_of(10)
        assert fs.phi_O[call, second] == 1
        assert fs.phi_O[call, first] == 0  # rewritten before it reaches the call

    def test_call_first_possible_probe(self):
        p, _ = analyze(CLASSIC_WITHDRAW)
        assert call_first_possible(p, 9, 12)
        assert not call_first_possible(p, 12, 9)


def _sample_stream(limit):
    """Deterministic mixed stream of generated samples."""
    count = 0
    seed = 0
    while count < limit:
        for spec in CATALOG:
            yield gen_external_call(spec, seed)
            count += 1
        for rule in ALL_DEP_RULES:
            for spec in CATALOG:
                try:
                    yield gen_dependency(rule, spec, seed)
                    count += 1
                except (IncompatibleRule, InvalidCombination):
                    continue
        for pattern in ALL_CEI_PATTERNS:
            for spec in CATALOG:
                try:
                    yield gen_ordering(pattern, spec, seed)
                    count += 1
                except (IncompatibleRule, InvalidCombination):
                    continue
        for bits in [(0, 0, 0, 0), (1, 1, 1, 1), (1, 1, 0, 1), (0, 0, 1, 0)]:
            yield gen_probe(bits, seed)
            count += 1
        seed += 1


class TestOracle:
    def test_oracle_matches_analytic_on_mixed_corpus(self):
        n = 0
        for sample in _sample_stream(150):
            p = ProgramUnit.from_source(sample.source)
            assert brute_force_oracle(p) == compute_factors(p), sample.provenance
            n += 1
            if n >= 150:
                break

    def test_empty_program_both_empty(self):
        src = HEADER + "contract Nil {\n    function idle() external {\n    }\n}\n"
        p, fs = analyze(src)
        assert fs.phi_E.sum() == 0 and fs.phi_S.sum() == 0
        assert brute_force_oracle(p) == fs

    def test_diamond_paths_merged(self):
        src = HEADER + (
            "contract Fork {\n"
            "    mapping(address => uint256) public ledger;\n"
            "    IERC20 public t;\n"
            "    function poke(address a, uint256 v, bool fast) external {\n"
            "        if (fast) {\n"
            "            t.transfer(a, ledger[a]);\n"
            "            ledger[a] = 0;\n"
            "        } else {\n"
            "            uint256 rest = v + 1;\n"
            "        }\n"
            "    }\n"
            "}\n"
        )
        p, fs = analyze(src)
        assert brute_force_oracle(p) == fs
        assert (fs.phi_O == -1).any()
        assert fs.path_sensitive_pairs

    def test_too_large_bound(self):
        body = []
        for i in range(3):
            body += [f"if (gate{i}) {{", "    tally = tally + 1;", "}"]
        src = HEADER + (
            "contract Big {\n"
            "    uint256 public tally;\n"
            "    function poke(bool gate0, bool gate1, bool gate2) external {\n"
            + "\n".join("        " + s for s in body) + "\n"
            "    }\n"
            "}\n"
        )
        p = ProgramUnit.from_source(src)
        with pytest.raises(TooLarge):
            brute_force_oracle(p)


class TestInvariantsAndFuzz:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 200), st.integers(0, len(ALL_DEP_RULES) - 1), st.integers(0, len(CATALOG) - 1))
    def test_factor_set_invariants_on_generated(self, seed, rule_i, spec_i):
        try:
            sample = gen_dependency(ALL_DEP_RULES[rule_i], CATALOG[spec_i], seed)
        except (IncompatibleRule, InvalidCombination):
            return
        _, fs = analyze(sample.source)
        fs.check_invariants()

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 500), st.integers(0, 15))
    def test_probe_invariants_and_oracle(self, seed, combo):
        bits = tuple((combo >> k) & 1 for k in range(4))
        sample = gen_probe(bits, seed)
        p = ProgramUnit.from_source(sample.source)
        fs = compute_factors(p)
        fs.check_invariants()
        assert brute_force_oracle(p) == fs

    def test_filler_deletion_preserves_factors(self):
        """Dropping a line that carries no call, update, or dependency
        leaves every remaining factor value unchanged."""
        checked = 0
        for rule in ALL_DEP_RULES:
            try:
                sample = gen_dependency(rule, CATALOG[0], 1)
            except (IncompatibleRule, InvalidCombination):
                continue
            lines = sample.source.split("\n")
            tick_idx = next(i for i, l in enumerate(lines) if "tick" in l)
            _, before = analyze(sample.source)
            assert before.phi_E[tick_idx] == 0 and before.phi_S[tick_idx] == 0
            _, after = analyze("\n".join(lines[:tick_idx] + lines[tick_idx + 1:]))

            def shift(line):  # old 1-based line -> new 1-based line
                return line if line <= tick_idx else line - 1

            for i in np.flatnonzero(before.phi_E):
                assert after.phi_E[shift(i + 1) - 1] == 1
            for i in np.flatnonzero(before.phi_S):
                assert after.phi_S[shift(i + 1) - 1] == 1
            for c, u in np.argwhere(before.phi_D == 1):
                c2, u2 = shift(c + 1) - 1, shift(u + 1) - 1
                assert after.phi_D[c2, u2] == 1
                assert after.dep_kind[c2, u2] == before.dep_kind[c, u]
                assert after.phi_O[c2, u2] == before.phi_O[c, u]
            assert after.phi_D.sum() == before.phi_D.sum()
            checked += 1
        assert checked >= 5

    def test_anchor_agreement_on_generated(self):
        for rule in ALL_DEP_RULES:
            try:
                sample = gen_dependency(rule, CATALOG[3], 2)
            except (IncompatibleRule, InvalidCombination):
                continue
            p, fs = analyze(sample.source)
            anchors = p.unit.anchors
            e_targets = sorted(a + 1 for a, k in anchors.items() if k.value == "e")
            s_targets = sorted(a + 1 for a, k in anchors.items() if k.value == "s")
            assert [fs.unit_id(i) for i in np.flatnonzero(fs.phi_E)] == e_targets
            assert [fs.unit_id(i) for i in np.flatnonzero(fs.phi_S)] == s_targets
