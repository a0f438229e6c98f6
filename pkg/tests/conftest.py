from __future__ import annotations

import importlib.util
import json
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = Path(__file__).resolve().parent / "data"

CLASSIC_WITHDRAW = """\
// SPDX-License-Identifier: MIT
pragma solidity ^0.8.20;
import "@openzeppelin/contracts/token/ERC20/IERC20.sol";
contract Jar {
    mapping(address => uint256) public credits;
    function withdraw(address to, uint256 amount) external {
        require(credits[to] >= amount);
        //e
        (bool sent, ) = to.call{value: amount}("");
        require(sent);
        //s
        credits[to] -= amount;
    }
}
"""

SAFE_CEI = """\
// SPDX-License-Identifier: MIT
pragma solidity ^0.8.20;
import "@openzeppelin/contracts/token/ERC20/IERC20.sol";
contract Vault {
    mapping(address => uint256) public credits;
    IERC20 public prime;
    function withdraw(address payee, uint256 qty) external {
        //CHECK
        require(credits[payee] >= qty);
        //EFFECT
        credits[payee] = credits[payee] - qty;
        //INTERACTION
        prime.transfer(payee, credits[payee]);
    }
}
"""

DIAMOND = """\
// SPDX-License-Identifier: MIT
pragma solidity ^0.8.20;
import "@openzeppelin/contracts/token/ERC20/IERC20.sol";
contract Fork {
    uint256 public tally;
    function poke(bool fast, uint256 n) external {
        if (fast) {
            tally = n;
        } else {
            tally = n + 1;
        }
    }
}
"""

EARLY_RETURN = """\
// SPDX-License-Identifier: MIT
pragma solidity ^0.8.20;
import "@openzeppelin/contracts/token/ERC20/IERC20.sol";
contract Gatekeeper {
    uint256 public tally;
    function poke(bool halt, uint256 n) external {
        if (halt) {
            return;
        }
        tally = n;
        tally = n + 1;
    }
}
"""


@pytest.fixture(scope="session")
def expected():
    """Frozen values from the independent high-precision evaluation script."""
    spec = importlib.util.spec_from_file_location(
        "compute_expected", REPO_ROOT / "tools" / "compute_expected.py"
    )
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod.as_floats()


@pytest.fixture(scope="session")
def ir_record_texts():
    out = {}
    for path in sorted((DATA_DIR / "ir_records").glob("*.json")):
        out[path.stem] = path.read_text()
    return out


def load_golden(name: str):
    return json.loads((DATA_DIR / "golden" / name).read_text())
