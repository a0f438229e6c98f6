"""ERC-style interface catalog used by the contract generators."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

_SIG_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\(([^)]*)\)$")


@dataclass(frozen=True)
class InterfaceSpec:
    standard_name: str
    function_signature: str  # e.g. "transfer(address,uint256)"
    return_type: Optional[str]  # None means void
    import_path: str
    read_only: bool

    def __post_init__(self) -> None:
        if _SIG_RE.match(self.function_signature) is None:
            raise ValueError(f"unparseable signature {self.function_signature!r}")

    @property
    def method(self) -> str:
        m = _SIG_RE.match(self.function_signature)
        assert m is not None
        return m.group(1)

    @property
    def arg_types(self) -> tuple[str, ...]:
        m = _SIG_RE.match(self.function_signature)
        assert m is not None
        inner = m.group(2).strip()
        return tuple(t.strip() for t in inner.split(",")) if inner else ()

    @property
    def import_line(self) -> str:
        return f'import "{self.import_path}";'


_ERC20 = "@openzeppelin/contracts/token/ERC20/IERC20.sol"
_ERC721 = "@openzeppelin/contracts/token/ERC721/IERC721.sol"
_ERC1155 = "@openzeppelin/contracts/token/ERC1155/IERC1155.sol"
_ERC1363 = "@openzeppelin/contracts/interfaces/IERC1363.sol"
_FLASH = "@openzeppelin/contracts/interfaces/IERC3156FlashLender.sol"

CATALOG: tuple[InterfaceSpec, ...] = (
    InterfaceSpec("IERC20", "transfer(address,uint256)", "bool", _ERC20, False),
    InterfaceSpec("IERC20", "transferFrom(address,address,uint256)", "bool", _ERC20, False),
    InterfaceSpec("IERC20", "approve(address,uint256)", "bool", _ERC20, False),
    InterfaceSpec("IERC20", "balanceOf(address)", "uint256", _ERC20, True),
    InterfaceSpec("IERC20", "allowance(address,address)", "uint256", _ERC20, True),
    InterfaceSpec("IERC721", "ownerOf(uint256)", "address", _ERC721, True),
    InterfaceSpec("IERC721", "getApproved(uint256)", "address", _ERC721, True),
    InterfaceSpec("IERC721", "safeTransferFrom(address,address,uint256)", None, _ERC721, False),
    InterfaceSpec("IERC1155", "balanceOf(address,uint256)", "uint256", _ERC1155, True),
    InterfaceSpec("IERC1155", "safeTransferFrom(address,address,uint256,uint256,bytes)", None, _ERC1155, False),
    InterfaceSpec("IERC1363", "transferAndCall(address,uint256)", "bool", _ERC1363, False),
    InterfaceSpec("IERC3156FlashLender", "maxFlashLoan(address)", "uint256", _FLASH, True),
)

# address-parameter naming convention when casting from an address argument
ADDRESS_PARAM_NAMES = {
    "IERC20": "token",
    "IERC721": "nft",
    "IERC1155": "token1155",
    "IERC1363": "token1363",
    "IERC3156FlashLender": "lender",
}


def address_param_name(spec: InterfaceSpec) -> str:
    return ADDRESS_PARAM_NAMES.get(spec.standard_name, "target")


def specs_with_return(kind: Optional[str] = None, effectful: Optional[bool] = None) -> list[InterfaceSpec]:
    out = []
    for spec in CATALOG:
        if kind is not None:
            if kind == "void" and spec.return_type is not None:
                continue
            if kind == "nonvoid" and spec.return_type is None:
                continue
            if kind not in ("void", "nonvoid") and spec.return_type != kind:
                continue
        if effectful is not None and spec.read_only == effectful:
            continue
        out.append(spec)
    return out
