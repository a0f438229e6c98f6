"""Dependency rule table and CEI behavior taxonomy driving the generators."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..minisol.nodes import AnchorKind


class IncompatibleRule(Exception):
    pass


class InvalidCombination(Exception):
    pass


@dataclass(frozen=True)
class DepRule:
    dep_id: str  # A_DIRECT | B_INDIRECT | C_CTRL | Z_NONE
    direction: str  # E_TO_S | S_TO_E
    requires_transformation: bool
    forbidden_patterns: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.dep_id not in ("A_DIRECT", "B_INDIRECT", "C_CTRL", "Z_NONE"):
            raise ValueError(f"unknown dependency rule {self.dep_id!r}")
        if self.direction not in ("E_TO_S", "S_TO_E"):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.dep_id == "A_DIRECT" and self.requires_transformation:
            raise ValueError("direct dependency forbids transformation")
        if self.dep_id == "B_INDIRECT" and not self.requires_transformation:
            raise ValueError("indirect dependency requires a transformation")
        if self.dep_id == "C_CTRL" and self.direction != "E_TO_S":
            raise IncompatibleRule("control dependency flows from the call's return value")


def dep_rule(dep_id: str, direction: str) -> DepRule:
    forbidden = {
        "A_DIRECT": ("arithmetic transformation", "logical transformation", "hash transformation"),
        "B_INDIRECT": ("identity passthrough",),
        "C_CTRL": ("data flow into the written value",),
        "Z_NONE": ("any data link", "any control link"),
    }[dep_id]
    return DepRule(
        dep_id=dep_id,
        direction=direction,
        requires_transformation=(dep_id == "B_INDIRECT"),
        forbidden_patterns=forbidden,
    )


ALL_DEP_RULES: tuple[DepRule, ...] = (
    dep_rule("A_DIRECT", "E_TO_S"),
    dep_rule("A_DIRECT", "S_TO_E"),
    dep_rule("B_INDIRECT", "E_TO_S"),
    dep_rule("B_INDIRECT", "S_TO_E"),
    dep_rule("C_CTRL", "E_TO_S"),
    dep_rule("Z_NONE", "E_TO_S"),
    dep_rule("Z_NONE", "S_TO_E"),
)


@dataclass(frozen=True)
class CeiPattern:
    label: str  # GOOD | RISK
    type_id: str
    anchor_sequence: tuple[AnchorKind, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.type_id == "CEI_OK":
            expected = (AnchorKind.CHECK, AnchorKind.EFFECT, AnchorKind.INTERACTION)
            if self.anchor_sequence != expected:
                raise ValueError("CEI_OK must order check, effect, interaction")
        if self.type_id == "POST_INTERACTION_EFFECTS":
            if self.anchor_sequence.count(AnchorKind.EFFECT) != 2:
                raise ValueError("post-interaction pattern carries two effects")


CEI_OK = CeiPattern(
    "GOOD", "CEI_OK",
    (AnchorKind.CHECK, AnchorKind.EFFECT, AnchorKind.INTERACTION),
)
SIMPLE_INT_BEFORE_EFFECT = CeiPattern(
    "RISK", "SIMPLE_INT_BEFORE_EFFECT",
    (AnchorKind.CHECK, AnchorKind.INTERACTION, AnchorKind.EFFECT),
)
POST_INTERACTION_EFFECTS = CeiPattern(
    "RISK", "POST_INTERACTION_EFFECTS",
    (AnchorKind.CHECK, AnchorKind.EFFECT, AnchorKind.INTERACTION, AnchorKind.EFFECT),
)
PATH_SENSITIVE_I_BEFORE_E = CeiPattern(
    "RISK", "PATH_SENSITIVE_I_BEFORE_E",
    (AnchorKind.CHECK, AnchorKind.INTERACTION, AnchorKind.EFFECT),
)

ALL_CEI_PATTERNS: tuple[CeiPattern, ...] = (
    CEI_OK,
    SIMPLE_INT_BEFORE_EFFECT,
    POST_INTERACTION_EFFECTS,
    PATH_SENSITIVE_I_BEFORE_E,
)

PATTERN_BY_ID = {p.type_id: p for p in ALL_CEI_PATTERNS}
