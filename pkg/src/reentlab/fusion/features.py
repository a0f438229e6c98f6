"""Deterministic per-branch feature extraction from a FactorSet.

The eight features per branch are frozen here; changing any entry is a
breaking change for saved checkpoints.  Every feature is zero on an
empty FactorSet.  Positions are normalized unit coordinates in (0, 1].

    call branch      [0] call count / N
                     [1] first call position
                     [2] last call position
                     [3] any-call flag
                     [4] fraction of high-level calls
                     [5] fraction of low-level calls
                     [6] mean call position
                     [7] position spread (last - first)

    update branch    [0] update count / N
                     [1] first update position
                     [2] last update position
                     [3] any-update flag
                     [4] mean update position
                     [5] fraction of updates in some dependency pair
                     [6] fraction of updates before the first call
                     [7] fraction of updates after the last call

    dependency branch[0] pair density over candidate pairs
                     [1] pair density over all N^2 pairs
                     [2] fraction DIRECT among pairs
                     [3] fraction INDIRECT among pairs
                     [4] fraction CTRL among pairs
                     [5] any-dependency flag
                     [6] fraction of calls with a dependency
                     [7] fraction of updates with a dependency

    ordering branch  [0] fraction of -1 among dependency pairs
                     [1] fraction of +1 among dependency pairs
                     [2] earliest -1 call position
                     [3] any -1 flag
                     [4] path-sensitive -1 flag
                     [5] earliest -1 update position
                     [6] fraction of candidate pairs ordered -1
                     [7] all-dependencies-safely-ordered flag
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..factors import DepKind, FactorSet

H = 8
BRANCHES = ("E", "S", "D", "O")


@dataclass
class BranchFeatures:
    z_E: np.ndarray
    z_S: np.ndarray
    z_D: np.ndarray
    z_O: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.stack([self.z_E, self.z_S, self.z_D, self.z_O])

    def to_json(self) -> dict:
        return {
            "E": self.z_E.tolist(),
            "S": self.z_S.tolist(),
            "D": self.z_D.tolist(),
            "O": self.z_O.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BranchFeatures":
        return cls(*(np.asarray(obj[k], dtype=float) for k in BRANCHES))

    @classmethod
    def from_stacked(cls, z: np.ndarray) -> "BranchFeatures":
        return cls(z[0], z[1], z[2], z[3])


def extract_branch_features(fs: FactorSet) -> BranchFeatures:
    n = max(fs.n_units, 1)
    pos = lambda idx: (idx + 1) / n

    calls = np.flatnonzero(fs.phi_E)
    updates = np.flatnonzero(fs.phi_S)
    dep_pairs = np.argwhere(fs.phi_D == 1)
    n_calls, n_updates, n_deps = len(calls), len(updates), len(dep_pairs)
    n_candidates = n_calls * n_updates

    z_e = np.zeros(H)
    if n_calls:
        kinds = [fs.call_kinds.get(fs.unit_id(int(i)), "high_level") for i in calls]
        z_e[0] = n_calls / n
        z_e[1] = pos(calls[0])
        z_e[2] = pos(calls[-1])
        z_e[3] = 1.0
        z_e[4] = sum(k == "high_level" for k in kinds) / n_calls
        z_e[5] = sum(k == "low_level" for k in kinds) / n_calls
        z_e[6] = float(np.mean([(i + 1) / n for i in calls]))
        z_e[7] = pos(calls[-1]) - pos(calls[0])

    z_s = np.zeros(H)
    if n_updates:
        z_s[0] = n_updates / n
        z_s[1] = pos(updates[0])
        z_s[2] = pos(updates[-1])
        z_s[3] = 1.0
        z_s[4] = float(np.mean([(i + 1) / n for i in updates]))
        dep_updates = {int(u) for _, u in dep_pairs}
        z_s[5] = sum(int(u) in dep_updates for u in updates) / n_updates
        if n_calls:
            z_s[6] = sum(u < calls[0] for u in updates) / n_updates
            z_s[7] = sum(u > calls[-1] for u in updates) / n_updates

    z_d = np.zeros(H)
    if n_deps:
        kinds_mat = fs.dep_kind
        z_d[0] = n_deps / n_candidates
        z_d[1] = n_deps / (n * n)
        z_d[2] = sum(kinds_mat[c, u] == DepKind.DIRECT for c, u in dep_pairs) / n_deps
        z_d[3] = sum(kinds_mat[c, u] == DepKind.INDIRECT for c, u in dep_pairs) / n_deps
        z_d[4] = sum(kinds_mat[c, u] == DepKind.CTRL for c, u in dep_pairs) / n_deps
        z_d[5] = 1.0
        dep_calls = {int(c) for c, _ in dep_pairs}
        dep_updates = {int(u) for _, u in dep_pairs}
        z_d[6] = len(dep_calls) / n_calls
        z_d[7] = len(dep_updates) / n_updates

    z_o = np.zeros(H)
    if n_deps:
        risky = np.argwhere(fs.phi_O == -1)
        safe = np.argwhere(fs.phi_O == 1)
        z_o[0] = len(risky) / n_deps
        z_o[1] = len(safe) / n_deps
        if len(risky):
            z_o[2] = pos(min(int(c) for c, _ in risky))
            z_o[3] = 1.0
            z_o[4] = 1.0 if fs.path_sensitive_pairs else 0.0
            z_o[5] = pos(min(int(u) for _, u in risky))
        z_o[6] = len(risky) / n_candidates
        z_o[7] = 1.0 if len(safe) == n_deps else 0.0

    return BranchFeatures(z_e, z_s, z_d, z_o)
