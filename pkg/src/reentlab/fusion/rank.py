"""Full-rankness verification: design-matrix rank, second-moment and
covariance spectra, and the Jacobian column rank of the fused score."""

from __future__ import annotations

from dataclasses import dataclass

import jax.numpy as jnp
import numpy as np

from .features import BranchFeatures
from .model import GateConfig, GateParams, HeadParams, params_pytree, sensitivity_vectors

RANK_TOL = 1e-9
JACOBIAN_TOL = 1e-8


@dataclass
class RankReport:
    rank: int
    min_eig_second_moment: float
    balance_epsilon: float
    cov_min_eig: float
    cov_bound_satisfied: bool
    marginals: list[float]

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "min_eig_second_moment": self.min_eig_second_moment,
            "balance_epsilon": self.balance_epsilon,
            "cov_min_eig": self.cov_min_eig,
            "cov_bound_satisfied": self.cov_bound_satisfied,
            "marginals": self.marginals,
        }


def elimination_rank(matrix: np.ndarray, tol: float = RANK_TOL) -> int:
    """Row-echelon rank with partial pivoting; pivots below tol are zero."""
    a = np.array(matrix, dtype=float)
    rows, cols = a.shape
    rank = 0
    for col in range(cols):
        if rank >= rows:
            break
        pivot = rank + int(np.argmax(np.abs(a[rank:, col])))
        if abs(a[pivot, col]) <= tol:
            continue
        a[[rank, pivot]] = a[[pivot, rank]]
        a[rank] = a[rank] / a[rank, col]
        for r in range(rows):
            if r != rank:
                a[r] = a[r] - a[r, col] * a[rank]
        rank += 1
    return rank


def design_matrix_rank(factor_bits: list) -> RankReport:
    z = np.asarray(factor_bits, dtype=float)
    if z.ndim != 2 or z.shape[1] != 4:
        raise ValueError("factor bits must form an N x 4 matrix")
    n = z.shape[0]
    if n == 0:
        raise ValueError("factor bits must be non-empty")

    rank = elimination_rank(z)
    second_moment = z.T @ z / n
    min_eig_m = float(np.linalg.eigvalsh(second_moment)[0])

    marginals = z.mean(axis=0)
    balance_eps = float(min(min(p, 1.0 - p) for p in marginals))

    centered = z - marginals
    cov = centered.T @ centered / n
    cov_min_eig = float(np.linalg.eigvalsh(cov)[0])
    bound = balance_eps * (1.0 - balance_eps)
    return RankReport(
        rank=rank,
        min_eig_second_moment=min_eig_m,
        balance_epsilon=balance_eps,
        cov_min_eig=cov_min_eig,
        cov_bound_satisfied=cov_min_eig >= bound - RANK_TOL,
        marginals=[float(p) for p in marginals],
    )


def jacobian_column_rank(gp: GateParams, hp: HeadParams, z: BranchFeatures,
                         sensitivity: str = "total") -> int:
    """Rank of the four stacked d logit / d z_k columns (H x 4)."""
    cfg = GateConfig.from_gate(gp, sensitivity)
    cols = sensitivity_vectors(params_pytree(gp, hp), jnp.asarray(z.stacked()), cfg)
    jac = np.asarray(cols).T  # H x 4
    svals = np.linalg.svd(jac, compute_uv=False)
    if svals.size == 0 or svals[0] == 0.0:
        return 0
    return int(np.sum(svals > JACOBIAN_TOL * svals[0]))
