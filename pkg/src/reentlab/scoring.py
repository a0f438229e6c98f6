"""Boolean compositional reentrancy rule and its differentiable relaxation.

The boolean rule flags a program when some (call, update) pair is
dependency-linked and ordered call-before-update.  The soft score maps
the discrete order value through a sigmoid sharpened by `alpha`, then
aggregates all pair activations with a log-sum-exp; a second sigmoid
thresholded by `tau` yields the probability.

The literal full-grid log-sum-exp has a floor of log(N^2) contributed by
inactive pairs, which drowns a single witness in long programs.  Scores
are therefore centered by the zero-signal baseline (log of the number of
summed pairs), and the default mode restricts the sum to candidate pairs
with both factor bits set; `full_grid` is retained for fidelity ablation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .factors import FactorSet


@dataclass
class ScoreParams:
    alpha: float = 4.0
    tau: float = 2.0
    sum_mode: str = "candidate_restricted"  # or "full_grid"

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.sum_mode not in ("candidate_restricted", "full_grid"):
            raise ValueError(f"unknown sum_mode {self.sum_mode!r}")


@dataclass
class Verdict:
    vulnerable: bool
    witnesses: list[tuple[int, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "vulnerable": self.vulnerable,
            "witnesses": [{"call": c, "update": u} for c, u in self.witnesses],
        }


@dataclass
class SoftScore:
    raw_f: float
    centered_f: float
    n_terms: int
    probability: float = 0.0


def boolean_rule(fs: FactorSet) -> Verdict:
    """A single pair with dependency and call-before-update order suffices."""
    hits = np.argwhere(
        (fs.phi_E[:, None] == 1)
        & (fs.phi_S[None, :] == 1)
        & (fs.phi_D == 1)
        & (fs.phi_O == -1)
    )
    witnesses = [(fs.unit_id(int(c)), fs.unit_id(int(u))) for c, u in hits]
    return Verdict(vulnerable=bool(witnesses), witnesses=witnesses)


def soft_order(phi_o_value: float, alpha: float) -> float:
    """Monotone-decreasing risk weight in (0, 1); 0.5 at order 0."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return 1.0 / (1.0 + math.exp(alpha * phi_o_value))


def _activation_matrix(fs: FactorSet, alpha: float, phi_o: Optional[np.ndarray] = None) -> np.ndarray:
    order = fs.phi_O.astype(float) if phi_o is None else phi_o
    soft = 1.0 / (1.0 + np.exp(alpha * order))
    return fs.phi_E[:, None].astype(float) * fs.phi_S[None, :].astype(float) * fs.phi_D.astype(float) * soft


def _candidate_mask(fs: FactorSet) -> np.ndarray:
    return (fs.phi_E[:, None] == 1) & (fs.phi_S[None, :] == 1)


def soft_score(fs: FactorSet, params: ScoreParams) -> SoftScore:
    a = _activation_matrix(fs, params.alpha)
    if params.sum_mode == "full_grid":
        terms = a.reshape(-1)
    else:
        terms = a[_candidate_mask(fs)]
    n = terms.size
    if n == 0:
        score = SoftScore(raw_f=0.0, centered_f=0.0, n_terms=0)
    else:
        raw = float(np.logaddexp.reduce(terms))
        score = SoftScore(raw_f=raw, centered_f=raw - math.log(n), n_terms=n)
    score.probability = predict(score, params)
    return score


def predict(score: SoftScore, params: ScoreParams) -> float:
    """Probability from the centered score; classify positive at 0.5."""
    z = params.alpha * score.centered_f - params.tau
    return 1.0 / (1.0 + math.exp(-z))


def soft_score_grad_order(fs: FactorSet, params: ScoreParams) -> np.ndarray:
    """d raw_f / d phi_O, treating order entries as continuous inputs."""
    a = _activation_matrix(fs, params.alpha)
    if params.sum_mode == "full_grid":
        mask = np.ones_like(a, dtype=bool)
    else:
        mask = _candidate_mask(fs)
    if not mask.any():
        return np.zeros_like(a)
    terms = np.where(mask, a, -np.inf)
    w = np.exp(terms - terms.max())
    w = w / w.sum()

    order = fs.phi_O.astype(float)
    s = 1.0 / (1.0 + np.exp(params.alpha * order))
    ds = -params.alpha * s * (1.0 - s)
    gate = fs.phi_E[:, None].astype(float) * fs.phi_S[None, :].astype(float) * fs.phi_D.astype(float)
    return w * gate * ds


def soft_score_at_order(fs: FactorSet, params: ScoreParams, phi_o: np.ndarray) -> float:
    """raw_f evaluated at a continuous replacement of the order matrix."""
    a = _activation_matrix(fs, params.alpha, phi_o=phi_o)
    if params.sum_mode == "full_grid":
        terms = a.reshape(-1)
    else:
        terms = a[_candidate_mask(fs)]
    if terms.size == 0:
        return 0.0
    return float(np.logaddexp.reduce(terms))


def score_report(fs: FactorSet, params: ScoreParams) -> dict:
    verdict = boolean_rule(fs)
    score = soft_score(fs, params)
    return {
        "verdict": verdict.to_json(),
        "raw_f": score.raw_f,
        "centered_f": score.centered_f,
        "n_terms": score.n_terms,
        "probability": score.probability,
    }
