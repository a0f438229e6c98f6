"""Gated fusion over the four factor branches.

Forward pass: per-branch linear scores gate a temperature softmax whose
weights convexly combine the branch features; a linear head produces the
logit.  The Jacobian-alignment loss pulls the gate toward the normalized
per-branch gradient sensitivities of the true-class logit.

All numerics run in float64 (JAX x64); same-seed runs are bit-identical
on CPU.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Optional

import jax
import jax.numpy as jnp
import numpy as np

jax.config.update("jax_enable_x64", True)

from .features import BRANCHES, H, BranchFeatures

NEG_INF = -jnp.inf
EPS_LOG = 1e-12


class AllMasked(Exception):
    pass


class DegenerateSensitivity(Warning):
    pass


@dataclass
class GateParams:
    u: np.ndarray  # (4, H) per-branch score weights
    c: np.ndarray  # (4,) per-branch score biases
    tau_gate: float = 1.0
    mask: np.ndarray = field(default_factory=lambda: np.ones(4))
    pi: Optional[np.ndarray] = None
    fixed_alpha: Optional[np.ndarray] = None
    warmup_ratio: float = 0.1
    lambda_jaco: float = 0.1
    prior_mix: bool = False  # preserve prior mass on disabled branches

    def __post_init__(self) -> None:
        self.u = np.asarray(self.u, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        self.mask = np.asarray(self.mask, dtype=float)
        if self.tau_gate <= 0:
            raise ValueError("tau_gate must be positive")
        if not self.mask.any():
            raise AllMasked("at least one branch must stay enabled")
        if self.fixed_alpha is not None:
            fa = np.asarray(self.fixed_alpha, dtype=float)
            if fa.min() < 0 or abs(fa.sum() - 1.0) > 1e-9:
                raise ValueError("fixed_alpha must be a probability simplex")
            self.fixed_alpha = fa
        if self.pi is not None:
            self.pi = np.asarray(self.pi, dtype=float)
        if not 0.0 <= self.warmup_ratio <= 1.0:
            raise ValueError("warmup_ratio must lie in [0, 1]")
        if self.lambda_jaco < 0:
            raise ValueError("lambda_jaco must be nonnegative")


@dataclass
class HeadParams:
    w: np.ndarray
    b: float = 0.0

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=float)


def init_params(h: int = H, seed: int = 0) -> tuple[GateParams, HeadParams]:
    """Seeded gate init; zero head so warm-up updates are reproducible."""
    rng = np.random.default_rng(seed)
    gate = GateParams(u=rng.uniform(-0.1, 0.1, size=(4, h)), c=np.zeros(4))
    head = HeadParams(w=np.zeros(h), b=0.0)
    return gate, head


# ---------------------------------------------------------------------------
# Pure forward functions.  `params` is the trainable pytree
# {"u": (4,H), "c": (4,), "w": (H,), "b": ()}; everything else is static.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GateConfig:
    tau_gate: float
    mask: tuple[float, ...]
    fixed_alpha: Optional[tuple[float, ...]]
    prior_mix: bool = False
    pi: Optional[tuple[float, ...]] = None
    sensitivity: str = "total"  # or "fusion-only"

    @classmethod
    def from_gate(cls, gp: GateParams, sensitivity: str = "total") -> "GateConfig":
        return cls(
            tau_gate=gp.tau_gate,
            mask=tuple(float(x) for x in gp.mask),
            fixed_alpha=tuple(float(x) for x in gp.fixed_alpha) if gp.fixed_alpha is not None else None,
            prior_mix=gp.prior_mix,
            pi=tuple(float(x) for x in gp.pi) if gp.pi is not None else None,
            sensitivity=sensitivity,
        )


def params_pytree(gp: GateParams, hp: HeadParams) -> dict:
    return {
        "u": jnp.asarray(gp.u),
        "c": jnp.asarray(gp.c),
        "w": jnp.asarray(hp.w),
        "b": jnp.asarray(float(hp.b)),
    }


def gate_weights(params: dict, z: jnp.ndarray, cfg: GateConfig) -> jnp.ndarray:
    """Simplex weights over branches; masked branches get exactly zero."""
    if cfg.fixed_alpha is not None:
        return jnp.asarray(cfg.fixed_alpha)
    mask = jnp.asarray(cfg.mask)
    s = jnp.sum(params["u"] * z, axis=1) + params["c"]
    s = jnp.where(mask > 0, s, NEG_INF)
    shifted = s / cfg.tau_gate
    shifted = shifted - jnp.max(jnp.where(mask > 0, shifted, -1e30))
    expd = jnp.where(mask > 0, jnp.exp(shifted), 0.0)
    alpha_on = expd / jnp.sum(expd)
    if cfg.prior_mix and cfg.pi is not None:
        pi = jnp.asarray(cfg.pi)
        p_fixed = jnp.sum((1.0 - mask) * pi)
        return (1.0 - p_fixed) * alpha_on + (1.0 - mask) * pi
    gated = alpha_on * mask
    return gated / jnp.sum(gated)


def fuse(z: jnp.ndarray, alpha: jnp.ndarray) -> jnp.ndarray:
    return jnp.sum(alpha[:, None] * z, axis=0)


def head_logit(params: dict, h: jnp.ndarray) -> jnp.ndarray:
    return jnp.dot(params["w"], h) + params["b"]


def forward_logit(params: dict, z: jnp.ndarray, cfg: GateConfig) -> jnp.ndarray:
    alpha = gate_weights(params, z, cfg)
    return head_logit(params, fuse(z, alpha))


def sensitivity_vectors(params: dict, z: jnp.ndarray, cfg: GateConfig) -> jnp.ndarray:
    """Total derivative d logit / d z_k for each branch, shape (4, H).

    Includes both the fusion path (alpha_k * w) and the gating path through
    the branch score s_k; with fixed weights the gating path vanishes.
    """
    alpha = gate_weights(params, z, cfg)
    w = params["w"]
    fused = fuse(z, alpha)
    cols = alpha[:, None] * w[None, :]
    if cfg.fixed_alpha is None and cfg.sensitivity == "total":
        wz = z @ w  # (4,)
        coef = alpha * (wz - jnp.dot(w, fused)) / cfg.tau_gate
        cols = cols + coef[:, None] * params["u"]
        cols = cols * jnp.asarray(cfg.mask)[:, None]
    return cols


def _safe_norm(v: jnp.ndarray) -> jnp.ndarray:
    return jnp.sqrt(jnp.sum(v * v, axis=-1) + 1e-24)


def sensitivity_target(params: dict, z: jnp.ndarray, cfg: GateConfig, y_true: int = 1) -> tuple[jnp.ndarray, jnp.ndarray]:
    """Normalized gradient-norm distribution q over branches.

    The true-class logit is the head logit for class 1 and its negation for
    class 0; the sign cancels in the norm, so q is label-invariant.
    """
    del y_true
    cols = sensitivity_vectors(params, z, cfg)
    g = _safe_norm(cols) * jnp.asarray(cfg.mask)
    total = jnp.sum(g)
    q = g / (total + EPS_LOG)
    return q, g


def sensitivity_target_checked(params: dict, z: jnp.ndarray, cfg: GateConfig) -> np.ndarray:
    """q with the degenerate all-zero case resolved to uniform-over-active."""
    q, g = sensitivity_target(params, z, cfg)
    if float(jnp.sum(g)) < 1e-18:
        warnings.warn("all branch sensitivities vanish; using uniform target", DegenerateSensitivity)
        active = np.asarray(cfg.mask) if cfg.fixed_alpha is None else np.ones(4)
        return active / active.sum()
    return np.asarray(q)


def kl_divergence(q: jnp.ndarray, p: jnp.ndarray) -> jnp.ndarray:
    """KL(q || p) with 0 log 0 = 0 and an epsilon floor inside the log."""
    q = jnp.asarray(q, dtype=jnp.float64)
    p = jnp.asarray(p, dtype=jnp.float64)
    terms = jnp.where(q > 0, q * (jnp.log(jnp.maximum(q, EPS_LOG)) - jnp.log(jnp.maximum(p, EPS_LOG))), 0.0)
    return jnp.sum(terms)


def jacobian_alignment_loss(q: jnp.ndarray, alpha: jnp.ndarray, mask: jnp.ndarray) -> jnp.ndarray:
    """KL(q || alpha-hat) where alpha-hat renormalizes over active branches."""
    mask = jnp.asarray(mask, dtype=jnp.float64)
    gated = jnp.asarray(alpha) * mask
    alpha_hat = gated / (jnp.sum(gated) + EPS_LOG)
    return kl_divergence(q, alpha_hat)


def binary_ce(logit: jnp.ndarray, y: jnp.ndarray) -> jnp.ndarray:
    return jax.nn.softplus(logit) - y * logit


def sample_loss(params: dict, z: jnp.ndarray, y: jnp.ndarray, cfg: GateConfig, lambda_jaco: float) -> tuple[jnp.ndarray, jnp.ndarray]:
    """(ce, jaco) for one sample; jaco is zero under fixed weights."""
    alpha = gate_weights(params, z, cfg)
    logit = head_logit(params, fuse(z, alpha))
    ce = binary_ce(logit, y)
    if cfg.fixed_alpha is not None or lambda_jaco == 0.0:
        return ce, jnp.asarray(0.0)
    q, _ = sensitivity_target(params, z, cfg)
    jaco = jacobian_alignment_loss(q, alpha, jnp.asarray(cfg.mask))
    return ce, jaco


def batch_losses(params: dict, zs: jnp.ndarray, ys: jnp.ndarray, cfg: GateConfig, lambda_jaco: float) -> tuple[jnp.ndarray, jnp.ndarray]:
    ce, jaco = jax.vmap(lambda z, y: sample_loss(params, z, y, cfg, lambda_jaco))(zs, ys)
    return jnp.mean(ce), jnp.mean(jaco)


def total_loss(params: dict, zs: jnp.ndarray, ys: jnp.ndarray, cfg: GateConfig, lambda_jaco: float) -> jnp.ndarray:
    ce, jaco = batch_losses(params, zs, ys, cfg, lambda_jaco)
    return ce + lambda_jaco * jaco


# ---------------------------------------------------------------------------
# Convenience wrappers over (GateParams, HeadParams).
# ---------------------------------------------------------------------------


def gate(z: BranchFeatures, gp: GateParams) -> np.ndarray:
    cfg = GateConfig.from_gate(gp)
    return np.asarray(gate_weights(params_pytree(gp, HeadParams(np.zeros(gp.u.shape[1]))), jnp.asarray(z.stacked()), cfg))


def fuse_and_predict(z: BranchFeatures, omega: np.ndarray, hp: HeadParams) -> tuple[np.ndarray, float, float]:
    h = np.asarray(fuse(jnp.asarray(z.stacked()), jnp.asarray(omega)))
    logit = float(np.dot(hp.w, h) + hp.b)
    prob = float(1.0 / (1.0 + np.exp(-logit)))
    return h, logit, prob


def predict_proba(gp: GateParams, hp: HeadParams, z: BranchFeatures, sensitivity: str = "total") -> float:
    cfg = GateConfig.from_gate(gp, sensitivity)
    logit = forward_logit(params_pytree(gp, hp), jnp.asarray(z.stacked()), cfg)
    return float(jax.nn.sigmoid(logit))


# ---------------------------------------------------------------------------
# Checkpoint format: versioned JSON with explicit per-branch field names.
# ---------------------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(path: str, gp: GateParams, hp: HeadParams, extra: Optional[dict] = None) -> None:
    payload: dict = {"version": CHECKPOINT_VERSION, "gate": {}, "head": {}}
    for i, name in enumerate(BRANCHES):
        payload["gate"][f"u_{name}"] = gp.u[i].tolist()
        payload["gate"][f"c_{name}"] = float(gp.c[i])
    payload["gate"]["tau_gate"] = gp.tau_gate
    payload["gate"]["mask"] = gp.mask.tolist()
    payload["gate"]["pi"] = gp.pi.tolist() if gp.pi is not None else None
    payload["gate"]["fixed_alpha"] = gp.fixed_alpha.tolist() if gp.fixed_alpha is not None else None
    payload["gate"]["warmup_ratio"] = gp.warmup_ratio
    payload["gate"]["lambda_jaco"] = gp.lambda_jaco
    payload["gate"]["prior_mix"] = gp.prior_mix
    payload["head"]["w"] = hp.w.tolist()
    payload["head"]["b"] = float(hp.b)
    payload["config"] = extra or {}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def load_checkpoint(path: str) -> tuple[GateParams, HeadParams, dict]:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')!r}")
    g = payload["gate"]
    gp = GateParams(
        u=np.asarray([g[f"u_{name}"] for name in BRANCHES]),
        c=np.asarray([g[f"c_{name}"] for name in BRANCHES]),
        tau_gate=g["tau_gate"],
        mask=np.asarray(g["mask"]),
        pi=np.asarray(g["pi"]) if g.get("pi") is not None else None,
        fixed_alpha=np.asarray(g["fixed_alpha"]) if g.get("fixed_alpha") is not None else None,
        warmup_ratio=g.get("warmup_ratio", 0.1),
        lambda_jaco=g.get("lambda_jaco", 0.1),
        prior_mix=g.get("prior_mix", False),
    )
    hp = HeadParams(w=np.asarray(payload["head"]["w"]), b=payload["head"]["b"])
    return gp, hp, payload.get("config", {})
