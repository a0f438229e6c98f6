"""Training loop: batched gated-fusion with warm-up and Jacobian alignment.

Per batch: extract -> gate (or fixed weights) -> fuse -> predict -> CE;
without fixed weights and with a positive alignment coefficient, add the
KL between the sensitivity target and the active-set gate.  Updates use
adaptive-moment gradient descent with decoupled weight decay.  During the
warm-up window only the gate score parameters move; afterwards gate and
head train jointly.  Everything is deterministic under the config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import jax
import jax.numpy as jnp
import numpy as np

from .features import BranchFeatures
from .model import (
    GateConfig,
    GateParams,
    HeadParams,
    batch_losses,
    params_pytree,
    total_loss,
)

GATE_KEYS = ("u", "c")
HEAD_KEYS = ("w", "b")


class NonFiniteLoss(Exception):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"non-finite loss at step {step}")


@dataclass
class TrainConfig:
    learning_rate: float = 0.05
    total_steps: int = 300
    batch_size: int = 32
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    sensitivity: str = "total"

    def __post_init__(self) -> None:
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")


@dataclass
class LossBreakdown:
    ce: float
    jaco: float
    lambda_jaco: float

    @property
    def total(self) -> float:
        return self.ce + self.lambda_jaco * self.jaco


@dataclass
class TrainResult:
    gate: GateParams
    head: HeadParams
    history: list[LossBreakdown] = field(default_factory=list)
    eval_history: list[tuple[int, float]] = field(default_factory=list)


class _AdamW:
    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.m: dict = {}
        self.v: dict = {}
        self.t: dict = {}

    def update(self, params: dict, grads: dict, keys: tuple[str, ...]) -> dict:
        out = dict(params)
        for key in keys:
            g = np.asarray(grads[key])
            if key not in self.m:
                self.m[key] = np.zeros_like(g)
                self.v[key] = np.zeros_like(g)
                self.t[key] = 0
            self.t[key] += 1
            t = self.t[key]
            self.m[key] = self.cfg.beta1 * self.m[key] + (1 - self.cfg.beta1) * g
            self.v[key] = self.cfg.beta2 * self.v[key] + (1 - self.cfg.beta2) * g * g
            m_hat = self.m[key] / (1 - self.cfg.beta1 ** t)
            v_hat = self.v[key] / (1 - self.cfg.beta2 ** t)
            theta = np.asarray(params[key])
            step = m_hat / (np.sqrt(v_hat) + self.cfg.eps) + self.cfg.weight_decay * theta
            out[key] = jnp.asarray(theta - self.cfg.learning_rate * step)
        return out


def _to_arrays(dataset: list[tuple[BranchFeatures, int]]) -> tuple[np.ndarray, np.ndarray]:
    zs = np.stack([z.stacked() for z, _ in dataset])
    ys = np.asarray([float(y) for _, y in dataset])
    return zs, ys


def train(
    dataset: list[tuple[BranchFeatures, int]],
    gp: GateParams,
    hp: HeadParams,
    cfg: TrainConfig,
    eval_hook: Optional[Callable[[int, GateParams, HeadParams], float]] = None,
    eval_every: Optional[int] = None,
) -> TrainResult:
    if not dataset:
        raise ValueError("dataset must be non-empty")
    if any(y not in (0, 1) for _, y in dataset):
        raise ValueError("labels must be binary")

    zs_all, ys_all = _to_arrays(dataset)
    n = len(dataset)
    gc = GateConfig.from_gate(gp, cfg.sensitivity)
    lam = float(gp.lambda_jaco)

    params = params_pytree(gp, hp)
    loss_and_grad = jax.jit(
        jax.value_and_grad(lambda p, z, y: total_loss(p, z, y, gc, lam)),
        static_argnames=(),
    )
    breakdown_fn = jax.jit(lambda p, z, y: batch_losses(p, z, y, gc, lam))

    opt = _AdamW(cfg)
    rng = np.random.default_rng(cfg.seed)
    warmup_steps = math.ceil(gp.warmup_ratio * cfg.total_steps)

    history: list[LossBreakdown] = []
    eval_history: list[tuple[int, float]] = []
    order = rng.permutation(n)
    cursor = 0

    for step in range(cfg.total_steps):
        if cursor + cfg.batch_size > n:
            order = rng.permutation(n)
            cursor = 0
        take = order[cursor:cursor + cfg.batch_size]
        cursor += cfg.batch_size
        zb = jnp.asarray(zs_all[take])
        yb = jnp.asarray(ys_all[take])

        loss, grads = loss_and_grad(params, zb, yb)
        if not np.isfinite(float(loss)):
            raise NonFiniteLoss(step)
        ce, jaco = breakdown_fn(params, zb, yb)
        history.append(LossBreakdown(float(ce), float(jaco), lam))

        keys = GATE_KEYS if step < warmup_steps else GATE_KEYS + HEAD_KEYS
        params = opt.update(params, grads, keys)

        if eval_hook is not None and eval_every and (step + 1) % eval_every == 0:
            g2, h2 = _unpack(params, gp)
            eval_history.append((step + 1, eval_hook(step + 1, g2, h2)))

    gate_out, head_out = _unpack(params, gp)
    return TrainResult(gate_out, head_out, history, eval_history)


def _unpack(params: dict, template: GateParams) -> tuple[GateParams, HeadParams]:
    gp = GateParams(
        u=np.asarray(params["u"]),
        c=np.asarray(params["c"]),
        tau_gate=template.tau_gate,
        mask=template.mask.copy(),
        pi=None if template.pi is None else template.pi.copy(),
        fixed_alpha=None if template.fixed_alpha is None else template.fixed_alpha.copy(),
        warmup_ratio=template.warmup_ratio,
        lambda_jaco=template.lambda_jaco,
        prior_mix=template.prior_mix,
    )
    hp = HeadParams(w=np.asarray(params["w"]), b=float(params["b"]))
    return gp, hp
