"""Class-prior-shift stability experiment.

Trains the gated fusion model on corpora generated at two positive:negative
ratios (three seeds each), records held-out AUROC at every evaluation
checkpoint, and reports how far the trajectories drift across the two
prior settings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import jax
import jax.numpy as jnp
import numpy as np

from .datagen.corpus import gen_corpus
from .datagen.templates import LabeledSample
from .factors import analyze_source
from .fusion.features import BranchFeatures, extract_branch_features
from .fusion.model import GateConfig, GateParams, HeadParams, forward_logit, init_params, params_pytree
from .fusion.train import TrainConfig, train
from .metrics import SingleClass, auroc_rank


@dataclass
class PriorShiftConfig:
    ratios: tuple[str, str] = ("1:2", "0.5:0.95")
    seeds: tuple[int, ...] = (0, 1, 2)
    train_count: int = 696
    eval_count: int = 240
    total_steps: int = 300
    eval_fraction: float = 0.1  # checkpoint cadence as a fraction of steps
    learning_rate: float = 0.05
    batch_size: int = 32
    lambda_jaco: float = 0.1
    tau_gate: float = 1.0
    warmup_ratio: float = 0.1


def featurize_samples(samples: list[LabeledSample]) -> list[tuple[BranchFeatures, int]]:
    out = []
    for s in samples:
        _, fs = analyze_source(s.source)
        out.append((extract_branch_features(fs), int(s.labels["vulnerable"])))
    return out


def _batched_auroc(gp: GateParams, hp: HeadParams, zs: np.ndarray, ys: np.ndarray) -> float:
    cfg = GateConfig.from_gate(gp)
    params = params_pytree(gp, hp)
    logits = jax.vmap(lambda z: forward_logit(params, z, cfg))(jnp.asarray(zs))
    try:
        return auroc_rank(np.asarray(logits), ys)
    except SingleClass:
        raise


@dataclass
class PriorShiftReport:
    runs: list[dict] = field(default_factory=list)
    mean_cross_ratio_deviation: float = 0.0
    max_pairwise_deviation: float = 0.0
    final_aurocs: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "runs": self.runs,
            "mean_cross_ratio_deviation": self.mean_cross_ratio_deviation,
            "max_pairwise_deviation": self.max_pairwise_deviation,
            "final_aurocs": self.final_aurocs,
        }


def run_prior_shift_experiment(cfg: PriorShiftConfig = PriorShiftConfig()) -> PriorShiftReport:
    eval_corpus = gen_corpus(cfg.eval_count, ratio="1:1", seed=977)
    eval_set = featurize_samples(eval_corpus.samples)
    eval_z = np.stack([z.stacked() for z, _ in eval_set])
    eval_y = np.asarray([y for _, y in eval_set])
    if eval_y.min() == eval_y.max():
        raise SingleClass("held-out set must contain both classes")

    eval_every = max(1, int(round(cfg.eval_fraction * cfg.total_steps)))
    report = PriorShiftReport()
    trajectories: dict[str, list[list[float]]] = {r: [] for r in cfg.ratios}

    for ratio in cfg.ratios:
        for seed in cfg.seeds:
            corpus = gen_corpus(cfg.train_count, ratio=ratio, seed=seed)
            train_set = featurize_samples(corpus.samples)
            gp, hp = init_params(seed=seed)
            gp.tau_gate = cfg.tau_gate
            gp.lambda_jaco = cfg.lambda_jaco
            gp.warmup_ratio = cfg.warmup_ratio
            tc = TrainConfig(
                learning_rate=cfg.learning_rate,
                total_steps=cfg.total_steps,
                batch_size=cfg.batch_size,
                seed=seed,
            )
            result = train(
                train_set, gp, hp, tc,
                eval_hook=lambda step, g, h: _batched_auroc(g, h, eval_z, eval_y),
                eval_every=eval_every,
            )
            traj = [auc for _, auc in result.eval_history]
            trajectories[ratio].append(traj)
            report.runs.append({
                "ratio": ratio,
                "seed": seed,
                "auroc_trajectory": traj,
                "checkpoints": [s for s, _ in result.eval_history],
                "final_auroc": traj[-1],
                "final_ce": result.history[-1].ce,
            })
            report.final_aurocs.append(traj[-1])

    r_a, r_b = cfg.ratios
    deviations = []
    for ta in trajectories[r_a]:
        for tb in trajectories[r_b]:
            deviations.append(float(np.mean(np.abs(np.asarray(ta) - np.asarray(tb)))))
    report.mean_cross_ratio_deviation = float(np.mean(deviations))
    all_trajs = trajectories[r_a] + trajectories[r_b]
    pairwise = [
        float(np.max(np.abs(np.asarray(t1) - np.asarray(t2))))
        for i, t1 in enumerate(all_trajs)
        for t2 in all_trajs[i + 1:]
    ]
    report.max_pairwise_deviation = float(np.max(pairwise)) if pairwise else 0.0
    return report
