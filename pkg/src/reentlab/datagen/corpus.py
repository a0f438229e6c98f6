"""Stratified corpus generation with class-prior control and the
rank-certificate manifest.

The probe-bit corpus draws its four per-sample bits from an exact product
table whenever the requested size divides the table denominators: the
joint cell counts then equal N times the product of the marginals, the
empirical bit covariance is exactly diagonal, and its minimum eigenvalue
meets the balance lower bound by construction.  Non-divisible sizes fall
back to largest-remainder rounding (positive count stays within one
sample of the request).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .interfaces import CATALOG
from .rules import ALL_CEI_PATTERNS, ALL_DEP_RULES, IncompatibleRule, InvalidCombination
from .templates import LabeledSample, gen_dependency, gen_external_call, gen_ordering, gen_probe

BIT_COMBOS = tuple(itertools.product((0, 1), repeat=4))


@dataclass
class CorpusResult:
    samples: list[LabeledSample]
    manifest: dict = field(default_factory=dict)


def parse_ratio(text: str) -> tuple[Fraction, Fraction]:
    try:
        pos_s, neg_s = text.split(":")
        pos, neg = Fraction(pos_s.strip()), Fraction(neg_s.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"ratio must look like '1:2', got {text!r}") from exc
    if pos <= 0 or neg <= 0:
        raise ValueError("ratio parts must be positive")
    return pos, neg


def _choose_marginals(pos_frac: Fraction) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """(pE, pS, pD, pO) with pD * pO equal to the positive fraction."""
    half = Fraction(1, 2)
    for p_o in (half, Fraction(3, 4), Fraction(4, 5)):
        p_d = pos_frac / p_o
        if Fraction(1, 5) <= p_d <= Fraction(4, 5):
            return half, half, p_d, p_o
    raise ValueError(f"positive fraction {pos_frac} is outside the stratifiable range")


def _cell_probability(bits: tuple[int, int, int, int], marginals) -> Fraction:
    prob = Fraction(1)
    for bit, p in zip(bits, marginals):
        prob *= p if bit else (1 - p)
    return prob


def _largest_remainder(total: int, weights: list[Fraction]) -> list[int]:
    scale = sum(weights)
    quotas = [Fraction(total) * w / scale for w in weights]
    counts = [int(q) for q in quotas]
    short = total - sum(counts)
    by_frac = sorted(range(len(weights)), key=lambda i: (quotas[i] - counts[i], -i), reverse=True)
    for i in by_frac[:short]:
        counts[i] += 1
    return counts


def stratify_cells(count: int, pos_frac: Fraction) -> tuple[dict, dict]:
    """Cell counts per 4-bit combo plus a small stats dict."""
    marginals = _choose_marginals(pos_frac)
    probs = {bits: _cell_probability(bits, marginals) for bits in BIT_COMBOS}
    exact = all((count * p).denominator == 1 for p in probs.values())
    if exact:
        counts = {bits: int(count * probs[bits]) for bits in BIT_COMBOS}
    else:
        n_pos_frac = pos_frac * count
        n_pos = int(n_pos_frac) + (1 if n_pos_frac - int(n_pos_frac) >= Fraction(1, 2) else 0)
        pos_cells = [b for b in BIT_COMBOS if b[2] and b[3]]
        neg_cells = [b for b in BIT_COMBOS if not (b[2] and b[3])]
        pos_counts = _largest_remainder(n_pos, [probs[b] for b in pos_cells])
        neg_counts = _largest_remainder(count - n_pos, [probs[b] for b in neg_cells])
        counts = {**dict(zip(pos_cells, pos_counts)), **dict(zip(neg_cells, neg_counts))}
    stats = {
        "marginals_target": [str(m) for m in marginals],
        "exact_product": exact,
    }
    return counts, stats


def gen_corpus(count: int, ratio: str = "1:2", seed: int = 0) -> CorpusResult:
    """Probe-family corpus at the requested positive:negative prior."""
    if count < 1:
        raise ValueError("count must be >= 1")
    pos, neg = parse_ratio(ratio)
    pos_frac = pos / (pos + neg)
    counts, stats = stratify_cells(count, pos_frac)

    samples: list[LabeledSample] = []
    idx = 0
    for bits in BIT_COMBOS:
        for _ in range(counts[bits]):
            samples.append(gen_probe(bits, seed * 1_000_003 + idx))
            idx += 1

    realized_bits = [s.labels["factor_bits"] for s in samples]
    realized_pos = sum(s.labels["vulnerable"] for s in samples)
    n = len(samples)
    certificate = _certificate_indices(realized_bits)
    manifest = {
        "count": n,
        "task": "FULL",
        "requested_ratio": ratio,
        "requested_positive_fraction": float(pos_frac),
        "realized_positive_fraction": realized_pos / n,
        "seed": seed,
        "cell_counts": {"".join(map(str, b)): counts[b] for b in BIT_COMBOS},
        "factor_marginals": [sum(b[k] for b in realized_bits) / n for k in range(4)],
        "rank_certificate_indices": certificate,
        **stats,
    }
    return CorpusResult(samples, manifest)


def _certificate_indices(bits_list: list) -> Optional[dict]:
    """Anchor plus the four single-bit flips, when all are present."""
    wanted = {
        "anchor": [0, 0, 0, 0],
        "flip_call": [1, 0, 0, 0],
        "flip_update": [0, 1, 0, 0],
        "flip_dependency": [0, 0, 1, 0],
        "flip_order": [0, 0, 0, 1],
    }
    out = {}
    for name, target in wanted.items():
        try:
            out[name] = next(i for i, b in enumerate(bits_list) if list(b) == target)
        except StopIteration:
            return None
    return out


# ---------------------------------------------------------------------------
# Per-task corpora for the call, dependency, and ordering tasks.
# ---------------------------------------------------------------------------


def _dep_combos():
    combos = []
    for rule in ALL_DEP_RULES:
        for spec in CATALOG:
            try:
                gen_dependency(rule, spec, 0)
            except (IncompatibleRule, InvalidCombination):
                continue
            combos.append((rule, spec))
    return combos


def _order_combos():
    combos = []
    for pattern in ALL_CEI_PATTERNS:
        for spec in CATALOG:
            try:
                gen_ordering(pattern, spec, 0)
            except (IncompatibleRule, InvalidCombination):
                continue
            combos.append((pattern, spec))
    return combos


def gen_task_corpus(task: str, count: int, seed: int = 0) -> CorpusResult:
    if count < 1:
        raise ValueError("count must be >= 1")
    samples: list[LabeledSample] = []
    if task == "E":
        combos = list(CATALOG)
        for i in range(count):
            spec = combos[i % len(combos)]
            samples.append(gen_external_call(spec, seed + i // len(combos)))
    elif task == "D":
        combos = _dep_combos()
        for i in range(count):
            rule, spec = combos[i % len(combos)]
            samples.append(gen_dependency(rule, spec, seed + i // len(combos)))
    elif task == "O":
        combos = _order_combos()
        for i in range(count):
            pattern, spec = combos[i % len(combos)]
            samples.append(gen_ordering(pattern, spec, seed + i // len(combos)))
    elif task == "FULL":
        return gen_corpus(count, seed=seed)
    else:
        raise ValueError(f"unknown task {task!r}")
    manifest = {"count": len(samples), "task": task, "seed": seed}
    return CorpusResult(samples, manifest)


def write_corpus(result: CorpusResult, out_path: str, manifest_path: Optional[str] = None) -> None:
    path = Path(out_path)
    with path.open("w") as fh:
        for sample in result.samples:
            fh.write(json.dumps(sample.to_json()) + "\n")
    m_path = Path(manifest_path) if manifest_path else path.with_suffix(".manifest.json")
    with m_path.open("w") as fh:
        json.dump(result.manifest, fh, indent=2)


def read_corpus(path: str) -> list[LabeledSample]:
    samples = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                samples.append(LabeledSample.from_json(json.loads(line)))
    return samples
