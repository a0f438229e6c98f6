"""Command-line interface: analyze, score, ingest, generate, train,
evaluate, and verify.

Exit codes: 0 success, 1 analysis findings present (unless --exit-zero),
2 usage or runtime errors.  Flag defaults can come from a JSON config file
(--config) and from environment variables prefixed REENTLAB_ (for example
REENTLAB_SEED=7); precedence is command line > environment > config file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .datagen.corpus import gen_corpus, gen_task_corpus, read_corpus, write_corpus
from .datagen.validate import validate
from .experiment import PriorShiftConfig, featurize_samples, run_prior_shift_experiment
from .factors import analyze_source
from .fusion.features import BranchFeatures, extract_branch_features
from .fusion.model import (
    GateParams,
    HeadParams,
    init_params,
    load_checkpoint,
    predict_proba,
    save_checkpoint,
)
from .fusion.rank import design_matrix_rank, jacobian_column_rank
from .fusion.train import TrainConfig, train
from .ir_ingest import parse_ir_stream, record_to_factors
from .metrics import compute_metrics
from .minisol.nodes import ParseError
from .scoring import ScoreParams, boolean_rule, score_report

ENV_PREFIX = "REENTLAB_"


def _emit(payload, out_path: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out_path:
        Path(out_path).write_text(text + "\n")
    else:
        print(text)


def _collect_sources(paths: list[str], suffix: str = ".sol") -> list[Path]:
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(p.rglob("*" + suffix)))
        elif p.exists():
            files.append(p)
        else:
            raise FileNotFoundError(raw)
    return files


def _analyze_one(path: Path, include_ctrl: bool, params: ScoreParams) -> dict:
    text = path.read_text()
    try:
        _, fs = analyze_source(text, include_ctrl=include_ctrl)
    except ParseError as exc:
        return {
            "file": str(path),
            "ok": False,
            "diagnostics": [d.to_json() for d in exc.diagnostics],
        }
    verdict = boolean_rule(fs)
    return {
        "file": str(path),
        "ok": True,
        "factors": fs.to_json(),
        "verdict": verdict.to_json(),
        "score": score_report(fs, params),
    }


def cmd_analyze(args) -> int:
    files = _collect_sources(args.paths)
    params = ScoreParams(alpha=args.alpha, tau=args.tau)
    include_ctrl = args.deps != "data-only"
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        reports = list(pool.map(lambda f: _analyze_one(f, include_ctrl, params), files))
    _emit({"reports": reports}, args.out)
    findings = any(r.get("verdict", {}).get("vulnerable") for r in reports)
    errors = any(not r["ok"] for r in reports)
    if errors:
        return 2
    if findings and not args.exit_zero:
        return 1
    return 0


def cmd_score(args) -> int:
    files = _collect_sources(args.paths)
    params = ScoreParams(alpha=args.alpha, tau=args.tau, sum_mode=args.sum_mode)
    reports = []
    for f in files:
        _, fs = analyze_source(f.read_text())
        reports.append({"file": str(f), **score_report(fs, params)})
    _emit({"reports": reports}, args.out)
    return 0


def cmd_ingest_ir(args) -> int:
    reports = []
    for raw in args.paths:
        text = Path(raw).read_text()
        for i, record in enumerate(parse_ir_stream(text, strict=args.strict)):
            fs = record_to_factors(record)
            verdict = boolean_rule(fs)
            reports.append({
                "file": raw,
                "record": i,
                "id": record.record_id,
                "warnings": record.warnings,
                "factors": fs.to_json(),
                "verdict": verdict.to_json(),
            })
    _emit({"reports": reports}, args.out)
    return 0


def cmd_gen(args) -> int:
    if args.task == "FULL":
        result = gen_corpus(args.count, ratio=args.ratio, seed=args.seed)
    else:
        result = gen_task_corpus(args.task, args.count, seed=args.seed)
    if args.check:
        bad = [i for i, s in enumerate(result.samples) if not validate(s).passed]
        if bad:
            print(f"validation failed for samples {bad[:10]}", file=sys.stderr)
            return 2
        result.manifest["validated"] = True
    write_corpus(result, args.out)
    print(json.dumps(result.manifest, indent=2))
    return 0


def _load_dataset(path: str) -> list[tuple[BranchFeatures, int]]:
    """Features-JSONL ({'features': ..., 'label': ...}) or a generated
    corpus JSONL (contract sources, featurized on the fly)."""
    with open(path) as fh:
        first = ""
        for line in fh:
            if line.strip():
                first = line
                break
    if not first:
        raise ValueError(f"{path} is empty")
    keys = json.loads(first).keys()
    if "features" in keys:
        out = []
        with open(path) as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    out.append((BranchFeatures.from_json(obj["features"]), int(obj["label"])))
        return out
    return featurize_samples(read_corpus(path))


def _parse_vec(text: str | None, length: int = 4):
    if text is None:
        return None
    parts = [float(x) for x in text.split(",")]
    if len(parts) != length:
        raise ValueError(f"expected {length} comma-separated values, got {text!r}")
    return np.asarray(parts)


def cmd_train(args) -> int:
    dataset = _load_dataset(args.data)
    gp, hp = init_params(seed=args.seed)
    gp.tau_gate = args.tau_gate
    gp.lambda_jaco = args.lambda_jaco
    gp.warmup_ratio = args.warmup_ratio
    gp.prior_mix = args.prior_mix
    mask = _parse_vec(args.mask)
    if mask is not None:
        gp.mask = mask
    gp.fixed_alpha = _parse_vec(args.fixed_alpha)
    gp.pi = _parse_vec(args.prior)
    cfg = TrainConfig(
        learning_rate=args.lr,
        total_steps=args.steps,
        batch_size=args.batch_size,
        seed=args.seed,
        weight_decay=args.weight_decay,
        sensitivity=args.sensitivity,
    )
    result = train(dataset, gp, hp, cfg)
    save_checkpoint(args.out, result.gate, result.head, extra={
        "train": {"steps": cfg.total_steps, "lr": cfg.learning_rate,
                  "batch_size": cfg.batch_size, "seed": cfg.seed,
                  "sensitivity": cfg.sensitivity},
        "final_loss": result.history[-1].total,
    })
    print(json.dumps({
        "checkpoint": args.out,
        "final_ce": result.history[-1].ce,
        "final_jaco": result.history[-1].jaco,
        "steps": cfg.total_steps,
    }, indent=2))
    return 0


def _predictions(model_path: str, data_path: str) -> list[dict]:
    gp, hp, _ = load_checkpoint(model_path)
    out = []
    for z, y in _load_dataset(data_path):
        out.append({"probability": predict_proba(gp, hp, z), "label": int(y)})
    return out


def cmd_infer(args) -> int:
    preds = _predictions(args.model, args.data)
    if args.out:
        with open(args.out, "w") as fh:
            for p in preds:
                fh.write(json.dumps(p) + "\n")
    else:
        for p in preds:
            print(json.dumps(p))
    return 0


def cmd_eval(args) -> int:
    if args.pred:
        preds = []
        with open(args.pred) as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    preds.append((float(obj["probability"]), int(obj["label"])))
    else:
        if not (args.model and args.data):
            print("eval requires --pred or both --model and --data", file=sys.stderr)
            return 2
        preds = [(p["probability"], p["label"]) for p in _predictions(args.model, args.data)]
    report = compute_metrics(preds, threshold=args.threshold)
    _emit(report.to_json(recall_only=args.recall_only), args.out)
    return 0


def cmd_verify_rank(args) -> int:
    payload: dict = {}
    if args.data:
        samples = read_corpus(args.data)
        bits = [s.labels["factor_bits"] for s in samples if "factor_bits" in s.labels]
        if not bits:
            print("corpus carries no factor bits (generate with --task FULL)", file=sys.stderr)
            return 2
        payload["design_matrix"] = design_matrix_rank(bits).to_json()
    if args.model:
        gp, hp, _ = load_checkpoint(args.model)
    else:
        rng = np.random.default_rng(args.seed)
        gp, hp = init_params(seed=args.seed)
        gp.u = rng.normal(size=gp.u.shape)
        gp.c = rng.normal(size=4)
        hp.w = rng.normal(size=len(hp.w))
    z = BranchFeatures.from_stacked(np.random.default_rng(args.seed + 1).normal(size=(4, len(hp.w))))
    payload["jacobian_column_rank"] = jacobian_column_rank(gp, hp, z)
    masked = GateParams(u=gp.u, c=gp.c, tau_gate=gp.tau_gate, mask=np.array([1.0, 1.0, 0.0, 0.0]))
    payload["jacobian_column_rank_two_masked"] = jacobian_column_rank(masked, hp, z)
    _emit(payload, args.out)
    return 0


def cmd_prior_shift(args) -> int:
    cfg = PriorShiftConfig(
        train_count=args.train_count,
        eval_count=args.eval_count,
        total_steps=args.steps,
        seeds=tuple(int(s) for s in args.seeds.split(",")),
    )
    report = run_prior_shift_experiment(cfg)
    _emit(report.to_json(), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reentlab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"reentlab {__version__}")
    parser.add_argument("--config", help="JSON file with flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="factor analysis and verdicts for source files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--deps", choices=["all", "data-only"], default="all")
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--tau", type=float, default=2.0)
    p.add_argument("--jobs", type=int, default=4)
    p.add_argument("--exit-zero", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("score", help="soft compositional scores for source files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--tau", type=float, default=2.0)
    p.add_argument("--sum-mode", choices=["candidate_restricted", "full_grid"],
                   default="candidate_restricted")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("ingest-ir", help="verdicts from compiler-aware JSON records")
    p.add_argument("paths", nargs="+")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest_ir)

    p = sub.add_parser("gen", help="generate a labeled corpus")
    p.add_argument("--task", choices=["E", "D", "O", "FULL"], default="FULL")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--ratio", default="1:2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--check", action="store_true", help="run validators before writing")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the gated fusion classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mask", help="four comma-separated 0/1 branch enables")
    p.add_argument("--tau-gate", type=float, default=1.0)
    p.add_argument("--lambda-jaco", type=float, default=0.1)
    p.add_argument("--fixed-alpha", help="four comma-separated fixed weights")
    p.add_argument("--warmup-ratio", type=float, default=0.1)
    p.add_argument("--prior", help="four comma-separated prior weights")
    p.add_argument("--prior-mix", action="store_true",
                   help="keep prior mass on disabled branches instead of zeroing")
    p.add_argument("--sensitivity", choices=["total", "fusion-only"], default="total")
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--weight-decay", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="probabilities from a trained checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="confusion metrics and AUROC")
    p.add_argument("--pred")
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--recall-only", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify-rank", help="full-rankness verification suite")
    p.add_argument("--data", help="FULL-task corpus JSONL with factor bits")
    p.add_argument("--model", help="checkpoint for the Jacobian column rank")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_rank)

    p = sub.add_parser("prior-shift", help="class-prior stability experiment")
    p.add_argument("--train-count", type=int, default=696)
    p.add_argument("--eval-count", type=int, default=240)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--out")
    p.set_defaults(func=cmd_prior_shift)

    return parser


def _apply_overrides(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    probe, _ = parser.parse_known_args(argv)
    defaults = {}
    if probe.config:
        defaults.update(json.loads(Path(probe.config).read_text()))
    for key, value in os.environ.items():
        if key.startswith(ENV_PREFIX):
            defaults[key[len(ENV_PREFIX):].lower()] = value
    if defaults:
        for action in parser._subparsers._group_actions:  # noqa: SLF001
            for sp in action.choices.values():
                known = {a.dest for a in sp._actions}  # noqa: SLF001
                sp.set_defaults(**{k: _coerce(sp, k, v) for k, v in defaults.items() if k in known})
    return parser.parse_args(argv)


def _coerce(subparser, dest: str, value):
    for action in subparser._actions:  # noqa: SLF001
        if action.dest == dest and action.type is not None and isinstance(value, str):
            return action.type(value)
    return value


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    args = _apply_overrides(parser, argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
