"""Command-line entry point.

Verbs map onto the library: train-unsup / train-cond / train-wgan run
the trainers, probe compares real-only against real-plus-generated
discriminant fits using a generator checkpoint, export-plots re-renders
tables and figures from a finished run's metrics, selftest runs the
built-in numerical checks.

Exit codes partition outcomes: 0 success; 1 usage (unknown verb, bad
flags, config file missing); 2 runtime (invalid config contents,
divergence, format errors, I/O failures). Every nonzero exit prints one
"error: <kind>: <message>" line on stderr. All artifacts land under
--out; nothing is written elsewhere.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import TrainConfig, load_config, validate_config, write_config_echo
from .errors import FormatError, InsufficientClasses, InvalidInput, TrainingDiverged
from .metrics import export_plot_tables, read_metrics, write_metrics, write_timings
from .net import load_checkpoint, save_checkpoint
from .plots import plot_probe_curves, render_run_figures
from .rng import split_streams
from .selftest import run_selftest
from .train import (
    ProbeConfig,
    build_networks,
    generalization_probe,
    train_conditional,
    train_unsupervised,
    train_wgan_baseline,
)

TRAIN_VERBS = ("train-unsup", "train-cond", "train-wgan")
VERBS = TRAIN_VERBS + ("probe", "export-plots", "selftest")
PROBE_SAMPLES_PER_CLASS = 200


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage problems; the contract here wants 1."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="ldgan", description=__doc__, add_help=True)
    sub = parser.add_subparsers(dest="verb", metavar="|".join(VERBS))
    for verb in VERBS:
        p = sub.add_parser(verb, add_help=True)
        if verb != "selftest":
            p.add_argument("--config", required=True, help="JSON config file")
            p.add_argument("--out", required=True, help="output directory")
            p.add_argument("--seed", type=int, default=None, help="override config seed")
            p.add_argument(
                "--iters", type=int, default=None, help="override config iterations"
            )
    return parser


def _load_with_overrides(args) -> TrainConfig:
    cfg = load_config(args.config, args.verb)
    if args.seed is not None:
        cfg.seed = int(args.seed)
    if args.iters is not None:
        cfg.iterations = int(args.iters)
    return validate_config(cfg)


def _echo_config(cfg: TrainConfig, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "config_echo.json")
    write_config_echo(cfg, path)
    print(path)
    return path


def _checkpoint_hook(cfg: TrainConfig, out_dir: str, named_nets):
    if cfg.checkpoint_every <= 0:
        return None
    ckpt_dir = os.path.join(out_dir, "checkpoints")
    os.makedirs(ckpt_dir, exist_ok=True)

    def hook(iteration):
        step = iteration + 1
        if step % cfg.checkpoint_every == 0:
            for name, net in named_nets:
                save_checkpoint(net, os.path.join(ckpt_dir, f"{name}-{step:06d}.json"))

    return hook


def _write_run_artifacts(result, out_dir: str) -> None:
    write_metrics(result.records, os.path.join(out_dir, "metrics.jsonl"))
    write_timings(result.timings, os.path.join(out_dir, "timings.jsonl"))
    export_plot_tables(result.records, out_dir)
    render_run_figures(result.records, out_dir)


def _run_training(args) -> int:
    cfg = _load_with_overrides(args)
    out_dir = args.out
    _echo_config(cfg, out_dir)
    generator, second, sampler, z_rng = build_networks(cfg, args.verb)
    second_name = "critic" if args.verb == "train-wgan" else "extractor"
    hook = _checkpoint_hook(cfg, out_dir, [("generator", generator), (second_name, second)])
    trainer = {
        "train-unsup": train_unsupervised,
        "train-cond": train_conditional,
        "train-wgan": train_wgan_baseline,
    }[args.verb]
    try:
        result = trainer(cfg, generator, second, sampler, z_rng, on_iteration=hook)
    except TrainingDiverged as exc:
        # keep the partial records for post-mortem, then fail
        partial = type("R", (), {"records": exc.records, "timings": exc.timings})
        _write_run_artifacts(partial, out_dir)
        raise
    save_checkpoint(generator, os.path.join(out_dir, "generator.json"))
    save_checkpoint(second, os.path.join(out_dir, f"{second_name}.json"))
    _write_run_artifacts(result, out_dir)
    return 0


def _run_probe(args) -> int:
    cfg = _load_with_overrides(args)
    out_dir = args.out
    _echo_config(cfg, out_dir)
    ckpt_path = os.path.join(out_dir, "generator.json")
    generator = load_checkpoint(ckpt_path)
    _, _, sampler, _ = build_networks(cfg, "probe")
    code_width = generator.input_dim - cfg.z_dim
    z_stream = split_streams(cfg.seed)["training"]
    per = PROBE_SAMPLES_PER_CLASS
    real_feats, real_labels = sampler.sample_per_class(per)

    classes = max(1, code_width)
    z = z_stream.normal(size=(classes * per, cfg.z_dim))
    gen_labels = np.repeat(np.arange(classes), per)
    if code_width > 0:
        codes = np.zeros((classes * per, code_width))
        codes[np.arange(classes * per), gen_labels] = 1.0
        gen_input = np.hstack([z, codes])
    else:
        gen_input = z
    gen_feats, _ = generator.forward(gen_input)

    result = generalization_probe(
        real_feats, real_labels, gen_feats, gen_labels, sampler.components, ProbeConfig()
    )
    rows = ["iteration,real_mean_eigenvalue,mixed_mean_eigenvalue"]
    for i, (r, m) in enumerate(zip(result.real_curve, result.mixed_curve)):
        rows.append(f"{i},{float(r)!r},{float(m)!r}")
    with open(os.path.join(out_dir, "probe_curves.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
    plot_probe_curves(
        result.real_curve, result.mixed_curve, os.path.join(out_dir, "probe_curves.png")
    )
    return 0


def _run_export_plots(args) -> int:
    cfg = _load_with_overrides(args)
    out_dir = args.out
    _echo_config(cfg, out_dir)
    records = read_metrics(os.path.join(out_dir, "metrics.jsonl"))
    export_plot_tables(records, out_dir)
    render_run_figures(records, out_dir)
    return 0


def _run_selftest() -> int:
    ok, lines = run_selftest()
    for line in lines:
        print(line)
    if not ok:
        print("error: runtime: selftest failed", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 1
    if args.verb is None:
        print("error: usage: a verb is required", file=sys.stderr)
        return 1
    if args.verb == "selftest":
        return _run_selftest()
    try:
        if args.verb in TRAIN_VERBS:
            return _run_training(args)
        if args.verb == "probe":
            return _run_probe(args)
        return _run_export_plots(args)
    except FileNotFoundError as exc:
        target = exc.filename or str(exc)
        if target == args.config:
            print(f"error: usage: config file not found: {target}", file=sys.stderr)
            return 1
        print(f"error: runtime: file not found: {target}", file=sys.stderr)
        return 2
    except (FormatError, InvalidInput, InsufficientClasses, TrainingDiverged, OSError) as exc:
        print(f"error: runtime: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
