"""Command-line front end.

Every artifact embeds a manifest (subcommand, resolved arguments, input
digests, output paths, tool version); ``discrim-embed rerun ARTIFACT``
re-executes it and reproduces the artifact byte for byte.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .formats import (
    dumps_json,
    format_dataset_csv,
    format_embedding_csv,
    model_from_dict,
    model_to_dict,
    read_csv_manifest,
    read_dataset_csv,
    reports_to_csv,
)
from .harness import (
    METHODS,
    MethodSpec,
    SplitPlan,
    fit_method,
    gen_tetra,
    run_protocol,
    sweep_dimension,
    sweep_params,
)
from .sda_g import SolverConfig, transform

SEED_ENV = "DISCRIM_EMBED_SEED"
CONFIG_FLAGS = ("lambda1", "lambda2", "lambda3", "balance", "alpha", "epsilon",
                "max_iter", "tol")


class CliError(Exception):
    pass


def _report_error(kind: str, message: str):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    # usage errors follow the same one-line JSON convention as runtime errors
    def error(self, message):
        _report_error("UsageError", f"{self.prog}: {message}")
        self.exit(2)


# ---------------------------------------------------------------- helpers

def parse_grid(text: str) -> list[float]:
    """``lo:hi:Nlog`` (log-spaced), ``lo:hi:N`` (linear) or ``a,b,c``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}; expected lo:hi:Nlog")
        lo, hi, n = parts
        log = n.endswith("log")
        try:
            lo, hi, n = float(lo), float(hi), int(n[:-3] if log else n)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
        if n < 1:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}: need N >= 1")
        if log:
            if lo <= 0 or hi <= 0:
                raise argparse.ArgumentTypeError("log grid bounds must be positive")
            return [float(v) for v in np.logspace(np.log10(lo), np.log10(hi), n)]
        return [float(v) for v in np.linspace(lo, hi, n)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_atomic(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _default_seed():
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise CliError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def resolve_config(args) -> SolverConfig:
    """Defaults, then ``--config`` JSON, then explicit flags."""
    values = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            values.update(json.loads(path.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from None
    for name in CONFIG_FLAGS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    values["seed"] = args.seed
    return SolverConfig.from_dict(values)


def _manifest(args, inputs, outputs, config=None) -> dict:
    skip = {"func", "out_override"}
    resolved = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {
        "tool": "discrim-embed",
        "version": __version__,
        "subcommand": args.command,
        "args": resolved,
        "config": config.to_dict() if config is not None else None,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "seed": args.seed,
    }


def _target(args, path):
    # rerun redirects outputs while keeping the recorded manifest intact
    override = getattr(args, "out_override", None)
    if override is None or path is None:
        return path
    return str(Path(override) / Path(path).name)


def _plan(args) -> SplitPlan:
    return SplitPlan(args.train_per_class, args.repeats, args.seed)


# ---------------------------------------------------------------- commands

def cmd_gen_tetra(args):
    data = gen_tetra(args.n_per_class, args.dim, args.seed)
    man = _manifest(args, [], [args.output])
    _write_atomic(_target(args, args.output), format_dataset_csv(data, man))


def cmd_fit(args):
    data = read_dataset_csv(args.input)
    cfg = resolve_config(args)
    model = fit_method(MethodSpec(args.method, cfg, args.m), data)
    out = model_to_dict(model, args.method)
    out["manifest"] = _manifest(args, [args.input], [args.output], cfg)
    _write_atomic(_target(args, args.output), dumps_json(out))


def cmd_transform(args):
    model = model_from_dict(json.loads(Path(args.model).read_text(encoding="utf-8")))
    data = read_dataset_csv(args.input)
    z = transform(model, data.samples, args.m)
    man = _manifest(args, [args.model, args.input], [args.output])
    _write_atomic(_target(args, args.output), format_embedding_csv(data.labels, z, man))


def cmd_evaluate(args):
    data = read_dataset_csv(args.input)
    cfg = resolve_config(args)
    plan = _plan(args)
    rep = run_protocol(data, MethodSpec(args.method, cfg, args.m), plan, jobs=args.jobs)
    outputs = [args.output] + ([args.csv] if args.csv else [])
    man = _manifest(args, [args.input], outputs, cfg)
    out = rep.to_dict()
    out["manifest"] = man
    _write_atomic(_target(args, args.output), dumps_json(out))
    if args.csv:
        _write_atomic(_target(args, args.csv), reports_to_csv([rep], man))


def cmd_sweep(args):
    data = read_dataset_csv(args.input)
    cfg = resolve_config(args)
    plan = _plan(args)
    spec = MethodSpec(args.method, cfg, None)
    outputs = [args.output] + ([args.csv] if args.csv else [])
    man = _manifest(args, [args.input], outputs, cfg)
    if args.sweep == "dim":
        if not args.dims:
            raise CliError("--sweep dim requires --dims")
        reports = sweep_dimension(data, spec, plan, args.dims, jobs=args.jobs)
        out = {"sweep": "dim", "dims": sorted(set(args.dims)),
               "reports": [r.to_dict() for r in reports]}
    else:
        grid = sweep_params(data, spec, plan, args.lambda1_grid, args.lambda2_grid,
                            jobs=args.jobs)
        reports = [c for row in grid["cells"] for c in row]
        out = {"sweep": "params", "lambda1_grid": grid["lambda1_grid"],
               "lambda2_grid": grid["lambda2_grid"],
               "cells": [[c.to_dict() for c in row] for row in grid["cells"]]}
    out["manifest"] = man
    _write_atomic(_target(args, args.output), dumps_json(out))
    if args.csv:
        _write_atomic(_target(args, args.csv), reports_to_csv(reports, man))


def load_manifest(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if text.startswith("{"):
        man = json.loads(text).get("manifest")
    else:
        man = read_csv_manifest(path)
    if not man:
        raise CliError(f"no manifest found in {path}")
    return man


def cmd_rerun(args):
    man = load_manifest(args.artifact)
    if man.get("tool") != "discrim-embed":
        raise CliError(f"{args.artifact} was not produced by discrim-embed")
    for p, digest in man["inputs"].items():
        if not Path(p).exists():
            raise CliError(f"input {p} from the manifest is missing")
        if _sha256(p) != digest:
            raise CliError(f"input {p} changed since the manifest was written")
    ns = argparse.Namespace(**man["args"])
    ns.func = COMMANDS[man["subcommand"]]
    ns.out_override = args.out_dir
    ns.func(ns)


COMMANDS = {
    "gen-tetra": cmd_gen_tetra,
    "fit": cmd_fit,
    "transform": cmd_transform,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------- parser

def _add_config_flags(p):
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--lambda3", type=float)
    p.add_argument("--balance", type=float, help="scatter balance in S = S_w - balance*S_b")
    p.add_argument("--alpha", type=float, help="gradient step length")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--m", type=int, help="embedding dimension")
    p.add_argument("--config", help="JSON file of config values; flags override it")


def _add_plan_flags(p):
    p.add_argument("--train-per-class", dest="train_per_class", type=int, required=True)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="discrim-embed")
    parser.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help=f"random seed (default: ${SEED_ENV} or 0)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-tetra", parents=[common], help="write a Tetra dataset CSV")
    p.add_argument("--n-per-class", dest="n_per_class", type=int, default=100)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("fit", parents=[common], help="fit a model on a dataset CSV")
    _add_config_flags(p)
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("transform", parents=[common], help="embed a dataset with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--m", type=int, help="use only the first m projection axes")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("evaluate", parents=[common], help="run the split protocol")
    _add_config_flags(p)
    _add_plan_flags(p)
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--csv", help="also write a flat per-split CSV")

    p = sub.add_parser("sweep", parents=[common], help="dimension or parameter sweep")
    _add_config_flags(p)
    _add_plan_flags(p)
    p.add_argument("--sweep", choices=("dim", "params"), required=True)
    p.add_argument("--dims", type=parse_int_list)
    p.add_argument("--lambda1-grid", dest="lambda1_grid", type=parse_grid)
    p.add_argument("--lambda2-grid", dest="lambda2_grid", type=parse_grid)
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--csv", help="also write a flat per-split CSV")

    p = sub.add_parser("rerun", help="re-execute the manifest embedded in an artifact")
    p.add_argument("artifact")
    p.add_argument("--out-dir", dest="out_dir",
                   help="write outputs here instead of their recorded paths")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command != "rerun" and args.seed is None:
            args.seed = _default_seed()
        if args.command == "rerun":
            cmd_rerun(args)
        else:
            COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - reported as one machine-readable line
        _report_error(type(exc).__name__, str(exc))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
