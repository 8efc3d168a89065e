"""Command-line entry point ``hwdd``.

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical
invariant violated during the run.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .decoupling_analysis import run_scaling
from .heisenberg_weyl import HwLabel, hw_element, hw_labels
from .output import emit_outputs, emit_scaling
from .sequences import BUILDERS, build
from .simulator import RUNNERS
from .tensor_core import InvariantError

log = logging.getLogger("hwdd")

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2, 3


def matrix_json(m) -> list:
    """Nested ``[re, im]`` pairs, row-major."""
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--threads", type=int, help="worker threads for ensemble runs")
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _label(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"label must look like 'a,b', got {text!r}") from None
    return a, b


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="hwdd", description="Heisenberg-Weyl dynamical decoupling for qudits.")
    parser.add_argument("--version", action="version", version=f"hwdd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    hw = sub.add_parser("hw", help="Heisenberg-Weyl operators").add_subparsers(dest="action", required=True)
    dump = hw.add_parser("dump", parents=[common], help="print HW elements as JSON")
    dump.add_argument("--d", type=int, required=True)
    dump.add_argument("--label", type=_label, help="single element 'alpha,beta'")

    seq = sub.add_parser("seq", help="pulse sequences").add_subparsers(dest="action", required=True)
    emit = seq.add_parser("emit", parents=[common], help="print a sequence timeline as JSON")
    emit.add_argument("--name", required=True, choices=sorted(BUILDERS))
    emit.add_argument("--d", type=int, required=True)
    emit.add_argument("--tau", type=float, required=True, help="base interval in us")
    emit.add_argument("--reps", type=int, default=1)
    emit.add_argument("--epsilon", type=float, default=0.0, help="pulse over-rotation")

    analyze = sub.add_parser("analyze", help="analysis runs").add_subparsers(dest="action", required=True)
    scaling = analyze.add_parser("scaling", parents=[common], help="infidelity-vs-tau sweep and fit")
    scaling.add_argument("--config", required=True)

    run = sub.add_parser("run", help="fidelity experiments").add_subparsers(dest="action", required=True)
    for name in ("preserve", "crosskerr", "bell"):
        r = run.add_parser(name, parents=[common], help=f"{name} experiment")
        r.add_argument("--config", required=True)
    return parser


def _emit_json(obj, args, filename: str) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / filename).write_text(text)
        print(out / filename)
    else:
        sys.stdout.write(text)


def _check_d(d: int) -> None:
    if d < 2:
        raise ConfigError(f"invalid key 'd': dimension must be >= 2, got {d}")


def cmd_hw_dump(args) -> int:
    _check_d(args.d)
    if args.label is not None:
        label = HwLabel(args.label[0], args.label[1], args.d)
        label.validate()
        labels = [label]
    else:
        labels = list(hw_labels(args.d))
    items = [{"alpha": l.alpha, "beta": l.beta, "matrix": matrix_json(hw_element(l).data)} for l in labels]
    _emit_json({"d": args.d, "elements": items}, args, "hw.json")
    return EXIT_OK


def cmd_seq_emit(args) -> int:
    _check_d(args.d)
    if args.tau <= 0:
        raise ConfigError(f"invalid key 'tau': must be positive, got {args.tau}")
    if args.reps < 1:
        raise ConfigError(f"invalid key 'reps': must be >= 1, got {args.reps}")
    seq = build(args.name, args.d, args.tau, args.reps, args.epsilon)
    _emit_json(seq.to_json(), args, "sequence.json")
    return EXIT_OK


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        cfg.params["seed"] = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError(f"invalid key 'threads': must be >= 1, got {args.threads}")
        cfg.params["threads"] = args.threads
    return cfg


def _out_dir(cfg: RunConfig, args) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path("results") / Path(cfg.source or cfg.experiment).stem


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    if cfg.experiment != args.action:
        raise ConfigError(f"invalid key 'experiment': config is for {cfg.experiment!r}, not {args.action!r}")
    exp = cfg.to_experiment_config()
    try:
        result = RUNNERS[cfg.experiment](exp)
    except ValueError as exc:
        if isinstance(exc, InvariantError):
            raise
        raise ConfigError(str(exc)) from exc
    paths = emit_outputs(result, _out_dir(cfg, args))
    for p in paths.values():
        print(p)
    return EXIT_OK


def cmd_scaling(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    if cfg.experiment != "scaling":
        raise ConfigError(f"invalid key 'experiment': config is for {cfg.experiment!r}, not 'scaling'")
    sc = cfg.params["scaling"]
    runs = run_scaling(
        sc["dims"],
        scale=sc["scale"],
        bath_dim=sc["bath_dim"],
        seed=cfg.seed,
        sequences=sc["sequences"],
        taus=sc.get("tau_us"),
        target=sc["target"],
        decades=sc["decades"],
        points=sc["points"],
    )
    paths = emit_scaling(runs, _out_dir(cfg, args), cfg.seed, cfg.echo())
    summary = [{"d": r.d, "sequence": r.sequence, **r.result.to_json()} for r in runs]
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    for p in paths.values():
        log.info("wrote %s", p)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handlers = {
        ("hw", "dump"): cmd_hw_dump,
        ("seq", "emit"): cmd_seq_emit,
        ("analyze", "scaling"): cmd_scaling,
    }
    handler = handlers.get((args.command, args.action), cmd_run)
    try:
        return handler(args)
    except InvariantError as exc:
        print(f"hwdd: numerical invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"hwdd: config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"hwdd: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"hwdd: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
