"""Command-line front end: train / decode / bench / oracle / study.

Settings come from flags or from a flat ``key = value`` config file
(``--config``); flags override file values.  Every artifact embeds its
effective configuration as ``# key = value`` comment lines, and such an
artifact can itself be passed back via ``--config`` to reproduce the run
byte for byte.  The default worker count can be set with the
``DIFFDEC_WORKERS`` environment variable.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from pathlib import Path

import numpy as np

from .bench import DECODER_KINDS, StopRule, forward_process_trace, forward_trace_csv, \
    lambda_histogram, lambda_histogram_csv, parity_noise_csv, parity_noise_study, run_ber
from .channel import make_rng
from .decoding import DecodeConfig, decode_batch
from .diffusion import NoiseSchedule
from .gf2 import BUILTIN_CODES, ParityCheckMatrix, builtin_code, load_alist, ml_decode_batch, \
    systematic_generator
from .nn import load_checkpoint, save_checkpoint
from .training import TrainConfig, train

_CONFIG_LINE = re.compile(r"^#?\s*([A-Za-z0-9_.-]+)\s+=\s+(.*)$")


def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; a leading '#' is stripped, so emitted
    artifacts double as config files.  Other lines are ignored."""
    values: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        match = _CONFIG_LINE.match(line.strip())
        if match:
            values[match.group(1).replace("-", "_")] = match.group(2).strip()
    return values


def _coerce(parser: argparse.ArgumentParser, values: dict[str, str]) -> dict:
    """Map config-file strings onto parser defaults with matching types."""
    out = {}
    for action in parser._actions:  # argparse has no public default registry
        if action.dest in values:
            raw = values[action.dest]
            if action.type is not None:
                out[action.dest] = action.type(raw)
            elif isinstance(action.default, bool):
                out[action.dest] = raw.lower() in ("1", "true", "yes")
            else:
                out[action.dest] = raw
    return out


def _add_code_args(p: argparse.ArgumentParser):
    p.add_argument("--code", default="hamming74",
                   help=f"built-in code name ({', '.join(sorted(BUILTIN_CODES))})")
    p.add_argument("--alist", default="", help="path to an alist file (overrides --code)")


def _resolve_code(args) -> tuple[ParityCheckMatrix, str]:
    if args.alist:
        text = Path(args.alist).read_text()
        return load_alist(text, name=Path(args.alist).stem), args.alist
    return builtin_code(args.code), args.code


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _write(path: str, payload: str):
    if path in ("", "-"):
        sys.stdout.write(payload)
    else:
        Path(path).write_text(payload)


def _read_words(path: str, n: int) -> np.ndarray:
    text = sys.stdin.read() if path in ("", "-") else Path(path).read_text()
    rows = []
    for ln, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        vals = [float(tok) for tok in line.split()]
        if len(vals) != n:
            raise ValueError(f"line {ln}: expected {n} soft values, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise ValueError("no input words")
    return np.asarray(rows, dtype=np.float64)


def _schedule_from_checkpoint(meta: dict[str, str], num_checks: int) -> NoiseSchedule:
    if "betas" in meta:
        return NoiseSchedule(_float_list(meta["betas"]))
    return NoiseSchedule.constant(0.01, num_checks)


def _bits_str(bits: np.ndarray) -> str:
    return "".join(str(int(b)) for b in bits)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_train(args) -> int:
    code, code_id = _resolve_code(args)
    config = TrainConfig(
        code=code_id, epochs=args.epochs, batches_per_epoch=args.batches_per_epoch,
        batch_size=args.batch_size, lr0=args.lr0, lr_min=args.lr_min, seed=args.seed,
        beta=args.beta, backbone=args.backbone, embed_dim=args.embed_dim,
        layers=args.layers, hidden_mult=args.hidden_mult)
    model, report = train(config, code=code)
    schedule = NoiseSchedule.constant(config.beta, code.n - code.k)
    metadata = {
        "code": code_id, "seed": str(config.seed), "epochs": str(config.epochs),
        "batches_per_epoch": str(config.batches_per_epoch),
        "batch_size": str(config.batch_size),
        "lr0": repr(config.lr0), "lr_min": repr(config.lr_min),
        "betas": ",".join(repr(float(b)) for b in schedule.betas),
    }
    save_checkpoint(model, args.out, metadata)
    echo = {"command": "train", **{k: getattr(args, k) for k in (
        "code", "alist", "epochs", "batches_per_epoch", "batch_size", "lr0", "lr_min",
        "seed", "beta", "backbone", "embed_dim", "layers", "hidden_mult")}}
    lines = ["# diffdec.report = train"]
    lines += [f"# {k} = {echo[k]}" for k in sorted(echo)]
    lines.append("epoch,mean_loss")
    lines += [f"{i},{repr(loss)}" for i, loss in enumerate(report.epoch_losses)]
    _write(args.report, "\n".join(lines) + "\n")
    print(f"trained {code_id} ({config.backbone}) for {config.epochs} epochs; "
          f"final loss {report.final_loss}; wall {report.wall_seconds:.1f}s; "
          f"checkpoint {args.out}", file=sys.stderr)
    return 0


def _cmd_decode(args) -> int:
    code, _ = _resolve_code(args)
    ckpt = load_checkpoint(args.checkpoint, code=code)
    schedule = _schedule_from_checkpoint(ckpt.metadata, code.n - code.k)
    mode = "line_search" if args.mode == "ls" else "regular"
    config = DecodeConfig(mode=mode,
                          max_iters=args.max_iters or None,
                          ls_grid=(args.ls_lo, args.ls_hi, args.ls_count),
                          few_iter_cap=args.few_iter_cap or None)
    Y = _read_words(args.infile, code.n)
    result = decode_batch(ckpt.model, code, schedule, Y, config)
    echo = {"command": "decode", "checkpoint": args.checkpoint, "mode": args.mode,
            "ls_lo": args.ls_lo, "ls_hi": args.ls_hi, "ls_count": args.ls_count,
            "max_iters": args.max_iters, "few_iter_cap": args.few_iter_cap,
            "code": args.code, "alist": args.alist}
    lines = ["# diffdec.report = decode"]
    lines += [f"# {k} = {echo[k]}" for k in sorted(echo)]
    lines.append("word,row,iteration,parity_errors,step_size,weight_after,bits,converged,iters_used")
    for w, outcome in enumerate(result.outcomes()):
        for i, step in enumerate(outcome.trace, 1):
            lines.append(f"{w},step,{i},{step.parity_errors},{repr(step.step_size)},"
                         f"{step.weight_after},,,")
        lines.append(f"{w},result,,,,,{_bits_str(outcome.bits)},"
                     f"{outcome.converged},{outcome.iters_used}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_bench(args) -> int:
    code, code_id = _resolve_code(args)
    stop = StopRule(args.min_words, args.min_error_frames, args.max_words)
    model = schedule = None
    if args.decoder in ("ddecc", "ddecc-ls"):
        if not args.checkpoint:
            raise ValueError(f"decoder {args.decoder!r} requires --checkpoint")
        ckpt = load_checkpoint(args.checkpoint, code=code)
        model = ckpt.model
        schedule = _schedule_from_checkpoint(ckpt.metadata, code.n - code.k)
    decode_config = DecodeConfig(ls_grid=(args.ls_lo, args.ls_hi, args.ls_count),
                                 max_iters=args.max_iters or None,
                                 few_iter_cap=args.few_iter_cap or None)
    echo = {"command": "bench", "code": args.code, "alist": args.alist,
            "decoder": args.decoder, "ebn0": args.ebn0, "seed": args.seed,
            "min_words": args.min_words, "min_error_frames": args.min_error_frames,
            "max_words": args.max_words, "workers": args.workers,
            "bp_iters": args.bp_iters, "checkpoint": args.checkpoint,
            "ls_lo": args.ls_lo, "ls_hi": args.ls_hi, "ls_count": args.ls_count,
            "max_iters": args.max_iters, "few_iter_cap": args.few_iter_cap,
            "batch_size": args.batch_size}
    report = run_ber(args.decoder, code, _float_list(args.ebn0), stop=stop,
                     seed=args.seed, workers=args.workers, model=model,
                     schedule=schedule, decode_config=decode_config,
                     bp_iters=args.bp_iters, batch_size=args.batch_size,
                     config_echo=echo)
    _write(args.out, report.to_csv())
    return 0


def _cmd_oracle(args) -> int:
    code, _ = _resolve_code(args)
    G = systematic_generator(code)
    Y = _read_words(args.infile, code.n)
    bits = ml_decode_batch(code, G, Y)
    echo = {"command": "oracle", "code": args.code, "alist": args.alist}
    lines = ["# diffdec.report = oracle"]
    lines += [f"# {k} = {echo[k]}" for k in sorted(echo)]
    lines.append("word,bits")
    lines += [f"{w},{_bits_str(row)}" for w, row in enumerate(bits)]
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_study(args) -> int:
    code, code_id = _resolve_code(args)
    echo = {"command": "study", "kind": args.kind, "code": args.code,
            "alist": args.alist, "seed": args.seed, "samples": args.samples}
    if args.kind == "parity-noise":
        rows = parity_noise_study(code, _float_list(args.sigmas), args.samples, args.seed)
        echo["sigmas"] = args.sigmas
        _write(args.out, parity_noise_csv(rows, echo))
    elif args.kind == "lambda-hist":
        if not args.checkpoint:
            raise ValueError("lambda-hist requires --checkpoint")
        ckpt = load_checkpoint(args.checkpoint, code=code)
        schedule = _schedule_from_checkpoint(ckpt.metadata, code.n - code.k)
        config = DecodeConfig(ls_grid=(args.ls_lo, args.ls_hi, args.ls_count))
        grid, counts = lambda_histogram(ckpt.model, code, schedule, args.ebn0_point,
                                        args.samples, args.seed, config)
        echo.update({"checkpoint": args.checkpoint, "ebn0_point": args.ebn0_point,
                     "ls_lo": args.ls_lo, "ls_hi": args.ls_hi, "ls_count": args.ls_count})
        _write(args.out, lambda_histogram_csv(grid, counts, echo))
    else:  # forward-trace
        schedule = NoiseSchedule.constant(args.beta, args.steps)
        rows = forward_process_trace(schedule, args.trajectories,
                                     make_rng(args.seed, stream=31), steps=args.steps)
        echo.update({"beta": args.beta, "steps": args.steps,
                     "trajectories": args.trajectories})
        _write(args.out, forward_trace_csv(rows, echo))
    return 0


# ---------------------------------------------------------------------------
# parser plumbing
# ---------------------------------------------------------------------------

def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="diffdec",
        description="diffusion decoding laboratory; pass --config FILE (a flat "
                    "'key = value' file or a previously emitted artifact) to "
                    "preload any subcommand's settings")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: dict[str, argparse.ArgumentParser] = {}
    default_workers = int(os.environ.get("DIFFDEC_WORKERS", "1"))

    p = sub.add_parser("train", help="train a denoiser and write a checkpoint")
    _add_code_args(p)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batches-per-epoch", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr0", type=float, default=1e-4)
    p.add_argument("--lr-min", type=float, default=5e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--backbone", default="mlp", choices=("mlp", "masked_attention"))
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--hidden-mult", type=int, default=4)
    p.add_argument("--out", default="model.ckpt", help="checkpoint path")
    p.add_argument("--report", default="-", help="loss-history CSV path ('-' = stdout)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("decode", help="decode soft-value words from a file/stdin")
    _add_code_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mode", default="ls", choices=("regular", "ls"))
    p.add_argument("--ls-lo", type=float, default=1.0)
    p.add_argument("--ls-hi", type=float, default=20.0)
    p.add_argument("--ls-count", type=int, default=20)
    p.add_argument("--max-iters", type=int, default=0, help="0 = n-k")
    p.add_argument("--few-iter-cap", type=int, default=0, help="0 = unlimited")
    p.add_argument("--in", dest="infile", default="-",
                   help="input words, one per line, space-separated reals")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("bench", help="Monte-Carlo BER/FER benchmark")
    _add_code_args(p)
    p.add_argument("--decoder", default="ml", choices=DECODER_KINDS)
    p.add_argument("--ebn0", default="4,5,6", help="comma-separated dB values")
    p.add_argument("--min-words", type=int, default=10_000)
    p.add_argument("--min-error-frames", type=int, default=100)
    p.add_argument("--max-words", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=default_workers)
    p.add_argument("--checkpoint", default="")
    p.add_argument("--bp-iters", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=1024)
    p.add_argument("--ls-lo", type=float, default=1.0)
    p.add_argument("--ls-hi", type=float, default=20.0)
    p.add_argument("--ls-count", type=int, default=20)
    p.add_argument("--max-iters", type=int, default=0, help="0 = n-k")
    p.add_argument("--few-iter-cap", type=int, default=0, help="0 = unlimited")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("oracle", help="brute-force ML decoding of soft-value words")
    _add_code_args(p)
    p.add_argument("--in", dest="infile", default="-")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("study", help="parity-noise, step-size and forward-walk studies")
    _add_code_args(p)
    p.add_argument("--kind", required=True,
                   choices=("parity-noise", "lambda-hist", "forward-trace"))
    p.add_argument("--sigmas", default="0,0.2,0.4,0.6,0.8,1.0,1.5,2.0")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint", default="")
    p.add_argument("--ebn0-point", type=float, default=4.0)
    p.add_argument("--ls-lo", type=float, default=1.0)
    p.add_argument("--ls-hi", type=float, default=20.0)
    p.add_argument("--ls-count", type=int, default=20)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--trajectories", type=int, default=32)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_study)

    for name, action in sub.choices.items():
        subparsers[name] = action
    return parser, subparsers


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        if "--config" in argv:
            at = argv.index("--config")
            if at + 1 >= len(argv):
                raise ValueError("--config needs a file path")
            file_values = read_config_file(argv[at + 1])
            rest = argv[:at] + argv[at + 2:]
            command = rest[0] if rest else file_values.get("command", "")
            if command not in subparsers:
                raise ValueError(f"--config file does not name a known command "
                                 f"(got {command!r})")
            if not rest:
                rest = [command]
            subparsers[command].set_defaults(**_coerce(subparsers[command], file_values))
            args = parser.parse_args(rest)
        else:
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
