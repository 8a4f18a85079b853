"""Command-line front end.

    lltrace params    --attack all1 --c 3 --n 1000 --eps1 0.05 --eps2 0.05 --mode simple
    lltrace capacity  --attack all --c 10 --mode both --format csv
    lltrace simulate  --attack majority --c 3 --n 100 --decoder llr --trials 500 --seed 42
    lltrace histogram --c 10 --ell 10000 --n 10010 --decoder interleaving-g --bins 60

Floats are written with 12 significant digits in both JSON and CSV. Parsing
the JSON back into the model types and printing again reproduces it exactly.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Optional, Sequence

import numpy as np

from . import decoders
from .channels import FINGERPRINTING_ATTACKS, Attack, build_attack, parse_attack
from .model import FixedP, SchemeParams, parse_bias
from .params import (
    asymptotic_length,
    deterministic_joint_params,
    joint_params,
    simple_params,
    universal_design,
)
from .probability import (
    JOINT,
    SIMPLE,
    deterministic_balance_bias,
    mutual_info_curve,
    optimal_bias,
    position_model,
)
from .sim import ExperimentConfig, estimate_errors, score_histogram

DEFAULTS: dict[str, Any] = {
    "attack": "interleaving",
    "r": None,
    "c": 3,
    "n": 100,
    "eps1": 0.1,
    "eps2": 0.1,
    "mode": SIMPLE,
    "decoder": None,
    "bias": None,
    "trials": 100,
    "seed": 0,
    "format": "json",
    "out": None,
}

# histograms pool one trial over many users and default to all five attacks
COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "histogram": {"trials": 1, "n": 10_010, "c": 10, "attack": "all"},
}


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.12g}") if math.isfinite(x) else x
    return obj


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def to_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# --- argument handling -------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--attack", help="interleaving, all1, majority, minority, coinflip, additive, dilution")
    p.add_argument("--r", type=float, help="noise rate for additive/dilution")
    p.add_argument("--c", type=int, help="coalition size")
    p.add_argument("--n", type=int, help="number of users")
    p.add_argument("--eps1", type=float, help="false-positive budget")
    p.add_argument("--eps2", type=float, help="false-negative budget")
    p.add_argument("--mode", choices=(SIMPLE, JOINT), help="simple or joint decoding")
    p.add_argument("--decoder", choices=decoders.DECODERS)
    p.add_argument("--bias", help="fixed:<p> | arcsine[:<delta>]")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--config", help="JSON file with default values for these flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lltrace", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="code length and threshold from the provable designs")
    _common(p)
    p.add_argument("--p", type=float, help="bias (default: capacity-optimal for the attack)")
    p.add_argument(
        "--design",
        choices=("markov", "deterministic", "universal"),
        default="markov",
        help="provable informed design, deterministic-channel joint design, or universal decoder",
    )
    p.add_argument("--catch-all", action="store_true", help="split eps2 over all colluders (heuristic)")

    p = sub.add_parser("capacity", help="mutual information versus bias and the optimal bias")
    _common(p)
    p.add_argument("--grid", type=int, default=99, help="number of interior grid points p = k/(grid+1)")
    p.add_argument("--both", action="store_true", help="report simple and joint mode")

    p = sub.add_parser("simulate", help="Monte Carlo estimate of error rates")
    _common(p)
    p.add_argument("--ell", type=int, help="explicit code length (default: from the design)")
    p.add_argument("--eta", type=float, help="explicit threshold (default: from the design)")
    p.add_argument("--threshold", choices=("raw", "normalized"))
    p.add_argument("--normalization", choices=("sample", "exact"))
    p.add_argument("--reuse-code", action="store_true")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("histogram", help="density of normalized innocent scores per attack")
    _common(p)
    p.add_argument("--attacks", help="comma-separated list (default: the five fingerprinting attacks)")
    p.add_argument("--ell", type=int, default=10_000)
    p.add_argument("--bins", type=int, default=60)
    p.add_argument("--range", type=float, nargs=2, default=(-6.0, 6.0), metavar=("LO", "HI"))
    p.add_argument("--normalization", choices=("sample", "exact"))
    return parser


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from ``--config`` and then from :data:`DEFAULTS`."""
    file_values: dict[str, Any] = {}
    if args.config:
        with open(args.config) as fh:
            file_values = json.load(fh)
    defaults = {**DEFAULTS, **COMMAND_DEFAULTS.get(args.command, {})}
    for key, value in vars(args).copy().items():
        if value is None:
            if key in file_values:
                setattr(args, key, file_values[key])
            elif key in defaults:
                setattr(args, key, defaults[key])
    if isinstance(args.bias, dict):
        args.bias = ":".join(str(v) for v in (args.bias["kind"], args.bias.get("p", args.bias.get("delta"))) if v is not None)
    for key, lo in (("c", 1), ("n", 1)):
        if getattr(args, key) < lo:
            raise UsageError(f"--{key} must be at least {lo}")
    if getattr(args, "trials", 1) is not None and args.trials < 1:
        raise UsageError("--trials must be at least 1")
    return args


def _attack(args) -> Attack:
    try:
        return parse_attack(args.attack, args.r)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- commands ----------------------------------------------------------------


def _design(args, attack: Attack) -> tuple[SchemeParams, Optional[float]]:
    """Scheme parameters for the requested design, and the bias they assume."""
    c, n = args.c, args.n
    channel = build_attack(attack, c)
    design = getattr(args, "design", "markov")
    if design == "universal":
        return universal_design(c, n, args.eps1, args.eps2), None
    if design == "deterministic":
        if args.mode != JOINT:
            raise UsageError("--design deterministic requires --mode joint")
        p = args.p if getattr(args, "p", None) else deterministic_balance_bias(channel)
        return deterministic_joint_params(c, n, args.eps1), p
    p = getattr(args, "p", None) or optimal_bias(c, channel, args.mode)
    model = position_model(c, p, channel)
    if args.mode == JOINT:
        if getattr(args, "catch_all", False):
            raise UsageError("--catch-all applies to simple decoding only")
        return joint_params(c, n, args.eps1, args.eps2, model), p
    return simple_params(c, n, args.eps1, args.eps2, model, catch_all=getattr(args, "catch_all", False)), p


def cmd_params(args) -> str:
    attack = _attack(args)
    if args.c == 1:
        # a single colluder: tuples are users, both modes coincide
        args.mode = SIMPLE
    params, p = _design(args, attack)
    asym = asymptotic_length(attack, args.c, args.n, JOINT if args.mode == JOINT else SIMPLE)
    result = params.to_dict()
    result.update(
        attack=str(attack),
        c=args.c,
        n=args.n,
        mode=args.mode,
        p=p,
        asymptotic_length=asym,
        ratio=params.ell / asym,
    )
    if args.format == "csv":
        keys = ["attack", "c", "n", "mode", "p", "ell", "eta", "gamma", "eps1", "eps2", "asymptotic_length", "ratio"]
        return to_csv(keys, [[result[k] for k in keys]])
    return to_json(result)


def _attack_list(args, default=FINGERPRINTING_ATTACKS) -> list[Attack]:
    selection = getattr(args, "attacks", None) or args.attack
    if selection == "all" or selection is None:
        return [Attack(a) for a in default]
    try:
        return [parse_attack(s, args.r) for s in selection.split(",")]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_capacity(args) -> str:
    if args.grid < 1:
        raise UsageError("--grid must be positive")
    grid = np.arange(1, args.grid + 1) / (args.grid + 1)
    modes = (SIMPLE, JOINT) if args.both else (args.mode,)
    columns: dict[str, np.ndarray] = {}
    summary = []
    for attack in _attack_list(args):
        channel = build_attack(attack, args.c)
        for mode in modes:
            p_star = optimal_bias(args.c, channel, mode)
            info = float(mutual_info_curve(channel, p_star, mode))
            rate = info / args.c if mode == JOINT else info
            summary.append({"attack": str(attack), "mode": mode, "optimal_p": p_star, "mutual_info_bits": info, "rate": rate})
            columns[f"{attack}_{mode}"] = mutual_info_curve(channel, grid, mode)
    if args.format == "csv":
        names = list(columns)
        rows = [[p] + [columns[k][i] for k in names] for i, p in enumerate(grid)]
        return to_csv(["p"] + names, rows)
    return to_json({"c": args.c, "optimum": summary, "grid": grid, "curves": columns})


def simulation_config(args) -> ExperimentConfig:
    attack = _attack(args)
    channel = build_attack(attack, args.c)
    decoder = args.decoder or ("joint-llr" if args.mode == JOINT else "llr")
    if (decoder in decoders.JOINT_DECODERS) != (args.mode == JOINT):
        raise UsageError(f"decoder {decoder} does not match --mode {args.mode}")
    informed = decoder in ("llr", "emi-m", "joint-llr")
    bias = parse_bias(args.bias) if args.bias else None
    threshold = args.threshold
    ell, eta = args.ell, args.eta
    if ell is None or eta is None:
        if informed:
            if args.mode == JOINT and channel.deterministic:
                p = bias.p if isinstance(bias, FixedP) else deterministic_balance_bias(channel)
                params = deterministic_joint_params(args.c, args.n, args.eps1)
            else:
                p = bias.p if isinstance(bias, FixedP) else optimal_bias(args.c, channel, args.mode)
                model = position_model(args.c, p, channel)
                design = joint_params if args.mode == JOINT else simple_params
                params = design(args.c, args.n, args.eps1, args.eps2, model)
            bias = bias or FixedP(p)
        elif args.mode == SIMPLE:
            params = universal_design(args.c, args.n, args.eps1, args.eps2)
            threshold = threshold or "normalized"
        else:
            raise UsageError("joint-interleaving has no design rule; pass --ell and --eta")
        ell = params.ell if ell is None else ell
        eta = params.eta if eta is None else eta
    return ExperimentConfig(
        n=args.n,
        c=args.c,
        attack=attack,
        bias=bias or parse_bias("arcsine"),
        decoder=decoder,
        ell=ell,
        eta=eta,
        mode=args.mode,
        trials=args.trials,
        seed=args.seed,
        threshold=threshold or "raw",
        normalization=args.normalization or "sample",
        reuse_code=args.reuse_code,
    )


def cmd_simulate(args) -> str:
    config = simulation_config(args)
    estimate = estimate_errors(config, workers=args.workers)
    if args.format == "csv":
        rows = [[k, estimate.counts[k], estimate.rates[k], *estimate.intervals[k]] for k in estimate.counts]
        return to_csv(["event", "count", "rate", "ci_low", "ci_high"], rows)
    return to_json({"config": config.to_dict(), "estimate": estimate.to_dict()})


def cmd_histogram(args) -> str:
    if args.bins < 1:
        raise UsageError("--bins must be positive")
    if args.mode != SIMPLE:
        raise UsageError("histograms are defined for simple decoding only")
    decoder = args.decoder or "interleaving-g"
    bias = parse_bias(args.bias or "arcsine")
    densities: dict[str, np.ndarray] = {}
    moments = {}
    centers = reference = None
    for attack in _attack_list(args):
        config = ExperimentConfig(
            n=args.n,
            c=args.c,
            attack=attack,
            bias=bias,
            decoder=decoder,
            ell=args.ell,
            eta=math.inf,
            trials=args.trials,
            seed=args.seed,
            normalization=args.normalization or "sample",
        )
        hist = score_histogram(config, args.bins, tuple(args.range))
        centers, reference = hist.centers, hist.reference
        densities[str(attack)] = hist.density
        moments[str(attack)] = {"samples": hist.samples, "skewness": hist.skewness, "excess_kurtosis": hist.excess_kurtosis}
    if args.format == "csv":
        names = list(densities)
        rows = [[x] + [densities[k][i] for k in names] + [reference[i]] for i, x in enumerate(centers)]
        return to_csv(["bin_center"] + names + ["reference"], rows)
    return to_json({"centers": centers, "densities": densities, "reference": reference, "moments": moments})


COMMANDS = {
    "params": cmd_params,
    "capacity": cmd_capacity,
    "simulate": cmd_simulate,
    "histogram": cmd_histogram,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _resolve(args)
        _emit(args, COMMANDS[args.command](args))
    except (UsageError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
