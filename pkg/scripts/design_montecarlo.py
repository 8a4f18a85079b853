"""Monte Carlo check of the provable informed designs.

For each attack: simple decoding with the Markov-bound design at the
capacity-optimal bias, and, for deterministic attacks, joint decoding at the
balance bias. Prints measured error rates with Wilson 95% intervals.

    python3 scripts/design_montecarlo.py --c 3 --n 100 --eps 0.1 --trials 2000
"""

import argparse
import time

from lltrace.channels import FINGERPRINTING_ATTACKS, Attack, build_attack
from lltrace.model import FixedP
from lltrace.params import deterministic_joint_params, simple_params
from lltrace.probability import JOINT, deterministic_balance_bias, optimal_bias, position_model
from lltrace.sim import ExperimentConfig, estimate_errors


def show(label, config, est, started):
    fp, fn = est.intervals["fp"], est.intervals["fn_catch_one"]
    print(
        f"{label:28s} ell={config.ell:6d} eta={config.eta:8.3f} "
        f"fp={est.fp_rate:.4f} [{fp[0]:.4f},{fp[1]:.4f}] "
        f"fn={est.fn_catch_one:.4f} [{fn[0]:.4f},{fn[1]:.4f}] {time.time() - started:.1f}s"
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--c", type=int, default=3)
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--joint-n", type=int, default=30)
    parser.add_argument("--eps", type=float, default=0.1)
    parser.add_argument("--trials", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    for attack in FINGERPRINTING_ATTACKS:
        started = time.time()
        ch = build_attack(attack, args.c)
        p = optimal_bias(args.c, ch)
        params = simple_params(args.c, args.n, args.eps, args.eps, position_model(args.c, p, ch))
        config = ExperimentConfig.from_params(
            params, n=args.n, c=args.c, attack=Attack(attack), bias=FixedP(p), decoder="llr",
            trials=args.trials, seed=args.seed,
        )
        show(f"{attack.value} simple", config, estimate_errors(config, args.workers), started)

        if ch.deterministic:
            started = time.time()
            p = deterministic_balance_bias(ch)
            params = deterministic_joint_params(args.c, args.joint_n, args.eps)
            config = ExperimentConfig(
                n=args.joint_n, c=args.c, attack=Attack(attack), bias=FixedP(p), decoder="joint-llr",
                ell=params.ell, eta=params.eta, mode=JOINT, trials=max(1, args.trials // 10), seed=args.seed,
            )
            show(f"{attack.value} joint (balance p)", config, estimate_errors(config, args.workers), started)


if __name__ == "__main__":
    main()
