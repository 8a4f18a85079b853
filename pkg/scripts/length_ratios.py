"""Provable code lengths divided by their leading-order asymptotes, as n grows.

    python3 scripts/length_ratios.py --c 10 --eps 1e-4
"""

import argparse

from lltrace.channels import FINGERPRINTING_ATTACKS, build_attack
from lltrace.params import asymptotic_length, joint_params, simple_params
from lltrace.probability import JOINT, SIMPLE, optimal_bias, position_model


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--c", type=int, default=10)
    parser.add_argument("--eps", type=float, default=1e-4)
    parser.add_argument("--log10-n", type=int, nargs="+", default=[6, 9, 12, 18, 24, 48])
    args = parser.parse_args()

    sizes = [10**k for k in args.log10_n]
    print(f"{'attack':13s} {'mode':7s} {'p*':>9s} " + " ".join(f"{'n=1e' + str(k):>9s}" for k in args.log10_n))
    for attack in FINGERPRINTING_ATTACKS:
        for mode, design in ((SIMPLE, simple_params), (JOINT, joint_params)):
            ch = build_attack(attack, args.c)
            p = optimal_bias(args.c, ch, mode)
            model = position_model(args.c, p, ch)
            ratios = [design(args.c, n, args.eps, args.eps, model).ell / asymptotic_length(attack, args.c, n, mode) for n in sizes]
            print(f"{attack.value:13s} {mode:7s} {p:9.5f} " + " ".join(f"{r:9.4f}" for r in ratios))


if __name__ == "__main__":
    main()
