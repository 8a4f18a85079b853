"""Normalized innocent-score densities for the five fingerprinting attacks.

Writes one CSV per decoder (bin centre, one density column per attack, standard
normal reference) and prints skewness and excess kurtosis per attack.

    python3 scripts/score_histograms.py --out-dir results/histograms
"""

import argparse
import csv
import math
from pathlib import Path

from lltrace.channels import FINGERPRINTING_ATTACKS, Attack
from lltrace.model import Arcsine
from lltrace.sim import ExperimentConfig, score_histogram


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--c", type=int, default=10)
    parser.add_argument("--ell", type=int, default=10_000)
    parser.add_argument("--innocents", type=int, default=10_000)
    parser.add_argument("--bins", type=int, default=80)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--decoders", nargs="+", default=["interleaving-g", "oosterwijk-h"])
    parser.add_argument("--out-dir", type=Path, default=Path("results/histograms"))
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    for decoder in args.decoders:
        columns, centers, reference = {}, None, None
        for attack in FINGERPRINTING_ATTACKS:
            config = ExperimentConfig(
                n=args.innocents + args.c, c=args.c, attack=Attack(attack), bias=Arcsine(0.0),
                decoder=decoder, ell=args.ell, eta=math.inf, seed=args.seed,
            )
            hist = score_histogram(config, args.bins, (-6.0, 6.0))
            centers, reference = hist.centers, hist.reference
            columns[attack.value] = hist.density
            print(f"{decoder:15s} {attack.value:13s} skew={hist.skewness:+.3f} exkurt={hist.excess_kurtosis:+.3f}")
        path = args.out_dir / f"{decoder}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_center", *columns, "reference"])
            for i, x in enumerate(centers):
                writer.writerow([f"{x:.12g}", *(f"{columns[k][i]:.12g}" for k in columns), f"{reference[i]:.12g}"])
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
