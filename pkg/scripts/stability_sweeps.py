"""rho(F - G) sweeps for both examples plus the Jury margins of example 1.

Outputs (in --out): example1_rho.csv, example2_rho.csv, example1_jury.csv.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from exdiff.stability import (example, example1_characteristic_poly, jury_margins, mu_grid,
                              sweep_rho)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=300)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    A, p, D = example(1)
    rep1 = sweep_rho(A, p, D, mu_grid(1e-6, 3, args.points))
    rep1.to_csv(args.out / "example1_rho.csv")
    print(f"example 1: min rho {np.nanmin(rep1.rho):.4f} over [1e-6, 3]")

    A, p, D = example(2)
    rep2 = sweep_rho(A, p, D, mu_grid(1e-3, 0.3, args.points, "linear"))
    rep2.to_csv(args.out / "example2_rho.csv")
    cross = rep2.mu[np.argmax(rep2.rho >= 1)]
    print(f"example 2: first grid point with rho >= 1 at mu = {cross:.4f}")

    mus = np.linspace(3 / 1000, 3, 1000)
    with open(args.out / "example1_jury.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mu"] + [f"cond{j}" for j in range(1, 9)])
        for mu in mus:
            w.writerow([f"{mu:.6g}"] + [f"{m:.6g}" for m in jury_margins(example1_characteristic_poly(mu))])
    print(f"jury margins written for {mus.size} step sizes")


if __name__ == "__main__":
    main()
