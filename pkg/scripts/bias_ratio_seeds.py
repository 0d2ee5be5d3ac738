"""Spread of the diffusion bias ratio plateau(mu_o)/plateau(mu_o/2) over graph seeds.

Quantifies how much the O(mu^2) ratio depends on the random topology.
"""

import argparse

import numpy as np

from exdiff.experiments import ExperimentConfig, make_model, solve
from exdiff.network import generate_random_network
from exdiff.policy import build_policy


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--edge-prob", type=float, nargs="+", default=[0.2, 0.3])
    ap.add_argument("--seeds", type=int, default=12)
    ap.add_argument("--mu-o", type=float, default=0.01)
    ap.add_argument("--iters", type=int, default=5000)
    args = ap.parse_args()

    model = make_model(ExperimentConfig(), 20)
    for prob in args.edge_prob:
        ratios = []
        for seed in range(args.seeds):
            net = generate_random_network(20, prob, seed)
            plateaus = []
            for mu_o in (args.mu_o, args.mu_o / 2):
                policy, steps = build_policy(net, "averaging", mu_o=mu_o)
                plateaus.append(solve(policy, steps, model, "diffusion", args.iters).plateau())
            ratios.append(plateaus[0] / plateaus[1])
        r = np.array(ratios)
        print(f"edge_prob={prob}: ratio min {r.min():.3f} median {np.median(r):.3f} "
              f"max {r.max():.3f}; in [3, 5] for {np.sum((r >= 3) & (r <= 5))}/{r.size} seeds")


if __name__ == "__main__":
    main()
