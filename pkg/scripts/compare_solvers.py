"""Diffusion vs exact diffusion on the least-squares or logistic setup.

Writes one trajectory CSV per algorithm into --out and prints final errors.

    python3 scripts/compare_solvers.py --cost ls --mu-o 0.01
    python3 scripts/compare_solvers.py --cost logistic --mu-o 0.05 --iters 20000
"""

import argparse
from pathlib import Path

from exdiff.costs import global_minimizer
from exdiff.experiments import DEFAULT_NET, ExperimentConfig, make_model, make_network, solve
from exdiff.policy import build_policy


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cost", choices=("ls", "logistic"), default="ls")
    ap.add_argument("--rule", default="averaging")
    ap.add_argument("--mu-o", type=float, default=0.01)
    ap.add_argument("--iters", type=int, default=3000)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()

    net = make_network({"kind": "random", **DEFAULT_NET})
    model = make_model(ExperimentConfig(cost=args.cost), net.n_agents)
    policy, steps = build_policy(net, args.rule, mu_o=args.mu_o)
    w_ref = global_minimizer(model, steps.q)
    args.out.mkdir(parents=True, exist_ok=True)
    for alg in ("diffusion", "exact_diffusion"):
        traj = solve(policy, steps, model, alg, args.iters, reference=w_ref)
        path = args.out / f"{args.cost}_{args.rule}_{alg}_mu{args.mu_o:g}.csv"
        traj.to_csv(path)
        print(f"{alg:16s} final {traj.rel_error[-1]:.3e}  plateau {traj.plateau():.3e}  -> {path}")


if __name__ == "__main__":
    main()
