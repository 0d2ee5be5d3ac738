"""Command-line front end: ``exdiff {policy,solve,stability,net}``.

Exit codes: 0 success (divergence counts as a finding), 1 validation
failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .costs import global_minimizer
from .network import NetworkError, save_network
from .policy import (RULES, PolicyError, build_policy, load_policy, validate_policy,
                     verify_lemma_properties)
from .solver import ALGORITHMS, RunConfig, run
from .stability import (StabilityError, example, example1_characteristic_poly,
                        jury_stability_test, mu_grid, sweep_rho)


class UsageError(Exception):
    pass


def _network_spec(args) -> dict | None:
    if getattr(args, "net", None):
        return {"kind": "file", "path": args.net}
    if getattr(args, "random", None):
        n, p, seed = args.random
        return {"kind": "random", "n": int(n), "edge_prob": float(p), "seed": int(seed)}
    if getattr(args, "unbalanced", None):
        h, l = args.unbalanced
        return {"kind": "unbalanced", "n_hubs": int(h), "n_leaves": int(l)}
    return None


def _add_network_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--net", metavar="PATH", help="network JSON file")
    g.add_argument("--random", nargs=3, metavar=("N", "P", "SEED"),
                   help="seeded random graph")
    g.add_argument("--unbalanced", nargs=2, metavar=("HUBS", "LEAVES"),
                   help="hub-and-leaf graph")


def _dump(obj) -> None:
    print(json.dumps(obj, indent=2))


def cmd_policy(args) -> int:
    if args.matrix:
        policy = load_policy(args.matrix)
        steps = None
    else:
        spec = _network_spec(args) or {"kind": "random", **ex.DEFAULT_NET}
        net = ex.make_network(spec)
        q = None if args.q is None else np.asarray(args.q, dtype=float)
        policy, steps = build_policy(net, args.rule, q=q, mu_o=args.mu_o)
    val = validate_policy(policy, args.tol)
    report = {"rule": policy.rule, "n_agents": policy.n_agents,
              "perron": policy.perron.tolist(),
              "validation": {"left_stochastic": val.left_stochastic, "primitive": val.primitive,
                             "balanced": val.balanced,
                             "max_balance_residual": val.max_balance_residual}}
    if steps is not None:
        report["steps"] = {"mu": steps.mu.tolist(), "mu_o": steps.mu_o, "beta": steps.beta,
                           "q": steps.q.tolist()}
    ok = val.ok
    if args.check:
        lemma = verify_lemma_properties(policy, tol=args.tol)
        report["lemmas"] = lemma.to_dict()
        ok = ok and lemma.ok
    if args.show_matrix:
        report["A"] = policy.A.tolist()
    _dump(report)
    return 0 if ok else 1


def _solve_config(args) -> ex.ExperimentConfig:
    data = {}
    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    cfg = ex.ExperimentConfig.from_dict(data)
    spec = _network_spec(args)
    if spec is not None:
        cfg.network = spec
    for name in ("rule", "cost", "dim", "samples", "rho", "data_seed", "algorithms",
                 "mu_o", "max_iters", "tol", "out", "example"):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    bad = [a for a in cfg.algorithms if a not in ALGORITHMS]
    if bad:
        raise UsageError(f"unknown algorithm(s) {bad}; choose from {ALGORITHMS}")
    return cfg


def cmd_solve(args) -> int:
    cfg = _solve_config(args)
    outputs = []
    if cfg.example is None:
        net = ex.make_network(cfg.network)
        model = ex.make_model(cfg, net.n_agents)
    for mu_o in cfg.mu_o:
        if cfg.example is not None:
            policy, steps, model = ex.example_problem(cfg.example, mu_o)
        else:
            policy, steps = build_policy(net, cfg.rule, mu_o=mu_o)
        w_ref = global_minimizer(model, steps.q)
        for alg in cfg.algorithms:
            traj = run(RunConfig(algorithm=alg, policy=policy, steps=steps, model=model,
                                 max_iters=cfg.max_iters, tol=cfg.tol, reference=w_ref))
            path = f"{cfg.out}_{alg}_mu{mu_o:g}.csv"
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            traj.to_csv(path)
            outputs.append({"algorithm": alg, "mu_o": mu_o, "csv": path,
                            "iterations": traj.iterations,
                            "final_rel_error": float(traj.rel_error[-1]) if traj.iterations else None,
                            "plateau": traj.plateau() if traj.iterations else None,
                            "diverged": traj.diverged, "diverged_at": traj.diverged_at})
    _dump(outputs)
    return 0


def cmd_stability(args) -> int:
    if args.jury:
        if args.mu is None:
            raise UsageError("--jury needs --mu")
        print(jury_stability_test(example1_characteristic_poly(args.mu)).to_json())
        return 0
    if args.matrix:
        if args.h_diag is None:
            raise UsageError("--matrix needs --h-diag")
        policy = load_policy(args.matrix)
        A, p, D = policy.A, policy.perron, np.asarray(args.h_diag, dtype=float)
    else:
        A, p, D = example(args.example)
    report = sweep_rho(A, p, D, mu_grid(args.mu_min, args.mu_max, args.points, args.spacing))
    if args.out:
        report.to_csv(args.out)
    else:
        report.to_csv(sys.stdout)
    return 0


def cmd_net_gen(args) -> int:
    if args.kind == "random":
        net = ex.make_network({"kind": "random", "n": args.n, "edge_prob": args.p, "seed": args.seed})
    else:
        net = ex.make_network({"kind": "unbalanced", "n_hubs": args.hubs, "n_leaves": args.leaves})
    if args.out:
        save_network(net, args.out)
    else:
        _dump(net.to_dict())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exdiff", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("policy", help="build and validate a combination policy")
    _add_network_flags(p)
    p.add_argument("--rule", choices=RULES, default="averaging")
    p.add_argument("--matrix", metavar="PATH", help='custom policy JSON {"A": ..., "p": ...}')
    p.add_argument("--q", type=float, nargs="+")
    p.add_argument("--mu-o", type=float, default=0.01)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--check", action="store_true", help="also run the lemma checks")
    p.add_argument("--show-matrix", action="store_true")
    p.set_defaults(func=cmd_policy)

    s = sub.add_parser("solve", help="run solvers and write trajectory CSVs")
    s.add_argument("--config", metavar="PATH", help="JSON config; flags override it")
    _add_network_flags(s)
    s.add_argument("--rule", choices=RULES)
    s.add_argument("--cost", choices=("ls", "logistic"))
    s.add_argument("--dim", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--rho", type=float)
    s.add_argument("--data-seed", type=int)
    s.add_argument("--algorithms", nargs="+")
    s.add_argument("--mu-o", type=float, nargs="+")
    s.add_argument("--max-iters", type=int)
    s.add_argument("--tol", type=float)
    s.add_argument("--out", metavar="PREFIX")
    s.add_argument("--example", type=int, choices=(1, 2),
                   help="quadratic problem matching an error-dynamics example")
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("stability", help="rho(F - G) sweeps and the Jury test")
    t.add_argument("--example", type=int, choices=(1, 2), default=1)
    t.add_argument("--matrix", metavar="PATH")
    t.add_argument("--h-diag", type=float, nargs="+")
    t.add_argument("--mu-min", type=float, default=1e-6)
    t.add_argument("--mu-max", type=float, default=3.0)
    t.add_argument("--points", type=int, default=300)
    t.add_argument("--spacing", choices=("log", "linear"), default="log")
    t.add_argument("--out", metavar="PATH")
    t.add_argument("--jury", action="store_true", help="Jury verdict for the diverging example")
    t.add_argument("--mu", type=float)
    t.set_defaults(func=cmd_stability)

    n = sub.add_parser("net", help="network utilities")
    nsub = n.add_subparsers(dest="net_command", required=True)
    g = nsub.add_parser("gen", help="generate a network JSON file")
    g.add_argument("--kind", choices=("random", "unbalanced"), default="random")
    g.add_argument("--n", type=int, default=20)
    g.add_argument("--p", type=float, default=0.3)
    g.add_argument("--seed", type=int, default=7)
    g.add_argument("--hubs", type=int, default=2)
    g.add_argument("--leaves", type=int, default=18)
    g.add_argument("--out", metavar="PATH")
    g.set_defaults(func=cmd_net_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, NetworkError, PolicyError, StabilityError, ValueError,
            OSError, KeyError) as exc:
        print(f"exdiff: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
