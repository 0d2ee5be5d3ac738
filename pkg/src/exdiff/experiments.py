"""Experiment setups shared by the CLI, the scripts and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import CostModel, Quadratic, generate_logistic_data, generate_ls_data
from .network import Network, generate_random_network, generate_unbalanced_network
from .policy import CombinationPolicy, StepSizes, build_policy, perron_scaled_steps
from .solver import RunConfig, Trajectory, run
from .stability import example

# stand-in for the unprinted 20-node experiment topology
DEFAULT_NET = dict(n=20, edge_prob=0.3, seed=7)


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one solve run from flags or JSON."""

    network: dict = field(default_factory=lambda: {"kind": "random", **DEFAULT_NET})
    rule: str = "averaging"
    cost: str = "ls"
    dim: int = 30
    samples: int = 50
    rho: float = 0.1
    data_seed: int = 1
    algorithms: list = field(default_factory=lambda: ["diffusion", "exact_diffusion"])
    mu_o: list = field(default_factory=lambda: [0.01])
    max_iters: int = 3000
    tol: float | None = None
    out: str = "run"
    example: int | None = None

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**known)
        if not isinstance(cfg.mu_o, list):
            cfg.mu_o = [cfg.mu_o]
        return cfg


def make_network(spec: dict) -> Network:
    from .network import load_network

    kind = spec.get("kind", "random")
    if kind == "random":
        return generate_random_network(int(spec.get("n", 20)), float(spec.get("edge_prob", 0.3)),
                                       int(spec.get("seed", 0)))
    if kind == "unbalanced":
        return generate_unbalanced_network(int(spec.get("n_hubs", 2)), int(spec.get("n_leaves", 18)))
    if kind == "file":
        return load_network(spec["path"])
    raise ValueError(f"unknown network kind {kind!r}")


def make_model(cfg: ExperimentConfig, n_agents: int) -> CostModel:
    if cfg.cost == "ls":
        return generate_ls_data(n_agents, cfg.dim, cfg.samples, cfg.data_seed)
    if cfg.cost == "logistic":
        return generate_logistic_data(n_agents, cfg.dim, cfg.samples, cfg.rho, cfg.data_seed)
    raise ValueError(f"unknown cost {cfg.cost!r}")


def example_problem(which: int, mu: float, seed: int = 0
                    ) -> tuple[CombinationPolicy, StepSizes, Quadratic]:
    """Scalar quadratic problem whose error dynamics match example `which`.

    ``q_k = 1``, ``mu_k = mu / p_k`` and ``h_k = p_k D_k`` so that
    ``P^{-1} H = diag(D)``; the centers ``b_k`` are standard normal draws.
    """
    A, p, D = example(which)
    policy = CombinationPolicy(A=A, perron=p, rule="custom")
    steps = perron_scaled_steps(p, mu)
    b = np.random.default_rng(seed).standard_normal(A.shape[0])
    return policy, steps, Quadratic.scalar(p * D, b)


def solve(policy: CombinationPolicy, steps: StepSizes, model: CostModel, algorithm: str,
          max_iters: int, tol: float | None = None, reference=None) -> Trajectory:
    return run(RunConfig(algorithm=algorithm, policy=policy, steps=steps, model=model,
                         max_iters=max_iters, tol=tol, reference=reference))


def iterations_to(policy, steps, model, level: float, max_iters: int,
                  algorithm: str = "exact_diffusion", reference=None) -> int | None:
    """First iteration whose relative error drops below `level` (None if never)."""
    traj = solve(policy, steps, model, algorithm, max_iters, tol=level, reference=reference)
    if traj.diverged:
        return None
    return traj.first_below(level)


def best_iterations(net: Network, rule: str, model: CostModel, mu_max_grid, level: float = 1e-8,
                    max_iters: int = 20_000, reference=None) -> tuple[int | None, float | None]:
    """Fastest exact-diffusion run over a grid of largest per-agent step sizes.

    Each grid value is the largest ``mu_k`` the rule would use; the rule's own
    ``mu_o`` is derived from it. Returns ``(iterations, mu_max)``.
    """
    N = net.n_agents
    n = net.degrees.astype(float)
    best = (None, None)
    for mu_max in mu_max_grid:
        if rule == "averaging":
            mu_o = mu_max * n.min()
        elif rule in ("metropolis", "max_degree"):
            mu_o = mu_max / N
        else:
            raise ValueError(f"grid mapping not defined for rule {rule!r}")
        policy, steps = build_policy(net, rule, mu_o=mu_o)
        it = iterations_to(policy, steps, model, level, max_iters, reference=reference)
        if it is not None and (best[0] is None or it < best[0]):
            best = (it, float(mu_max))
    return best
