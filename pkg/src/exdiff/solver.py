"""Standard diffusion, exact diffusion and their equivalent forms.

All recursions run synchronously on ``(N, M)`` block arrays; a combine step
``w_k <- sum_l a_lk psi_l`` is ``A.T @ Psi``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .costs import CostModel, global_minimizer
from .policy import CombinationPolicy, StepSizes, square_root_V

ALGORITHMS = ("diffusion", "penalized_incremental", "exact_diffusion",
              "exact_diffusion_adaptive", "primal_dual")
DIVERGENCE_LIMIT = 1e12


class SolverError(RuntimeError):
    pass


@dataclass
class SolverState:
    W: np.ndarray
    psi_prev: np.ndarray | None = None   # exact diffusion
    Y: np.ndarray | None = None          # primal-dual dual blocks
    Z: np.ndarray | None = None          # adaptive Perron estimates, column k = z_k
    i: int = 0

    @classmethod
    def initial(cls, W_init: np.ndarray) -> SolverState:
        W = np.array(W_init, dtype=float)
        return cls(W=W, psi_prev=W.copy(), Y=np.zeros_like(W), Z=np.eye(W.shape[0]))


def diffusion_step(state: SolverState, policy: CombinationPolicy, steps: StepSizes,
                   model: CostModel) -> SolverState:
    psi = state.W - steps.mu[:, None] * model.gradient(state.W)
    return replace(state, W=policy.A.T @ psi, i=state.i + 1)


def penalized_incremental_step(state: SolverState, policy: CombinationPolicy, steps: StepSizes,
                               model: CostModel, alpha: float | None = None) -> SolverState:
    """Diagonally weighted incremental step on the penalized problem.

    With ``alpha = 1/beta`` this reproduces `diffusion_step` for balanced
    policies.
    """
    alpha = steps.alpha if alpha is None else alpha
    p = policy.perron
    P = np.diag(p)
    grad_star = steps.q[:, None] * model.gradient(state.W)
    psi = state.W - alpha * grad_star / p[:, None]
    penalty = ((P - policy.A @ P) / alpha) @ psi
    return replace(state, W=psi - alpha * penalty / p[:, None], i=state.i + 1)


def exact_diffusion_step(state: SolverState, A_bar: np.ndarray, steps: StepSizes,
                         model: CostModel) -> SolverState:
    """Adapt, correct, combine."""
    psi = state.W - steps.mu[:, None] * model.gradient(state.W)
    phi = psi + state.W - state.psi_prev
    return replace(state, W=A_bar.T @ phi, psi_prev=psi, i=state.i + 1)


def exact_diffusion_adaptive_step(state: SolverState, A_bar: np.ndarray, q: np.ndarray,
                                  mu_o: float, model: CostModel) -> SolverState:
    """Exact diffusion with the Perron entries learned on the fly.

    `mu_o` is the base step in ``mu_k = q_k mu_o / p_k`` form.
    """
    Z = state.Z @ A_bar
    read = np.diag(Z)
    bound = np.diag(A_bar) ** (state.i + 1)
    if np.any(read <= 0) or np.any(read < bound * (1 - 1e-12)):
        raise SolverError(f"Perron readout positivity violated at iteration {state.i}")
    mu = q * mu_o / read
    psi = state.W - mu[:, None] * model.gradient(state.W)
    phi = psi + state.W - state.psi_prev
    return replace(state, W=A_bar.T @ phi, psi_prev=psi, Z=Z, i=state.i + 1)


def primal_dual_step(state: SolverState, policy: CombinationPolicy, V: np.ndarray,
                     steps: StepSizes, model: CostModel) -> SolverState:
    p = policy.perron
    theta = state.W - steps.mu[:, None] * model.gradient(state.W)
    W = policy.A_bar.T @ theta - (V @ state.Y) / p[:, None]
    return replace(state, W=W, Y=state.Y + V @ W, i=state.i + 1)


@dataclass
class RunConfig:
    algorithm: str
    policy: CombinationPolicy
    steps: StepSizes
    model: CostModel
    max_iters: int = 1000
    W_init: np.ndarray | None = None
    tol: float | None = None
    reference: np.ndarray | None = None   # w* (single vector); computed if absent
    record_cost: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise SolverError(f"unknown algorithm {self.algorithm!r}")
        if self.policy.n_agents != self.model.n_agents or self.steps.mu.shape != (self.model.n_agents,):
            raise SolverError("policy, step sizes and cost model disagree on N")


@dataclass
class Trajectory:
    algorithm: str
    rel_error: np.ndarray
    cost: np.ndarray | None = None
    diverged: bool = False
    diverged_at: int | None = None
    W: np.ndarray | None = None
    reference: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.rel_error)

    def plateau(self, fraction: float = 0.1) -> float:
        """Mean relative error over the final `fraction` of iterations."""
        n = max(1, int(round(fraction * len(self.rel_error))))
        return float(np.mean(self.rel_error[-n:]))

    def first_below(self, level: float) -> int | None:
        hit = np.flatnonzero(self.rel_error < level)
        return int(hit[0]) if hit.size else None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            header = ["iter", "rel_error"] + (["cost"] if self.cost is not None else [])
            writer.writerow(header)
            for i, e in enumerate(self.rel_error):
                row = [i, f"{e:.17g}"]
                if self.cost is not None:
                    row.append(f"{self.cost[i]:.17g}")
                writer.writerow(row)
            if self.diverged:
                fh.write(f"# diverged at iteration {self.diverged_at}\n")


def read_trajectory_csv(path) -> tuple[np.ndarray, str | None]:
    """Relative-error column plus the trailer comment, if any."""
    errs, trailer = [], None
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            if line.startswith("#"):
                trailer = line[1:].strip()
                continue
            errs.append(float(line.split(",")[1]))
    return np.array(errs), trailer


def _stepper(config: RunConfig):
    pol, steps, model = config.policy, config.steps, config.model
    alg = config.algorithm
    if alg == "diffusion":
        return lambda s: diffusion_step(s, pol, steps, model)
    if alg == "penalized_incremental":
        return lambda s: penalized_incremental_step(s, pol, steps, model)
    if alg == "exact_diffusion":
        A_bar = pol.A_bar
        return lambda s: exact_diffusion_step(s, A_bar, steps, model)
    if alg == "exact_diffusion_adaptive":
        A_bar = pol.A_bar
        return lambda s: exact_diffusion_adaptive_step(s, A_bar, steps.q, 1.0 / steps.beta, model)
    V = square_root_V(pol)
    return lambda s: primal_dual_step(s, pol, V, steps, model)


def run(config: RunConfig) -> Trajectory:
    """Run one algorithm and record ``||W_i - W*||^2 / ||W_0 - W*||^2``.

    Index 0 is the first iterate ``W_0`` (one step from ``W_{-1}``). The run
    halts on a non-finite iterate or a relative error above 1e12 and flags
    the trajectory as diverged.
    """
    model = config.model
    N, M = model.n_agents, model.dim
    w_ref = config.reference
    if w_ref is None:
        w_ref = global_minimizer(model, config.steps.q)
    W_ref = np.tile(w_ref, (N, 1))
    W_init = np.zeros((N, M)) if config.W_init is None else np.asarray(config.W_init, dtype=float)
    state = SolverState.initial(W_init.reshape(N, M))
    step = _stepper(config)

    errors, costs = [], []
    denom = None
    diverged_at = None
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(config.max_iters):
            state = step(state)
            sq = float(np.sum((state.W - W_ref) ** 2))
            if denom is None:
                denom = sq if sq > 0 else 1.0
            rel = sq / denom
            if not np.isfinite(rel) or rel > DIVERGENCE_LIMIT:
                diverged_at = i
                break
            errors.append(rel)
            if config.record_cost:
                costs.append(float(np.sum(config.steps.q * model.values(state.W))))
            if config.tol is not None and rel < config.tol:
                break
    return Trajectory(algorithm=config.algorithm, rel_error=np.array(errors),
                      cost=np.array(costs) if config.record_cost else None,
                      diverged=diverged_at is not None, diverged_at=diverged_at,
                      W=state.W, reference=w_ref)


def iterate(step, state: SolverState, n: int) -> list[SolverState]:
    """Apply `step` n times and keep every state (for side-by-side checks)."""
    out = []
    for _ in range(n):
        state = step(state)
        out.append(state)
    return out
