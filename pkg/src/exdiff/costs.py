"""Per-agent costs: least squares, regularized logistic regression, quadratics.

Block iterates are ``(N, M)`` arrays whose row ``k`` is agent ``k``'s vector.
Random data comes from ``numpy.random.default_rng(seed)`` (PCG64).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit


class CostError(ValueError):
    pass


class CostModel:
    """Interface shared by the concrete models below."""

    n_agents: int
    dim: int

    def _blocks(self, W) -> np.ndarray:
        W = np.asarray(W, dtype=float)
        if W.shape == (self.n_agents * self.dim,):
            W = W.reshape(self.n_agents, self.dim)
        if W.shape != (self.n_agents, self.dim):
            raise CostError(f"expected {self.n_agents} blocks of dim {self.dim}, got shape {W.shape}")
        return W

    def gradient(self, W) -> np.ndarray:
        """Stacked gradient: row ``k`` is grad J_k(w_k)."""
        raise NotImplementedError

    def values(self, W) -> np.ndarray:
        """Row-wise J_k(w_k)."""
        raise NotImplementedError

    def hessian(self, k: int, w) -> np.ndarray:
        raise NotImplementedError

    def grad_k(self, k: int, w) -> np.ndarray:
        W = np.zeros((self.n_agents, self.dim))
        W[k] = w
        return self.gradient(W)[k]

    def aggregate_gradient(self, w, q) -> np.ndarray:
        """sum_k q_k grad J_k(w) at a common point."""
        W = np.tile(np.asarray(w, dtype=float), (self.n_agents, 1))
        return np.asarray(q, dtype=float) @ self.gradient(W)

    def aggregate_value(self, w, q) -> float:
        W = np.tile(np.asarray(w, dtype=float), (self.n_agents, 1))
        return float(np.asarray(q, dtype=float) @ self.values(W))


@dataclass
class LeastSquares(CostModel):
    """J_k(w) = 0.5 * ||U_k w - d_k||^2."""

    U: np.ndarray   # (N, S, M)
    d: np.ndarray   # (N, S)

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=float)
        self.d = np.asarray(self.d, dtype=float)
        if self.U.ndim != 3 or self.d.shape != self.U.shape[:2]:
            raise CostError(f"inconsistent shapes U {self.U.shape}, d {self.d.shape}")
        self.n_agents, _, self.dim = self.U.shape

    def gradient(self, W):
        W = self._blocks(W)
        r = np.einsum("ksm,km->ks", self.U, W) - self.d
        return np.einsum("ksm,ks->km", self.U, r)

    def values(self, W):
        W = self._blocks(W)
        r = np.einsum("ksm,km->ks", self.U, W) - self.d
        return 0.5 * np.sum(r * r, axis=1)

    def hessian(self, k, w=None):
        return self.U[k].T @ self.U[k]


@dataclass
class Logistic(CostModel):
    """J_k(w) = mean_j ln(1 + exp(-gamma_kj h_kj^T w)) + rho/2 ||w||^2."""

    H: np.ndarray       # (N, L, M) features
    gamma: np.ndarray   # (N, L) labels in {-1, +1}
    rho: float

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float)
        if self.H.ndim != 3 or self.gamma.shape != self.H.shape[:2]:
            raise CostError(f"inconsistent shapes H {self.H.shape}, gamma {self.gamma.shape}")
        if not self.rho > 0:
            raise CostError("rho must be positive")
        self.n_agents, self.L, self.dim = self.H.shape

    def _margins(self, W):
        return self.gamma * np.einsum("klm,km->kl", self.H, W)

    def gradient(self, W):
        W = self._blocks(W)
        s = expit(-self._margins(W))          # 1 / (1 + exp(gamma h^T w))
        g = -np.einsum("kl,klm->km", self.gamma * s, self.H) / self.L
        return g + self.rho * W

    def values(self, W):
        W = self._blocks(W)
        loss = np.logaddexp(0.0, -self._margins(W)).mean(axis=1)
        return loss + 0.5 * self.rho * np.sum(W * W, axis=1)

    def hessian(self, k, w):
        z = self.H[k] @ np.asarray(w, dtype=float)
        s = expit(z) * expit(-z)
        return (self.H[k].T * s) @ self.H[k] / self.L + self.rho * np.eye(self.dim)

    def smoothness(self) -> np.ndarray:
        """Per-agent gradient Lipschitz bound lambda_max(H_k^T H_k)/(4L) + rho."""
        top = np.array([np.linalg.eigvalsh(h.T @ h)[-1] for h in self.H])
        return top / (4 * self.L) + self.rho


@dataclass
class Quadratic(CostModel):
    """J_k(w) = 0.5 (w - b_k)^T Q_k (w - b_k) with constant Hessians Q_k."""

    Q: np.ndarray   # (N, M, M)
    b: np.ndarray   # (N, M)

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.Q.ndim != 3 or self.b.shape != self.Q.shape[:2] or self.Q.shape[1] != self.Q.shape[2]:
            raise CostError(f"inconsistent shapes Q {self.Q.shape}, b {self.b.shape}")
        self.n_agents, self.dim = self.b.shape

    @classmethod
    def scalar(cls, h, b) -> Quadratic:
        h = np.asarray(h, dtype=float)
        return cls(Q=h[:, None, None], b=np.asarray(b, dtype=float).reshape(-1, 1))

    def gradient(self, W):
        W = self._blocks(W)
        return np.einsum("kij,kj->ki", self.Q, W - self.b)

    def values(self, W):
        E = self._blocks(W) - self.b
        return 0.5 * np.einsum("ki,kij,kj->k", E, self.Q, E)

    def hessian(self, k, w=None):
        return self.Q[k]


def generate_ls_data(n: int, dim: int, samples: int, seed: int) -> LeastSquares:
    """All of U (agent-major, row-major) is drawn first, then all of d."""
    if min(n, dim, samples) < 1:
        raise CostError("sizes must be >= 1")
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n, samples, dim))
    d = rng.standard_normal((n, samples))
    return LeastSquares(U, d)


def generate_logistic_data(n: int, dim: int, samples: int, rho: float, seed: int,
                           w0=None) -> Logistic:
    """Features ~ N(0, 10 I); label +1 iff a U(0,1) draw <= sigmoid(h^T w0).

    Draw order: w0 (M normals), then per agent the (L, M) feature block
    followed by its L uniforms. Passing `w0` overrides the drawn vector
    without changing the stream.
    """
    if min(n, dim, samples) < 1:
        raise CostError("sizes must be >= 1")
    if not rho > 0:
        raise CostError("rho must be positive")
    rng = np.random.default_rng(seed)
    w_aux = rng.standard_normal(dim)
    if w0 is not None:
        w_aux = np.asarray(w0, dtype=float)
    H = np.empty((n, samples, dim))
    gamma = np.empty((n, samples))
    for k in range(n):
        H[k] = np.sqrt(10.0) * rng.standard_normal((samples, dim))
        u = rng.random(samples)
        gamma[k] = np.where(u <= expit(H[k] @ w_aux), 1.0, -1.0)
    return Logistic(H, gamma, rho)


def gradient(model: CostModel, W) -> np.ndarray:
    return model.gradient(W)


def global_minimizer(model: CostModel, q=None, tol: float = 1e-12,
                     max_iter: int = 1_000_000) -> np.ndarray:
    """Minimizer of sum_k q_k J_k(w)."""
    q = np.ones(model.n_agents) if q is None else np.asarray(q, dtype=float)
    if isinstance(model, (LeastSquares, Quadratic)):
        if isinstance(model, LeastSquares):
            Hs = np.einsum("ksm,ksn->kmn", model.U, model.U)
            rhs = np.einsum("k,ksm,ks->m", q, model.U, model.d)
        else:
            Hs = model.Q
            rhs = np.einsum("k,kij,kj->i", q, model.Q, model.b)
        H = np.einsum("k,kmn->mn", q, Hs)
        eig = np.linalg.eigvalsh((H + H.T) / 2)
        if eig[0] <= 1e-12 * max(eig[-1], 1.0):
            raise CostError("aggregate Hessian is singular: problem is not strongly convex")
        return np.linalg.solve(H, rhs)
    w, _, _ = centralized_gradient_descent(model, q, tol=tol, max_iter=max_iter)
    return w


def centralized_gradient_descent(model: CostModel, q, tol: float = 1e-12,
                                 max_iter: int = 1_000_000, record: bool = False):
    """Fixed-step gradient descent on sum_k q_k J_k.

    Step ``1 / sum_k q_k L_k`` with ``L_k`` the logistic smoothness bound.
    Returns ``(w, iterations, values)``; `values` is the per-iteration
    aggregate cost when `record` is set, else None.
    """
    q = np.asarray(q, dtype=float)
    if isinstance(model, Logistic):
        step = 1.0 / float(q @ model.smoothness())
    else:
        top = max(np.linalg.eigvalsh(model.hessian(k, np.zeros(model.dim)))[-1]
                  for k in range(model.n_agents))
        step = 1.0 / (float(q.sum()) * top)
    w = np.zeros(model.dim)
    values = [model.aggregate_value(w, q)] if record else None
    for it in range(max_iter):
        g = model.aggregate_gradient(w, q)
        if np.linalg.norm(g) <= tol:
            return w, it, values
        w = w - step * g
        if record:
            values.append(model.aggregate_value(w, q))
    raise CostError(f"centralized solver hit the {max_iter}-iteration cap")


def dataset_to_dict(model: CostModel) -> dict:
    if isinstance(model, LeastSquares):
        return {"kind": "least_squares", "U": model.U.tolist(), "d": model.d.tolist()}
    if isinstance(model, Logistic):
        return {"kind": "logistic", "H": model.H.tolist(), "gamma": model.gamma.tolist(),
                "rho": model.rho}
    if isinstance(model, Quadratic):
        return {"kind": "quadratic", "Q": model.Q.tolist(), "b": model.b.tolist()}
    raise CostError(f"cannot serialize {type(model).__name__}")


def dataset_from_dict(data: dict) -> CostModel:
    kind = data.get("kind")
    if kind == "least_squares":
        return LeastSquares(np.array(data["U"]), np.array(data["d"]))
    if kind == "logistic":
        return Logistic(np.array(data["H"]), np.array(data["gamma"]), float(data["rho"]))
    if kind == "quadratic":
        return Quadratic(np.array(data["Q"]), np.array(data["b"]))
    raise CostError(f"unknown dataset kind {kind!r}")


def save_dataset(model: CostModel, path) -> None:
    Path(path).write_text(json.dumps(dataset_to_dict(model)), encoding="utf-8")


def load_dataset(path) -> CostModel:
    return dataset_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
