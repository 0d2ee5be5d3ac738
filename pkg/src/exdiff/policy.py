"""Left-stochastic combination policies, Perron vectors and derived matrices.

Storage convention: ``A[l, k]`` is the weight agent ``k`` places on data
arriving from agent ``l``, so column ``k`` sums to one and the combine step
of agent ``k`` reads column ``k``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .network import Network, strongly_connected

RULES = ("hastings", "averaging", "relative_degree", "metropolis", "max_degree")
CLOSED_FORM_RULES = RULES
BALANCE_TOL = 1e-10


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class CombinationPolicy:
    A: np.ndarray
    perron: np.ndarray
    rule: str = "custom"

    @property
    def n_agents(self) -> int:
        return self.A.shape[0]

    @property
    def P(self) -> np.ndarray:
        return np.diag(self.perron)

    @property
    def A_bar(self) -> np.ndarray:
        return (np.eye(self.n_agents) + self.A) / 2


@dataclass(frozen=True)
class StepSizes:
    """Per-agent step sizes tied to the weights by ``q = beta * diag(mu) p``.

    `mu_o` is the rule's own base step; its relation to `beta` differs per
    rule (``beta = sum(n)/mu_o`` for averaging, ``1/mu_o`` for the doubly
    stochastic rules, ...).
    """

    mu: np.ndarray
    mu_o: float
    q: np.ndarray
    beta: float

    @property
    def mu_max(self) -> float:
        return float(self.mu.max())

    @property
    def tau(self) -> np.ndarray:
        return self.mu / self.mu_max

    @property
    def alpha(self) -> float:
        return 1.0 / self.beta


@dataclass
class PolicyValidation:
    left_stochastic: bool
    primitive: bool
    balanced: bool
    max_balance_residual: float

    @property
    def ok(self) -> bool:
        return self.left_stochastic and self.primitive and self.balanced


def _check_weights(n: int, q, mu_o: float) -> np.ndarray:
    q = np.ones(n) if q is None else np.asarray(q, dtype=float)
    if q.shape != (n,):
        raise PolicyError(f"q must have length {n}, got shape {q.shape}")
    if not np.all(q > 0):
        raise PolicyError("q must be strictly positive")
    if not mu_o > 0:
        raise PolicyError(f"mu_o must be positive, got {mu_o}")
    return q


def _neighbor_degree_sums(net: Network) -> np.ndarray:
    n = net.degrees
    return np.array([n[sorted(s)].sum() for s in net.neighbors], dtype=float)


def _hastings_matrix(net: Network, q: np.ndarray, mu: np.ndarray) -> np.ndarray:
    N = net.n_agents
    n = net.degrees
    r = n * mu / q
    A = np.zeros((N, N))
    for k in range(N):
        for l in net.neighbors[k]:
            if l != k:
                A[l, k] = (mu[k] / q[k]) / max(r[k], r[l])
        A[k, k] = 1.0 - A[:, k].sum()
    return A


def _averaging_matrix(net: Network) -> np.ndarray:
    adj = net.adjacency().astype(float)
    return adj / net.degrees[np.newaxis, :]


def _relative_degree_matrix(net: Network) -> np.ndarray:
    adj = net.adjacency().astype(float)
    n = net.degrees.astype(float)
    return adj * n[:, np.newaxis] / _neighbor_degree_sums(net)[np.newaxis, :]


def _metropolis_matrix(net: Network) -> np.ndarray:
    # 1/max(n_k, n_l) with self-inclusive degrees, remainder on the diagonal
    N = net.n_agents
    n = net.degrees
    A = np.zeros((N, N))
    for k in range(N):
        for l in net.neighbors[k]:
            if l != k:
                A[l, k] = 1.0 / max(n[k], n[l])
        A[k, k] = 1.0 - A[:, k].sum()
    return A


def _max_degree_matrix(net: Network) -> np.ndarray:
    adj = net.adjacency().astype(float)
    n_max = net.degrees.max()
    A = adj / n_max
    np.fill_diagonal(A, 0.0)
    np.fill_diagonal(A, 1.0 - A.sum(axis=0))
    return A


def perron_closed_form(net: Network, rule: str, q=None, mu=None) -> np.ndarray:
    """Perron vector from the rule's closed form (Hastings needs `q` and `mu`)."""
    N = net.n_agents
    n = net.degrees.astype(float)
    if rule == "hastings":
        if mu is None:
            raise PolicyError("the Hastings closed form needs the step sizes mu")
        q = np.ones(N) if q is None else np.asarray(q, dtype=float)
        w = q / np.asarray(mu, dtype=float)
    elif rule == "averaging":
        w = n
    elif rule == "relative_degree":
        w = n * _neighbor_degree_sums(net)
    elif rule in ("metropolis", "max_degree"):
        w = np.ones(N)
    else:
        raise PolicyError(f"no closed-form Perron vector for rule {rule!r}")
    return w / w.sum()


def build_policy(net: Network, rule: str, q=None, mu_o: float = 0.01,
                 mu=None) -> tuple[CombinationPolicy, StepSizes]:
    """Combination matrix, Perron vector and matched step sizes for `rule`.

    For ``hastings`` the per-agent steps `mu` are an input (default: `mu_o`
    at every agent); every other rule derives them from `q` and `mu_o`.
    """
    if rule not in RULES:
        raise PolicyError(f"unknown rule {rule!r}; expected one of {RULES}")
    N = net.n_agents
    q = _check_weights(N, q, mu_o)
    n = net.degrees.astype(float)

    if rule == "hastings":
        mu = np.full(N, float(mu_o)) if mu is None else np.asarray(mu, dtype=float)
        if mu.shape != (N,) or not np.all(mu > 0):
            raise PolicyError("Hastings step sizes must be positive, one per agent")
        A = _hastings_matrix(net, q, mu)
        beta = float(np.sum(q / mu))
    elif rule == "averaging":
        A = _averaging_matrix(net)
        mu = q * mu_o / n
        beta = float(n.sum() / mu_o)
    elif rule == "relative_degree":
        A = _relative_degree_matrix(net)
        s = n * _neighbor_degree_sums(net)
        mu = q * mu_o / s
        beta = float(s.sum() / mu_o)
    else:
        A = _metropolis_matrix(net) if rule == "metropolis" else _max_degree_matrix(net)
        mu = q * N * mu_o
        beta = 1.0 / mu_o

    p = perron_closed_form(net, rule, q, mu)
    policy = CombinationPolicy(A=A, perron=p, rule=rule)
    return policy, StepSizes(mu=mu, mu_o=float(mu_o), q=q, beta=beta)


def perron_scaled_steps(p: np.ndarray, mu_o: float, q=None) -> StepSizes:
    """``mu_k = (q_k / p_k) mu_o`` so that ``beta = 1/mu_o`` (any policy)."""
    p = np.asarray(p, dtype=float)
    q = _check_weights(p.size, q, mu_o)
    return StepSizes(mu=q * mu_o / p, mu_o=float(mu_o), q=q, beta=1.0 / mu_o)


def perron_dense(A: np.ndarray) -> np.ndarray:
    """Perron vector by dense eigensolve: eigenvector of eigenvalue nearest 1."""
    A = np.asarray(A, dtype=float)
    vals, vecs = np.linalg.eig(A)
    j = int(np.argmin(np.abs(vals - 1.0)))
    if abs(vals[j] - 1.0) > 1e-8:
        raise PolicyError("matrix has no eigenvalue at 1; is it left-stochastic?")
    v = np.real(vecs[:, j])
    v = v / v.sum()
    if not np.all(v > 0):
        raise PolicyError("Perron vector is not strictly positive; is A primitive?")
    return v


def validate_policy(policy: CombinationPolicy, tol: float = BALANCE_TOL) -> PolicyValidation:
    A = np.asarray(policy.A, dtype=float)
    p = np.asarray(policy.perron, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or p.shape != (A.shape[0],):
        raise PolicyError(f"dimension mismatch: A {A.shape}, p {p.shape}")
    left = bool(np.all(A >= -tol) and np.allclose(A.sum(axis=0), 1.0, rtol=0, atol=tol))
    primitive = strongly_connected(A) and np.trace(A) > 0
    flux = A * p[np.newaxis, :]          # a_lk p_k
    residual = float(np.max(np.abs(flux - flux.T)))
    return PolicyValidation(left_stochastic=left, primitive=bool(primitive),
                            balanced=residual <= tol, max_balance_residual=residual)


@dataclass
class LemmaReport:
    """Structural checks on a balanced primitive left-stochastic matrix.

    Failing checks are recorded in `failures` (name -> offending quantity)
    instead of raising.
    """

    balanced: bool
    B_symmetric: bool
    B_doubly_stochastic: bool
    B_primitive: bool
    B_unit_eigenvalue_simple: bool
    laplacian_psd: bool
    laplacian_nullity_one: bool
    A_real_eigenvalues: bool
    A_eigenvalues_in_range: bool
    A_eigenvalues: np.ndarray
    laplacian_eigenvalues: np.ndarray
    failures: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if isinstance(v, bool)}
        out["A_eigenvalues"] = np.real(self.A_eigenvalues).tolist()
        out["laplacian_eigenvalues"] = self.laplacian_eigenvalues.tolist()
        out["failures"] = self.failures
        out["ok"] = self.ok
        return out


def verify_lemma_properties(policy: CombinationPolicy, tol: float = 1e-10,
                            psd_tol: float = 1e-12) -> LemmaReport:
    A = np.asarray(policy.A, dtype=float)
    p = np.asarray(policy.perron, dtype=float)
    N = A.shape[0]
    P = np.diag(p)
    I = np.eye(N)
    ones = np.ones(N)
    failures: dict[str, str] = {}

    val = validate_policy(policy, tol)
    if not val.balanced:
        failures["balanced"] = f"balance residual {val.max_balance_residual:.3e} > {tol:g}"

    B = A @ P - P + I
    asym = float(np.max(np.abs(B - B.T)))
    B_sym = asym <= tol
    if not B_sym:
        failures["B_symmetric"] = f"max |B - B^T| = {asym:.3e}"
    ds_err = max(float(np.max(np.abs(B.sum(axis=0) - 1))), float(np.max(np.abs(B.sum(axis=1) - 1))))
    B_ds = ds_err <= tol
    if not B_ds:
        failures["B_doubly_stochastic"] = f"max row/column sum error {ds_err:.3e}"
    B_clean = np.where(np.abs(B) > tol, B, 0.0)
    B_prim = strongly_connected(B_clean) and np.trace(B_clean) > 0
    if not B_prim:
        failures["B_primitive"] = "support of AP - P + I not primitive"
    B_eigs = np.sort(np.linalg.eigvalsh((B + B.T) / 2))[::-1]
    B_simple = bool(abs(B_eigs[0] - 1) <= 1e-9 and (N == 1 or (B_eigs[1] < 1 - 1e-9 and B_eigs[-1] > -1 + 1e-9)))
    if not B_simple:
        failures["B_unit_eigenvalue_simple"] = f"eigenvalues of AP - P + I: {B_eigs.tolist()}"

    L = P - A @ P
    L_sym = (L + L.T) / 2
    lap_eigs = np.linalg.eigvalsh(L_sym)
    psd = bool(lap_eigs.min() >= -psd_tol)
    if not psd:
        failures["laplacian_psd"] = f"min eigenvalue of P - AP is {lap_eigs.min():.3e}"
    null_count = int(np.sum(np.abs(lap_eigs) <= tol))
    one_null = float(np.max(np.abs(L @ ones))) if N else 0.0
    nullity_one = null_count == 1 and one_null <= tol
    if not nullity_one:
        failures["laplacian_nullity_one"] = (f"{null_count} eigenvalues within {tol:g} of 0; "
                                             f"|(P - AP) 1|_inf = {one_null:.3e}")

    # eigenvalues of A through the symmetric similarity P^{-1/2} A P^{1/2}
    s = np.sqrt(p)
    S = A * s[np.newaxis, :] / s[:, np.newaxis]
    general = np.linalg.eigvals(A)
    real = float(np.max(np.abs(general.imag))) <= 1e-9 and float(np.max(np.abs(S - S.T))) <= tol
    if real:
        A_eigs = np.sort(np.linalg.eigvalsh((S + S.T) / 2))[::-1]
    else:
        A_eigs = general[np.argsort(-np.abs(general))]
        failures["A_real_eigenvalues"] = f"max |imag| = {np.max(np.abs(general.imag)):.3e}"
    lam = np.real(A_eigs)
    in_range = bool(abs(lam[0] - 1) <= 1e-9 and (N == 1 or (lam[1] < 1 - 1e-9 and lam[-1] > -1 + 1e-9)))
    if not in_range:
        failures["A_eigenvalues_in_range"] = f"eigenvalues of A: {lam.tolist()}"

    return LemmaReport(balanced=val.balanced, B_symmetric=B_sym, B_doubly_stochastic=B_ds,
                       B_primitive=bool(B_prim), B_unit_eigenvalue_simple=B_simple,
                       laplacian_psd=psd, laplacian_nullity_one=nullity_one,
                       A_real_eigenvalues=bool(real), A_eigenvalues_in_range=in_range,
                       A_eigenvalues=A_eigs, laplacian_eigenvalues=lap_eigs, failures=failures)


def square_root_V(policy: CombinationPolicy, tol: float = 1e-12) -> np.ndarray:
    """Symmetric PSD square root of ``(P - AP)/2``.

    Eigenvalues with magnitude below `tol` (relative to ``max p``) are set to
    zero, which keeps ``V 1 = 0`` exact up to rounding; more negative ones
    mean the policy is not balanced.
    """
    A = np.asarray(policy.A, dtype=float)
    P = np.diag(policy.perron)
    half = (P - A @ P) / 2
    scale = float(np.max(policy.perron))
    if np.max(np.abs(half - half.T)) > BALANCE_TOL * max(scale, 1.0):
        raise PolicyError("(P - AP)/2 is not symmetric: policy is not balanced")
    sig, U = np.linalg.eigh((half + half.T) / 2)
    if sig.min() < -tol * scale:
        raise PolicyError(f"(P - AP)/2 is not PSD (min eigenvalue {sig.min():.3e})")
    sig = np.where(sig <= tol * scale, 0.0, sig)
    return (U * np.sqrt(sig)) @ U.T


def perron_power_iteration(A, tol: float = 1e-12, max_iter: int = 100_000,
                           check_bound: bool = True) -> tuple[np.ndarray, int]:
    """Learn the Perron vector with the distributed iteration on ``(I + A)/2``.

    Agent ``k`` keeps ``z_k`` (column ``k`` of ``Z``), starts from ``e_k`` and
    mixes ``z_k <- sum_l abar_lk z_l``. The readout ``z_k(k)`` tends to
    ``p_k``; iteration stops once no readout moves by `tol` or more.
    `A` may be a matrix or a `CombinationPolicy`.

    Returns
    -------
    p_est : ndarray
        Diagonal readouts at the stopping iteration.
    iterations : int
        Number of mixing steps performed.
    """
    A = np.asarray(A.A if isinstance(A, CombinationPolicy) else A, dtype=float)
    A_bar = (np.eye(A.shape[0]) + A) / 2
    diag_bar = np.diag(A_bar)
    Z = np.eye(A.shape[0])
    prev = np.diag(Z).copy()
    for i in range(max_iter):
        Z = Z @ A_bar
        read = np.diag(Z).copy()
        if check_bound and np.any(read < diag_bar ** (i + 1) * (1 - 1e-12)):
            raise PolicyError(f"positivity bound violated at iteration {i}")
        if np.max(np.abs(read - prev)) < tol:
            return read, i + 1
        prev = read
    raise PolicyError(f"power iteration did not converge in {max_iter} iterations")


def policy_from_dict(data: dict) -> CombinationPolicy:
    A = np.asarray(data["A"], dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise PolicyError(f"'A' must be a square matrix, got shape {A.shape}")
    p = data.get("p")
    p = perron_dense(A) if p is None else np.asarray(p, dtype=float)
    return CombinationPolicy(A=A, perron=p, rule="custom")


def load_policy(path) -> CombinationPolicy:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PolicyError(f"cannot parse {path}: {exc}") from exc
    return policy_from_dict(data)
