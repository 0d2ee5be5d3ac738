"""Linear error dynamics of exact diffusion and the Jury stability test.

For scalar agents with ``q_k = 1``, step matrix ``mu P^{-1}`` and constant
Hessians, the error pair ``(W~_i, W~_{i-1})`` evolves through::

    F - G = [[Abar^T (2I - mu D), -Abar^T (I - mu D)],
             [I,                  0               ]]

with ``D = P^{-1} H`` diagonal. ``[1; 1]`` is always a unit eigenvector;
that structural eigenvalue is excluded from the spectral radius.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .policy import perron_dense

UNIT_TOL = 1e-9

EXAMPLE_1_A = np.array([
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.5, 0.5, 0.0],
    [1.0, 0.0, 0.5, 0.0],
    [0.0, 0.5, 0.0, 0.0],
])
EXAMPLE_1_D = np.array([20.0, 1.0, 1.0, 1.0])

EXAMPLE_2_A = np.array([
    [0.3, 0.6, 0.2, 0.0, 0.0],
    [0.2, 0.2, 0.0, 0.3, 0.0],
    [0.1, 0.1, 0.5, 0.3, 0.2],
    [0.0, 0.1, 0.3, 0.4, 0.1],
    [0.4, 0.0, 0.0, 0.0, 0.7],
])
EXAMPLE_2_D = np.full(5, 10.0)


class StabilityError(ValueError):
    pass


class InconclusiveSpectrum(StabilityError):
    """More eigenvalues sit within the unit tolerance than are excluded."""


def example(which: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(A, p, D)`` for the diverging (1) or converging (2) example."""
    if which == 1:
        A, D = EXAMPLE_1_A, EXAMPLE_1_D
    elif which == 2:
        A, D = EXAMPLE_2_A, EXAMPLE_2_D
    else:
        raise StabilityError(f"unknown example {which!r}")
    return A.copy(), perron_dense(A), D.copy()


@dataclass(frozen=True)
class ErrorDynamics:
    F: np.ndarray
    G: np.ndarray
    A: np.ndarray
    A_bar: np.ndarray
    mu: float
    D: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.F - self.G


def build_error_dynamics(A, p, mu: float, H_diag) -> ErrorDynamics:
    A = np.asarray(A, dtype=float)
    p = np.asarray(p, dtype=float)
    D = np.asarray(H_diag, dtype=float)
    N = A.shape[0]
    if A.shape != (N, N) or p.shape != (N,) or D.shape != (N,):
        raise StabilityError(f"dimension mismatch: A {A.shape}, p {p.shape}, H_diag {D.shape}")
    if np.any(A < 0) or not np.allclose(A.sum(axis=0), 1.0, rtol=0, atol=1e-12):
        raise StabilityError("A is not left-stochastic")
    if not np.allclose(A @ p, p, rtol=0, atol=1e-9):
        raise StabilityError("p is not the Perron vector of A")
    I = np.eye(N)
    Z = np.zeros((N, N))
    A_bar = (I + A) / 2
    F = np.block([[2 * A_bar.T, -A_bar.T], [I, Z]])
    MD = mu * np.diag(D)
    G = np.block([[A_bar.T @ MD, -A_bar.T @ MD], [Z, Z]])
    return ErrorDynamics(F=F, G=G, A=A, A_bar=A_bar, mu=float(mu), D=D)


def spectral_radius_excluding_one(dyn: ErrorDynamics, exclude: int = 1,
                                  unit_tol: float = UNIT_TOL) -> float:
    """Largest eigenvalue modulus once `exclude` eigenvalues nearest 1 are removed.

    Each removed eigenvalue must lie within `unit_tol` of 1, and the next
    nearest must not, otherwise the split is ambiguous and
    `InconclusiveSpectrum` is raised.

    ``exclude=2`` with a loose tolerance gives the small-step reading of
    rho(F), where the unit eigenvalue of F is double.
    """
    eig = np.linalg.eigvals(dyn.matrix)
    dist = np.abs(eig - 1.0)
    order = np.argsort(dist)
    if dist[order[exclude - 1]] > unit_tol:
        raise StabilityError(
            f"only {int(np.sum(dist <= unit_tol))} eigenvalue(s) within {unit_tol:g} of 1 "
            f"(mu={dyn.mu:g}); expected {exclude}")
    if eig.size > exclude and dist[order[exclude]] <= unit_tol:
        raise InconclusiveSpectrum(
            f"{int(np.sum(dist <= unit_tol))} eigenvalues within {unit_tol:g} of 1 at mu={dyn.mu:g}")
    rest = eig[order[exclude:]]
    return float(np.max(np.abs(rest))) if rest.size else 0.0


def rho_F(A) -> float:
    """rho(F) at zero step with the double unit eigenvalue removed.

    F is block-companion in ``Abar^T``: every eigenvalue ``a`` of ``Abar``
    contributes the roots of ``lambda^2 - 2 a lambda + a``. The eigenvalue
    ``a = 1`` contributes the double root at 1 and is dropped.
    """
    A = np.asarray(A, dtype=float)
    a = np.linalg.eigvals((np.eye(A.shape[0]) + A) / 2)
    a = np.delete(a, np.argmin(np.abs(a - 1.0)))
    if a.size == 0:
        return 0.0
    disc = np.sqrt(a * a - a + 0j)
    return float(np.max(np.abs(np.concatenate([a + disc, a - disc]))))


@dataclass
class StabilityReport:
    mu: np.ndarray
    rho: np.ndarray
    stable: np.ndarray
    inconclusive: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.inconclusive is None:
            self.inconclusive = np.zeros(self.mu.shape, dtype=bool)

    def to_csv(self, path_or_file) -> None:
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
        try:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["mu", "rho", "stable"])
            for m, r, s, bad in zip(self.mu, self.rho, self.stable, self.inconclusive):
                writer.writerow([f"{m:.17g}", "nan" if bad else f"{r:.17g}",
                                 "inconclusive" if bad else str(bool(s)).lower()])
        finally:
            if own:
                fh.close()


def sweep_rho(A, p, H_diag, mu_grid) -> StabilityReport:
    mu_grid = np.asarray(mu_grid, dtype=float)
    if mu_grid.size == 0 or np.any(mu_grid <= 0):
        raise StabilityError("mu grid must be nonempty and positive")
    rho = np.full(mu_grid.shape, np.nan)
    bad = np.zeros(mu_grid.shape, dtype=bool)
    for j, mu in enumerate(mu_grid):
        try:
            rho[j] = spectral_radius_excluding_one(build_error_dynamics(A, p, mu, H_diag))
        except InconclusiveSpectrum:
            bad[j] = True
        except StabilityError as exc:
            raise StabilityError(f"at mu={mu:g}: {exc}") from exc
    return StabilityReport(mu=mu_grid, rho=rho, stable=(rho < 1) & ~bad, inconclusive=bad)


def mu_grid(mu_min: float, mu_max: float, points: int, spacing: str = "log") -> np.ndarray:
    if spacing == "log":
        return np.logspace(np.log10(mu_min), np.log10(mu_max), points)
    return np.linspace(mu_min, mu_max, points)


# ---------------------------------------------------------------------------
# Jury test

def jury_rows(coeffs) -> list[np.ndarray]:
    """Jury table rows, starting with ``a_0..a_n`` (ascending powers).

    Each row ``r_0..r_m`` yields ``s_k = r_0 r_k - r_m r_{m-k}``, k < m,
    down to the row of length 3.
    """
    row = np.asarray(coeffs, dtype=float)
    rows = [row]
    while row.size > 3:
        m = row.size - 1
        row = row[0] * row[:m] - row[m] * row[m:0:-1]
        rows.append(row)
    return rows


@dataclass
class JuryVerdict:
    stable: bool
    failing_condition: int | None
    conditions: list[bool]
    inconclusive: bool = False

    def to_dict(self) -> dict:
        return {"stable": self.stable, "failing_condition": self.failing_condition}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def jury_margins(coeffs) -> np.ndarray:
    """Signed slack of each Jury condition (positive means it holds).

    1. D(1) > 0;  2. (-1)^n D(-1) > 0;  3. |a_0| < a_n;
    4.. |first| > |last| for every derived row of length >= 3.
    Coefficients are first scaled so that ``a_n > 0``.
    """
    a = np.asarray(coeffs, dtype=float)
    if a.size < 2 or a[-1] == 0:
        raise StabilityError("need degree >= 1 with a nonzero leading coefficient")
    if a[-1] < 0:
        a = -a
    n = a.size - 1
    margins = [a.sum(), (-1) ** n * np.sum(a * (-1.0) ** np.arange(n + 1)), a[-1] - abs(a[0])]
    for row in jury_rows(a)[1:]:
        margins.append(abs(row[0]) - abs(row[-1]))
    return np.array(margins)


def jury_stability_test(coeffs) -> JuryVerdict:
    """All roots strictly inside the unit circle iff every condition holds."""
    a = np.asarray(coeffs, dtype=float)
    margins = jury_margins(a)
    held = [bool(m > 0) for m in margins]
    degenerate = any(not np.any(row) for row in jury_rows(a)[1:])
    failing = next((i + 1 for i, ok in enumerate(held) if not ok), None)
    if degenerate and failing is not None and failing > 3:
        return JuryVerdict(stable=False, failing_condition=failing, conditions=held, inconclusive=True)
    return JuryVerdict(stable=failing is None, failing_condition=failing, conditions=held)


def example1_characteristic_poly(mu: float) -> np.ndarray:
    """Coefficients ``a_0..a_7`` of D(lambda), where (lambda - 1) D(lambda)
    is 32 det(lambda I - (F - G)) for the diverging example."""
    m = float(mu)
    return np.array([
        -80 * m**4 + 244 * m**3 - 252 * m**2 + 92 * m - 4,
        240 * m**4 - 976 * m**3 + 1260 * m**2 - 552 * m + 28,
        -240 * m**4 + 1649 * m**3 - 2904 * m**2 + 1593 * m - 98,
        80 * m**4 - 1346 * m**3 + 3672 * m**2 - 2692 * m + 210,
        429 * m**3 - 2458 * m**2 + 2712 * m - 288,
        682 * m**2 - 1512 * m + 248,
        384 * m - 128,
        32.0,
    ])


def linear_recursion_growth(dyn: ErrorDynamics, n_iter: int = 200, seed: int = 0) -> float:
    """Per-step growth of the linear error recursion from a range(V)-like start.

    The start has zero component along [1; 1], so the structural eigenvalue
    does not contribute; returns ``(||x_n|| / ||x_0||)^(1/n)``.
    """
    rng = np.random.default_rng(seed)
    M = dyn.matrix
    ones = np.ones(M.shape[0])
    vals, left = np.linalg.eig(M.T)
    ell = np.real(left[:, np.argmin(np.abs(vals - 1.0))])
    x = rng.standard_normal(M.shape[0])
    x -= (ell @ x) / (ell @ ones) * ones
    x /= np.linalg.norm(x)
    log_growth = 0.0
    for _ in range(n_iter):
        x = M @ x
        s = np.linalg.norm(x)
        log_growth += np.log(s)
        x /= s
    return float(np.exp(log_growth / n_iter))
