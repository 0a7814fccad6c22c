"""Smallest generalized eigenvalues of truncated Laplacian powers against diagonal weights.

``min_gen_eig`` finds the smallest ``lambda`` of ``A v = lambda W v`` for a
positive definite banded ``A`` and a positive diagonal ``W``.  A first
estimate comes from a dense solve (small sizes) or shift-invert Lanczos at
zero (large sizes).  It is then polished by Rayleigh quotient iteration with
banded solves.  The reported eigenvalue is the Rayleigh quotient of the final
vector with the numerator taken as a sum of squares, so for Laplacian powers
it is an upper bound for the true minimum up to rounding in that sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from ._validation import check_increasing, check_int
from .operators import BandedMatrix, build_matrix
from .weights import rho_array

__all__ = [
    "SpectralEstimate",
    "TruncationSweep",
    "min_gen_eig",
    "hardy_sanity_sweep",
    "rellich_sanity_sweep",
    "best_constant_sweep",
    "conjecture_evidence",
    "norm_bound",
    "DEFAULT_TOL",
    "MAX_SIZE",
]

DEFAULT_TOL = 1e-10
DENSE_LIMIT = 1500
MAX_SIZE = 20_000
_MAX_REFINE = 30


@dataclass(frozen=True)
class SpectralEstimate:
    size: int
    lambda_min: float
    residual: float
    iterations: int
    converged: bool

    def row(self) -> dict:
        return {
            "size": self.size,
            "lambda_min": self.lambda_min,
            "residual": self.residual,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class TruncationSweep:
    """Estimates for increasing truncation sizes.

    ``monotone_nonincreasing`` is computed from the data with slack
    ``10 * tol`` (relative), never assumed.
    """

    label: str
    sizes: tuple[int, ...]
    estimates: tuple[SpectralEstimate, ...]
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if len(self.sizes) != len(self.estimates):
            raise ValueError("sizes and estimates must align")
        if any(s != e.size for s, e in zip(self.sizes, self.estimates)):
            raise ValueError("estimate sizes do not match the sweep sizes")

    @property
    def values(self) -> np.ndarray:
        return np.array([e.lambda_min for e in self.estimates])

    @property
    def monotone_nonincreasing(self) -> bool:
        v = self.values
        slack = 10 * self.tol * np.maximum(1.0, np.abs(v[:-1]))
        return bool(np.all(v[1:] <= v[:-1] + slack))

    @property
    def all_converged(self) -> bool:
        return all(e.converged for e in self.estimates)

    def extrapolated(self) -> float:
        """Aitken extrapolation from the last three values; a diagnostic, not a result."""
        if len(self.estimates) < 3:
            return math.nan
        a, b, c = self.values[-3:]
        denom = (c - b) - (b - a)
        if denom == 0:
            return float(c)
        return float(c - (c - b) ** 2 / denom)

    def rows(self) -> list[dict]:
        return [e.row() for e in self.estimates]


def _check_weights(W, n: int) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.shape != (n,):
        raise ValueError(f"weights must have shape ({n},), got {W.shape}")
    if not np.all(W > 0) or not np.all(np.isfinite(W)):
        raise ValueError("weights must be finite and strictly positive")
    return W


def _rayleigh(A: BandedMatrix, W: np.ndarray, v: np.ndarray) -> float:
    return A.form(v) / float(np.sum(W * v * v))


def _initial_vector(A: BandedMatrix, W: np.ndarray) -> tuple[np.ndarray, int]:
    n = A.dimension
    if n <= DENSE_LIMIT:
        # largest mu of W v = mu A v is 1 / lambda_min
        _, vec = la.eigh(np.diag(W), A.toarray(), subset_by_index=[n - 1, n - 1])
        return vec[:, 0], 1
    lu = spla.splu(A.tosparse("csc"))
    count = [0]

    def solve(x):
        count[0] += 1
        return lu.solve(x)

    op_inv = spla.LinearOperator((n, n), matvec=solve, dtype=float)
    # deterministic start: the positive profile sqrt(n) (1 - n/size)
    idx = np.arange(1, n + 1, dtype=float)
    v0 = np.sqrt(idx) * (1 - idx / (n + 1))
    _, vec = spla.eigsh(
        A.tosparse("csc"),
        k=1,
        M=sparse.diags(W, format="csc"),
        sigma=0.0,
        which="LM",
        v0=v0,
        OPinv=op_inv,
        tol=1e-12,
    )
    return vec[:, 0], count[0]


def _shifted_bands(A: BandedMatrix, W: np.ndarray, sigma: float) -> np.ndarray:
    # general band storage (p, p) of A - sigma W for solve_banded
    p, n = A.bandwidth, A.dimension
    ab = np.zeros((2 * p + 1, n))
    for d in range(p + 1):
        diag = A.diagonal(d).copy()
        if d == 0:
            diag = diag - sigma * W
        ab[p - d, d:] = diag
        ab[p + d, : n - d] = diag
    return ab


def min_gen_eig(A: BandedMatrix, W, tol: float = DEFAULT_TOL) -> SpectralEstimate:
    """Smallest ``lambda`` with ``A v = lambda W v``; ``A`` positive definite, ``W > 0`` diagonal."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = A.dimension
    if n > MAX_SIZE:
        raise ValueError(f"size {n} exceeds the cap {MAX_SIZE}")
    W = _check_weights(W, n)
    v, iterations = _initial_vector(A, W)
    v = v / np.linalg.norm(v)
    lam = _rayleigh(A, W, v)
    residual = float(np.linalg.norm(A.matvec(v) - lam * W * v))
    p = A.bandwidth
    for _ in range(_MAX_REFINE):
        if residual <= tol:
            break
        try:
            x = la.solve_banded((p, p), _shifted_bands(A, W, lam), W * v, check_finite=False)
        except la.LinAlgError:
            break  # shift hit an eigenvalue exactly; v is already an eigenvector
        iterations += 1
        if not np.all(np.isfinite(x)):
            break
        x /= np.linalg.norm(x)
        new_lam = _rayleigh(A, W, x)
        new_res = float(np.linalg.norm(A.matvec(x) - new_lam * W * x))
        if new_res >= residual and new_lam >= lam:
            break
        v, lam, residual = x, new_lam, new_res
    return SpectralEstimate(n, float(lam), residual, iterations, bool(residual <= tol))


def _sweep(label: str, sizes, build, tol: float) -> TruncationSweep:
    sizes = check_increasing(sizes)
    return TruncationSweep(label, tuple(sizes), tuple(min_gen_eig(*build(s), tol=tol) for s in sizes), tol)


def hardy_sanity_sweep(sizes, tol: float = DEFAULT_TOL) -> TruncationSweep:
    """``-Delta`` on sequences with ``u_0 = 0`` against ``rho^(1)``, rows ``n = 1..size``."""

    def build(s):
        return build_matrix(s, 1, "dirichlet", 1), rho_array(1, np.arange(1, s + 1))

    return _sweep("hardy", sizes, build, tol)


def rellich_sanity_sweep(sizes, tol: float = DEFAULT_TOL) -> TruncationSweep:
    """``(-Delta)^2`` on sequences with ``u_0 = u_1 = 0`` against ``rho^(2)``, rows ``n = 2..size+1``."""

    def build(s):
        return build_matrix(s, 2, "dirichlet", 2), rho_array(2, np.arange(2, s + 2))

    return _sweep("rellich", sizes, build, tol)


def best_constant_sweep(sizes, tol: float = DEFAULT_TOL) -> TruncationSweep:
    """Full-space ``(-Delta)^2`` on l2(N) against ``1/n^4``: upper bounds for the best constant."""

    def build(s):
        n = np.arange(1, s + 1, dtype=float)
        return build_matrix(s, 2, "full_space"), n**-4.0

    return _sweep("best_constant", sizes, build, tol)


def conjecture_evidence(k: int, sizes, tol: float = DEFAULT_TOL) -> TruncationSweep:
    """Smallest ordinary eigenvalue of ``A - W`` with ``A = (-Delta)^k`` on ``H_0^k`` and ``W = diag(rho^(k))``.

    Nonnegative values (up to ``tol * ||A||``) are EVIDENCE for the
    higher-order inequality, not a proof of it.
    """
    k = check_int(k, "k", 3)
    sizes = check_increasing(sizes)
    estimates = []
    for s in sizes:
        if s > MAX_SIZE:
            raise ValueError(f"size {s} exceeds the cap {MAX_SIZE}")
        A = build_matrix(s, k, "dirichlet", k)
        W = rho_array(k, np.arange(k, k + s))
        bands = A.bands.copy()
        bands[-1] -= W
        w, vec = la.eig_banded(bands, lower=False, select="i", select_range=(0, 0))
        v = vec[:, 0]
        residual = float(np.linalg.norm(A.matvec(v) - W * v - w[0] * v))
        estimates.append(SpectralEstimate(s, float(w[0]), residual, 1, residual <= tol * max(1.0, norm_bound(k))))
    return TruncationSweep(f"conjecture_k{k}", tuple(sizes), tuple(estimates), tol)


def norm_bound(k: int) -> float:
    """``||(-Delta)^k|| <= 4^k`` on every truncation."""
    return float(4 ** check_int(k, "k", 1))

