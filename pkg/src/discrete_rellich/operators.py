"""Discrete Dirichlet Laplacian on the half-line, its powers and their matrices.

Sequences are indexed from 0.  The Laplacian uses the Dirichlet convention
``u_{-1} = 0``::

    (-Delta u)_0 = 2 u_0 - u_1
    (-Delta u)_n = -u_{n-1} + 2 u_n - u_{n+1},   n >= 1

so it is the semi-infinite tridiagonal Toeplitz matrix ``T`` on l2(N_0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from ._validation import check_int
from .weights import WeightSpec

__all__ = [
    "FiniteSequence",
    "BandedMatrix",
    "as_sequence",
    "apply_neg_laplacian",
    "apply_power",
    "quadratic_form",
    "build_matrix",
    "rayleigh_quotient",
]


@dataclass(frozen=True)
class FiniteSequence:
    """Finitely supported sequence with ``boundary_order`` leading forced zeros."""

    values: np.ndarray
    boundary_order: int = 0

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if values.dtype.kind not in "fc":
            values = values.astype(float)
        object.__setattr__(self, "values", values)
        m = check_int(self.boundary_order, "boundary_order", 0)
        if m > len(values) and np.any(values):
            raise ValueError("boundary_order exceeds length")
        if np.any(values[:m] != 0):
            bad = int(np.flatnonzero(values[:m])[0])
            raise ValueError(f"entry {bad} must vanish for boundary order {m}")

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, n):
        return self.values[n]

    @property
    def support_end(self) -> int:
        """Index of the last nonzero entry, ``-1`` for the zero sequence."""
        nz = np.flatnonzero(self.values)
        return int(nz[-1]) if nz.size else -1

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(max(length, len(self.values)), dtype=self.values.dtype)
        out[: len(self.values)] = self.values
        return out


def as_sequence(u, boundary_order: int = 0) -> FiniteSequence:
    if isinstance(u, FiniteSequence):
        return u
    return FiniteSequence(np.asarray(u), boundary_order)


def _neg_laplacian(v: np.ndarray) -> np.ndarray:
    # one slot longer than the input so nothing is cut off
    w = np.zeros(len(v) + 1, dtype=v.dtype)
    w[: len(v)] = 2 * v
    w[1:] -= v
    w[: len(v) - 1] -= v[1:]
    return w


def apply_neg_laplacian(u) -> FiniteSequence:
    u = as_sequence(u)
    return FiniteSequence(_neg_laplacian(u.values), max(u.boundary_order - 1, 0))


def apply_power(u, k: int) -> FiniteSequence:
    """``(-Delta)^k u``, exact for finite support (the output grows by ``k`` slots)."""
    k = check_int(k, "k", 1)
    u = as_sequence(u)
    v = u.values
    for _ in range(k):
        v = _neg_laplacian(v)
    return FiniteSequence(v, max(u.boundary_order - k, 0))


def _form_from_factor(v: np.ndarray, k: int) -> float:
    # <T^k v, v> as a sum of squares: ||T^{k/2} v||^2, or for odd k
    # ||D w||^2 with w = T^{(k-1)/2} v and (D w)_n = w_{n-1} - w_n, w_{-1} = 0.
    w = v
    for _ in range(k // 2):
        w = _neg_laplacian(w)
    if k % 2 == 0:
        return float(np.sum(np.abs(w) ** 2))
    jumps = np.diff(np.concatenate(([0], w, [0])))
    return float(np.sum(np.abs(jumps) ** 2))


def quadratic_form(u, k: int, method: str = "factor") -> float:
    """``sum_{n>=0} ((-Delta)^k u)_n conj(u_n)`` for ``u`` with ``boundary_order >= k``.

    ``method="factor"`` writes the form as a sum of squares of lower-order
    differences (for ``k = 2`` this is ``sum_{n>=1} |(-Delta u)_n|^2``), which
    avoids the cancellation of the full stencil.  ``method="direct"`` applies
    ``(-Delta)^k`` and takes the inner product.
    """
    k = check_int(k, "k", 1)
    u = as_sequence(u)
    if u.boundary_order < k:
        raise ValueError(f"boundary_order {u.boundary_order} < k = {k}")
    if method == "factor":
        return _form_from_factor(u.values, k)
    if method == "direct":
        w = apply_power(u, k).values
        return float(np.real(np.vdot(u.padded(len(w)), w)))
    raise ValueError(f"unknown method {method!r}")


def _power_bands(k: int, bandwidth: int) -> list[int]:
    # row of the two-sided k-th power of the Toeplitz tridiagonal
    return [(-1) ** d * math.comb(2 * k, k + d) for d in range(bandwidth + 1)]


@dataclass(frozen=True)
class BandedMatrix:
    """Symmetric banded matrix in LAPACK upper band storage.

    ``bands[bandwidth + i - j, j] = A[i, j]`` for ``j - bandwidth <= i <= j``.
    Row ``r`` stands for the sequence index ``first_index + r``.  Matrices made
    by :func:`build_matrix` remember ``power`` and ``offset`` so quadratic
    forms can be taken through the factorization of ``T^k``.
    """

    bands: np.ndarray
    mode: str = "generic"
    boundary_order: int = 0
    first_index: int = 0
    power: int | None = None
    offset: int = 0

    @property
    def dimension(self) -> int:
        return self.bands.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    def diagonal(self, d: int = 0) -> np.ndarray:
        d = abs(d)
        return self.bands[self.bandwidth - d, d:]

    def entry(self, i: int, j: int) -> float:
        i, j = min(i, j), max(i, j)
        if j - i > self.bandwidth:
            return 0.0
        return float(self.bands[self.bandwidth + i - j, j])

    def toarray(self) -> np.ndarray:
        n, p = self.dimension, self.bandwidth
        a = np.zeros((n, n))
        for d in range(p + 1):
            diag = self.diagonal(d)
            a[np.arange(n - d), np.arange(d, n)] = diag
            a[np.arange(d, n), np.arange(n - d)] = diag
        return a

    def tosparse(self, fmt: str = "csc"):
        p = self.bandwidth
        diags = [self.diagonal(abs(d)) for d in range(-p, p + 1)]
        return sparse.diags(diags, list(range(-p, p + 1)), format=fmt)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        out = self.diagonal(0) * v
        for d in range(1, self.bandwidth + 1):
            diag = self.diagonal(d)
            out[:-d] += diag * v[d:]
            out[d:] += diag * v[:-d]
        return out

    def form(self, v: np.ndarray) -> float:
        """``v^T A v``; a sum of squares when the matrix is a Laplacian power."""
        v = np.asarray(v, dtype=float)
        if self.power is None:
            return float(v @ self.matvec(v))
        full = np.zeros(self.offset + len(v))
        full[self.offset :] = v
        return _form_from_factor(full, self.power)


def build_matrix(size: int, k: int, mode: str = "dirichlet", boundary_order: int | None = None) -> BandedMatrix:
    """Truncated matrix of ``(-Delta)^k`` in band storage.

    ``mode="full_space"``: the k-th power of the tridiagonal Toeplitz matrix on
    l2(N) (rows labelled ``n = 1, 2, ...``), so for ``k = 2`` the first
    diagonal entry is 5.

    ``mode="dirichlet"``: ``(-Delta)^k`` on l2(N_0) restricted to the
    sequences with ``u_0 = ... = u_{M-1} = 0``, rows labelled from ``n = M``
    (``M`` defaults to ``k``).  For ``M >= k`` this is the Toeplitz band with
    entries ``(-1)^d C(2k, k+d)``.

    The bands are integers, computed exactly and stored as floats.
    """
    k = check_int(k, "k", 1)
    size = check_int(size, "size", 1)
    if mode == "full_space":
        offset, first = 0, 1
        m = 0
    elif mode == "dirichlet":
        m = k if boundary_order is None else check_int(boundary_order, "boundary_order", 0)
        offset, first = m, m
    else:
        raise ValueError(f"mode must be 'full_space' or 'dirichlet', got {mode!r}")
    bandwidth = k
    bands = np.zeros((bandwidth + 1, size))
    # only rows within k of the boundary differ from the Toeplitz values
    if offset >= k:
        for d, val in enumerate(_power_bands(k, bandwidth)):
            bands[bandwidth - d, d:] = val
    else:
        length = offset + size + k
        t = sparse.diags([[-1] * (length - 1), [2] * length, [-1] * (length - 1)], [-1, 0, 1], dtype=np.int64, format="csr")
        p = sparse.identity(length, dtype=np.int64, format="csr")
        for _ in range(k):
            p = p @ t
        block = p[offset : offset + size, offset : offset + size].toarray()
        for d in range(bandwidth + 1):
            bands[bandwidth - d, d:] = np.diagonal(block, d)
    return BandedMatrix(bands, mode=mode, boundary_order=m, first_index=first, power=k, offset=offset)


def rayleigh_quotient(u, k: int, weight: WeightSpec | None = None) -> float:
    """``quadratic_form(u, k) / sum_{n>=k} rho^(k)_n |u_n|^2``; weights default to extended precision."""
    k = check_int(k, "k", 1)
    u = as_sequence(u)
    weight = weight or WeightSpec(k, "ext")
    if weight.order != k:
        raise ValueError(f"weight order {weight.order} does not match k = {k}")
    num = quadratic_form(u, k)
    vals = u.values[k:]
    if not np.any(vals):
        raise ZeroDivisionError("weighted norm of u vanishes")
    rho = weight.rho(np.arange(k, len(u.values)))
    den = float(np.sum(rho * np.abs(vals) ** 2))
    if den == 0.0:
        raise ZeroDivisionError("weighted norm of u vanishes")
    return num / den
