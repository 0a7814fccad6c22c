"""Remainder operators of the Hardy and Rellich factorizations.

Hardy: ``-Delta - rho^(1) = R_1^* R_1`` on sequences with ``u_0 = 0`` where
``(R_1 u)_n = a_n u_n - u_{n+1} / a_n`` and ``a_n = ((n+1)/n)^(1/4)``.

Rellich: ``(-Delta)^2 - rho^(2) = R_2^* R_2`` on sequences with
``u_0 = u_1 = 0`` where ``(R_2 u)_n = c_n u_n - b_n u_{n+1} + u_{n+2} / c_n``.
Here ``c_n^2 = zeta_n`` solves a first-order nonlinear recurrence started
from ``zeta_1 = 8 sqrt(2) - 3 sqrt(3)``, and ``b_n`` is fixed by requiring
``R_2`` to annihilate ``g_n = n^(3/2)``.

Every value of ``zeta_n`` is checked against the two-sided bound
``(1 + 2/n)^(3/2) < zeta_n < (1 + 3/n)^(3/2)``; a violation raises
:class:`SandwichViolation` with the offending index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import gmpy2
import mpmath
import numpy as np
from gmpy2 import mpfr

from ._validation import check_int, check_precision
from .operators import FiniteSequence, as_sequence, quadratic_form
from .weights import rho_array

__all__ = [
    "SandwichViolation",
    "RellichRemainder",
    "hardy_a",
    "hardy_set1_residual",
    "hardy_a_forward",
    "apply_R1",
    "hardy_residual_profile",
    "iter_zeta",
    "zeta",
    "zeta_asymptotic",
    "rellich_coeffs",
    "equation_residuals",
    "apply_R2",
    "kernel_solution",
    "identity_residual",
    "identity_trials",
    "IdentityTrials",
    "ZETA_ASYMPTOTIC_COEFFS",
]

EXT_BITS = 113


class SandwichViolation(ArithmeticError):
    """``zeta_n`` left its two-sided bound, i.e. the recurrence became unstable."""

    def __init__(self, index: int, value: float, lower: float, upper: float):
        super().__init__(f"zeta_{index} = {value!r} outside ({lower!r}, {upper!r})")
        self.index = index
        self.value = value
        self.lower = lower
        self.upper = upper


# ---------------------------------------------------------------------------
# Hardy


def hardy_a(n):
    """``((n+1)/n)^(1/4)`` for ``n >= 1`` (scalar or integer array)."""
    n = np.asarray(n)
    if np.any(n < 1):
        raise ValueError("hardy_a needs n >= 1")
    out = ((n + 1.0) / n) ** 0.25
    return float(out) if out.ndim == 0 else out


def hardy_set1_residual(n_max: int) -> np.ndarray:
    """Residuals of ``a_1^2 = sqrt 2`` and ``a_n^2 + a_{n-1}^-2 = sqrt((n+1)/n) + sqrt((n-1)/n)``.

    Entry ``i`` belongs to ``n = i + 1``.
    """
    n_max = check_int(n_max, "n_max", 1)
    n = np.arange(1, n_max + 1, dtype=float)
    a2 = hardy_a(n) ** 2
    res = np.empty(n_max)
    res[0] = a2[0] - math.sqrt(2.0)
    res[1:] = a2[1:] + 1.0 / a2[:-1] - np.sqrt((n[1:] + 1) / n[1:]) - np.sqrt((n[1:] - 1) / n[1:])
    return res


def hardy_a_forward(n_max: int) -> np.ndarray:
    """Solve the Hardy equations forward from ``a_1^2 = sqrt 2``; entry ``i`` is ``a_{i+1}``."""
    n_max = check_int(n_max, "n_max", 1)
    a2 = np.empty(n_max)
    a2[0] = math.sqrt(2.0)
    for i in range(1, n_max):
        n = i + 1
        a2[i] = math.sqrt((n + 1) / n) + math.sqrt((n - 1) / n) - 1.0 / a2[i - 1]
    return np.sqrt(a2)


def apply_R1(u) -> FiniteSequence:
    """``(R_1 u)_n`` for ``n >= 1``; slot 0 is left at zero."""
    u = as_sequence(u)
    v = u.padded(len(u) + 1)
    out = np.zeros(len(v), dtype=v.dtype)
    n = np.arange(1, len(v) - 1, dtype=float)
    a = ((n + 1) / n) ** 0.25
    out[1:-1] = a * v[1:-1] - v[2:] / a
    return FiniteSequence(out, 1 if len(out) else 0)


# ---------------------------------------------------------------------------
# Rellich coefficients


def _zeta_f64(n_max: int):
    def h(n):
        r = (n + 1) / n
        return r * math.sqrt(r)

    z = 8 * math.sqrt(2.0) - 3 * math.sqrt(3.0)
    yield 1, z, 3 * math.sqrt(3.0), 8.0
    h_prev, h_cur = h(1), h(2)
    for n in range(2, n_max + 1):
        h_next = h(n + 1)
        z = h_cur * (4.0 - h_next - 1.0 / h_prev - h_cur / z)
        lo, hi = (n + 2) / n, (n + 3) / n
        yield n, z, lo * math.sqrt(lo), hi * math.sqrt(hi)
        h_prev, h_cur = h_cur, h_next


def _zeta_ext(n_max: int, bits: int):
    with gmpy2.context(gmpy2.get_context(), precision=bits):

        def h(n):
            r = mpfr(n + 1) / n
            return r * gmpy2.sqrt(r)

        def pw(p, n):
            r = mpfr(n + p) / n
            return r * gmpy2.sqrt(r)

        z = 8 * gmpy2.sqrt(mpfr(2)) - 3 * gmpy2.sqrt(mpfr(3))
        yield 1, z, pw(2, 1), pw(3, 1)
        h_prev, h_cur = h(1), h(2)
        for n in range(2, n_max + 1):
            h_next = h(n + 1)
            z = h_cur * (4 - h_next - 1 / h_prev - h_cur / z)
            yield n, z, pw(2, n), pw(3, n)
            h_prev, h_cur = h_cur, h_next


def iter_zeta(n_max: int, precision: str = "ext", check: bool = True, bits: int = EXT_BITS):
    """Stream ``(n, zeta_n)`` for ``n = 1..n_max``.

    ``precision="ext"`` runs the recurrence in MPFR with ``bits`` of
    significand and yields ``mpfr`` values; ``"f64"`` yields floats.  With
    ``check`` each value is compared with its sandwich bounds in the working
    precision.
    """
    n_max = check_int(n_max, "n_max", 1)
    check_precision(precision)
    source = _zeta_ext(n_max, bits) if precision == "ext" else _zeta_f64(n_max)
    for n, z, lo, hi in source:
        if check and not lo < z < hi:
            raise SandwichViolation(n, float(z), float(lo), float(hi))
        yield n, z


@lru_cache(maxsize=8)
def _zeta_cached(n_max: int, precision: str) -> np.ndarray:
    out = np.full(n_max + 1, np.nan)
    for n, z in iter_zeta(n_max, precision):
        out[n] = float(z)
    out.setflags(write=False)
    return out


def zeta(n_max: int, precision: str = "ext") -> np.ndarray:
    """``zeta_n`` for ``n = 0..n_max`` as float64; slot 0 is NaN.

    Raises :class:`SandwichViolation` if any value leaves its bounds.
    """
    return _zeta_cached(check_int(n_max, "n_max", 1), check_precision(precision))


# zeta_n ~ 1 + sum_i a_i / n^i with a_i = p_i + q_i sqrt(10), stored as (p_i, q_i).
# a_1 solves a^2 - 4a + 3/2 = 0 (the root inside the sandwich bounds), the
# rest follow order by order.  The particular solution started at zeta_1
# differs from this series by O(n^(-1-sqrt 10)).
ZETA_ASYMPTOTIC_COEFFS = (
    (Fraction(2), Fraction(1, 2)),
    (Fraction(5, 4), Fraction(1, 2)),
    (Fraction(-17, 32), Fraction(-17, 64)),
    (Fraction(-21, 64), Fraction(0)),
    (Fraction(683, 768), Fraction(1991, 12288)),
    (Fraction(-1477, 1536), Fraction(-1991, 12288)),
)


def zeta_asymptotic(n, terms: int = len(ZETA_ASYMPTOTIC_COEFFS)):
    """Large-``n`` expansion of ``zeta_n`` for floats, float arrays or ``mpmath.mpf``.

    With an ``mpf`` argument the coefficients are formed in the current
    mpmath precision.
    """
    if isinstance(n, mpmath.mpf):
        root = mpmath.sqrt(10)

        def conv(f):
            return mpmath.mpf(f.numerator) / f.denominator

    else:
        root = math.sqrt(10.0)
        conv = float
    x = 1 / n
    total = 0
    for p, q in reversed(ZETA_ASYMPTOTIC_COEFFS[:terms]):
        total = (total + conv(p) + conv(q) * root) * x
    return 1 + total


@dataclass(frozen=True)
class RellichRemainder:
    """Coefficients of ``R_2`` for ``n = 1..n_max``; arrays are indexed by ``n`` (slot 0 unused).

    ``bounds_ok[n]`` records the sandwich check for ``zeta_n``.
    """

    n_max: int
    zeta: np.ndarray
    c: np.ndarray
    b: np.ndarray
    bounds_ok: np.ndarray
    precision: str = "ext"

    def __post_init__(self):
        if not np.all(self.bounds_ok[1:]):
            bad = int(np.flatnonzero(~self.bounds_ok[1:])[0]) + 1
            raise SandwichViolation(bad, float(self.zeta[bad]), math.nan, math.nan)
        if np.any(self.c[1:] <= 1) or np.any(self.b[1:] <= 0):
            raise ArithmeticError("expected c_n > 1 and b_n > 0")


@lru_cache(maxsize=8)
def rellich_coeffs(n_max: int, precision: str = "ext") -> RellichRemainder:
    """``zeta``, ``c = sqrt(zeta)`` and ``b_n = (c_n g_n + g_{n+2}/c_n) / g_{n+1}``."""
    n_max = check_int(n_max, "n_max", 2)
    z = zeta(n_max, precision)
    n = np.arange(n_max + 1, dtype=float)
    c = np.sqrt(z)
    g = n**1.5
    b = np.full(n_max + 1, np.nan)
    b[1:] = (c[1:] * g[1:] + (n[1:] + 2) ** 1.5 / c[1:]) / (n[1:] + 1) ** 1.5
    lo = (1 + 2 / n[1:]) ** 1.5
    hi = (1 + 3 / n[1:]) ** 1.5
    ok = np.ones(n_max + 1, dtype=bool)
    ok[1:] = (lo < z[1:]) & (z[1:] < hi)
    for arr in (c, b, ok):
        arr.setflags(write=False)
    return RellichRemainder(n_max, z, c, b, ok, precision)


def equation_residuals(coeffs: RellichRemainder) -> dict[str, np.ndarray]:
    """Residual arrays of the three equation sets, indexed by ``n``.

    ``set1``: ``6 - rho_n - c_n^2 - b_{n-1}^2 - 1/c_{n-2}^2`` (``n >= 3``) and
    ``6 - rho_2 - c_2^2 - b_1^2`` at ``n = 2``;
    ``set2``: ``4 - c_n b_n - b_{n-1}/c_{n-1}`` (``n >= 2``);
    ``set3``: ``(c_n g_n - b_n g_{n+1} + g_{n+2}/c_n) / g_{n+2}`` (``n >= 1``).
    Entries outside each set's range are NaN.
    """
    m = coeffs.n_max
    c, b, z = coeffs.c, coeffs.b, coeffs.zeta
    n = np.arange(m + 1, dtype=float)
    rho = np.full(m + 1, np.nan)
    rho[2:] = rho_array(2, np.arange(2, m + 1))
    set1 = np.full(m + 1, np.nan)
    set1[2] = 6 - rho[2] - z[2] - b[1] ** 2
    set1[3:] = 6 - rho[3:] - z[3:] - b[2:-1] ** 2 - 1 / z[1:-2]
    set2 = np.full(m + 1, np.nan)
    set2[2:] = 4 - c[2:] * b[2:] - b[1:-1] / c[1:-1]
    set3 = np.full(m + 1, np.nan)
    g0, g1, g2 = n[1:] ** 1.5, (n[1:] + 1) ** 1.5, (n[1:] + 2) ** 1.5
    set3[1:] = (c[1:] * g0 - b[1:] * g1 + g2 / c[1:]) / g2
    return {"set1": set1, "set2": set2, "set3": set3}


def apply_R2(u, coeffs: RellichRemainder) -> FiniteSequence:
    """``(R_2 u)_n = c_n u_n - b_n u_{n+1} + u_{n+2} / c_n`` for ``n >= 1``."""
    u = as_sequence(u)
    top = u.support_end
    if top > coeffs.n_max:
        raise ValueError(f"coefficients reach n = {coeffs.n_max}, support ends at {top}")
    length = max(top + 1, 2)
    v = u.padded(length + 2)
    out = np.zeros(length, dtype=v.dtype)
    n = slice(1, length)
    c, b = coeffs.c[n], coeffs.b[n]
    out[n] = c * v[1:length] - b * v[2 : length + 1] + v[3 : length + 2] / c
    return FiniteSequence(out, 1)


# products of zeta switch to log accumulation past this index
LOG_PRODUCT_SWITCH = 1000


def kernel_solution(k: int, n_max: int, coeffs: RellichRemainder | None = None) -> FiniteSequence:
    """Positive solution of ``R_k u = 0`` with the boundary zeros, on ``n = 0..n_max``.

    ``k = 1`` gives ``sqrt(n)``.  ``k = 2`` gives the solution normalized by
    ``u_2 = 1``::

        u_n = g_1 g_n sum_{m=1}^{n-1} prod_{j<m} c_j^2 / (g_m g_{m+1})

    whose products are accumulated in log space beyond ``LOG_PRODUCT_SWITCH``.
    """
    k = check_int(k, "k", 1)
    n_max = check_int(n_max, "n_max", 2)
    n = np.arange(n_max + 1, dtype=float)
    if k == 1:
        return FiniteSequence(np.sqrt(n), 1)
    if k != 2:
        raise ValueError("kernel solutions are available for k = 1, 2")
    coeffs = coeffs or rellich_coeffs(n_max)
    if coeffs.n_max < n_max - 2:
        raise ValueError(f"need coefficients up to {n_max - 2}, have {coeffs.n_max}")
    z = coeffs.zeta
    m = np.arange(1, n_max, dtype=float)  # summation index 1..n_max-1
    count = len(m)
    # prod_{j=1}^{m-1} zeta_j for m = 1..n_max-1
    prods = np.ones(count)
    switch = min(LOG_PRODUCT_SWITCH, count)
    if switch > 1:
        prods[1:switch] = np.cumprod(z[1:switch])
    if count > switch:
        logs = math.log(prods[switch - 1]) + np.cumsum(np.log(z[switch:count]))
        prods[switch:] = np.exp(logs)
        direct = prods[switch - 1] * z[switch]
        if not math.isclose(prods[switch], direct, rel_tol=1e-12):
            raise ArithmeticError("log-space product disagrees with the direct product at the switch point")
    terms = prods / (m**1.5 * (m + 1) ** 1.5)
    u = np.zeros(n_max + 1)
    u[2:] = n[2:] ** 1.5 * np.cumsum(terms)[: n_max - 1]
    return FiniteSequence(u, 2)


def hardy_residual_profile(u) -> float:
    """``max |R_1 u|`` relative to ``a_n |u_n|`` over the interior of ``u``."""
    u = as_sequence(u)
    r = apply_R1(u).values[1 : len(u) - 1]
    n = np.arange(1, len(u) - 1, dtype=float)
    scale = hardy_a(n) * np.abs(u.values[1:-1])
    return float(np.max(np.abs(r) / scale))


def identity_residual(u, order: int, coeffs: RellichRemainder | None = None, rho: np.ndarray | None = None) -> float:
    """Relative defect of ``<(-Delta)^k u, u> = sum rho |u|^2 + ||R_k u||^2`` for ``k = order``.

    ``u`` needs ``order`` leading zeros.  The defect is divided by the left
    side, which is positive for every nonzero ``u``.  ``rho``, if given,
    holds the weights for ``n = order, order + 1, ...`` and must reach the
    end of ``u``.
    """
    order = check_int(order, "order", 1)
    if order not in (1, 2):
        raise ValueError("the factorization is available for order 1 and 2")
    u = as_sequence(u, order)
    if u.boundary_order < order:
        raise ValueError(f"u needs {order} leading zeros")
    vals = u.values
    form = quadratic_form(u, order)
    if form == 0:
        raise ZeroDivisionError("u vanishes")
    if rho is None:
        rho = rho_array(order, np.arange(order, len(vals)))
    weighted = math.fsum(rho[: len(vals) - order] * np.abs(vals[order:]) ** 2)
    if order == 1:
        rem = apply_R1(u).values
    else:
        coeffs = coeffs or rellich_coeffs(max(u.support_end, 2))
        rem = apply_R2(u, coeffs).values
    remainder = math.fsum(np.abs(rem) ** 2)
    return abs(form - weighted - remainder) / form


@dataclass(frozen=True)
class IdentityTrials:
    order: int
    trials: int
    support: int
    seed: int
    max_residual: float
    worst_trial: int


def identity_trials(order: int, trials: int, support: int, seed: int = 0) -> IdentityTrials:
    """Check the factorization identity on seeded random sequences.

    Trial ``i`` draws a support end uniformly in ``[order, support - 1]`` and
    entries uniform in ``[-1, 1]`` on ``order..end``; the generator is
    ``numpy.random.default_rng(seed)``.
    """
    order = check_int(order, "order", 1)
    trials = check_int(trials, "trials", 1)
    support = check_int(support, "support", order + 1)
    seed = check_int(seed, "seed", 0)
    rng = np.random.default_rng(seed)
    coeffs = rellich_coeffs(max(support, 2)) if order == 2 else None
    rho = rho_array(order, np.arange(order, support))
    worst, worst_i = -1.0, -1
    for i in range(trials):
        end = int(rng.integers(order, support))
        u = np.zeros(end + 1)
        u[order:] = rng.uniform(-1.0, 1.0, end + 1 - order)
        r = identity_residual(FiniteSequence(u, order), order, coeffs, rho)
        if r > worst:
            worst, worst_i = r, i
    return IdentityTrials(order, trials, support, seed, worst, worst_i)
