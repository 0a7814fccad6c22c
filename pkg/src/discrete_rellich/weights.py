"""Ground states and improved Hardy/Rellich-type weights on the half-line.

The weight of order ``k`` is ``rho_k(n) = ((-Delta)^k g)_n / g_n`` with the
ground state ``g_n = n**(k - 1/2)``.  It is of size ``n**(-2k)`` while the
stencil terms are of size one, so binary64 evaluation loses everything below
an absolute error of roughly ``1e-15 * binom(2k, k)``.  The ``"ext"``
precision evaluates in MPFR with a working precision that grows with ``n``
(never below 113 bits), which keeps the relative error near ``2**-113``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np
from gmpy2 import mpfr

from ._validation import check_int, check_int_array, check_precision

__all__ = [
    "WeightSpec",
    "ext_bits",
    "ground_state",
    "rho1",
    "rho2",
    "rho_k",
    "rho_array",
    "exceeds_leading_term",
    "series_coefficient_rho2",
    "rho2_series",
    "leading_constant",
    "leading_constant_exact",
]


def ext_bits(k: int, n: int) -> int:
    """MPFR precision used for the order-``k`` weight at index ``n``.

    Enough bits to resolve the second term of the expansion, which sits
    ``2k + 2`` powers of ``n`` below the stencil terms, plus 64 guard bits.
    """
    return max(113, math.ceil((2 * k + 2) * math.log2(max(n, 2))) + 64)


def _ext_context(bits: int):
    return gmpy2.context(gmpy2.get_context(), precision=bits)


def ground_state(k: int, n):
    """``n**(k - 1/2)``; zero at ``n = 0``. Accepts a scalar or an integer array."""
    k = check_int(k, "k", 1)
    if np.ndim(n) == 0:
        n = check_int(n, "n", 0)
        return float(n) ** (k - 0.5)
    n = check_int_array(n, "n", 0)
    return n.astype(float) ** (k - 0.5)


def _pow_half(r, k: int):
    # r**(k - 1/2) for a nonnegative mpfr r, avoiding the generic pow
    return r ** (k - 1) * gmpy2.sqrt(r)


def _rho1_ext(n: int):
    with _ext_context(ext_bits(1, n)):
        return 2 - gmpy2.sqrt(mpfr(n - 1) / n) - gmpy2.sqrt(mpfr(n + 1) / n)


def _rho2_ext(n: int):
    with _ext_context(ext_bits(2, n)):
        x = 1 / mpfr(n)
        return (
            6
            - 4 * _pow_half(1 + x, 2)
            - 4 * _pow_half(1 - x, 2)
            + _pow_half(1 + 2 * x, 2)
            + _pow_half(1 - 2 * x, 2)
        )


def _rho_k_ext(k: int, n: int):
    with _ext_context(ext_bits(k, n)):
        total = mpfr(0)
        for j in range(-k, k + 1):
            if n + j == 0:
                continue
            coef = (-1) ** abs(j) * math.comb(2 * k, k - j)
            total += coef * _pow_half(mpfr(n + j) / n, k)
        return total


def rho1(n, precision: str = "f64"):
    """Improved Hardy weight ``2 - sqrt((n-1)/n) - sqrt((n+1)/n)`` for ``n >= 1``.

    In binary64 the difference is evaluated in the cancellation-free form
    ``2x^2 / ((s+ + s-)(1 + s-)(1 + s+))`` with ``x = 1/n`` and
    ``s± = sqrt(1 ± x)``, which is accurate to a few ulps for every ``n``.
    ``precision="ext"`` evaluates the displayed formula in MPFR and returns
    an ``mpfr`` (scalar input only).
    """
    check_precision(precision)
    if precision == "ext":
        return _rho1_ext(check_int(n, "n", 1))
    scalar = np.ndim(n) == 0
    if scalar:
        n = check_int(n, "n", 1)
    nn = check_int_array(np.atleast_1d(n), "n", 1).astype(float)
    x = 1.0 / nn
    sp, sm = np.sqrt(1.0 + x), np.sqrt(1.0 - x)
    out = 2.0 * x * x / ((sp + sm) * (1.0 + sm) * (1.0 + sp))
    return float(out[0]) if scalar else out


def rho2(n, precision: str = "f64"):
    """Improved Rellich weight, from its explicit five-term formula (``n >= 2``)."""
    check_precision(precision)
    if precision == "ext":
        return _rho2_ext(check_int(n, "n", 2))
    scalar = np.ndim(n) == 0
    if scalar:
        n = check_int(n, "n", 2)
    x = 1.0 / check_int_array(np.atleast_1d(n), "n", 2).astype(float)
    out = (
        6.0
        - 4.0 * (1.0 + x) ** 1.5
        - 4.0 * (1.0 - x) ** 1.5
        + (1.0 + 2.0 * x) ** 1.5
        + np.maximum(1.0 - 2.0 * x, 0.0) ** 1.5
    )
    return float(out[0]) if scalar else out


def rho_k(k: int, n, precision: str = "f64"):
    """Order-``k`` weight via the alternating binomial stencil, ``n >= k``.

    ``sum_{j=-k}^{k} (-1)^j C(2k, k-j) ((n+j)/n)**(k-1/2)``.  Indices below
    ``k`` are rejected since the stencil would reach the Dirichlet layer.
    """
    k = check_int(k, "k", 1)
    check_precision(precision)
    if precision == "ext":
        return _rho_k_ext(k, check_int(n, "n", k))
    scalar = np.ndim(n) == 0
    if scalar:
        n = check_int(n, "n", k)
    nn = check_int_array(np.atleast_1d(n), "n", k).astype(float)
    out = np.zeros_like(nn)
    for j in range(-k, k + 1):
        coef = (-1) ** abs(j) * math.comb(2 * k, k - j)
        out += coef * np.maximum((nn + j) / nn, 0.0) ** (k - 0.5)
    return float(out[0]) if scalar else out


def rho_array(k: int, ns, precision: str = "ext") -> np.ndarray:
    """Order-``k`` weights at the indices ``ns`` as a float64 array.

    With ``precision="ext"`` each value is computed in MPFR and rounded once,
    so the array is accurate to about one ulp even where ``rho`` is tiny.
    """
    k = check_int(k, "k", 1)
    ns = check_int_array(np.atleast_1d(ns), "ns", k)
    check_precision(precision)
    if precision == "f64":
        if k == 1:
            return rho1(ns)
        return rho_k(k, ns)
    if k == 1:
        # the binary64 path is already cancellation free
        return rho1(ns)
    out = np.empty(len(ns))
    far = ns >= _SERIES_START * k
    out[~far] = [float(_rho_k_ext(k, int(n))) for n in ns[~far]]
    if far.any():
        out[far] = _rho_series_f64(k, ns[far])
    return out


# Beyond n = 64k the expansion in 1/n^2 has positive terms shrinking by a
# factor of ~(k/n)^2 each, so a dozen terms summed in binary64 are exact to
# rounding and much faster than MPFR.
_SERIES_START = 64
_SERIES_TERMS = 12


def _rho_series_f64(k: int, ns: np.ndarray) -> np.ndarray:
    from .combinatorics import exact_series_coefficient

    inv2 = 1.0 / ns.astype(float) ** 2
    total = np.zeros(len(ns))
    # smallest terms first
    for l in range(k + _SERIES_TERMS - 1, k - 1, -1):
        total += float(exact_series_coefficient(k, l)) * inv2**l
    return total


def leading_constant_exact(k: int) -> Fraction:
    """``((2k)!)^2 / (16^k (k!)^2)`` as an exact rational."""
    k = check_int(k, "k", 1)
    return Fraction(math.factorial(2 * k) ** 2, 16**k * math.factorial(k) ** 2)


def leading_constant(k: int) -> float:
    return float(leading_constant_exact(k))


def exceeds_leading_term(k: int, n: int) -> bool:
    """Decide ``rho_k(n) > leading_constant(k) / n**(2k)`` in extended precision."""
    k = check_int(k, "k", 1)
    n = check_int(n, "n", k)
    lead = leading_constant_exact(k)
    if k == 1:
        rho = _rho1_ext(n)
    elif k == 2:
        rho = _rho2_ext(n)
    else:
        rho = _rho_k_ext(k, n)
    with _ext_context(ext_bits(k, n)):
        bound = mpfr(lead.numerator) / (mpfr(lead.denominator) * mpfr(n) ** (2 * k))
        return bool(rho > bound)


def series_coefficient_rho2(l: int) -> Fraction:
    """Coefficient of ``n**-(2l+2)`` in the expansion of the Rellich weight.

    ``6 (4^l - 1) / 4^(2l) * (4l)! / ((2l)! (2l+2)!)``, exact.
    """
    l = check_int(l, "l", 1)
    return Fraction(
        6 * (4**l - 1) * math.factorial(4 * l),
        16**l * math.factorial(2 * l) * math.factorial(2 * l + 2),
    )


def rho2_series(n: int, terms: int, precision: str = "f64"):
    """Partial sum ``sum_{l=1}^{terms} coeff(l) / n**(2l+2)``."""
    n = check_int(n, "n", 2)
    terms = check_int(terms, "terms", 1)
    check_precision(precision)
    if precision == "f64":
        return math.fsum(float(series_coefficient_rho2(l)) / float(n) ** (2 * l + 2) for l in range(1, terms + 1))
    with _ext_context(ext_bits(2, n)):
        total = mpfr(0)
        for l in range(1, terms + 1):
            c = series_coefficient_rho2(l)
            total += mpfr(c.numerator) / (mpfr(c.denominator) * mpfr(n) ** (2 * l + 2))
        return total


@dataclass(frozen=True)
class WeightSpec:
    """Order ``k`` and evaluation precision for the weight ``rho^(k)``."""

    order: int
    precision: str = "f64"

    def __post_init__(self):
        check_int(self.order, "order", 1)
        check_precision(self.precision)

    @property
    def first_index(self) -> int:
        return self.order

    def ground_state(self, n):
        return ground_state(self.order, n)

    def rho(self, n):
        """Weight at ``n`` (scalar) or at each entry of an integer array."""
        if np.ndim(n) == 0:
            if self.order == 1:
                return rho1(n, self.precision)
            if self.order == 2:
                return rho2(n, self.precision)
            return rho_k(self.order, n, self.precision)
        return rho_array(self.order, n, self.precision)

    @property
    def leading_constant(self) -> float:
        return leading_constant(self.order)
