"""Exact arithmetic for the combinatorial identity behind the weight expansions.

Three integers are compared for ``s, k >= 0``:

* ``A(s, k)``: the complete homogeneous symmetric polynomial ``h_s`` at the
  points ``1^2, 2^2, ..., k^2``;
* ``B(s, k)``: ``sum_{j=-k}^{k} (-1)^(j+k) j^(2k+2s) / ((k+j)! (k-j)!)``;
* ``C(s, k)``: ``sum_{m=0}^{2s} (-1)^m C(2k+2s, m) S(2k+2s-m, 2k) k^m`` with
  Stirling numbers of the second kind ``S``.

The corner conventions are ``X(0, k) = 1`` for ``k >= 1`` and ``X(s, 0) = 0``.
``B`` is carried as a :class:`fractions.Fraction` since its terms are not
integers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from ._validation import check_int

__all__ = [
    "IdentityReport",
    "stirling2",
    "stirling2_explicit",
    "A",
    "A_nested",
    "B",
    "C",
    "inner_stencil_sum",
    "half_integer_binomial",
    "exact_series_coefficient",
    "verify_identity",
    "positivity_check",
]


@lru_cache(maxsize=None)
def _stirling_row(n: int) -> tuple[int, ...]:
    if n == 0:
        return (1,)
    prev = _stirling_row(n - 1)
    row = [0] * (n + 1)
    for m in range(1, n + 1):
        row[m] = m * (prev[m] if m < n else 0) + prev[m - 1]
    return tuple(row)


def stirling2(n: int, m: int) -> int:
    """Stirling number of the second kind from the triangular recurrence."""
    n = check_int(n, "n")
    m = check_int(m, "m")
    if m > n:
        return 0
    # build rows bottom-up so deep n never hits the recursion limit
    for i in range(0, n, 256):
        _stirling_row(i)
    return _stirling_row(n)[m]


def stirling2_explicit(n: int, m: int) -> int:
    """``sum_{j=0}^{m} (-1)^(m+j) j^n / ((m-j)! j!)``, evaluated exactly."""
    n = check_int(n, "n")
    m = check_int(m, "m")
    total = sum(
        Fraction((-1) ** (m + j) * j**n, math.factorial(m - j) * math.factorial(j)) for j in range(m + 1)
    )
    if total.denominator != 1:
        raise ArithmeticError(f"explicit Stirling sum for ({n}, {m}) is not an integer")
    return total.numerator


def A(s: int, k: int) -> int:
    """``h_s(1, 4, ..., k^2)`` by ``h_s(x_1..x_k) = h_s(x_1..x_{k-1}) + x_k h_{s-1}(x_1..x_k)``."""
    s = check_int(s, "s")
    k = check_int(k, "k")
    if k == 0:
        return 0
    h = [1] + [0] * s  # h_t over zero variables
    for i in range(1, k + 1):
        x = i * i
        for t in range(1, s + 1):
            h[t] += x * h[t - 1]
    return h[s]


def A_nested(s: int, k: int) -> int:
    """``A(s, k)`` straight from its nested sums ``k >= j_1 >= ... >= j_s >= 1``.

    Cost grows like ``k^s``; kept as an independent check for small inputs.
    """
    s = check_int(s, "s")
    k = check_int(k, "k")
    if k == 0:
        return 0
    total = 0
    for js in itertools.combinations_with_replacement(range(1, k + 1), s):
        total += math.prod(js) ** 2
    return total


def B(s: int, k: int) -> Fraction:
    s = check_int(s, "s")
    k = check_int(k, "k")
    if k == 0:
        return Fraction(0)
    return sum(
        (
            Fraction((-1) ** (j + k) * j ** (2 * k + 2 * s), math.factorial(k + j) * math.factorial(k - j))
            for j in range(-k, k + 1)
        ),
        Fraction(0),
    )


def C(s: int, k: int) -> int:
    s = check_int(s, "s")
    k = check_int(k, "k")
    if k == 0:
        return 0
    top = 2 * k + 2 * s
    return sum((-1) ** m * math.comb(top, m) * stirling2(top - m, 2 * k) * k**m for m in range(2 * s + 1))


def inner_stencil_sum(k: int, l: int) -> int:
    """``sum_{j=-k}^{k} (-1)^j C(2k, k+j) j^(2l)``."""
    k = check_int(k, "k", 1)
    l = check_int(l, "l")
    return sum((-1) ** abs(j) * math.comb(2 * k, k + j) * j ** (2 * l) for j in range(-k, k + 1))


def half_integer_binomial(k: int, m: int) -> Fraction:
    """``binom(k - 1/2, m) = prod_{i<m} (k - 1/2 - i) / m!`` exactly."""
    k = check_int(k, "k")
    m = check_int(m, "m")
    num = Fraction(1)
    for i in range(m):
        num *= Fraction(2 * k - 1 - 2 * i, 2)
    return num / math.factorial(m)


@lru_cache(maxsize=None)
def _series_coefficient(k: int, l: int) -> Fraction:
    return half_integer_binomial(k, 2 * l) * inner_stencil_sum(k, l)


def exact_series_coefficient(k: int, l: int) -> Fraction:
    """Coefficient of ``n**(-2l)`` in the expansion of ``rho^(k)_n``, ``l >= k``.

    Below ``l = k`` the coefficient vanishes identically; asking for it is
    rejected rather than answered with a silent zero.
    """
    k = check_int(k, "k", 1)
    l = check_int(l, "l")
    if l < k:
        raise ValueError(f"l = {l} < k = {k}: the expansion starts at l = k")
    return _series_coefficient(k, l)


def positivity_check(k: int, l_max: int) -> bool:
    k = check_int(k, "k", 1)
    l_max = check_int(l_max, "l_max", k)
    return all(exact_series_coefficient(k, l) > 0 for l in range(k, l_max + 1))


@dataclass(frozen=True)
class IdentityReport:
    s_max: int
    k_max: int
    all_equal: bool
    first_failure: tuple[int, int] | None
    rows: tuple[tuple[int, int, int, Fraction, int], ...]

    def __post_init__(self):
        if self.all_equal != (self.first_failure is None):
            raise ValueError("all_equal must hold exactly when there is no failure")


def verify_identity(s_max: int, k_max: int) -> IdentityReport:
    """Check ``A(s,k) == B(s,k) == C(s,k)`` on ``0 <= s <= s_max, 0 <= k <= k_max``."""
    s_max = check_int(s_max, "s_max")
    k_max = check_int(k_max, "k_max")
    rows = []
    failure = None
    for s in range(s_max + 1):
        for k in range(k_max + 1):
            a, b, c = A(s, k), B(s, k), C(s, k)
            rows.append((s, k, a, b, c))
            if failure is None and not (a == b == c):
                failure = (s, k)
    return IdentityReport(s_max, k_max, failure is None, failure, tuple(rows))
