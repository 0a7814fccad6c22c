"""Cut-off experiments for criticality, optimality near infinity and the distance bound.

Each experiment multiplies a ground state by a cut-off profile and measures
the remainder ``||R_k u||^2`` against the weighted norm ``sum rho_n |u_n|^2``.
The profiles live on ``[0, 2N^3]``, far too long to sum term by term for the
larger ``N``, so sums are evaluated by a hybrid scheme:

* terms below ``exact_limit`` and a few terms around every kink of the
  profile are added directly in binary64;
* the smooth stretches in between are handled by Euler-Maclaurin summation in
  mpmath, with ``c_n`` from the asymptotic series of ``zeta_n`` and the
  weights from their exact power series.

Differences of the profile are formed from divided differences of the
mollifier polynomial, which keeps them accurate to a few ulps where the naive
subtraction of neighbouring values would cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from ._validation import check_increasing, check_int
from .combinatorics import exact_series_coefficient
from .factorization import rellich_coeffs, zeta_asymptotic
from .operators import FiniteSequence
from .weights import rho_array

__all__ = [
    "KINDS",
    "PROFILE_KINDS",
    "CutoffProfile",
    "ExperimentEntry",
    "ExperimentReport",
    "mollifier",
    "build_cutoff",
    "build_sequence",
    "hybrid_sum",
    "experiment",
    "sweep",
    "distance_experiment",
    "distance_first_entry",
    "second_difference_constant",
]

PROFILE_KINDS = ("hardy_critical", "hardy_infinity", "smooth_window", "smooth_tail")
KINDS = ("hardy_critical", "hardy_infinity", "rellich_infinity")
DEFAULT_EPSILON = 0.1
EXACT_LIMIT = 100_000
EM_DPS = 50
EM_TERMS = 3


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    return epsilon


def _smoothstep(s):
    return s * s * s * (10 + s * (-15 + 6 * s))


def _smoothstep_divided(a, b):
    # (P(a) - P(b)) / (a - b) for P(s) = 6s^5 - 15s^4 + 10s^3
    a2, b2, ab = a * a, b * b, a * b
    s2 = a2 + ab + b2
    s3 = (a + b) * (a2 + b2)
    s4 = a2 * a2 + a2 * ab + a2 * b2 + ab * b2 + b2 * b2
    return 6 * s4 - 15 * s3 + 10 * s2


def mollifier(t, epsilon: float = DEFAULT_EPSILON):
    """Quintic smoothstep: 0 for ``t <= epsilon``, 1 for ``t >= 1 - epsilon``, C^2 in between."""
    epsilon = _check_epsilon(epsilon)
    s = np.clip((np.asarray(t, dtype=float) - epsilon) / (1 - 2 * epsilon), 0.0, 1.0)
    out = _smoothstep(s)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class _Ramp:
    # s(x) = (sign * log(x / anchor) / log N - eps) / (1 - 2 eps), profile piece P(clip(s))
    anchor: int
    sign: int
    N: int
    epsilon: float  # 0 for the piecewise-logarithmic (Hardy) ramps
    smooth: bool

    @property
    def log_n(self) -> float:
        return math.log(self.N)

    def s(self, n: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            t = self.sign * (np.log(n) - math.log(self.anchor)) / self.log_n
        return (t - self.epsilon) / (1 - 2 * self.epsilon)

    def value(self, n: np.ndarray) -> np.ndarray:
        s = np.clip(self.s(n), 0.0, 1.0)
        return _smoothstep(s) if self.smooth else s

    def difference(self, n: np.ndarray) -> np.ndarray:
        """``piece(n) - piece(n + 1)`` for ``n >= 1``."""
        s0, s1 = self.s(n), self.s(n + 1)
        a, b = np.clip(s0, 0.0, 1.0), np.clip(s1, 0.0, 1.0)
        inside = (s0 >= 0) & (s0 <= 1) & (s1 >= 0) & (s1 <= 1)
        exact = -self.sign * np.log1p(1.0 / n) / (self.log_n * (1 - 2 * self.epsilon))
        ds = np.where(inside, exact, a - b)
        return ds * _smoothstep_divided(a, b) if self.smooth else ds

    def s_mp(self, x):
        t = self.sign * mpmath.log(x / self.anchor) / mpmath.log(self.N)
        return (t - self.epsilon) / (1 - 2 * mpmath.mpf(self.epsilon))

    def value_mp(self, x):
        s = min(max(self.s_mp(x), 0), 1)
        return _smoothstep(s) if self.smooth else s

    def endpoints(self) -> tuple[float, float]:
        """Real ``x`` at ``s = 0`` and ``s = 1``, in increasing order."""
        with mpmath.workdps(30):
            n = mpmath.mpf(self.N)
            xs = [self.anchor * n ** (self.sign * (self.epsilon + v * (1 - 2 * self.epsilon))) for v in (0, 1)]
            lo, hi = sorted(float(x) for x in xs)
        return lo, hi


@dataclass(frozen=True)
class CutoffProfile:
    """Cut-off sequence ``xi^N`` of one of the four shapes, evaluated at integers.

    ``hardy_critical``: 1 below ``N``, ``(2 log N - log n)/log N`` on ``[N, N^2]``, then 0.
    ``hardy_infinity``: logarithmic rise on ``[N, N^2]``, 1 up to ``2N^2``, logarithmic
    fall to 0 at ``2N^3``.
    ``smooth_window``: the same plateau with mollified ramps.
    ``smooth_tail``: 0 at ``n <= 1``, 1 up to ``2N^2``, mollified fall to 0 at ``2N^3``.
    """

    kind: str
    N: int
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"kind must be one of {PROFILE_KINDS}, got {self.kind!r}")
        check_int(self.N, "N", 2)
        _check_epsilon(self.epsilon)

    @property
    def ramps(self) -> tuple[_Ramp, ...]:
        N = self.N
        smooth = self.kind in ("smooth_window", "smooth_tail")
        eps = self.epsilon if smooth else 0.0
        if self.kind == "hardy_critical":
            return (_Ramp(N * N, -1, N, 0.0, False),)
        down = _Ramp(2 * N**3, -1, N, eps, smooth)
        if self.kind == "smooth_tail":
            return (down,)
        return (_Ramp(N, 1, N, eps, smooth), down)

    @property
    def zero_through(self) -> int:
        """Entries with index ``<=`` this value are forced to zero (``-1``: none)."""
        return 1 if self.kind == "smooth_tail" else -1

    @property
    def support_end(self) -> int:
        """Last index that can carry a nonzero value."""
        return math.floor(max(r.endpoints()[1] for r in self.ramps))

    @property
    def breakpoints(self) -> list[float]:
        """Points where the profile fails to be smooth (ramp ends and the forced-zero jump)."""
        pts = [x for r in self.ramps for x in r.endpoints()]
        if self.zero_through >= 0:
            pts.append(self.zero_through + 0.5)
        return sorted(pts)

    def __call__(self, n):
        scalar = np.ndim(n) == 0
        n = np.atleast_1d(np.asarray(n, dtype=float))
        out = sum(r.value(n) for r in self.ramps) - (len(self.ramps) - 1)
        out = np.where(n <= self.zero_through, 0.0, out)
        return float(out[0]) if scalar else out

    def differences(self, n) -> np.ndarray:
        """``xi_n - xi_{n+1}`` for integer ``n >= 1``, accurate to a few ulps."""
        n = np.asarray(n, dtype=float)
        out = sum(r.difference(n) for r in self.ramps)
        near = n <= self.zero_through
        if np.any(near):
            out = np.where(near, self(n) - self(n + 1), out)
        return out

    def value_mp(self, x):
        if x <= self.zero_through + 0.5:
            return mpmath.mpf(0)
        return sum(r.value_mp(x) for r in self.ramps) - (len(self.ramps) - 1)


def build_cutoff(kind: str, N: int, epsilon: float = DEFAULT_EPSILON) -> CutoffProfile:
    return CutoffProfile(kind, N, epsilon)


def _profile_for(kind: str, N: int, epsilon: float) -> tuple[CutoffProfile, int]:
    if kind == "hardy_critical":
        return CutoffProfile("hardy_critical", N, epsilon), 1
    if kind == "hardy_infinity":
        return CutoffProfile("hardy_infinity", N, epsilon), 1
    if kind == "rellich_infinity":
        return CutoffProfile("smooth_window", N, epsilon), 2
    if kind == "distance":
        return CutoffProfile("smooth_tail", N, epsilon), 2
    raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


def build_sequence(kind: str, N: int, epsilon: float = DEFAULT_EPSILON, max_length: int = 10**7) -> FiniteSequence:
    """``u_n = g_n xi_n`` as an explicit sequence (only for moderate supports)."""
    profile, k = _profile_for(kind, N, epsilon)
    length = profile.support_end + 2
    if length > max_length:
        raise ValueError(f"support of length {length} exceeds max_length = {max_length}")
    n = np.arange(length)
    u = n.astype(float) ** (k - 0.5) * profile(n)
    u[:k] = 0.0
    return FiniteSequence(u, k)


# ---------------------------------------------------------------------------
# summation engine


def _direct(term, lo: int, hi: int) -> float:
    if hi < lo:
        return 0.0
    total = []
    for start in range(lo, hi + 1, 1 << 20):
        n = np.arange(start, min(hi, start + (1 << 20) - 1) + 1, dtype=np.int64)
        total.append(math.fsum(term(n)))
    return math.fsum(total)


def _euler_maclaurin(term_mp, a: int, b: int):
    f = term_mp
    la, lb = mpmath.log(a), mpmath.log(b)
    pieces = max(2, math.ceil(float(lb - la) / 2))
    nodes = [la + (lb - la) * i / pieces for i in range(pieces + 1)]
    integral = mpmath.quad(lambda u: f(mpmath.exp(u)) * mpmath.exp(u), nodes, method="gauss-legendre")
    total = integral + (f(mpmath.mpf(a)) + f(mpmath.mpf(b))) / 2
    for j in range(1, EM_TERMS + 1):
        coef = mpmath.bernoulli(2 * j) / mpmath.factorial(2 * j)
        total += coef * (mpmath.diff(f, b, 2 * j - 1) - mpmath.diff(f, a, 2 * j - 1))
    return total


def hybrid_sum(term, term_mp, lo: int, hi: int, breakpoints, reach: int = 0, exact_limit: int = EXACT_LIMIT) -> float:
    """``sum_{n=lo}^{hi} term(n)`` for a term that is smooth away from ``breakpoints``.

    ``term`` takes an int64 array, ``term_mp`` one ``mpf`` and must be the
    analytic continuation of ``term`` between breakpoints.  ``reach`` is how
    far ahead the term looks (``term(n)`` depends on the profile at
    ``n..n+reach``).  Terms below ``exact_limit`` and within a few places of a
    breakpoint are added directly; the remaining stretches use
    Euler-Maclaurin summation.
    """
    if hi < lo:
        return 0.0
    windows = []
    for p in breakpoints:
        a, b = max(math.floor(p) - reach - 1, lo), min(math.ceil(p) + 1, hi)
        if a <= b:
            windows.append([a, b])
    windows.sort()
    merged: list[list[int]] = []
    for w in windows:
        if merged and w[0] <= merged[-1][1] + 1:
            merged[-1][1] = max(merged[-1][1], w[1])
        else:
            merged.append(w)
    parts = [_direct(term, a, b) for a, b in merged]
    gaps, cursor = [], lo
    for a, b in merged:
        if cursor < a:
            gaps.append((cursor, a - 1))
        cursor = b + 1
    if cursor <= hi:
        gaps.append((cursor, hi))
    with mpmath.workdps(EM_DPS):
        smooth = mpmath.mpf(0)
        for a, b in gaps:
            cut = min(b, max(a, exact_limit) - 1)
            if cut >= a:
                parts.append(_direct(term, a, cut))
            a = max(a, cut + 1)
            if a > b:
                continue
            if b - a < 64:
                parts.append(_direct(term, a, b))
            else:
                smooth += _euler_maclaurin(term_mp, a, b)
        parts.append(float(smooth))
    return math.fsum(parts)


@lru_cache(maxsize=4)
def _series_rationals(k: int, terms: int = 8) -> tuple:
    return tuple(exact_series_coefficient(k, l) for l in range(k, k + terms))


def _rho_mp(k: int, x):
    coeffs = _series_rationals(k)
    inv2 = 1 / (x * x)
    total = mpmath.mpf(0)
    for c in reversed(coeffs):
        total = (total + mpmath.mpf(c.numerator) / c.denominator) * inv2
    return total * inv2 ** (k - 1)


class _RellichC:
    # c_n from the recurrence up to `table`, from the zeta series beyond
    def __init__(self, top: int):
        self.table = min(top, EXACT_LIMIT + 8)
        self.c = rellich_coeffs(max(self.table, 2)).c

    def __call__(self, n: np.ndarray) -> np.ndarray:
        out = np.empty(len(n))
        low = n <= self.table
        out[low] = self.c[n[low]]
        far = n[~low].astype(float)
        out[~low] = np.sqrt(zeta_asymptotic(far))
        return out


def _remainder_norm2(profile: CutoffProfile, k: int, exact_limit: int) -> float:
    """``||R_k (g xi)||^2`` summed over ``n >= 1``."""
    top = profile.support_end + 2
    if k == 1:

        def term(n):
            return np.sqrt(n * (n + 1.0)) * profile.differences(n) ** 2

        def term_mp(x):
            d = profile.value_mp(x) - profile.value_mp(x + 1)
            return mpmath.sqrt(x * (x + 1)) * d * d

        reach = 1
    else:
        cfun = _RellichC(min(top, exact_limit + 8))

        def term(n):
            c = cfun(n)
            nf = n.astype(float)
            r = c * nf**1.5 * profile.differences(n) - (nf + 2) ** 1.5 / c * profile.differences(n + 1)
            return r * r

        def term_mp(x):
            c = mpmath.sqrt(zeta_asymptotic(x))
            v0, v1, v2 = profile.value_mp(x), profile.value_mp(x + 1), profile.value_mp(x + 2)
            r = c * x**1.5 * (v0 - v1) - (x + 2) ** 1.5 / c * (v1 - v2)
            return r * r

        reach = 2
    bps = profile.breakpoints
    total = 0.0
    # the term vanishes wherever the profile is flat, so only ramps and jumps are visited
    ranges = [(math.floor(a) - reach - 1, math.ceil(b) + 1) for a, b in (r.endpoints() for r in profile.ramps)]
    if profile.zero_through >= 0:
        ranges.append((1, profile.zero_through + reach + 1))
    ranges = sorted((max(a, 1), min(b, top)) for a, b in ranges)
    for (a, b), nxt in zip(ranges, ranges[1:] + [(top + 1, top + 1)]):
        if b >= nxt[0]:
            raise ArithmeticError("overlapping summation ranges")
    for a, b in ranges:
        total += hybrid_sum(term, term_mp, a, b, [p for p in bps if a - 3 <= p <= b + 3], reach, exact_limit)
    return total


def _weighted_norm2(profile: CutoffProfile, k: int, exact_limit: int) -> float:
    """``sum_{n >= k} rho^(k)_n g_n^2 xi_n^2``."""
    power = 2 * k - 1

    def term(n):
        return rho_array(k, n) * n.astype(float) ** power * profile(n) ** 2

    def term_mp(x):
        return _rho_mp(k, x) * x**power * profile.value_mp(x) ** 2

    lo = max(k, profile.zero_through + 1)
    return hybrid_sum(term, term_mp, lo, profile.support_end, profile.breakpoints, 0, exact_limit)


def _check_boundary(profile: CutoffProfile, k: int) -> None:
    # u = g xi must vanish on the first k indices and past the support
    head = profile(np.arange(k)) * np.arange(k, dtype=float) ** (k - 0.5)
    if np.any(head != 0):
        raise ArithmeticError(f"cut-off sequence violates boundary order {k}")
    if profile(profile.support_end + 1) != 0:
        raise ArithmeticError("cut-off sequence does not vanish past its support")


@dataclass(frozen=True)
class ExperimentEntry:
    kind: str
    N: int
    remainder_norm2: float
    weighted_norm2: float
    epsilon: float = DEFAULT_EPSILON

    @property
    def ratio(self) -> float:
        return self.remainder_norm2 / self.weighted_norm2

    @property
    def rayleigh_quotient(self) -> float:
        # form = weighted part + remainder by the factorization identity
        return 1.0 + self.ratio

    def row(self) -> dict:
        return {
            "kind": self.kind,
            "N": self.N,
            "remainder_norm2": self.remainder_norm2,
            "weighted_norm2": self.weighted_norm2,
            "ratio": self.ratio,
        }


def experiment(kind: str, N: int, epsilon: float = DEFAULT_EPSILON, exact_limit: int = EXACT_LIMIT) -> ExperimentEntry:
    """Remainder and weighted norms of ``u^N = g * xi^N`` for one ``N``.

    ``hardy_critical`` and ``hardy_infinity`` use ``R_1`` with the weight
    ``rho^(1)``; ``rellich_infinity`` uses ``R_2``, ``rho^(2)`` and the
    mollified window.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    N = check_int(N, "N", 2)
    profile, k = _profile_for(kind, N, _check_epsilon(epsilon))
    _check_boundary(profile, k)
    return ExperimentEntry(
        kind,
        N,
        _remainder_norm2(profile, k, exact_limit),
        _weighted_norm2(profile, k, exact_limit),
        profile.epsilon,
    )


@dataclass(frozen=True)
class ExperimentReport:
    kind: str
    entries: tuple[ExperimentEntry, ...]

    @property
    def N_values(self) -> tuple[int, ...]:
        return tuple(e.N for e in self.entries)

    @property
    def remainder_norm2(self) -> np.ndarray:
        return np.array([e.remainder_norm2 for e in self.entries])

    @property
    def weighted_norm2(self) -> np.ndarray:
        return np.array([e.weighted_norm2 for e in self.entries])

    @property
    def ratio(self) -> np.ndarray:
        return self.remainder_norm2 / self.weighted_norm2

    @property
    def log_slope(self) -> float:
        """Least-squares slope of ``log ratio`` against ``log log N`` (nan for one point)."""
        if len(self.entries) < 2:
            return math.nan
        x = np.log(np.log(np.array(self.N_values, dtype=float)))
        return float(np.polyfit(x, np.log(self.ratio), 1)[0])

    def rows(self) -> list[dict]:
        return [e.row() for e in self.entries]


def sweep(kind: str, N_values, epsilon: float = DEFAULT_EPSILON, exact_limit: int = EXACT_LIMIT) -> ExperimentReport:
    Ns = check_increasing(N_values, "N_values")
    return ExperimentReport(kind, tuple(experiment(kind, N, epsilon, exact_limit) for N in Ns))


def distance_first_entry(N: int, epsilon: float = DEFAULT_EPSILON) -> float:
    """``(R_2 u)_1`` for ``u = g * smooth_tail(N)``; equals ``-c_1`` for every ``N``."""
    profile = CutoffProfile("smooth_tail", check_int(N, "N", 2), epsilon)
    co = rellich_coeffs(2)
    xi = profile(np.arange(1, 4))
    g = np.arange(1, 4, dtype=float) ** 1.5
    return float(co.c[1] * g[0] * xi[0] - co.b[1] * g[1] * xi[1] + g[2] * xi[2] / co.c[1])


def distance_experiment(N: int, epsilon: float = DEFAULT_EPSILON, exact_limit: int = EXACT_LIMIT) -> float:
    """``||R_2 u||^2`` for ``u = g * smooth_tail(N)``; tends to ``c_1^2 = 8 sqrt 2 - 3 sqrt 3``."""
    N = check_int(N, "N", 2)
    profile = CutoffProfile("smooth_tail", N, _check_epsilon(epsilon))
    _check_boundary(profile, 2)
    return _remainder_norm2(profile, 2, exact_limit)


def second_difference_constant(N: int, epsilon: float = DEFAULT_EPSILON) -> float:
    """``max_n n^2 log N |xi_n - 2 xi_{n+1} + xi_{n+2}|`` for the smooth window (direct sum)."""
    profile = CutoffProfile("smooth_window", check_int(N, "N", 2), epsilon)
    n = np.arange(1, profile.support_end + 2, dtype=np.int64)
    second = profile.differences(n) - profile.differences(n + 1)
    return float(np.max(n.astype(float) ** 2 * math.log(N) * np.abs(second)))
