import math

import mpmath
import numpy as np
import pytest

from discrete_rellich.factorization import apply_R2, identity_residual, rellich_coeffs
from discrete_rellich.operators import rayleigh_quotient
from discrete_rellich.optimality import (
    CutoffProfile,
    build_cutoff,
    build_sequence,
    distance_experiment,
    distance_first_entry,
    experiment,
    hybrid_sum,
    mollifier,
    second_difference_constant,
    sweep,
)

EPS = 0.1


def mp_eta(t, eps=EPS):
    s = (t - eps) / (1 - 2 * eps)
    s = min(max(s, mpmath.mpf(0)), mpmath.mpf(1))
    return 6 * s**5 - 15 * s**4 + 10 * s**3


def mp_profile(kind, N, n, eps=EPS):
    """Oracle: the piecewise cut-off formulas written out directly."""
    n, N = mpmath.mpf(n), mpmath.mpf(N)
    L = mpmath.log(N)
    if kind == "hardy_critical":
        if n < N:
            return mpmath.mpf(1)
        return (2 * L - mpmath.log(n)) / L if n <= N**2 else mpmath.mpf(0)
    rise = (mpmath.log(n) - L) / L
    fall = (mpmath.log(2 * N**3) - mpmath.log(n)) / L
    if kind == "hardy_infinity":
        if n < N or n > 2 * N**3:
            return mpmath.mpf(0)
        if n <= N**2:
            return rise
        return mpmath.mpf(1) if n <= 2 * N**2 else fall
    if kind == "smooth_window":
        if n < N or n > 2 * N**3:
            return mpmath.mpf(0)
        if n <= N**2:
            return mp_eta(rise, eps)
        return mpmath.mpf(1) if n <= 2 * N**2 else mp_eta(fall, eps)
    if kind == "smooth_tail":
        if n <= 1 or n > 2 * N**3:
            return mpmath.mpf(0)
        return mpmath.mpf(1) if n <= 2 * N**2 else mp_eta(fall, eps)
    raise ValueError(kind)


def mp_experiment(kind, N, dps=30):
    """Oracle for (remainder, weighted): explicit sequence, explicit R_k, mpmath throughout."""
    profile_kind = {"hardy_critical": "hardy_critical", "hardy_infinity": "hardy_infinity",
                    "rellich_infinity": "smooth_window", "distance": "smooth_tail"}[kind]
    k = 1 if kind.startswith("hardy") else 2
    top = 2 * N**3 + 4 if profile_kind != "hardy_critical" else N * N + 4
    with mpmath.workdps(dps):
        u = [mpmath.mpf(n) ** (k - mpmath.mpf(1) / 2) * mp_profile(profile_kind, N, n) if n >= k else mpmath.mpf(0)
             for n in range(top + 3)]
        remainder = mpmath.mpf(0)
        if k == 1:
            for n in range(1, top + 1):
                a = (mpmath.mpf(n + 1) / n) ** 0.25
                remainder += (a * u[n] - u[n + 1] / a) ** 2
        else:
            h = lambda m: (mpmath.mpf(m + 1) / m) ** 1.5  # noqa: E731
            z = 8 * mpmath.sqrt(2) - 3 * mpmath.sqrt(3)
            for n in range(1, top + 1):
                if n > 1:
                    z = h(n) * (4 - h(n + 1) - 1 / h(n - 1) - h(n) / z)
                c = mpmath.sqrt(z)
                b = (c * mpmath.mpf(n) ** 1.5 + mpmath.mpf(n + 2) ** 1.5 / c) / mpmath.mpf(n + 1) ** 1.5
                remainder += (c * u[n] - b * u[n + 1] + u[n + 2] / c) ** 2
        weighted = mpmath.mpf(0)
        for n in range(k, top + 1):
            if u[n] == 0:
                continue
            x = mpmath.mpf(n)
            with mpmath.workdps(dps + 8 * k + 20):
                rho = sum((-1) ** abs(j) * mpmath.binomial(2 * k, k - j) * ((x + j) / x) ** (k - mpmath.mpf(1) / 2)
                          for j in range(-k, k + 1))
            weighted += rho * u[n] ** 2
        return float(remainder), float(weighted)


# mollifier and profiles


def test_mollifier_examples():
    assert mollifier(0.0) == 0
    assert mollifier(1.0) == 1
    assert mollifier(0.5, 0.1) == 0.5
    assert mollifier(0.1) == 0 and mollifier(0.9) == 1


def test_mollifier_monotone_and_flat_at_ends():
    t = np.linspace(0, 1, 2001)
    m = mollifier(t)
    assert np.all(np.diff(m) >= 0)
    # first and second derivatives vanish at both ends of the ramp
    h = 1e-4
    for t0 in (0.1, 0.9):
        d1 = (mollifier(t0 + h) - mollifier(t0 - h)) / (2 * h)
        assert abs(d1) < 1e-6


def test_mollifier_rejects_epsilon():
    for eps in (0, 0.5, -0.1, 0.7):
        with pytest.raises(ValueError):
            mollifier(0.3, eps)


def test_hardy_critical_small_example():
    p = build_cutoff("hardy_critical", 2)
    assert p(1) == 1 and p(2) == 1
    assert p(3) == pytest.approx(math.log(4 / 3) / math.log(2), rel=1e-15)
    assert p(4) == 0 and p(5) == 0


def test_hardy_infinity_small_example():
    p = build_cutoff("hardy_infinity", 2)
    n = np.arange(0, 20)
    want = [float(mp_profile("hardy_infinity", 2, int(i))) for i in n]
    np.testing.assert_allclose(p(n), want, atol=1e-15)
    assert p(1) == 0 and p(5) == 1 and p(16) == 0


@pytest.mark.parametrize("kind", ["hardy_critical", "hardy_infinity", "smooth_window", "smooth_tail"])
@pytest.mark.parametrize("N", [2, 3, 5, 8])
def test_profiles_match_oracle(kind, N):
    p = CutoffProfile(kind, N)
    n = np.arange(0, 2 * N**3 + 5)
    got = p(n)
    want = np.array([float(mp_profile(kind, N, int(i))) for i in n])
    np.testing.assert_allclose(got, want, atol=1e-14)
    assert np.all((got >= 0) & (got <= 1))
    assert np.all(got[p.support_end + 1 :] == 0)


def test_smooth_profiles_plateaus():
    for N in (4, 16, 64):
        assert CutoffProfile("smooth_window", N)(N * N) == 1
        assert CutoffProfile("smooth_window", N)(2 * N * N) == 1
        tail = CutoffProfile("smooth_tail", N)
        assert tail(0) == tail(1) == 0 and tail(2) == tail(3) == 1


@pytest.mark.parametrize("kind", ["hardy_critical", "hardy_infinity", "smooth_window", "smooth_tail"])
def test_differences_are_accurate_where_subtraction_cancels(kind):
    N = 1024
    p = CutoffProfile(kind, N)
    samples = [2, 3, 5, 1000, 1025, 5000, 10**5, N * N - 1, N * N, 2 * N * N + 1, 10**8, 10**9, 2 * N**3 - 2]
    n = np.array(samples, dtype=float)
    got = p.differences(n)
    with mpmath.workdps(40):
        want = [float(mp_profile(kind, N, s) - mp_profile(kind, N, s + 1)) for s in samples]
    for g, w in zip(got, want):
        assert g == pytest.approx(w, rel=1e-12, abs=1e-300)


def test_profile_validation():
    with pytest.raises(ValueError):
        CutoffProfile("box", 4)
    with pytest.raises(ValueError):
        CutoffProfile("smooth_window", 1)
    with pytest.raises(ValueError):
        CutoffProfile("smooth_window", 4, 0.5)


def test_build_sequence():
    u = build_sequence("rellich_infinity", 4)
    assert u.boundary_order == 2
    assert u.values[16] == pytest.approx(16**1.5)
    with pytest.raises(ValueError):
        build_sequence("rellich_infinity", 64, max_length=1000)
    with pytest.raises(ValueError):
        build_sequence("bogus", 4)


# summation engine


def test_hybrid_sum_matches_closed_forms():
    # smooth term with a known sum: sum 1/n^2 over [10, 10^7]
    def term(n):
        return 1.0 / n.astype(float) ** 2

    def term_mp(x):
        return 1 / x**2

    got = hybrid_sum(term, term_mp, 10, 10**7, [], exact_limit=100)
    with mpmath.workdps(30):
        want = mpmath.zeta(2, 10) - mpmath.zeta(2, 10**7 + 1)
    assert got == pytest.approx(float(want), rel=1e-14)
    assert hybrid_sum(term, term_mp, 5, 4, []) == 0.0


def test_hybrid_sum_respects_breakpoints():
    # piecewise term: n^-2 below 1000.5, 2 n^-2 above
    def term(n):
        n = n.astype(float)
        return np.where(n < 1000.5, 1.0, 2.0) / n**2

    def term_mp(x):
        return (1 if x < 1000.5 else 2) / x**2

    # exact_limit keeps the first omitted Euler-Maclaurin term (~ 8!/a^9) negligible
    got = hybrid_sum(term, term_mp, 1, 10**6, [1000.5], exact_limit=100)
    with mpmath.workdps(30):
        want = mpmath.zeta(2) - mpmath.zeta(2, 1001) + 2 * (mpmath.zeta(2, 1001) - mpmath.zeta(2, 10**6 + 1))
    assert got == pytest.approx(float(want), rel=1e-14)


# experiments against the explicit oracle


@pytest.mark.parametrize("kind,N", [("hardy_critical", 4), ("hardy_critical", 16), ("hardy_infinity", 4),
                                    ("hardy_infinity", 8), ("rellich_infinity", 4), ("rellich_infinity", 8)])
def test_experiment_matches_explicit_oracle(kind, N):
    entry = experiment(kind, N)
    rem, wt = mp_experiment(kind, N)
    assert entry.remainder_norm2 == pytest.approx(rem, rel=1e-12)
    assert entry.weighted_norm2 == pytest.approx(wt, rel=1e-12)


@pytest.mark.slow
def test_rellich_experiment_matches_oracle_at_sixteen():
    entry = experiment("rellich_infinity", 16)
    rem, wt = mp_experiment("rellich_infinity", 16, dps=25)
    assert entry.remainder_norm2 == pytest.approx(rem, rel=1e-12)
    assert entry.weighted_norm2 == pytest.approx(wt, rel=1e-12)


def test_euler_maclaurin_path_agrees_with_direct_sums():
    a = experiment("rellich_infinity", 32)
    b = experiment("rellich_infinity", 32, exact_limit=500)
    assert b.remainder_norm2 == pytest.approx(a.remainder_norm2, rel=1e-10)
    assert b.weighted_norm2 == pytest.approx(a.weighted_norm2, rel=1e-10)


def test_distance_matches_oracle():
    assert distance_experiment(4) == pytest.approx(mp_experiment("distance", 4)[0], rel=1e-12)


def test_rayleigh_quotient_is_one_plus_ratio():
    entry = experiment("rellich_infinity", 8)
    u = build_sequence("rellich_infinity", 8)
    # the explicit stencil on u ~ n^{3/2} cancels several digits in binary64
    assert rayleigh_quotient(u, 2) == pytest.approx(entry.rayleigh_quotient, rel=1e-10)
    assert identity_residual(u, 2) < 1e-12


def test_distance_first_entry_is_minus_c1():
    c1 = rellich_coeffs(2).c[1]
    for N in (2, 4, 16, 4096):
        assert abs(distance_first_entry(N) + c1) <= 1e-12
    u = build_sequence("distance", 4)
    out = apply_R2(u, rellich_coeffs(u.support_end + 2)).values
    assert abs(out[1] + c1) <= 1e-12


# sweep properties


def test_hardy_critical_sweep():
    rep = sweep("hardy_critical", [4, 16, 64, 256])
    rem = rep.remainder_norm2
    assert np.all(rem <= 4 / np.log(rep.N_values))
    assert np.all(np.diff(rem) < 0)
    assert len(rep.rows()) == 4 and rep.rows()[0]["kind"] == "hardy_critical"


def test_hardy_infinity_denominators():
    rep = sweep("hardy_infinity", [2, 4, 16, 64, 256])
    assert np.all(rep.weighted_norm2 > 0.25 * math.log(2))
    assert np.all(np.diff(rep.ratio) < 0)


def test_rellich_infinity_sweep_shape():
    rep = sweep("rellich_infinity", [16, 64, 256, 1024])
    assert np.all(rep.weighted_norm2 > 9 / 16 * math.log(2))
    assert np.all(np.diff(rep.ratio) < 0)
    rq = np.array([e.rayleigh_quotient for e in rep.entries])
    assert np.all((rq > 1) & (rq < 1 + 10 * rep.ratio))
    assert rep.log_slope < 0


def test_distance_trend():
    c1sq = 8 * math.sqrt(2) - 3 * math.sqrt(3)
    values = np.array([distance_experiment(N) for N in (16, 64, 256, 1024, 4096)])
    excess = values - c1sq
    assert np.all(excess > 0)
    assert np.all(np.diff(excess) < 0)
    assert abs(values[-1] - c1sq) <= 0.1 * c1sq


def test_second_difference_constant():
    for N in (4, 8, 16, 32, 64):
        assert second_difference_constant(N) <= 8


def test_experiment_validation():
    with pytest.raises(ValueError):
        experiment("smooth_tail", 4)
    with pytest.raises(ValueError):
        experiment("hardy_critical", 1)
    with pytest.raises(ValueError):
        sweep("hardy_critical", [16, 4])
