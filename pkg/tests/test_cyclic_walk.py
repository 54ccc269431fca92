import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclemix import (
    CyclicMeasure,
    GenSet,
    ValidationError,
    chebyshev_diagnostic,
    distribution_at,
    fourier_profile,
    l2_to_uniform,
    mixing_time,
    relaxation_time,
    spectral_gap,
    tv_to_uniform,
    window_report,
)
from cyclemix.cyclic_walk import mixing_report, powered_coeff, tv_at

SMALL_PRIMES = [5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101]


def naive_distribution(A: GenSet, n: int) -> np.ndarray:
    """Repeated convolution with the step measure, O(p k) per step."""
    p = A.p
    w = np.zeros(p)
    w[0] = 1.0
    for _ in range(n):
        nxt = w.copy()
        for a in A.half:
            nxt += np.roll(w, a) + np.roll(w, -a)
        w = nxt / A.size
    return w


def direct_coeff(A: GenSet) -> np.ndarray:
    """O(p^2) character sums, independent of the package's transform."""
    p = A.p
    xi = np.arange(p)
    out = np.ones(p)
    for a in A.half:
        out += 2 * np.cos(2 * np.pi * xi * a / p)
    return out / A.size


@st.composite
def gensets(draw, max_p=101, max_k=4):
    p = draw(st.sampled_from([q for q in SMALL_PRIMES if q <= max_p]))
    k = draw(st.integers(1, min(max_k, (p - 1) // 2)))
    half = draw(st.lists(st.integers(1, (p - 1) // 2), min_size=k, max_size=k, unique=True))
    return GenSet(p, tuple(sorted(half)))


# --- the p = 5 worked examples --------------------------------------------------

P5 = GenSet(5, (1,))
C1 = (1 + 2 * math.cos(2 * math.pi / 5)) / 3
C2 = (1 + 2 * math.cos(4 * math.pi / 5)) / 3


def test_coeff_p5():
    prof = fourier_profile(P5)
    assert prof.coeff[0] == 1.0
    assert prof.coeff[1] == pytest.approx(0.5393446629166316, abs=1e-15)
    assert prof.coeff[1] == pytest.approx(C1, abs=1e-15)
    assert prof.coeff[2] == pytest.approx(C2, abs=1e-15)


def test_full_set_p5_is_uniform_after_one_step():
    prof = fourier_profile(GenSet(5, (1, 2)))
    assert np.allclose(prof.coeff[1:], 0.0, atol=1e-15)
    assert spectral_gap(prof) == pytest.approx(1.0)
    assert relaxation_time(spectral_gap(prof)) == 0.0
    assert mixing_time(GenSet(5, (1, 2))) == 1
    assert l2_to_uniform(prof, 3) == pytest.approx(0.0, abs=1e-15)


def test_distribution_p5_two_steps():
    m = distribution_at(P5, 2)
    assert np.allclose(m.weights * 9, [3, 2, 1, 1, 2], atol=1e-13)
    assert tv_to_uniform(m) == pytest.approx(0.1777777777777778, abs=1e-12)


def test_trivial_steps():
    A = GenSet(11, (1, 3))
    assert np.allclose(distribution_at(A, 0).weights, np.eye(11)[0], atol=1e-14)
    one = np.zeros(11)
    for x in A.elements():
        one[x] += 1 / 5
    assert np.allclose(distribution_at(A, 1).weights, one, atol=1e-14)


def test_gap_and_relaxation_p5():
    prof = fourier_profile(P5)
    gap = spectral_gap(prof)
    assert gap == pytest.approx(1 - C1, abs=1e-15)
    # 1 / (-log(1 - gap)), evaluated independently
    assert relaxation_time(gap) == pytest.approx(-1 / math.log(C1), rel=1e-14)
    assert relaxation_time(gap) == pytest.approx(1.6196942810106152, rel=1e-12)


def test_l2_p5():
    prof = fourier_profile(P5)
    expected = 0.5 * math.sqrt(2 * C1 ** 2 + 2 * C2 ** 2)
    assert l2_to_uniform(prof, 1) == pytest.approx(expected, rel=1e-14)
    assert l2_to_uniform(prof, 1) == pytest.approx(0.40825, abs=1e-5)


def test_mixing_time_p5():
    assert tv_at(P5, 1) == pytest.approx(0.4)
    assert mixing_time(P5) == 2
    assert mixing_time(P5, eps=1 - 1 / 5) == 0
    assert mixing_time(P5, eps=0.99) == 0


def test_tv_extremes():
    assert tv_to_uniform(CyclicMeasure.point_mass(13)) == pytest.approx(1 - 1 / 13)
    assert tv_to_uniform(CyclicMeasure.uniform(13)) == pytest.approx(0.0, abs=1e-15)


def test_chebyshev_examples():
    prof = fourier_profile(P5)
    d = chebyshev_diagnostic(prof, [1, 4], 0)
    assert d["normalized_mean"] == pytest.approx(math.sqrt(2))
    assert d["correlation_ratio"] == pytest.approx(1.0)
    d = chebyshev_diagnostic(prof, [1, 4], 2)
    assert d["normalized_mean"] == pytest.approx(math.sqrt(2) * C1 ** 2, rel=1e-13)
    assert d["normalized_mean"] == pytest.approx(0.41139, abs=1e-5)


def test_chebyshev_random_sets():
    prof = fourier_profile(GenSet(101, (1, 10)))
    rng = np.random.default_rng(3)
    for _ in range(50):
        half = rng.choice(np.arange(1, 51), size=rng.integers(1, 10), replace=False)
        B = np.concatenate([half, 101 - half])
        assert chebyshev_diagnostic(prof, B, 5)["correlation_ratio"] >= 1 - 1e-12


@pytest.mark.parametrize("B", [[], [0, 1, 100], [1, 2]])
def test_chebyshev_rejects(B):
    with pytest.raises(ValidationError):
        chebyshev_diagnostic(fourier_profile(GenSet(101, (1,))), B, 1)


# --- validation -----------------------------------------------------------------

@pytest.mark.parametrize("p,half", [(4, (1,)), (2, (1,)), (7, ()), (7, (4,)), (7, (2, 1)), (7, (1, 1)), (7, (0,))])
def test_genset_rejects(p, half):
    with pytest.raises(ValidationError):
        GenSet(p, half)


def test_genset_parse():
    assert GenSet.parse(13, "1, 5").half == (1, 5)
    with pytest.raises(ValidationError, match="0"):
        GenSet.parse(13, "0,1")
    with pytest.raises(ValidationError):
        GenSet.parse(13, "a,b")


def test_from_residues_folds_and_detects_collisions():
    assert GenSet.from_residues(11, [10, 3]).half == (1, 3)
    with pytest.raises(ValidationError):
        GenSet.from_residues(11, [1, 10])


def test_measure_validation():
    with pytest.raises(ValidationError):
        CyclicMeasure(5, np.array([0.5, 0.5, 0.1, 0, 0]))
    with pytest.raises(ValidationError):
        CyclicMeasure(5, np.array([1.5, -0.5, 0, 0, 0]))
    with pytest.raises(ValidationError):
        CyclicMeasure(5, np.ones(4) / 4)


def test_gap_zero_raises():
    # a non-generating profile cannot come from a GenSet with p prime, so build one by hand
    prof = fourier_profile(GenSet(7, (1,)))
    object.__setattr__(prof, "coeff", np.ones(7))
    prof.__dict__.pop("log_abs", None)
    prof.__dict__.pop("second_modulus", None)
    with pytest.raises(ValidationError):
        spectral_gap(prof)


def test_window_report():
    rep = window_report(GenSet(10007, (1,)), 0.1)
    assert rep["width"] >= 0
    assert rep["t_low"] <= rep["t_mix"] <= rep["t_high"]
    assert rep["width_over_tmix"] >= 0.05
    with pytest.raises(ValidationError):
        window_report(P5, 0.5)


def test_mixing_report_invariants():
    rep = mixing_report(GenSet(1009, (1, 30)), eps_list=(0.1, 0.25, 1 / math.e, 0.5))
    ordered = sorted(rep.t_mix)
    assert all(rep.t_mix[a] >= rep.t_mix[b] for a, b in zip(ordered, ordered[1:]))
    tvs = [tv for _, tv in rep.tv_profile]
    assert all(x >= y - 1e-15 for x, y in zip(tvs, tvs[1:]))


# --- oracle equivalence and properties --------------------------------------------

@settings(max_examples=40, deadline=None)
@given(gensets(), st.integers(0, 120))
def test_matches_naive_convolution(A, n):
    assert np.max(np.abs(distribution_at(A, n).weights - naive_distribution(A, n))) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(gensets())
def test_profile_matches_direct_sum(A):
    assert np.max(np.abs(fourier_profile(A).coeff - direct_coeff(A))) <= 1e-13


@settings(max_examples=40, deadline=None)
@given(gensets(), st.integers(1, 60))
def test_parseval(A, n):
    w = distribution_at(A, n).weights
    pw = powered_coeff(fourier_profile(A), n)
    lhs = math.fsum(w * w)
    rhs = math.fsum(pw * pw) / A.p
    assert lhs == pytest.approx(rhs, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(gensets())
def test_tv_monotone_and_sandwiched(A):
    prof = fourier_profile(A)
    lam = prof.second_modulus
    prev = 1.0
    for n in range(1, 40):
        tv = tv_at(prof, n)
        assert tv <= prev + 1e-14
        assert 0.5 * lam ** n <= tv + 1e-12
        assert tv <= l2_to_uniform(prof, n) + 1e-12
        prev = tv


@settings(max_examples=30, deadline=None)
@given(gensets(), st.integers(1, 100))
def test_dilation_invariance(A, c):
    c = c % A.p or 1
    B = A.dilate(c)
    pa, pb = fourier_profile(A), fourier_profile(B)
    assert np.allclose(np.sort(pa.coeff), np.sort(pb.coeff), atol=1e-13)
    assert spectral_gap(pa) == pytest.approx(spectral_gap(pb), abs=1e-13)
    assert mixing_time(A) == mixing_time(B)
    for n in (1, 3, 7):
        assert tv_at(pa, n) == pytest.approx(tv_at(pb, n), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(gensets(), st.floats(0.01, 0.9))
def test_mixing_time_is_least_n(A, eps):
    prof = fourier_profile(A)
    t = mixing_time(A, eps, prof)
    assert tv_at(prof, t) <= eps
    if t > 0:
        assert tv_at(prof, t - 1) > eps


@pytest.mark.parametrize("p,half", [(10007, (1,)), (10007, (1, 77, 4000)), (1009, (5, 400))])
def test_mixing_time_against_scan(p, half):
    A = GenSet(p, half)
    prof = fourier_profile(A)
    for eps in (0.05, 0.25, 1 / math.e, 0.75):
        t = mixing_time(A, eps, prof)
        assert tv_at(prof, t) <= eps < tv_at(prof, t - 1)


def test_lower_bound_from_relaxation():
    # t_mix(eps) >= (t_rel - 1) log(1 / 2 eps)
    for half in [(1,), (1, 30), (3, 17, 40)]:
        A = GenSet(1009, half)
        prof = fourier_profile(A)
        t_rel = relaxation_time(spectral_gap(prof))
        for eps in (0.01, 0.1, 0.25):
            assert mixing_time(A, eps, prof) >= (t_rel - 1) * math.log(1 / (2 * eps)) - 1


def test_flush_to_uniform():
    A = GenSet(101, (1, 7))
    m = distribution_at(A, 10 ** 7)
    assert np.array_equal(m.weights, np.full(101, 1 / 101))
    assert tv_to_uniform(m) == 0.0


def test_large_prime_transform_runs():
    A = GenSet(1_000_003, (1, 3001, 77777))
    w = distribution_at(A, 50).weights
    assert w.min() >= 0
    assert math.fsum(w) == pytest.approx(1.0, abs=1e-10)
