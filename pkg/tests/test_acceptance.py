"""Acceptance criteria 1 to 9, each at its stated tolerance.

Every test records a PASS/FAIL line that is printed at the end of the run.
"""

import math
import time

import numpy as np
import pytest
from sympy import isprime

from cyclemix import (
    GenSet,
    chebyshev_diagnostic,
    distribution_at,
    fourier_profile,
    l2_to_uniform,
    mixing_time,
    relaxation_time,
    spectral_gap,
)
from cyclemix.cyclic_walk import tv_at
from cyclemix.experiments import ExperimentConfig, run_random, target_tmix
from cyclemix.lattice import (
    covering_radius,
    genset_of,
    lattice_from_half,
    lattice_of,
    kl_max,
    minkowski_bound,
    sample_genset,
    sample_lattice,
    shortest_dual,
    unit_ball_radius,
)
from cyclemix.local_clt import clt_tv
from cyclemix.power2 import alt_binary_expansion, c0, cutoff_check, power2_set
from cyclemix.theta import theta_lattice_frequency, theta_lattice_spatial, tau0


def naive(A: GenSet, n: int) -> np.ndarray:
    w = np.zeros(A.p)
    w[0] = 1.0
    for _ in range(n):
        nxt = w.copy()
        for a in A.half:
            nxt += np.roll(w, a) + np.roll(w, -a)
        w = nxt / A.size
    return w


def timed(f, *args):
    s = time.perf_counter()
    v = f(*args)
    return v, time.perf_counter() - s


def random_ensemble():
    """Ten random sets for each p in {10007, 100003} and k in 1..5 (100 in total)."""
    rng = np.random.default_rng(20240611)
    return [sample_genset(p, k, rng) for p in (10007, 100003) for k in range(1, 6) for _ in range(10)]


@pytest.fixture(scope="module")
def ensemble():
    out = []
    for A in random_ensemble():
        prof = fourier_profile(A)
        t_rel = relaxation_time(spectral_gap(prof))
        ell = shortest_dual(lattice_of(A))[1]
        out.append((A, prof, t_rel, ell))
    return out


def test_criterion_1_constants(report):
    t, dt_t = timed(tau0)
    c, dt_c = timed(c0)
    (s_star, value), dt_k = timed(kl_max)
    checks = {
        "tau0": abs(t - 0.56161265) <= 5e-8,
        "c0": abs(c - 3.394649802) <= 5e-9,
        "kl_s": abs(s_star - 1.260816271) <= 1e-8,
        "kl_value": 0.324908240 <= value < 0.324908241,
        "runtime": max(dt_t, dt_c, dt_k) < 1.0,
    }
    detail = (f"tau0={t:.13f} c0={c:.12f} s*={s_star:.12f} max={value:.14f} "
              + " ".join(f"{k}={'ok' if v else 'no'}" for k, v in checks.items()))
    assert report(1, all(checks.values()), detail), detail


def test_criterion_2_oracle_equivalence(report):
    rng = np.random.default_rng(2)
    primes = [q for q in range(11, 2004) if isprime(q)]
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        p = int(rng.choice(primes))
        k = int(rng.integers(1, 6))
        A = sample_genset(p, k, rng)
        n = int(rng.integers(0, 1001))
        worst = max(worst, float(np.max(np.abs(distribution_at(A, n).weights - naive(A, n)))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 30
    assert report(2, ok, f"max|diff|={worst:.2e} over 50 cases in {elapsed:.1f}s"), worst


def test_criterion_3_spectral_identity(report, ensemble):
    errs = {}
    for A, _, t_rel, ell in ensemble:
        e = abs(t_rel * 4 * math.pi ** 2 * ell ** 2 / (2 * A.k + 1) - 1)
        errs[A.k] = max(errs.get(A.k, 0.0), e)
    worst = max(errs.values())
    detail = "max error by k: " + ", ".join(f"k={k}:{v:.1e}" for k, v in sorted(errs.items()))
    assert report(3, worst <= 1e-3, detail), detail


def test_criterion_4_lower_bound(report, ensemble):
    worst_ratio = math.inf
    worst_rel = math.inf
    for A, prof, t_rel, _ in ensemble:
        k, p = A.k, A.p
        worst_ratio = min(worst_ratio, mixing_time(A, prof=prof) / t_rel)
        floor = 0.9 * (2 * k + 1) / (16 * math.pi * math.gamma(k / 2 + 1) ** (2 / k)) * p ** (2 / k)
        worst_rel = min(worst_rel, t_rel / floor)
    t0 = tau0()
    ok = worst_ratio >= t0 - 0.05 and worst_rel >= 1
    detail = f"min t_mix/t_rel={worst_ratio:.4f} (need >= {t0 - 0.05:.4f}); min t_rel/floor={worst_rel:.3f}"
    assert report(4, ok, detail), detail


def test_criterion_5_typical_mixing(report):
    cfg = ExperimentConfig(p=1_000_003, k=3, trials=200, seed=5, geometry=False)
    start = time.perf_counter()
    out = run_random(cfg)
    elapsed = time.perf_counter() - start
    median = out["summary"]["t_mix_quantiles"]["0.5"]
    target = target_tmix(cfg.p, 3)
    ok = abs(median / target - 1) <= 0.3 and elapsed < 1800
    detail = f"median t_mix={median} target={target:.1f} ratio={median / target:.3f} in {elapsed:.0f}s"
    assert report(5, ok, detail), detail


def test_criterion_6_short_vector_tail(report):
    p, k, rho, N = 499, 3, 2.0, 20_000
    rng = np.random.default_rng(6)
    cut = unit_ball_radius(k) / (rho * p ** (1 / k))
    hits = sum(shortest_dual(sample_lattice(p, k, rng))[1] <= cut for _ in range(N))
    prob = hits / N
    target = 1 / (2 * rho ** k)
    sigma = math.sqrt(target * (1 - target) / N)
    ok = abs(prob - target) <= 3 * sigma
    detail = f"empirical={prob:.4f} target={target:.4f} 3sigma={3 * sigma:.4f}"
    assert report(6, ok, detail), detail


def _admissible_prime_above(n: int) -> int:
    q = n + 1
    while True:
        if isprime(q):
            try:
                power2_set(q)
                return q
            except ValueError:
                pass
        q += 1


def test_criterion_7_power2_cutoff(report):
    rows = []
    for e in (10, 12, 14, 16):
        p = _admissible_prime_above(2 ** e)
        r = cutoff_check(p, eps=0.25)
        rows.append((p, r["ratio"], r["window_ratio"]))
    ratios_ok = all(0.5 <= r <= 1.5 for _, r, _ in rows)
    windows = [w for _, _, w in rows]
    window_ok = all(a >= b for a, b in zip(windows, windows[1:])) and windows[-1] <= 1.5
    detail = "; ".join(f"p={p} ratio={r:.3f} window={w:.3f}" for p, r, w in rows)
    assert report(7, ratios_ok and window_ok, detail), detail


def test_criterion_8_local_clt(report):
    vals = [clt_tv(1, n) for n in (16, 64, 256, 1024, 2500)]
    v2 = clt_tv(2, 256)
    ok = all(a > b for a, b in zip(vals, vals[1:])) and vals[-1] <= 0.02 and v2 <= 0.05
    detail = "k=1: " + ", ".join(f"{v:.6f}" for v in vals) + f"; k=2,n=256: {v2:.6f}"
    assert report(8, ok, detail), detail


def test_criterion_9_properties(report):
    rng = np.random.default_rng(9)
    failures = []
    primes = [q for q in range(11, 400) if isprime(q)]
    for _ in range(40):
        p = int(rng.choice(primes))
        A = sample_genset(p, int(rng.integers(1, min(5, (p - 1) // 2) + 1)), rng)
        prof = fourier_profile(A)
        lam = prof.second_modulus
        prev = 1.0
        for n in (1, 2, 5, 10, 30):
            w = distribution_at(A, n).weights
            if not math.isclose(math.fsum(w * w), math.fsum(prof.coeff ** (2 * n)) / p, rel_tol=1e-9):
                failures.append("parseval")
            tv = tv_at(prof, n)
            if tv > prev + 1e-14:
                failures.append("tv monotone")
            if tv > l2_to_uniform(prof, n) + 1e-12:
                failures.append("tv <= l2")
            if 0.5 * lam ** n > tv + 1e-12:
                failures.append("spectral lower bound")
            prev = tv
        c = int(rng.integers(2, p))
        B = A.dilate(c)
        if mixing_time(A, prof=prof) != mixing_time(B) or not np.allclose(
                np.sort(prof.coeff), np.sort(fourier_profile(B).coeff), atol=1e-13):
            failures.append("dilation")
        L_A = lattice_of(A)
        if lattice_of(genset_of(L_A)).a != L_A.a or len(genset_of(L_A).half) != A.k:
            failures.append("roundtrip")
        if shortest_dual(lattice_of(A))[1] > minkowski_bound(A.k, p) * (1 + 1e-12):
            failures.append("minkowski")
        Bset = np.concatenate([[1, p - 1], rng.choice(np.arange(2, p - 1), 4, replace=False)])
        Bset = np.unique(np.concatenate([Bset, p - Bset]))
        if chebyshev_diagnostic(prof, Bset, 3)["correlation_ratio"] < 1 - 1e-12:
            failures.append("correlation ratio")

    L = lattice_from_half(GenSet(101, (1, 10)))
    X = rng.random((50, 2)) * 20
    if np.max(np.abs(theta_lattice_frequency(L, 10.1, X) - theta_lattice_spatial(L, 10.1, X))) > 2e-12:
        failures.append("poisson")

    for half in [(1,), (3,), (1, 7), (2, 9), (5, 11)]:
        Lt = lattice_from_half(GenSet(31, half))
        rad, exact = covering_radius(Lt)
        ell = shortest_dual(Lt)[1]
        if len(half) == 1 and not math.isclose(rad * ell, 0.5, abs_tol=1e-12):
            failures.append("transference k=1")
        if len(half) == 2 and (not exact or rad * ell < 0.5 - 1e-9):
            failures.append("transference k=2")

    for p in [q for q in range(7, 1010) if isprime(q)][::10] + [1009]:
        keys = {(d.sign, d.indices) for d in (alt_binary_expansion(x, p, depth=(p - 1).bit_length() + 1)
                                            for x in range(1, p))}
        if len(keys) != p - 1:
            failures.append(f"expansion uniqueness p={p}")

    detail = "all properties hold" if not failures else "failed: " + ", ".join(sorted(set(failures)))
    assert report(9, not failures, detail), detail
