"""The walk driven by {0, +-1, +-2, ..., +-2^(l-1)} on Z/pZ, l = ceil(log2 p).

Its mixing time is l ln l / (2 c0) with c0 = sum_{j>=1} (1 - cos(2 pi / 2^j)).
This module builds the set, evaluates the constant and the predicted
cut-off location, and measures how a concrete p compares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cyclic_walk import (
    GenSet,
    SpectralProfile,
    chebyshev_diagnostic,
    fourier_profile,
    is_prime,
    mixing_time,
    tv_at,
)
from .errors import ValidationError


def ell_of(p: int) -> int:
    """ceil(log2 p), computed exactly on integers."""
    if p < 2:
        raise ValidationError("p must be >= 2")
    return (p - 1).bit_length()


def power2_set(p: int) -> GenSet:
    if p < 5 or not is_prime(p):
        raise ValidationError(f"p = {p} must be a prime >= 5")
    ell = ell_of(p)
    seen: dict[int, int] = {}
    for i in range(ell):
        v = pow(2, i, p)
        v = min(v, p - v)
        if v in seen:
            raise ValidationError(
                f"2^{seen[v]} and 2^{i} coincide up to sign mod {p}; the set would have fewer than {2 * ell + 1} elements")
        seen[v] = i
    return GenSet(p, tuple(sorted(seen)))


def c0(tol: float = 1e-14) -> float:
    """sum_{j>=1} (1 - cos(2 pi / 2^j)), stopped once the tail bound drops below tol.

    1 - cos x <= x^2/2, so the tail after J terms is at most 2 pi^2 4^{-J} / 3.
    """
    if tol < 1e-14:
        raise ValidationError("tol must be >= 1e-14")
    terms = []
    J = 0
    while True:
        J += 1
        terms.append(1.0 - math.cos(2 * math.pi / 2 ** J))
        if 2 * math.pi ** 2 * 4.0 ** (-J) / 3 < tol / 10:
            break
    return math.fsum(terms)


def c0_partial_sums(J: int) -> list[float]:
    out, acc = [], []
    for j in range(1, J + 1):
        acc.append(1.0 - math.cos(2 * math.pi / 2 ** j))
        out.append(math.fsum(acc))
    return out


C0 = c0()


def predicted_tmix(p: int) -> float:
    ell = ell_of(p)
    return ell * math.log(ell) / (2 * C0)


def diagnostic_J(p: int) -> int:
    """Clump/window parameter J = ceil(2 ln ln l), at least 1."""
    ell = ell_of(p)
    return max(1, math.ceil(2 * math.log(math.log(ell))))


def _circle_dist(x: np.ndarray) -> np.ndarray:
    return np.abs(x - np.round(x))


def bp_set(p: int, J: int | None = None) -> np.ndarray:
    """Frequencies xi with ||xi/p - 2^-j1 + 2^-j2|| <= 2^(-l-J) for some j1 != j2 in [1, l].

    Returned sorted; the set is symmetric and never contains 0.
    """
    ell = ell_of(p)
    J = diagnostic_J(p) if J is None else J
    if not 1 <= J <= ell:
        raise ValidationError(f"J must lie in [1, {ell}]")
    found = set()
    window = 2.0 ** (-ell - J)
    for j1 in range(1, ell + 1):
        for j2 in range(1, ell + 1):
            if j1 == j2:
                continue
            target = 2.0 ** (-j1) - 2.0 ** (-j2)
            centre = math.floor(target * p)
            for xi in (centre - 1, centre, centre + 1, centre + 2):
                if abs(xi / p - target - round(xi / p - target)) <= window:
                    r = xi % p
                    if r:
                        found.add(r)
    return np.array(sorted(found), dtype=np.int64)


@dataclass(frozen=True)
class ClumpDecomposition:
    xi: int
    p: int
    sign: int
    indices: tuple[int, ...]
    J: int
    ell: int
    clumps: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def sigma(self) -> int:
        return sum(1 for i in self.indices if i <= self.ell)

    def value(self) -> float:
        """sign * sum_j (-1)^j 2^{-i_j} reduced to [0, 1)."""
        s = math.fsum((-1) ** (j + 1) * 2.0 ** (-i) for j, i in enumerate(self.indices))
        return (self.sign * s) % 1.0


def _clumps(indices, J: int) -> tuple[tuple[int, ...], ...]:
    out: list[list[int]] = []
    for i in indices:
        if out and i - out[-1][-1] <= J:
            out[-1].append(i)
        else:
            out.append([i])
    return tuple(tuple(c) for c in out)


def alt_binary_expansion(xi: int, p: int, depth: int | None = None, J: int | None = None) -> ClumpDecomposition:
    """Alternating-sign binary expansion xi/p = eps * sum_j (-1)^j 2^{-i_j} (mod 1).

    With -xi/p = 0.s1 s2 s3 ... in binary, xi/p = -xi/p - (-2 xi/p) gives
    digits d_i = s_i - s_{i+1} in {-1, 0, 1}; the nonzero ones alternate in
    sign, and eps = -d_{i_1}.
    """
    ell = ell_of(p)
    depth = ell if depth is None else depth
    if depth < ell:
        raise ValidationError(f"depth must be >= l = {ell}")
    if xi % p == 0:
        raise ValidationError("xi must be nonzero mod p")
    J = diagnostic_J(p) if J is None else J
    r = (-xi) % p
    bits = []
    for _ in range(depth + 1):
        r *= 2
        bits.append(1 if r >= p else 0)
        r %= p
    digits = [bits[i] - bits[i + 1] for i in range(depth)]
    indices = tuple(i + 1 for i, d in enumerate(digits) if d)
    sign = -digits[indices[0] - 1] if indices else 1
    clumps = _clumps([i for i in indices if i <= ell], J)
    return ClumpDecomposition(xi % p, p, sign, indices, J, ell, clumps)


def savings(prof: SpectralProfile, xi: int) -> float:
    if xi % prof.p == 0:
        raise ValidationError("xi must be nonzero mod p")
    return (2 * prof.k + 1) / 2 * (1.0 - float(prof.coeff[xi % prof.p]))


def savings_direct(p: int, xi: int) -> float:
    """sum_{l=0}^{L-1} (1 - cos(2 pi 2^l xi / p)), exact reduction mod p."""
    ell = ell_of(p)
    return math.fsum(1.0 - math.cos(2 * math.pi * (pow(2, i, p) * xi % p) / p) for i in range(ell))


def upper_bound_value(beta: float, ell: int) -> float:
    """e^{-beta} + e^{-beta/c0} ln l / l^{1/c0}."""
    return math.exp(-beta) + math.exp(-beta / C0) * math.log(ell) / ell ** (1 / C0)


def cutoff_check(p: int, eps: float = 0.25, J: int | None = None) -> dict:
    """Measured cut-off data for the power-of-2 walk at prime p."""
    if not 0 < eps < 0.5:
        raise ValidationError("eps must lie in (0, 1/2)")
    A = power2_set(p)
    prof = fourier_profile(A)
    ell = A.k
    pred = predicted_tmix(p)
    t_lo = mixing_time(A, 1 - eps, prof)
    t_hi = mixing_time(A, eps, prof)
    t_1e = mixing_time(A, 1 / math.e, prof)
    J = diagnostic_J(p) if J is None else J
    B = bp_set(p, J)
    n_diag = max(1, math.floor((1 - eps) * pred))
    diag = chebyshev_diagnostic(prof, B, n_diag) if B.size else {
        "size": 0, "normalized_mean": 0.0, "correlation_ratio": math.nan}
    beta = 2 * C0 * t_1e / ell - math.log(ell)
    return {
        "p": p,
        "ell": ell,
        "eps": eps,
        "predicted_tmix": pred,
        "t_mix": t_1e,
        "t_mix_eps": t_hi,
        "t_mix_one_minus_eps": t_lo,
        "ratio": t_1e / pred,
        "window_ratio": t_hi / t_lo,
        "J": J,
        "diagnostic_n": n_diag,
        "bp_size": diag["size"],
        "normalized_mean": diag["normalized_mean"],
        "correlation_ratio": diag["correlation_ratio"],
        "beta": beta,
        "upper_bound_value": upper_bound_value(beta, ell) if beta > 0 else math.nan,
    }


def upper_bound_table(p: int, betas=(1.0, 2.0, 4.0)) -> list[dict]:
    """TV^2 at n = ceil((l / 2c0)(ln l + beta)) against the bound shape, with their ratio."""
    A = power2_set(p)
    prof = fourier_profile(A)
    ell = A.k
    rows = []
    for beta in betas:
        n = math.ceil(ell / (2 * C0) * (math.log(ell) + beta))
        tv = tv_at(prof, n)
        bound = upper_bound_value(beta, ell)
        rows.append({"beta": beta, "n": n, "tv_sq": tv * tv, "bound": bound, "ratio": tv * tv / bound})
    return rows


def floor_slack(p: int, J: int | None = None) -> float:
    """Least K with coeff[xi] >= 1 - 4 c0/(2l+1) - K/(2^J l) for every xi in B_p."""
    J = diagnostic_J(p) if J is None else J
    A = power2_set(p)
    prof = fourier_profile(A)
    ell = A.k
    B = bp_set(p, J)
    if not B.size:
        return 0.0
    deficit = 1 - 4 * C0 / (2 * ell + 1) - prof.coeff[B]
    return max(0.0, float(deficit.max()) * 2 ** J * ell)
