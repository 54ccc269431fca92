"""Exact analysis of the lazy symmetric random walk on Z/pZ.

A generating set A = {0, +-a_1, ..., +-a_k} drives the walk with the uniform
measure mu_A.  Everything here goes through the Fourier coefficients of mu_A,
which are real because A is symmetric:

    coeff[xi] = (1 + 2 sum_i cos(2 pi xi a_i / p)) / (2k + 1).

The n-step law is recovered from coeff**n with one real inverse transform of
prime length p (numpy's pocketfft handles prime lengths in O(p log p)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

FLUSH_THRESHOLD = 1e-18
DEFAULT_EPS = 1.0 / math.e


def is_prime(n: int) -> bool:
    from sympy import isprime

    return bool(isprime(int(n)))


@dataclass(frozen=True)
class GenSet:
    """Symmetric lazy generating set stored by its positive half."""

    p: int
    half: tuple[int, ...]

    def __post_init__(self):
        p = int(self.p)
        half = tuple(int(a) for a in self.half)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "half", half)
        if p < 3 or not is_prime(p):
            raise ValidationError(f"p={p} must be a prime >= 3")
        if not half:
            raise ValidationError("half must contain at least one generator (k >= 1)")
        for a in half:
            if not 1 <= a <= (p - 1) // 2:
                raise ValidationError(
                    f"generator {a} must lie in [1, (p-1)/2] = [1, {(p - 1) // 2}]"
                )
        if any(x >= y for x, y in zip(half, half[1:])):
            raise ValidationError(f"half must be strictly increasing, got {list(half)}")

    @classmethod
    def from_residues(cls, p: int, residues: Iterable[int]) -> "GenSet":
        """Build from arbitrary nonzero residues, folding each to min(a, p - a)."""
        folded = []
        for r in residues:
            r = int(r) % p
            if r == 0:
                raise ValidationError("0 is implicit in A and may not be listed in half")
            folded.append(min(r, p - r))
        if len(set(folded)) != len(folded):
            raise ValidationError(f"residues collide up to sign mod {p}: {sorted(folded)}")
        return cls(p, tuple(sorted(folded)))

    @classmethod
    def parse(cls, p: int, text: str) -> "GenSet":
        """Parse a comma separated half such as ``"1,10"``; no folding is applied."""
        try:
            half = [int(s) for s in text.replace(" ", "").split(",") if s]
        except ValueError as exc:
            raise ValidationError(f"cannot parse half={text!r}: {exc}") from None
        if any(a == 0 for a in half):
            raise ValidationError("0 must not appear in half (it is the implicit lazy step)")
        return cls(p, tuple(half))

    @property
    def k(self) -> int:
        return len(self.half)

    @property
    def size(self) -> int:
        return 2 * self.k + 1

    def elements(self) -> list[int]:
        """All 2k+1 residues of A in [0, p)."""
        out = [0]
        for a in self.half:
            out += [a, self.p - a]
        return sorted(out)

    def dilate(self, c: int) -> "GenSet":
        return GenSet.from_residues(self.p, [c * a for a in self.half])


@dataclass(frozen=True)
class CyclicMeasure:
    p: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.p,):
            raise ValidationError(f"weights must have length p={self.p}")
        if w.min(initial=0.0) < -1e-15:
            raise ValidationError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-10:
            raise ValidationError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))

    @classmethod
    def uniform(cls, p: int) -> "CyclicMeasure":
        return cls(p, np.full(p, 1.0 / p))

    @classmethod
    def point_mass(cls, p: int, x: int = 0) -> "CyclicMeasure":
        w = np.zeros(p)
        w[x % p] = 1.0
        return cls(p, w)


@dataclass(frozen=True)
class SpectralProfile:
    p: int
    coeff: np.ndarray
    k: int

    def nonzero(self) -> np.ndarray:
        return self.coeff[1:]

    @cached_property
    def log_abs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.coeff))

    @cached_property
    def second_modulus(self) -> float:
        return float(np.max(np.abs(self.coeff[1:]), initial=0.0))


@dataclass
class MixingReport:
    gap: float
    t_rel: float
    t_mix: dict[float, int]
    tv_profile: list[tuple[int, float]]
    predicted: dict[str, float] | None = None
    extra: dict = field(default_factory=dict)


def fourier_profile(A: GenSet) -> SpectralProfile:
    p = A.p
    xi = np.arange(p, dtype=np.int64)
    acc = np.ones(p)
    for a in A.half:
        # exact integer reduction keeps the cosine argument in [0, 2pi)
        acc += 2.0 * np.cos(2.0 * np.pi * ((xi * a) % p) / p)
    coeff = acc / A.size
    if A.size == p:
        # A is all of Z/pZ: every nontrivial character sums to exactly 0
        coeff[:] = 0.0
    coeff[0] = 1.0
    return SpectralProfile(p, coeff, A.k)


def _profile(A_or_prof) -> SpectralProfile:
    return A_or_prof if isinstance(A_or_prof, SpectralProfile) else fourier_profile(A_or_prof)


def powered_coeff(prof: SpectralProfile, n: int) -> np.ndarray:
    """coeff**n via exp(n log|c|) with the sign tracked separately."""
    c = prof.coeff
    if n == 0:
        return np.ones_like(c)
    with np.errstate(under="ignore"):
        out = np.exp(n * prof.log_abs)
    if n % 2:
        out *= np.sign(c)
    out[0] = 1.0
    return out


def distribution_at(A, n: int) -> CyclicMeasure:
    """The law of the walk after n steps started at 0."""
    if n < 0:
        raise ValidationError("n must be >= 0")
    prof = _profile(A)
    p = prof.p
    if n == 0:
        return CyclicMeasure.point_mass(p)
    pw = powered_coeff(prof, n)
    if np.max(np.abs(pw[1:]), initial=0.0) < FLUSH_THRESHOLD:
        return CyclicMeasure.uniform(p)
    # coeff is even in xi, so the half spectrum determines the real inverse transform
    w = np.fft.irfft(pw[: (p + 1) // 2], n=p)
    # round-off leaves entries a hair below zero where the true mass is ~0
    return CyclicMeasure(p, np.clip(w, 0.0, None))


def tv_to_uniform(m: CyclicMeasure) -> float:
    return 0.5 * float(np.abs(m.weights - 1.0 / m.p).sum())


def tv_at(A, n: int) -> float:
    return tv_to_uniform(distribution_at(A, n))


def l2_to_uniform(prof: SpectralProfile, n: int) -> float:
    """Half the L^2(U) distance; an upper bound for TV by Cauchy-Schwarz."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    pw = powered_coeff(prof, 2 * n)
    return 0.5 * math.sqrt(float(pw[1:].sum()))


def spectral_gap(prof: SpectralProfile) -> float:
    gap = 1.0 - float(np.max(np.abs(prof.coeff[1:]), initial=0.0))
    if gap <= 0.0:
        raise ValidationError("spectral gap is 0: the set does not generate Z/pZ")
    return gap


def relaxation_time(gap: float) -> float:
    if gap <= 0.0:
        raise ValidationError("relaxation time is infinite for gap = 0")
    if gap >= 1.0:
        return 0.0
    return 1.0 / -math.log1p(-gap)


def _l2_mixing_time(prof: SpectralProfile, eps: float) -> int:
    """Least n with l2_to_uniform <= eps; cheap O(p) per evaluation."""
    lo, hi = 0, 1
    while l2_to_uniform(prof, hi) > eps:
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if l2_to_uniform(prof, mid) > eps:
            lo = mid
        else:
            hi = mid
    return hi


def mixing_time(A, eps: float = DEFAULT_EPS, prof: SpectralProfile | None = None) -> int:
    """Least n with TV(mu_A^{*n}, U) <= eps.

    TV is non-increasing in n, so any bracket lo < hi with TV(lo) > eps >=
    TV(hi) can be shrunk to the exact answer.  The initial bracket comes from
    two O(p) spectral bounds, max|coeff|^n / 2 <= TV(n) <= l2_to_uniform(n).
    Inside the bracket probes follow the secant through the two latest
    evaluations, with bisection after two steps that fail to halve it.
    """
    if not 0.0 < eps < 1.0:
        raise ValidationError("eps must lie in (0, 1)")
    prof = prof if prof is not None else _profile(A)
    p = prof.p
    if eps >= 1.0 - 1.0 / p:
        return 0
    hi = _l2_mixing_time(prof, eps)
    lam = prof.second_modulus
    lo = 0
    if 0.0 < lam < 1.0 and 2 * eps < 1.0:
        # lam^n / 2 > eps for every n below log(2 eps) / log(lam)
        lo = max(0, math.ceil(math.log(2 * eps) / math.log(lam)) - 1)
        lo = min(lo, hi - 1)
    tv_lo = tv_at(prof, lo) if lo > 0 else 1.0 - 1.0 / p
    while tv_lo <= eps:
        hi, lo = lo, lo // 2
        tv_lo = tv_at(prof, lo) if lo > 0 else 1.0 - 1.0 / p
    if hi - lo == 1:
        return hi
    tv_hi = tv_at(prof, hi)
    prev, last = (lo, tv_lo), (hi, tv_hi)
    stalls = 0
    while hi - lo > 1:
        (x1, f1), (x2, f2) = prev, last
        if f1 != f2 and stalls < 2:
            guess = x2 + (eps - f2) * (x2 - x1) / (f2 - f1)
            # aim just past the crossing on the side that closes the bracket
            mid = math.ceil(guess) if f2 > eps else math.floor(guess) + 1
        else:
            mid = (lo + hi) // 2
        mid = min(max(mid, lo + 1), hi - 1)
        width = hi - lo
        tv_mid = tv_at(prof, mid)
        if tv_mid > eps:
            lo, tv_lo = mid, tv_mid
        else:
            hi, tv_hi = mid, tv_mid
        prev, last = last, (mid, tv_mid)
        stalls = 0 if hi - lo <= width // 2 else stalls + 1
    return hi


def tv_profile(A, ns: Sequence[int]) -> list[tuple[int, float]]:
    prof = _profile(A)
    return [(int(n), tv_at(prof, int(n))) for n in ns]


def window_report(A, eps: float) -> dict:
    """Transition window between TV = 1 - eps and TV = eps."""
    if not 0.0 < eps < DEFAULT_EPS:
        raise ValidationError("eps must lie in (0, 1/e)")
    prof = _profile(A)
    t_low = mixing_time(prof, 1.0 - eps, prof)
    t_high = mixing_time(prof, eps, prof)
    t_mix = mixing_time(prof, DEFAULT_EPS, prof)
    width = t_high - t_low
    return {
        "t_low": t_low,
        "t_high": t_high,
        "t_mix": t_mix,
        "width": width,
        "width_over_tmix": width / t_mix if t_mix else 0.0,
        "normalized_width": width * prof.k / t_mix if t_mix else 0.0,
    }


def chebyshev_diagnostic(prof: SpectralProfile, B: Iterable[int], n: int) -> dict:
    """Second-moment cut-off diagnostic on a symmetric frequency set B.

    normalized_mean is |B|^{-1/2} sum_B coeff^n; correlation_ratio is
    sum_{B x B} coeff[xi1 - xi2]^n over (sum_B coeff^n)^2, which is >= 1.
    """
    p = prof.p
    B = np.unique(np.asarray(list(B), dtype=np.int64) % p)
    if B.size == 0:
        raise ValidationError("B must be nonempty")
    if 0 in B:
        raise ValidationError("0 must not belong to B")
    if not np.array_equal(np.sort((-B) % p), B):
        raise ValidationError("B must be symmetric under xi -> -xi")
    pw = powered_coeff(prof, n)
    s = float(pw[B].sum())
    diffs = (B[:, None] - B[None, :]) % p
    num = math.fsum(pw[diffs].ravel())
    return {
        "size": int(B.size),
        "normalized_mean": s / math.sqrt(B.size),
        "correlation_ratio": num / (s * s) if s != 0 else math.inf,
    }


def mixing_report(A: GenSet, eps_list: Sequence[float] = (DEFAULT_EPS,),
                  profile_ns: Sequence[int] | None = None) -> MixingReport:
    prof = fourier_profile(A)
    gap = spectral_gap(prof)
    t_rel = relaxation_time(gap)
    tmix = {float(e): mixing_time(prof, e, prof) for e in eps_list}
    ordered = sorted(tmix)
    for e1, e2 in zip(ordered, ordered[1:]):
        assert tmix[e1] >= tmix[e2]
    if profile_ns is None:
        top = max(tmix.values(), default=1) * 2 + 1
        profile_ns = sorted(set(np.unique(np.geomspace(1, top, 24).astype(int)).tolist()))
    return MixingReport(gap=gap, t_rel=t_rel, t_mix=tmix, tv_profile=tv_profile(prof, profile_ns))
