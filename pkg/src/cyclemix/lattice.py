"""Index-p lattices attached to generating sets, and their dual geometry.

For A = {0, +-a_1, ..., +-a_k} the walk on Z/pZ is the quotient of the
nearest-neighbour walk on Z^k by

    Lambda(a) = {n in Z^k : sum n_i a_i = 0 mod p},

whose dual is Z^k + Z a/p.  Dual vectors with coset multiplier c correspond
to the frequency xi = c of the cyclic walk, which is why short dual vectors
control the spectral gap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cyclic_walk import GenSet, is_prime
from .errors import CapacityError, ValidationError

MAX_ENUM_POINTS = 20_000_000


@dataclass(frozen=True)
class IndexPLattice:
    """Lambda = {n : n . a = 0 mod p}, with a scaled so its first nonzero entry is 1.

    Lattices arising from generating sets have every a_i nonzero (the set
    L^0); a zero coordinate is allowed so that uniform samples from all of
    L(p, k) can be represented too.
    """

    p: int
    a: tuple[int, ...]

    def __post_init__(self):
        p = int(self.p)
        a = tuple(int(x) % p for x in self.a)
        if not a or all(x == 0 for x in a):
            raise ValidationError("dual generator a must be a nonzero vector mod p")
        lead = next(x for x in a if x)
        if lead != 1:
            inv = pow(lead, -1, p)
            a = tuple(x * inv % p for x in a)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "a", a)

    @property
    def k(self) -> int:
        return len(self.a)

    @property
    def pivot(self) -> int:
        """Index of the first coordinate with a_i = 1."""
        return next(i for i, x in enumerate(self.a) if x)

    @property
    def in_L0(self) -> bool:
        a, p = self.a, self.p
        if any(x == 0 for x in a):
            return False
        folded = [min(x, p - x) for x in a]
        return len(set(folded)) == len(folded)

    def contains(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        return (n @ np.asarray(self.a, dtype=np.int64)) % self.p == 0

    def basis(self) -> np.ndarray:
        """Rows form a basis of Lambda: p e_j and e_i - a_i e_j (j the pivot)."""
        k, j, p = self.k, self.pivot, self.p
        B = np.zeros((k, k), dtype=np.int64)
        B[0, j] = p
        r = 1
        for i in range(k):
            if i == j:
                continue
            B[r, i] = 1
            B[r, j] = -self.a[i]
            r += 1
        return B

    def reduced_basis(self) -> np.ndarray:
        return lll_reduce(self.basis())

    def dual_basis(self) -> np.ndarray:
        """Rows form a basis of the dual lattice (inverse transpose)."""
        return np.linalg.inv(self.reduced_basis().astype(float)).T


@dataclass
class LatticeGeometry:
    shortest_dual: np.ndarray
    ell: float
    diam_geom: float
    covering_radius: float
    covering_exact: bool
    minkowski_rhs: float


# --- orbit canonicalisation and the A <-> Lambda correspondence -------------

def canonical_vector(p: int, a: Sequence[int]) -> tuple[int, ...]:
    """Canonical representative of the F_p^x x O_k(Z) orbit of a.

    For every dilation c the coordinates are folded to min(r, p - r) and
    sorted; the lexicographically least result wins.  It always starts with 1.
    """
    a = np.asarray([int(x) % p for x in a], dtype=np.int64)
    if np.any(a == 0):
        raise ValidationError("canonical_vector needs every coordinate nonzero mod p")
    c = np.arange(1, p, dtype=np.int64)[:, None]
    r = (c * a[None, :]) % p
    r = np.minimum(r, p - r)
    r.sort(axis=1)
    order = np.lexsort(r.T[::-1])
    return tuple(int(x) for x in r[order[0]])


def lattice_of(A: GenSet) -> IndexPLattice:
    return IndexPLattice(A.p, canonical_vector(A.p, A.half))


def lattice_from_half(A: GenSet) -> IndexPLattice:
    """Lambda(A) without canonicalisation: a = half scaled by a_1^{-1}."""
    return IndexPLattice(A.p, A.half)


def genset_of(L: IndexPLattice) -> GenSet:
    p = L.p
    if any(x == 0 for x in L.a):
        raise ValidationError("lattice contains a unit vector; it is not in L^0")
    folded = sorted(min(x, p - x) for x in L.a)
    if len(set(folded)) != len(folded):
        raise ValidationError(
            f"coordinates of a={L.a} coincide up to sign mod {p}; lattice is not in L^0"
        )
    return GenSet(p, tuple(folded))


def same_orbit(A: GenSet, B: GenSet) -> bool:
    return A.p == B.p and canonical_vector(A.p, A.half) == canonical_vector(B.p, B.half)


# --- basis reduction and enumeration ----------------------------------------

def lll_reduce(B, delta: float = 0.99) -> np.ndarray:
    """LLL reduction of the rows of an integer basis (small k only)."""
    B = [list(map(int, row)) for row in np.asarray(B)]
    n = len(B)

    def gso(B):
        Bs = [np.array(b, dtype=float) for b in B]
        mu = np.zeros((n, n))
        for i in range(n):
            v = np.array(B[i], dtype=float)
            for j in range(i):
                mu[i, j] = np.dot(B[i], Bs[j]) / np.dot(Bs[j], Bs[j])
                v = v - mu[i, j] * Bs[j]
            Bs[i] = v
        return Bs, mu

    Bs, mu = gso(B)
    kk = 1
    while kk < n:
        for j in range(kk - 1, -1, -1):
            q = round(mu[kk, j])
            if q:
                B[kk] = [x - q * y for x, y in zip(B[kk], B[j])]
                Bs, mu = gso(B)
        if np.dot(Bs[kk], Bs[kk]) >= (delta - mu[kk, kk - 1] ** 2) * np.dot(Bs[kk - 1], Bs[kk - 1]):
            kk += 1
        else:
            B[kk], B[kk - 1] = B[kk - 1], B[kk]
            Bs, mu = gso(B)
            kk = max(kk - 1, 1)
    return np.array(B, dtype=np.int64)


def points_in_ball(basis, center, R: float, strict_zero: bool = False) -> np.ndarray:
    """All lattice vectors v (rows of the result) with ||v - center|| <= R.

    The coefficient of v on basis vector i is <v, d_i> with d_i the dual
    basis, so it lies within R ||d_i|| of the centre's coefficient.  This box
    is scanned exhaustively, which is fine for well reduced bases in small k.
    """
    B = np.asarray(basis, dtype=float)
    center = np.asarray(center, dtype=float)
    k = B.shape[0]
    D = np.linalg.inv(B)  # columns are the dual basis vectors
    t = center @ D
    half = R * np.linalg.norm(D, axis=0)
    lo = np.ceil(t - half - 1e-9).astype(np.int64)
    hi = np.floor(t + half + 1e-9).astype(np.int64)
    sizes = hi - lo + 1
    if np.any(sizes <= 0):
        return np.zeros((0, k))
    total = int(np.prod(sizes.astype(float)))
    if total > MAX_ENUM_POINTS:
        raise CapacityError(f"enumeration box of {total} points exceeds the cap")
    grids = np.meshgrid(*[np.arange(l, h + 1) for l, h in zip(lo, hi)], indexing="ij")
    C = np.stack([g.ravel() for g in grids], axis=1)
    V = C @ B
    keep = np.einsum("ij,ij->i", V - center, V - center) <= R * R * (1 + 1e-12)
    V = V[keep]
    if strict_zero:
        V = V[np.any(np.abs(V) > 1e-12, axis=1)]
    return V


def integer_points_in_ball(center, R: float) -> np.ndarray:
    center = np.asarray(center, dtype=float)
    return points_in_ball(np.eye(center.size), center, R)


# --- dual geometry -----------------------------------------------------------

def _centered(r: np.ndarray, p: int) -> np.ndarray:
    """Residues mod p mapped into (-p/2, p/2]."""
    r = r % p
    return np.where(r > p // 2, r - p, r)


def _multiplier_table(L: IndexPLattice) -> tuple[np.ndarray, np.ndarray]:
    """p * (reduced c a / p) for c = 1..p-1, with exact integer squared norms."""
    p = L.p
    a = np.asarray(L.a, dtype=np.int64)
    c = np.arange(1, p, dtype=np.int64)
    num = _centered(c[:, None] * a[None, :], p)
    return num, np.einsum("ij,ij->i", num, num)


def dual_short_vectors(L: IndexPLattice, R: float) -> list[tuple[np.ndarray, float, bool, int]]:
    """All dual vectors with 0 < ||v|| <= R as (v, norm, primitive, multiplier).

    Each coset c a/p + Z^k is entered through its coordinatewise reduced
    representative, which is the shortest element of the coset, so only
    cosets whose representative already lies within R need integer shifts.
    The multiplier is c mod p (0 for pure integer vectors); primitivity
    refers to the integer vector p v.
    """
    if R <= 0:
        raise ValidationError("R must be positive")
    p, k = L.p, L.k
    num, n2 = _multiplier_table(L)
    cand = np.nonzero(n2 <= (R * p) ** 2 * (1 + 1e-12))[0]
    out = []
    m = math.ceil(R + 1)
    shifts = np.array(list(itertools.product(range(-m, m + 1), repeat=k)), dtype=np.int64)
    for idx in cand:
        base = num[idx]
        c = int(idx) + 1
        if R < 0.5:
            vecs = base[None, :]
        else:
            vecs = base[None, :] + p * shifts
        norms2 = np.einsum("ij,ij->i", vecs, vecs)
        for w, w2 in zip(vecs[norms2 <= (R * p) ** 2 * (1 + 1e-12)], norms2[norms2 <= (R * p) ** 2 * (1 + 1e-12)]):
            g = math.gcd(*map(int, w))
            out.append((w / p, math.sqrt(w2) / p, g == 1, c))
    if R >= 1.0:
        for w in integer_points_in_ball(np.zeros(k), R).astype(np.int64):
            if not np.any(w):
                continue
            g = math.gcd(*map(int, p * w))
            out.append((w.astype(float), float(np.linalg.norm(w)), g == 1, 0))
    out.sort(key=lambda t: (t[1], tuple(t[0])))
    return out


def shortest_dual(L: IndexPLattice) -> tuple[np.ndarray, float]:
    """Shortest nonzero dual vector with a lexicographic tie-break.

    Among minimal vectors (compared exactly through p^2 ||v||^2) the one with
    first nonzero coordinate positive and lexicographically least is chosen.
    """
    p, k = L.p, L.k
    num, n2 = _multiplier_table(L)
    # integer vectors p e_i (norm 1) only compete when every coset is long
    best = min(int(n2.min()), p * p)
    cands = list(num[n2 == best])
    if best == p * p:
        cands += list(p * np.eye(k, dtype=np.int64))
    canon = []
    for w in cands:
        w = np.asarray(w, dtype=np.int64)
        first = w[np.nonzero(w)[0][0]]
        canon.append(tuple(int(x) for x in (w if first > 0 else -w)))
    v = min(canon)
    return np.array(v, dtype=float) / p, math.sqrt(best) / p


def minkowski_bound(k: int, p: int) -> float:
    """Minkowski's bound for the shortest vector of a covolume 1/p lattice."""
    return 2.0 / math.sqrt(math.pi) * math.exp((math.lgamma(k / 2 + 1) - math.log(p)) / k)


def unit_ball_radius(k: int) -> float:
    """R_k, the radius of the unit-volume ball in R^k."""
    return math.exp((math.lgamma(k / 2 + 1) - (k / 2) * math.log(math.pi)) / k)


def ball_volume(k: int, R: float) -> float:
    return math.exp((k / 2) * math.log(math.pi) - math.lgamma(k / 2 + 1)) * R ** k


def geometric_diameter(A: GenSet) -> float:
    """max over x in Z/pZ of the least ||n||_2 with n . a = x mod p."""
    p, k = A.p, A.k
    a = np.asarray(A.half, dtype=np.int64)
    base = (p * math.gamma(k / 2 + 1) / math.pi ** (k / 2)) ** (1.0 / k)
    m = 0
    while True:
        R = 2 ** (m / 2) * base
        pts = integer_points_in_ball(np.zeros(k), R).astype(np.int64)
        res = (pts @ a) % p
        n2 = np.einsum("ij,ij->i", pts, pts)
        best = np.full(p, np.iinfo(np.int64).max, dtype=np.int64)
        np.minimum.at(best, res, n2)
        if best.max() < np.iinfo(np.int64).max:
            return math.sqrt(float(best.max()))
        m += 1


def _voronoi_vertices_2d(B: np.ndarray) -> np.ndarray:
    rel = []
    for c in itertools.product(range(-2, 3), repeat=2):
        if c != (0, 0):
            rel.append(np.asarray(c, dtype=float) @ B)
    rel = np.array(rel)
    verts = []
    for u, v in itertools.combinations(rel, 2):
        M = np.array([u, v])
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, 0.5 * np.array([u @ u, v @ v]))
        if np.all(rel @ x <= 0.5 * np.einsum("ij,ij->i", rel, rel) + 1e-7 * (1 + x @ x)):
            verts.append(x)
    return np.array(verts)


def covering_radius(L: IndexPLattice, n_samples: int = 100_000, seed: int = 0,
                    exact: bool | None = None) -> tuple[float, bool]:
    """Covering radius of Lambda as (value, is_exact).

    Exact for k = 1 (p / 2) and k = 2 (largest Voronoi vertex).  For k >= 3
    the maximum distance to Lambda over uniform samples is returned; it is a
    lower bound only.
    """
    k = L.k
    if exact is None:
        exact = k <= 2
    if exact and k > 2:
        raise ValidationError("exact covering radius is only available for k <= 2")
    if exact and k == 1:
        return L.p / 2.0, True
    B = L.reduced_basis().astype(float)
    if exact:
        V = _voronoi_vertices_2d(B)
        return float(np.sqrt(np.einsum("ij,ij->i", V, V)).max()), True
    rng = np.random.default_rng(seed)
    best = 0.0
    for start in range(0, n_samples, 20_000):
        m = min(20_000, n_samples - start)
        X = rng.random((m, k)) @ B
        best = max(best, float(distance_to_lattice(B, X).max()))
    return best, False


def distance_to_lattice(basis, X) -> np.ndarray:
    """Exact Euclidean distance from each row of X to the lattice."""
    B = np.asarray(basis, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    k = B.shape[0]
    # Gram-Schmidt bound: nearest-plane rounding is within this of some point
    Q, Rm = np.linalg.qr(B.T)
    r_up = 0.5 * math.sqrt(float(np.sum(np.diag(Rm) ** 2)))
    D = np.linalg.inv(B)
    half = np.ceil(r_up * np.linalg.norm(D, axis=0) + 1e-9).astype(int)
    offs = np.array(list(itertools.product(*[range(-h, h + 1) for h in half])), dtype=float)
    T = X @ D
    base = np.rint(T)
    out = np.empty(len(X))
    for start in range(0, len(X), 2048):
        sl = slice(start, start + 2048)
        C = base[sl, None, :] + offs[None, :, :]
        P = C @ B
        d2 = np.einsum("ijk,ijk->ij", P - X[sl, None, :], P - X[sl, None, :])
        out[sl] = np.sqrt(d2.min(axis=1))
    return out


def ball_point_count(x, R: float) -> int:
    if R < 0:
        raise ValidationError("R must be >= 0")
    return int(len(integer_points_in_ball(x, R)))


def geometry(A: GenSet, n_samples: int = 100_000, seed: int = 0) -> LatticeGeometry:
    L = lattice_from_half(A)
    v, ell = shortest_dual(L)
    cov, exact = covering_radius(L, n_samples=n_samples, seed=seed)
    return LatticeGeometry(v, ell, geometric_diameter(A), cov, exact, minkowski_bound(A.k, A.p))


# --- Kabatiansky-Levenshtein rate ---------------------------------------------

def kl_rate(s):
    """Exponent F(s) bounding log #{lattice points in the ball of radius s ||lambda*||} / k."""
    s_arr = np.asarray(s)
    if np.any(np.real(s_arr) < 1):
        raise ValidationError("kl_rate needs s >= 1")
    theta = 2 * np.arcsin(1 / (2 * s_arr))
    u = np.sin(theta)
    a = (1 + u) / (2 * u)
    b = (1 - u) / (2 * u)
    return a * np.log(a) - b * np.log(b)


def _kl_ratio(s):
    return kl_rate(s) / s ** 2


def kl_max(tol: float = 1e-10) -> tuple[float, float]:
    """Location and value of the maximum of F(s)/s^2 over s >= 1.

    Golden-section search brackets the maximiser; the stationary point is then
    polished by solving d/ds (F/s^2) = 0, with the derivative taken by the
    complex step so no cancellation limits the location accuracy.
    """
    from scipy.optimize import brentq

    g = (math.sqrt(5) - 1) / 2
    lo, hi = 1.0, 4.0
    x1, x2 = hi - g * (hi - lo), lo + g * (hi - lo)
    f1, f2 = _kl_ratio(x1), _kl_ratio(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + g * (hi - lo)
            f2 = _kl_ratio(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - g * (hi - lo)
            f1 = _kl_ratio(x1)
    h = 1e-30

    def deriv(s):
        return float(np.imag(_kl_ratio(complex(s, h))) / h)

    a, b = max(1.0, lo - 1e-6), hi + 1e-6
    s_star = brentq(deriv, a, b, xtol=1e-15) if deriv(a) * deriv(b) < 0 else 0.5 * (lo + hi)
    return s_star, float(_kl_ratio(s_star))


# --- samplers -----------------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _check_pk(p: int, k: int) -> None:
    if k < 1 or 2 * k + 1 > p:
        raise ValidationError(f"need 1 <= k and 2k+1 <= p (got p={p}, k={k})")
    if not is_prime(p):
        raise ValidationError(f"p={p} is not prime")


def _draw_distinct(p: int, k: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        a = rng.integers(1, p, size=k)
        folded = np.minimum(a, p - a)
        if len(np.unique(folded)) == k:
            return a


def sample_genset(p: int, k: int, seed=None) -> GenSet:
    """Uniform draw from the symmetric lazy generating sets of size 2k+1."""
    _check_pk(p, k)
    return GenSet.from_residues(p, _draw_distinct(p, k, _rng(seed)))


def sample_lattice(p: int, k: int, seed=None, l0: bool = True) -> IndexPLattice:
    """Uniform index-p lattice, from L^0(p, k) by default or from all of L(p, k).

    The dual is Z^k + Z v/p with v uniform on D (no zero coordinate, no
    coincidence up to sign) for L^0, or uniform on nonzero vectors for L.
    """
    _check_pk(p, k)
    rng = _rng(seed)
    if l0:
        return IndexPLattice(p, tuple(int(x) for x in _draw_distinct(p, k, rng)))
    while True:
        v = rng.integers(0, p, size=k)
        if np.any(v):
            return IndexPLattice(p, tuple(int(x) for x in v))


def gaussian_density(k: int, sigma: float, x2) -> np.ndarray:
    """eta_k(sigma, x) as a function of ||x||^2."""
    return (2 * math.pi * sigma * sigma) ** (-k / 2) * np.exp(-np.asarray(x2) / (2 * sigma * sigma))


def pair_statistic(L: IndexPLattice, rho: float, C: float) -> float:
    """Sum over lambda1 != +-lambda2 of eta(s1, lambda1) eta(s2, lambda2) on primitive dual vectors.

    s1 = 1/(rho p^{1/k}) and s2 = s1 / C.  Vectors are truncated where the
    Gaussian factor drops below 1e-18 of its peak.
    """
    if rho <= 0 or C <= 0:
        raise ValidationError("rho and C must be positive")
    p, k = L.p, L.k
    s1 = 1.0 / (rho * p ** (1.0 / k))
    s2 = s1 / C
    R = max(s1, s2) * math.sqrt(2 * math.log(1e18))
    vecs = [(v, n) for v, n, prim, _ in dual_short_vectors(L, R) if prim]
    if not vecs:
        return 0.0
    n2 = np.array([n * n for _, n in vecs])
    g1 = gaussian_density(k, s1, n2)
    g2 = gaussian_density(k, s2, n2)
    # the excluded diagonal lambda1 = +-lambda2 contributes 2 g1 g2 per vector
    return float(g1.sum() * g2.sum() - 2.0 * np.dot(g1, g2))
