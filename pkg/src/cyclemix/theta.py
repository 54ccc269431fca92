"""Gaussian diffusion on R/Z and on R^k / Lambda.

The circle heat kernel at time t has two convergent forms,

    theta(x, t) = sum_j exp(-(x - j)^2 / 2t) / sqrt(2 pi t)
                = 1 + 2 sum_{j >= 1} exp(-2 pi^2 t j^2) cos(2 pi j x),

the first fast for small t, the second for large t.  The lattice version
uses Lambda for the spatial sum and the dual lattice for the frequency sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from .cyclic_walk import GenSet
from .errors import ValidationError
from .lattice import IndexPLattice, lattice_of, points_in_ball, shortest_dual

# 2 pi^2 t ||lambda||^2 cut-off for the frequency sum; exp(-45) ~ 2.9e-20
FREQ_CUTOFF = 45.0
TWO_OVER_E = 2.0 / math.e


@dataclass(frozen=True)
class ThetaQuery:
    lattice: IndexPLattice
    t: float
    x: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        if self.t <= 0:
            raise ValidationError("t must be positive")
        if not 0 < self.tol <= 1e-6:
            raise ValidationError("tol must lie in (0, 1e-6]")


def _n_terms(t: float, tol: float, spatial: bool) -> int:
    # spatial terms decay like exp(-j^2 / 2t), frequency terms like exp(-2 pi^2 t j^2)
    rate = 1.0 / (2 * t) if spatial else 2 * math.pi ** 2 * t
    return int(math.ceil(math.sqrt(max(math.log(1.0 / tol), 1.0) / rate))) + 2


def theta_circle(x, t: float, form: str = "auto", tol: float = 1e-16):
    """Heat kernel on R/Z at time t (variance t)."""
    if t <= 0:
        raise ValidationError("t must be positive")
    x = np.asarray(x, dtype=float)
    if form == "auto":
        form = "spatial" if t < 1 / (2 * math.pi) else "frequency"
    if form == "spatial":
        xr = x - np.floor(x)
        J = _n_terms(t, tol, True)
        j = np.arange(-J, J + 2)
        d = xr[..., None] - j
        return np.exp(-d * d / (2 * t)).sum(axis=-1) / math.sqrt(2 * math.pi * t)
    if form == "frequency":
        J = _n_terms(t, tol, False)
        j = np.arange(1, J + 1)
        w = np.exp(-2 * math.pi ** 2 * t * j * j)
        return 1.0 + 2.0 * (w * np.cos(2 * math.pi * x[..., None] * j)).sum(axis=-1)
    raise ValidationError(f"unknown form {form!r}")


def _theta_primitive(x: float, t: float) -> float:
    """Integral of theta(., t) over [0, x] for 0 <= x <= 1, in closed form."""
    if t < 1 / (2 * math.pi):
        J = _n_terms(t, 1e-18, True)
        j = np.arange(-J, J + 2)
        s = math.sqrt(t)
        return float(np.sum(ndtr((x - j) / s) - ndtr(-j / s)))
    J = _n_terms(t, 1e-18, False)
    j = np.arange(1, J + 1)
    w = np.exp(-2 * math.pi ** 2 * t * j * j)
    return x + float(np.sum(w * np.sin(2 * math.pi * j * x) / (math.pi * j)))


def _crossing(t: float) -> float:
    """The unique x0 in (0, 1/2) with theta(x0, t) = 1."""
    f = lambda x: float(theta_circle(x, t)) - 1.0
    return brentq(f, 0.0, 0.5, xtol=1e-15, rtol=1e-15)


def tv_circle(t: float) -> float:
    """TV distance between the time-t circle diffusion and Lebesgue measure.

    theta - 1 is positive on [0, x0), negative on (x0, 1/2] and symmetric
    about 1/2, so TV = 2 * integral of (theta - 1) over [0, x0], which the
    antiderivative gives exactly once x0 is located.
    """
    if t <= 0:
        raise ValidationError("t must be positive")
    if 2 * math.pi ** 2 * t > 80:
        return 0.0
    x0 = _crossing(t)
    return 2.0 * (_theta_primitive(x0, t) - x0)


def tau0(tol: float = 1e-12) -> float:
    """Mixing-to-relaxation ratio 2 pi^2 t of the circle diffusion.

    Solves integral_0^1 |theta(x, t) - 1| dx = 2/e, i.e. tv_circle(t) = 1/e;
    the relaxation time of the circle diffusion is 1/(2 pi^2).
    """
    if tol < 1e-12:
        raise ValidationError("tol must be >= 1e-12")
    g = lambda tau: tv_circle(tau / (2 * math.pi ** 2)) - 1.0 / math.e
    return brentq(g, 0.4, 0.7, xtol=tol, rtol=1e-15)


def l1_circle(t: float) -> float:
    """integral_0^1 |theta(x, t) - 1| dx."""
    return 2.0 * tv_circle(t)


# --- lattice theta function ----------------------------------------------------

def _dual_vectors(L: IndexPLattice, R: float) -> np.ndarray:
    D = L.dual_basis()
    return points_in_ball(D, np.zeros(L.k), R)


def theta_lattice_frequency(L: IndexPLattice, t: float, X, tol: float = 1e-12) -> np.ndarray:
    """(1/p) sum over the dual lattice of exp(-2 pi^2 t ||lambda||^2) cos(2 pi lambda . x)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    R = math.sqrt(max(FREQ_CUTOFF, math.log(1.0 / tol)) / (2 * math.pi ** 2 * t))
    V = _dual_vectors(L, R)
    w = np.exp(-2 * math.pi ** 2 * t * np.einsum("ij,ij->i", V, V))
    out = np.empty(len(X))
    for start in range(0, len(X), 4096):
        sl = slice(start, start + 4096)
        out[sl] = np.cos(2 * math.pi * (X[sl] @ V.T)) @ w
    return out / L.p


def theta_lattice_spatial(L: IndexPLattice, t: float, X, tol: float = 1e-12) -> np.ndarray:
    """sum over Lambda of eta_k(sqrt t, x + lambda)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    k = L.k
    B = L.reduced_basis().astype(float)
    Binv = np.linalg.inv(B)
    R = math.sqrt(2 * t * max(FREQ_CUTOFF, math.log(1.0 / tol)))
    norm = (2 * math.pi * t) ** (-k / 2)
    out = np.empty(len(X))
    for i, x in enumerate(X):
        # fold x into the fundamental parallelepiped so the point set is small
        y = x - np.floor(x @ Binv) @ B
        V = points_in_ball(B, -y, R)
        d = V + y
        out[i] = norm * np.exp(-np.einsum("ij,ij->i", d, d) / (2 * t)).sum()
    return out


def theta_lattice(q: ThetaQuery, form: str = "frequency") -> float:
    if form == "frequency":
        return float(theta_lattice_frequency(q.lattice, q.t, q.x, q.tol)[0])
    if form == "spatial":
        return float(theta_lattice_spatial(q.lattice, q.t, q.x, q.tol)[0])
    raise ValidationError(f"unknown form {form!r}")


def theta_1d_bounds_check(alpha: float, t: float, x: float) -> dict:
    """Theta(x, t; alpha Z) against its two single-term approximations.

    bound1 is the leading image term plus a geometric envelope, bound2 the
    constant 1/alpha plus a geometric envelope in frequency space.
    """
    if alpha <= 0 or t <= 0:
        raise ValidationError("alpha and t must be positive")
    value = float(theta_circle(x / alpha, t / alpha ** 2)) / alpha
    frac = abs(x / alpha - round(x / alpha))
    lead1 = math.exp(-(alpha * frac) ** 2 / (2 * t)) / math.sqrt(2 * math.pi * t)
    q1 = math.exp(-alpha ** 2 / (8 * t))
    env1 = q1 / (math.sqrt(2 * math.pi * t) * (1 - q1)) if q1 < 1 else math.inf
    q2 = math.exp(-2 * math.pi ** 2 * t / alpha ** 2)
    env2 = q2 / (alpha * (1 - q2)) if q2 < 1 else math.inf
    # the O() terms count both sides of the lattice, hence the factor 2
    ok1 = abs(value - lead1) <= 2 * env1 + 1e-15
    ok2 = abs(value - 1 / alpha) <= 2 * env2 + 1e-15
    return {
        "value": value,
        "bound1": lead1,
        "envelope1": env1,
        "bound2": 1 / alpha,
        "envelope2": env2,
        "within1": ok1,
        "within2": ok2,
    }


# --- TV of the lattice diffusion -----------------------------------------------

def _frequency_count(L: IndexPLattice, t: float) -> float:
    R = math.sqrt(FREQ_CUTOFF / (2 * math.pi ** 2 * t))
    return L.p * (math.pi ** (L.k / 2) / math.gamma(L.k / 2 + 1)) * R ** L.k


def _spatial_count(L: IndexPLattice, t: float) -> float:
    R = math.sqrt(2 * t * FREQ_CUTOFF)
    return (math.pi ** (L.k / 2) / math.gamma(L.k / 2 + 1)) * R ** L.k / L.p


def theta_tv_mc(L: IndexPLattice, t: float, N: int = 10_000, seed=0) -> dict:
    """Monte Carlo TV of Theta(., t; Lambda) from the uniform density 1/p.

    The fundamental domain is the union of unit cubes j e_i + [0,1)^k,
    j = 0..p-1, with i the pivot coordinate (a_i = 1); those translates are
    distinct mod Lambda.  TV = E_U[(1 - p Theta)_+] under the uniform law;
    unlike (p/2) E_U|Theta - 1/p| this stays accurate when Theta is a narrow
    spike that no sample lands in.
    """
    if N < 1000:
        raise ValidationError("N must be at least 1000")
    if t <= 0:
        raise ValidationError("t must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p, k = L.p, L.k
    X = rng.random((N, k))
    X[:, L.pivot] += rng.integers(0, p, size=N)
    if _frequency_count(L, t) <= 50 * max(1.0, _spatial_count(L, t)):
        vals = theta_lattice_frequency(L, t, X)
    else:
        vals = theta_lattice_spatial(L, t, X)
    dev = np.maximum(1.0 - p * vals, 0.0)
    return {"estimate": float(dev.mean()), "stderr": float(dev.std(ddof=1) / math.sqrt(N)), "n": N}


def theta0_projection_tv(L: IndexPLattice, t: float) -> float:
    """TV of the projection of Theta onto the line of the shortest dual vector."""
    if t <= 0:
        raise ValidationError("t must be positive")
    _, ell = shortest_dual(L)
    return tv_circle(t * ell * ell)


def continuous_tv_at_step(A: GenSet, n: int, N: int = 10_000, seed=0) -> dict:
    """Diffusion counterpart of step n: Theta at time 2n/(2k+1) on R^k / Lambda(A)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    return theta_tv_mc(lattice_of(A), 2.0 * n / (2 * A.k + 1), N, seed)
