"""Von Neumann stability analysis of the semi-implicit scheme.

A Fourier mode ``exp(-i j theta1) exp(-i k theta2) g^n`` of the linearized,
artificially compressible scheme satisfies ``M(g) (p, u, v) = 0`` with a
3x3 matrix linear in ``g``.  Its determinant factors into a linear
polynomial ``phi1`` and a quadratic ``phi2 = A g^2 + B g + C``; the scheme is
stable when all roots lie in the closed unit disk.

Polynomial coefficients are stored highest degree first (``numpy.roots``
convention).
"""

from __future__ import annotations

import cmath
from dataclasses import astuple, dataclass, fields

import numpy as np


@dataclass(frozen=True)
class StabilityParams:
    C_m1: float
    C_m2: float
    C_s1: float
    C_s2: float
    C_mu1: float
    C_mu2: float
    rho0: float
    theta1: float
    theta2: float

    def __post_init__(self):
        for f in ("C_m1", "C_m2", "C_s1", "C_s2", "C_mu1", "C_mu2"):
            if getattr(self, f) < 0:
                raise ValueError(f"{f} must be non-negative, got {getattr(self, f)}")
        if self.rho0 <= 0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        for f in ("theta1", "theta2"):
            if not -np.pi <= getattr(self, f) <= np.pi:
                raise ValueError(f"{f} must lie in [-pi, pi], got {getattr(self, f)}")

    @property
    def C_m(self):
        return self.C_m1 + self.C_m2

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def as_row(self):
        return list(astuple(self))


def wave_factors(theta):
    """``(k1, k2, k3, k4)`` for one direction: upwind, central, fourth and second difference symbols."""
    c, s = np.cos(theta), np.sin(theta)
    return 1 - c - 1j * s, -1j * s, (c - 1) ** 2, c - 1


def _pieces(p: StabilityParams):
    k11, k21, k31, k41 = wave_factors(p.theta1)
    k12, k22, k32, k42 = wave_factors(p.theta2)
    C_mu3 = 1.0 / (1.0 + p.C_mu1 + p.C_mu2)
    G_k = p.C_m1 * k11 + p.C_m2 * k12 - 1.0
    a11 = 1.0 + p.rho0 * p.C_s1**2 * C_mu3 * k31 + p.rho0 * p.C_s2**2 * C_mu3 * k32
    a22 = 1.0 - p.C_mu1 * k41 - p.C_mu2 * k42
    return G_k, a11, a22, k21, k22


def characteristic_polynomial(p: StabilityParams):
    """Coefficients ``(phi1, phi2)``; ``phi1 = [a22, G_k]``, ``phi2 = [A, B, C]``."""
    G_k, a11, a22, k21, k22 = _pieces(p)
    acoustic = p.rho0 * (p.C_s1**2 * k21**2 + p.C_s2**2 * k22**2)
    A = a11 * a22 - acoustic
    B = G_k * (a11 + a22)
    C = G_k**2
    return np.array([a22, G_k], dtype=complex), np.array([A, B, C], dtype=complex)


def amplification_matrices(p: StabilityParams, c0=1.0):
    """``(M1, M0)`` with ``M(g) = g M1 + M0`` acting on ``(p, u, v)``.

    ``c0`` is the artificial sound speed; it cancels from the determinant.
    """
    G_k, a11, a22, k21, k22 = _pieces(p)
    M1 = np.array(
        [
            [a11, p.rho0 * c0 * p.C_s1 * k21, p.rho0 * c0 * p.C_s2 * k22],
            [p.C_s1 * k21 / c0, a22, 0.0],
            [p.C_s2 * k22 / c0, 0.0, a22],
        ],
        dtype=complex,
    )
    M0 = G_k * np.eye(3, dtype=complex)
    return M1, M0


def quadratic_roots(A, B, C):
    """Roots of ``A g^2 + B g + C`` by the cancellation-free quadratic formula."""
    A, B, C = complex(A), complex(B), complex(C)
    if A == 0:
        raise AssertionError("leading coefficient of the quadratic vanished")
    # Python complex division scales its operands, unlike numpy's for subnormal values
    disc = cmath.sqrt(B * B - 4 * A * C)
    # pick the sign that avoids subtracting nearly equal numbers
    q = -0.5 * (B + disc) if (B.conjugate() * disc).real >= 0 else -0.5 * (B - disc)
    if q == 0:
        return np.array([0j, 0j])
    return np.array([q / A, C / q])


def roots(p: StabilityParams):
    """The three roots of ``phi1 * phi2``."""
    phi1, phi2 = characteristic_polynomial(p)
    A = phi2[0]
    if not A.real >= 1.0 - 1e-12:
        raise AssertionError(f"leading coefficient A = {A} violates A >= 1")
    return np.concatenate([[-phi1[1] / phi1[0]], quadratic_roots(*phi2)])


def max_root_magnitude(p: StabilityParams) -> float:
    return float(np.max(np.abs(roots(p))))


@dataclass
class LemmaResult:
    passed: bool
    condition1: tuple  # (|phi(0)|, |phi*(0)|) at the top degree
    condition2: bool
    reduced: np.ndarray  # coefficients of phi_{d-1}, highest degree first
    branch: str


def conjugate_polynomial(coeffs):
    """``phi*(g) = sum_l conj(a_{d-l}) g^l``, coefficients highest degree first."""
    return np.conj(np.asarray(coeffs, dtype=complex))[::-1]


def _reduce(coeffs):
    a = np.asarray(coeffs, dtype=complex)
    star = conjugate_polynomial(a)
    # phi*(0) is conj(a_d) = conj(leading), phi(0) is the constant term
    num = np.conj(a[0]) * a - a[-1] * star
    return num[:-1]  # constant term cancels; dividing by g drops it


def _strip(coeffs, tol):
    a = np.asarray(coeffs, dtype=complex)
    scale = max(np.max(np.abs(a)), 1e-300)
    nz = np.flatnonzero(np.abs(a) > tol * scale)
    return a[nz[0]:] if nz.size else a[-1:] * 0


def is_simple_von_neumann(coeffs, tol=1e-13):
    """Recursive conjugate-polynomial test for a simple von Neumann polynomial."""
    return lemma1_check(coeffs, tol).passed


def lemma1_check(coeffs, tol=1e-13) -> LemmaResult:
    """Apply the conjugate-polynomial reduction test to a polynomial.

    Condition (1) is ``|phi(0)| < |phi*(0)|``; condition (2) asks that the
    reduced polynomial ``phi_{d-1}`` is itself simple von Neumann.  When the
    reduced polynomial vanishes identically the alternative test applies:
    ``phi`` is simple von Neumann iff ``phi'`` has all roots strictly inside
    the unit circle.
    """
    a = _strip(coeffs, tol)
    d = a.size - 1
    if d <= 0:
        return LemmaResult(bool(a[0] != 0), (abs(a[-1]), abs(a[0])), True, a, "constant")
    if d == 1:
        r = -a[1] / a[0]
        return LemmaResult(bool(abs(r) <= 1.0 + tol), (abs(a[1]), abs(a[0])), True, a, "linear")
    c1 = (abs(a[-1]), abs(a[0]))
    red = _reduce(a)
    scale = max(np.max(np.abs(a)) ** 2, 1e-300)
    if np.all(np.abs(red) <= tol * scale):
        deriv = np.polyder(a)
        inside = bool(np.all(np.abs(np.roots(deriv)) < 1.0)) if deriv.size > 1 else True
        return LemmaResult(inside, c1, inside, red, "derivative")
    cond1 = c1[0] < c1[1]
    sub = lemma1_check(red, tol)
    return LemmaResult(bool(cond1 and sub.passed), c1, sub.passed, red, "reduction")


def direct_check(coeffs, tol=1e-10):
    """Simple von Neumann test by explicit roots (reference for :func:`lemma1_check`)."""
    a = _strip(coeffs, 1e-13)
    if a.size == 1:
        return bool(a[0] != 0)
    r = quadratic_roots(*a) if a.size == 3 else np.roots(a)
    mod = np.abs(r)
    if np.any(mod > 1.0 + tol):
        return False
    on_circle = r[np.abs(mod - 1.0) <= tol]
    for i in range(on_circle.size):
        for j in range(i + 1, on_circle.size):
            if abs(on_circle[i] - on_circle[j]) <= 1e-7:
                return False
    return True


DEFAULT_RANGES = {
    "C_m": (0.0, 1.0),
    "C_s": (0.01, 100.0),
    "C_mu": (0.0, 10.0),
    "rho0": (0.1, 10.0),
    "theta": (-np.pi, np.pi),
}


def random_params(rng: np.random.Generator, n, ranges=None):
    """``n`` random admissible parameter sets.

    The convective number ``C_m`` is drawn uniformly and split at a random
    fraction between the two directions; Courant/diffusion components are
    drawn independently; ``C_s`` is log-uniform over its range.
    """
    r = dict(DEFAULT_RANGES)
    if ranges:
        r.update(ranges)
    out = []
    for _ in range(n):
        cm = rng.uniform(*r["C_m"])
        split = rng.uniform()
        lo, hi = np.log10(r["C_s"][0]), np.log10(r["C_s"][1])
        cs1, cs2 = 10 ** rng.uniform(lo, hi, size=2)
        cmu1, cmu2 = rng.uniform(*r["C_mu"], size=2)
        rho0 = rng.uniform(*r["rho0"])
        th1, th2 = rng.uniform(*r["theta"], size=2)
        out.append(StabilityParams(cm * split, cm * (1 - split), cs1, cs2, cmu1, cmu2, rho0, th1, th2))
    return out


def sweep_grid(cm_values, theta_steps, C_s=1.0, C_mu=0.0, rho0=1.0, split=0.5):
    """Parameter sets over ``cm_values`` times a ``theta_steps``^2 wavenumber grid."""
    thetas = np.linspace(-np.pi, np.pi, theta_steps)
    for cm in cm_values:
        for t1 in thetas:
            for t2 in thetas:
                yield StabilityParams(cm * split, cm * (1 - split), C_s, C_s, C_mu, C_mu, rho0, t1, t2)


@dataclass
class SweepSummary:
    count: int
    max_modulus: float
    first_unstable: StabilityParams | None
    lemma_mismatches: int


def run_sweep(params, tol=1e-10, check_lemma=True, rows=None):
    """Evaluate max root modulus over ``params``; optionally collect CSV rows."""
    count, worst, first, mismatches = 0, 0.0, None, 0
    for p in params:
        m = max_root_magnitude(p)
        count += 1
        worst = max(worst, m)
        if first is None and m > 1.0 + tol:
            first = p
        if check_lemma:
            _, phi2 = characteristic_polynomial(p)
            if lemma1_check(phi2).passed != direct_check(phi2):
                mismatches += 1
        if rows is not None:
            rows.append(p.as_row() + [m])
    if count == 0:
        raise ValueError("empty stability sweep")
    return SweepSummary(count, worst, first, mismatches)
