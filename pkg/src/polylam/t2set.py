"""Seed materials with two rank-one connections to multiples of ``S``.

On the alpha branch a unit-trace ``T`` satisfies ``t3 = F(t1, t2)`` and is
connected to ``(t1/s2) S`` and ``(t2/s2) S`` through one common normal ``n``;
the beta branch swaps the roles of ``t1`` and ``t3``.  Both branches start at
``S`` and end at a uniaxial point.  Only the part of each branch on which the
admissible interval ends sit at ``(t1/s2, t2/s2)`` (resp. ``(t2/s2, t3/s2)``)
carries a double connection; for a given ``S`` that part is the whole branch on
one side and a terminal arc ending at the uniaxial point on the other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConnectionFailure,
    CurveSolveFailure,
    DegenerateLambda,
    NotOnT2Curve,
    SingularDenominator,
    UniaxialInput,
    ValidationError,
    ZOutOfRange,
)
from .linalg import CrystalSpectrum, certificate_tol

BRANCHES = ("alpha", "beta")
BISECT_TOL = 1e-13
BISECT_MAXITER = 200
CONDITION_TOL = 1e-12
Z_TOL = 1e-9


def _denominator(x: float, y: float, s2: float) -> float:
    # x^2 + xy + y^2 - s2 (x + y), arranged to be exact when y = s2
    return x * x + (x + y) * (y - s2)


def F_eval(x: float, y: float, S) -> float:
    S = CrystalSpectrum.of(S)
    s1, s2, s3 = S
    den = _denominator(x, y, s2)
    if abs(den) <= 1e-14:
        raise SingularDenominator(f"F({x}, {y}) has vanishing denominator {den:.3e}")
    return s1 * s3 / s2 * x * y / den


def H_eval(x: float, S) -> float:
    """The quadratic whose roots are the uniaxial ends of the two branches."""
    s1, s2, s3 = S
    return 6.0 * s2 * x * x + x * (s1 * s3 - 3.0 * s2 - 4.0 * s2 * s2) + 2.0 * s2 * s2


def uniaxial_roots(S) -> tuple[float, float]:
    """Smallest and greatest roots of ``H`` by the cancellation-free quadratic formula."""
    s1, s2, s3 = CrystalSpectrum.of(S)
    a = 6.0 * s2
    b = s1 * s3 - 3.0 * s2 - 4.0 * s2 * s2
    c = 2.0 * s2 * s2
    disc = b * b - 4.0 * a * c
    # H(1/3) < 0 for strict S, so disc > 0
    root = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(root, b))
    r1, r2 = q / a, c / q
    return (r1, r2) if r1 <= r2 else (r2, r1)


def _branch_poly(drive: float, t2: float, S) -> float:
    # branch equation with the denominator of F cleared; continuous in t2
    s1, s2, s3 = S
    den = _denominator(drive, t2, s2)
    return (1.0 - drive - t2) * s2 * den - s1 * s3 * drive * t2


def _bisect(f, lo: float, hi: float, where: str) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo < 0.0) == (fhi < 0.0):
        raise CurveSolveFailure(f"no sign change on [{lo}, {hi}] at {where}")
    neg_at_lo = flo < 0.0
    for _ in range(BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= BISECT_TOL * 1e-3:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == neg_at_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def branch_point(S, branch: str, drive: float) -> np.ndarray:
    """The branch point whose driving coordinate (``t1`` or ``t3``) is ``drive``."""
    S = CrystalSpectrum.of(S)
    s1, s2, s3 = S
    u_alpha, u_beta = uniaxial_roots(S)
    if branch == "alpha":
        if not s1 <= drive <= u_alpha:
            raise ValidationError(f"alpha driver t1={drive} outside [s1, u_alpha]")
        if drive == s1:
            return S.array()
        if drive == u_alpha:
            return np.array([u_alpha, u_alpha, 1.0 - 2.0 * u_alpha])
        t2 = _bisect(lambda x: _branch_poly(drive, x, S), drive, s2, f"t1={drive}")
        return np.array([drive, t2, 1.0 - drive - t2])
    if branch == "beta":
        if not u_beta <= drive <= s3:
            raise ValidationError(f"beta driver t3={drive} outside [u_beta, s3]")
        if drive == s3:
            return S.array()
        if drive == u_beta:
            return np.array([1.0 - 2.0 * u_beta, u_beta, u_beta])
        t2 = _bisect(lambda x: _branch_poly(drive, x, S), s2, drive, f"t3={drive}")
        return np.array([1.0 - t2 - drive, t2, drive])
    raise ValidationError(f"branch must be one of {BRANCHES}, got {branch!r}")


def branch_margin(t, S, branch: str) -> float:
    """Slack in the interval-end conditions; nonnegative iff they hold."""
    t1, t2, t3 = t
    s1, s2, s3 = S
    if branch == "alpha":
        return min(t1 / s2 - t2 / s3, t3 / s3 - t2 / s2)
    return min(t2 / s2 - t1 / s1, t2 / s1 - t3 / s2)


def branch_residual(t, S, branch: str) -> float:
    """``t3 - F(t1, t2)`` (alpha) or ``t1 - F(t3, t2)`` (beta)."""
    t1, t2, t3 = t
    if branch == "alpha":
        return t3 - F_eval(t1, t2, S)
    return t1 - F_eval(t3, t2, S)


def admissible_arc(S, branch: str) -> tuple[float, float]:
    """Driving-coordinate range of the doubly connected part of a branch.

    Returned as ``(start, end)`` with ``start`` nearest ``S`` and ``end`` the
    uniaxial root.
    """
    S = CrystalSpectrum.of(S)
    s1, _, s3 = S
    u_alpha, u_beta = uniaxial_roots(S)
    start, end = (s1, u_alpha) if branch == "alpha" else (s3, u_beta)
    if branch_margin(S.array(), S, branch) >= -CONDITION_TOL:
        return start, end

    def margin(d):
        return branch_margin(branch_point(S, branch, d), S, branch)

    bad, good = start, end
    for _ in range(BISECT_MAXITER):
        mid = 0.5 * (bad + good)
        if mid in (bad, good):
            break
        if margin(mid) >= 0.0:
            good = mid
        else:
            bad = mid
    return good, end


@dataclass(frozen=True)
class T2Point:
    t: np.ndarray
    branch: str
    lambda1: float
    lambda2: float
    drive: float

    @property
    def uniaxial(self) -> bool:
        t1, t2, t3 = self.t
        return math.isclose(t1, t2, abs_tol=1e-12) or math.isclose(t2, t3, abs_tol=1e-12)


def make_t2_point(t, S, branch: str) -> T2Point:
    S = CrystalSpectrum.of(S)
    t = np.asarray(t, dtype=float)
    s2 = S.s2
    if branch == "alpha":
        return T2Point(t, branch, t[0] / s2, t[1] / s2, float(t[0]))
    if branch == "beta":
        return T2Point(t, branch, t[2] / s2, t[1] / s2, float(t[2]))
    raise ValidationError(f"branch must be one of {BRANCHES}, got {branch!r}")


def sample_t2_curve(S, branch: str, count: int, restrict: bool = True) -> list[T2Point]:
    """``count`` points, uniform in the driving coordinate, from the end nearest
    ``S`` to the uniaxial point.

    With ``restrict`` (the default) only the doubly connected arc is sampled.
    Otherwise the whole branch curve from ``S`` is returned, and samples outside
    that arc satisfy the curve equation but carry no double connection.
    """
    if count < 2:
        raise ValidationError("count must be at least 2")
    S = CrystalSpectrum.of(S)
    if restrict:
        start, end = admissible_arc(S, branch)
    else:
        u_alpha, u_beta = uniaxial_roots(S)
        start, end = (S.s1, u_alpha) if branch == "alpha" else (S.s3, u_beta)
    drives = np.linspace(start, end, count)
    drives[0], drives[-1] = start, end
    points = []
    for d in drives:
        t = branch_point(S, branch, float(d))
        margin = branch_margin(t, S, branch)
        if restrict and margin < -CONDITION_TOL:
            raise CurveSolveFailure(f"{branch} sample at {d} violates the interval conditions ({margin:.3e})")
        points.append(make_t2_point(t, S, branch))
    return points


def z_values(t, S, branch: str) -> tuple[float, float]:
    """The two determinant conditions on ``z = s3 cos^2 phi + s1 sin^2 phi``.

    They agree exactly on the branch curve.
    """
    t1, t2, t3 = t
    s1, s2, s3 = S
    z_second = (s2 * s2 * t1 * t3 - s1 * s3 * t2 * t2) / ((s2 - t2) * t2)
    if branch == "alpha":
        z_first = (s2 * s2 * t2 * t3 - s1 * s3 * t1 * t1) / ((s2 - t1) * t1)
    else:
        z_first = (s2 * s2 * t1 * t2 - s1 * s3 * t3 * t3) / ((s2 - t3) * t3)
    return z_first, z_second


@dataclass(frozen=True)
class DoubleConnection:
    """``R_i^t T R_i = lambda_i S + (1 - lambda_i) n (x) n`` for i = 1, 2."""

    point: T2Point
    n: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    phi: float
    theta1: float
    theta2: float
    z: float
    residual1: float
    residual2: float


def _block_angle(a: float, b: float, d00: float, d02: float) -> float:
    # theta with [[a c^2 + b s^2, (b-a) c s], ...] matching the target block entries
    cos2 = (2.0 * d00 - (a + b)) / (a - b)
    sin2 = 2.0 * d02 / (b - a)
    return 0.5 * math.atan2(sin2, cos2)


def _r1_alpha(th: float) -> np.ndarray:
    c, s = math.cos(th), math.sin(th)
    return np.array([[0.0, -1.0, 0.0], [-c, 0.0, s], [-s, 0.0, -c]])


def _r1_beta(th: float) -> np.ndarray:
    c, s = math.cos(th), math.sin(th)
    return np.array([[c, 0.0, -s], [s, 0.0, c], [0.0, -1.0, 0.0]])


def _r2(th: float) -> np.ndarray:
    c, s = math.cos(th), math.sin(th)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def solve_double_connection(P: T2Point, S) -> DoubleConnection:
    S = CrystalSpectrum.of(S)
    s1, s2, s3 = S
    t = P.t
    t1, t2, t3 = t
    if P.uniaxial:
        raise UniaxialInput(f"{tuple(t)} is uniaxial; use the explicit boundary angles instead")
    if abs(P.lambda2 - 1.0) < 1e-12 or abs(P.lambda1 - 1.0) < 1e-12:
        raise DegenerateLambda("T coincides with S, no double connection")

    z_a, z_b = z_values(t, S, P.branch)
    if abs(z_a - z_b) > Z_TOL * (1.0 + abs(z_a)):
        raise NotOnT2Curve(f"z mismatch {abs(z_a - z_b):.3e} for T={tuple(t)}")
    z = z_a
    if not s1 - Z_TOL <= z <= s3 + Z_TOL:
        raise ZOutOfRange(f"z = {z} outside [s1, s3] = [{s1}, {s3}]")
    cos2phi = min(1.0, max(0.0, (z - s1) / (s3 - s1)))
    phi = math.acos(math.sqrt(cos2phi))
    n = np.array([math.cos(phi), 0.0, math.sin(phi)])

    def target(lam):
        return lam * S.matrix() + (1.0 - lam) * np.outer(n, n)

    G1, G2 = target(P.lambda1), target(P.lambda2)
    if P.branch == "alpha":
        theta1 = _block_angle(t2, t3, G1[0, 0], G1[0, 2])
        R1 = _r1_alpha(theta1)
    else:
        theta1 = _block_angle(t1, t2, G1[0, 0], G1[0, 2])
        R1 = _r1_beta(theta1)
    theta2 = _block_angle(t1, t3, G2[0, 0], G2[0, 2])
    R2 = _r2(theta2)

    D = np.diag(t)
    res1 = float(np.linalg.norm(R1.T @ D @ R1 - G1))
    res2 = float(np.linalg.norm(R2.T @ D @ R2 - G2))
    tol = certificate_tol()
    if max(res1, res2) > tol:
        raise ConnectionFailure(f"double connection residuals {res1:.3e}, {res2:.3e} exceed {tol:.1e}")
    return DoubleConnection(P, n, R1, R2, phi, theta1, theta2, z, res1, res2)
