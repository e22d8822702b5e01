"""Conductivity-side transforms for a polycrystal of one anisotropic crystal.

The crystal conductivities ``sigma1 > sigma2 > sigma3 > 0`` define a scale
``theta``, the positive root of ``2 x^3 + tr(sigma) x^2 - det(sigma)``, and with
it a unit-trace spectrum ``s_i = theta / (theta + sigma_i)``.  Spectra ``s*`` in
the attainable region map back to effective conductivities
``sigma*_i = theta (1/s*_i - 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attainable import contains_many, full_boundary
from .errors import (
    InvalidSpectrum,
    OutOfKStarRange,
    RootBracketFailure,
    ThetaInconsistent,
    ValidationError,
)
from .linalg import CrystalSpectrum, check_unit_trace

RANGE_TOL = 1e-12
BOUND_TOL = 1e-10
SATURATION_TOL = 1e-9


def _check_sigma(sigma) -> np.ndarray:
    sig = np.asarray(sigma, dtype=float)
    if sig.shape != (3,) or not np.all(np.isfinite(sig)):
        raise InvalidSpectrum(f"sigma must be three finite numbers, got {sigma!r}")
    if not (sig[0] > sig[1] > sig[2] > 0.0):
        raise InvalidSpectrum(f"need sigma1 > sigma2 > sigma3 > 0, got {tuple(sig)}")
    return sig


def bound_residual(sigma, theta: float) -> float:
    """``det - theta^2 tr - 2 theta^3`` for a diagonal conductivity."""
    sig = np.asarray(sigma, dtype=float)
    return float(np.prod(sig) - theta * theta * np.sum(sig) - 2.0 * theta ** 3)


def solve_theta(sigma) -> float:
    """Positive root of ``2 x^3 + tr(sigma) x^2 - det(sigma)``."""
    sig = _check_sigma(sigma)
    tr, det = float(np.sum(sig)), float(np.prod(sig))

    def f(x):
        return (2.0 * x + tr) * x * x - det

    lo, hi = 0.0, (det / 2.0) ** (1.0 / 3.0)
    if not (f(lo) < 0.0 < f(hi)):
        raise RootBracketFailure(f"no sign change on (0, {hi}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(3):
        step = f(x) / (6.0 * x * x + 2.0 * tr * x)
        if not math.isfinite(step) or abs(f(x - step)) >= abs(f(x)):
            break
        x -= step
    return x


@dataclass(frozen=True)
class PolycrystalProblem:
    sigma: np.ndarray
    theta: float
    S: CrystalSpectrum


def s_from_sigma(sigma, theta: float | None = None) -> CrystalSpectrum:
    """Unit-trace spectrum; descending ``sigma`` gives ascending ``s`` index by index."""
    sig = _check_sigma(sigma)
    theta = solve_theta(sig) if theta is None else float(theta)
    s = theta / (theta + sig)
    if abs(float(np.sum(s)) - 1.0) > 1e-12:
        raise ThetaInconsistent(f"trace of s is {np.sum(s)!r}; theta does not solve the cubic")
    # absorb the last ulp of trace error so the spectrum validates exactly
    s[1] = 1.0 - s[0] - s[2]
    return CrystalSpectrum(*map(float, s))


def polycrystal_problem(sigma) -> PolycrystalProblem:
    sig = _check_sigma(sigma)
    theta = solve_theta(sig)
    return PolycrystalProblem(sig, theta, s_from_sigma(sig, theta))


@dataclass(frozen=True)
class SigmaStar:
    sigma_star: np.ndarray
    residual: float
    box_ok: bool
    trace_ok: bool
    saturated: bool


def sigma_star(problem: PolycrystalProblem, sstar) -> SigmaStar:
    s = problem.S
    m = check_unit_trace(np.asarray(sstar, dtype=float))
    if np.any(m < s.s1 - RANGE_TOL) or np.any(m > s.s3 + RANGE_TOL):
        raise OutOfKStarRange(f"{tuple(m)} leaves [s1, s3] = [{s.s1}, {s.s3}]")
    theta = problem.theta
    star = theta * (1.0 / m - 1.0)
    sig = problem.sigma
    scale = float(sig[0])
    box_ok = bool(np.all(star >= sig[2] - BOUND_TOL * scale) and np.all(star <= sig[0] + BOUND_TOL * scale))
    trace_ok = bool(np.sum(star) <= np.sum(sig) + BOUND_TOL * scale)
    res = bound_residual(star, theta)
    saturated = abs(res) <= SATURATION_TOL * float(np.prod(star))
    return SigmaStar(star, res, box_ok, trace_ok, saturated)


@dataclass(frozen=True)
class SliceRow:
    kind: str
    m: np.ndarray
    result: SigmaStar


def g_closure_slice(sigma, count: int, per_arc: int = 64) -> tuple[PolycrystalProblem, list[SliceRow]]:
    """``count`` points of the attainable region mapped to effective conductivities.

    The first half are boundary samples.  The rest are interior points
    obtained by pulling boundary samples toward the isotropic point.
    """
    if count < 2:
        raise ValidationError("count must be at least 2")
    problem = polycrystal_problem(sigma)
    region = full_boundary(problem.S, per_arc)
    ring = region.triples[:-1]
    n_boundary = (count + 1) // 2
    n_interior = count - n_boundary
    picks = np.linspace(0, len(ring), n_boundary, endpoint=False).astype(int)
    rows = [SliceRow("boundary", ring[i], sigma_star(problem, ring[i])) for i in picks]

    center = np.full(3, 1.0 / 3.0)
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    k = 0
    while len(rows) < count:
        if k > 100 * count:
            raise ValidationError("could not place interior samples")
        j = int(len(ring) * ((k * golden) % 1.0))
        r = (k + 0.5) / (n_interior + 0.5) if k < n_interior else ((k * golden * golden) % 1.0)
        m = center + r * (ring[j] - center)
        m[1] = 1.0 - m[0] - m[2]
        k += 1
        if contains_many(region, [m])[0]:
            rows.append(SliceRow("interior", m, sigma_star(problem, m)))
    return problem, rows
