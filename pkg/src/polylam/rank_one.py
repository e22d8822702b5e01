"""Rank-one connections between a unit-trace diagonal ``T`` and multiples of ``S``.

A diagonal ``T`` is rank-one connected to ``lam * S`` when

    R^t T R = lam * S + (1 - lam) * n (x) n

for some rotation ``R`` and unit vector ``n``.  Such ``lam`` exist exactly on
the admissible set ``A(T, S)``, and for each of them the squares of the
components of ``n`` follow from comparing residues of the secular function
``det(lam S + (1 - lam) n n^t - z I)`` at its poles ``z = lam s_k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConnectionFailure,
    DegenerateLambda,
    NotAdmissible,
    OrderingError,
)
from .linalg import (
    CrystalSpectrum,
    UNIT_TRACE_TOL,
    check_unit_trace,
    certificate_tol,
    eigendecompose_sym3,
)

ORDER_TOL = 1e-12
SQUARE_CLAMP = 1e-12
MATCH_TOL = 1e-8


@dataclass(frozen=True)
class Interval:
    """Closed interval with the convention ``[a, b] = {}`` when ``a > b``."""

    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return not self.empty and self.lo - tol <= x <= self.hi + tol

    def interior_contains(self, x: float) -> bool:
        return not self.empty and self.lo < x < self.hi

    @property
    def length(self) -> float:
        return 0.0 if self.empty else self.hi - self.lo


@dataclass(frozen=True)
class AdmissibleSet:
    a_alpha: Interval
    a_beta: Interval

    @property
    def empty(self) -> bool:
        return self.a_alpha.empty and self.a_beta.empty

    def contains(self, lam: float, tol: float = 0.0) -> bool:
        return self.a_alpha.contains(lam, tol) or self.a_beta.contains(lam, tol)

    def interior_contains(self, lam: float) -> bool:
        return (self.a_alpha.interior_contains(lam) or self.a_beta.interior_contains(lam)) and lam != 1.0

    def sample_interior(self, count: int) -> np.ndarray:
        """``count`` points of the interior, spread over the nonempty pieces by length.

        The point ``lam = 1`` is never returned.
        """
        pieces = [iv for iv in (self.a_alpha, self.a_beta) if iv.length > 0.0]
        if not pieces:
            return np.empty(0)
        total = sum(iv.length for iv in pieces)
        out = []
        remaining = count
        for i, iv in enumerate(pieces):
            k = remaining if i == len(pieces) - 1 else max(1, round(count * iv.length / total))
            k = min(k, remaining)
            remaining -= k
            # open grid: k points strictly inside, avoiding the shared endpoint 1
            out.append(iv.lo + (iv.hi - iv.lo) * (np.arange(1, k + 1) / (k + 1)))
        lams = np.concatenate(out)
        return lams[lams != 1.0]


def _validate_pair(T, S) -> tuple[np.ndarray, CrystalSpectrum]:
    S = CrystalSpectrum.of(S)
    t = check_unit_trace(np.asarray(T, dtype=float), UNIT_TRACE_TOL)
    if t.shape != (3,):
        raise OrderingError("T must be a triple")
    s1, _, s3 = S
    if not (s1 - ORDER_TOL <= t[0] <= t[1] + ORDER_TOL
            and t[1] <= t[2] + ORDER_TOL and t[2] <= s3 + ORDER_TOL):
        raise OrderingError(f"need s1 <= t1 <= t2 <= t3 <= s3, got T={tuple(t)}, S={tuple(S)}")
    return t, S


def admissible_lambdas(T, S) -> AdmissibleSet:
    t, S = _validate_pair(T, S)
    t1, t2, t3 = t
    s1, s2, s3 = S
    a_alpha = Interval(max(t1 / s2, t2 / s3), min(t2 / s2, t3 / s3))
    a_beta = Interval(max(t1 / s1, t2 / s2), min(t2 / s1, t3 / s2))
    return AdmissibleSet(a_alpha, a_beta)


def in_t1(T, S) -> bool:
    """Membership of ``T`` in the set of matrices with one rank-one connection."""
    return not admissible_lambdas(T, S).empty


def normal_squares(T, S, lam: float) -> tuple[float, float, float]:
    """Squared components of the connecting normal for a given ``lam``.

    Tiny negative values from round-off at the ends of ``A(T, S)`` are clamped
    to zero; anything more negative means ``lam`` is not admissible.
    """
    t, S = _validate_pair(T, S)
    s = S.array()
    lam = float(lam)
    if abs(lam - 1.0) < 1e-12:
        raise DegenerateLambda("lam = 1 gives no rank-one connection")
    if not lam > 0.0:
        raise NotAdmissible(f"lam must be positive, got {lam}")
    squares = []
    for k in range(3):
        others = [s[k] - s[j] for j in range(3) if j != k]
        num = (t[0] - lam * s[k]) * (t[1] - lam * s[k]) * (t[2] - lam * s[k])
        den = lam * lam * (1.0 - lam) * others[0] * others[1]
        squares.append(num / den)
    if min(squares) < -SQUARE_CLAMP:
        raise NotAdmissible(f"lam = {lam} is outside A(T,S): squares {squares}")
    return tuple(max(0.0, v) for v in squares)


@dataclass(frozen=True)
class RankOneConnection:
    """``R^t diag(T) R = lam S + (1 - lam) n (x) n``, with its residual."""

    lam: float
    n: np.ndarray
    R: np.ndarray
    T: np.ndarray
    S: CrystalSpectrum
    residual: float
    degenerate: bool = False

    def target(self) -> np.ndarray:
        return self.lam * self.S.matrix() + (1.0 - self.lam) * np.outer(self.n, self.n)

    def rotated_T(self) -> np.ndarray:
        return self.R.T @ np.diag(self.T) @ self.R


def build_connection(T, S, lam: float) -> RankOneConnection:
    t, S = _validate_pair(T, S)
    sq = normal_squares(t, S, lam)
    n = np.sqrt(np.array(sq))
    n /= np.linalg.norm(n)
    M = lam * S.matrix() + (1.0 - lam) * np.outer(n, n)
    dec = eigendecompose_sym3(M)
    gap = float(np.max(np.abs(dec.spectrum.array() - t)))
    if gap > MATCH_TOL:
        raise ConnectionFailure(f"spectrum of lam S + (1-lam) n n^t misses T by {gap:.3e}")
    R = dec.rotation
    residual = float(np.linalg.norm(R.T @ np.diag(t) @ R - M))
    tol = certificate_tol()
    if residual > tol:
        raise ConnectionFailure(f"certificate residual {residual:.3e} exceeds {tol:.1e}")
    degenerate = dec.degenerate or math.isclose(t[0], t[1]) or math.isclose(t[1], t[2])
    return RankOneConnection(float(lam), n, R, t, S, residual, degenerate)
