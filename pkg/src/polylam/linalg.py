"""Symmetric 3x3 linear algebra, rotations and the unit-trace plane.

Everything downstream works with eigenvalue triples, so this module owns the
closed-form eigensolver and the 2D chart of the plane ``m1 + m2 + m3 = 1``.

The chart uses the orthonormal in-plane basis

    b1 = (-1, 1, 0) / sqrt(2),   b2 = (-1, -1, 2) / sqrt(6)

centred at the isotropic point (1/3, 1/3, 1/3): the uniaxial line m1 = m2 is
the vertical axis and the largest-eigenvalue vertex (0, 0, 1) points up.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import (
    InvalidMatrix,
    InvalidRotation,
    InvalidSpectrum,
    NotUnitTrace,
)

DEGENERACY_GAP = 1e-10
UNIT_TRACE_TOL = 1e-9
DEFAULT_CERTIFICATE_TOL = 1e-9

SQRT2 = math.sqrt(2.0)
SQRT6 = math.sqrt(6.0)
PLANE_CENTER = np.full(3, 1.0 / 3.0)
PLANE_BASIS = np.array([[-1.0, 1.0, 0.0], [-1.0, -1.0, 2.0]]) / np.array([[SQRT2], [SQRT6]])


def certificate_tol() -> float:
    """Residual tolerance for constructed certificates.

    Read from ``LAMINATE_TOL`` at call time so a driver can override it.
    """
    raw = os.environ.get("LAMINATE_TOL")
    if not raw:
        return DEFAULT_CERTIFICATE_TOL
    try:
        tol = float(raw)
    except ValueError as exc:
        raise InvalidMatrix(f"LAMINATE_TOL is not a number: {raw!r}") from exc
    if not (tol > 0 and math.isfinite(tol)):
        raise InvalidMatrix(f"LAMINATE_TOL must be positive and finite, got {raw!r}")
    return tol


@dataclass(frozen=True)
class SymMat3:
    """Symmetric 3x3 matrix stored by its six independent entries."""

    a11: float
    a22: float
    a33: float
    a12: float = 0.0
    a13: float = 0.0
    a23: float = 0.0

    @classmethod
    def from_array(cls, A, tol: float = 1e-12) -> "SymMat3":
        A = as_matrix(A, tol=tol)
        return cls(A[0, 0], A[1, 1], A[2, 2], A[0, 1], A[0, 2], A[1, 2])

    @classmethod
    def diag(cls, d: Sequence[float]) -> "SymMat3":
        return cls(float(d[0]), float(d[1]), float(d[2]))

    def array(self) -> np.ndarray:
        return np.array(
            [
                [self.a11, self.a12, self.a13],
                [self.a12, self.a22, self.a23],
                [self.a13, self.a23, self.a33],
            ],
            dtype=float,
        )

    def entries(self) -> tuple[float, ...]:
        return (self.a11, self.a22, self.a33, self.a12, self.a13, self.a23)


def as_matrix(M, tol: float = 1e-12) -> np.ndarray:
    """Return ``M`` as a float (3, 3) symmetric ndarray, validating on the way."""
    if isinstance(M, SymMat3):
        A = M.array()
    else:
        A = np.array(M, dtype=float)
    if A.shape != (3, 3):
        raise InvalidMatrix(f"expected a 3x3 matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidMatrix("matrix has non-finite entries")
    asym = np.max(np.abs(A - A.T))
    if asym > tol * (1.0 + np.max(np.abs(A))):
        raise InvalidMatrix(f"matrix is not symmetric (max |A - A^t| = {asym:.3e})")
    return 0.5 * (A + A.T)


class Spectrum(NamedTuple):
    """Ascending eigenvalue triple."""

    m1: float
    m2: float
    m3: float

    @property
    def trace(self) -> float:
        return self.m1 + self.m2 + self.m3

    def array(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclass(frozen=True)
class CrystalSpectrum:
    """Principal values of the crystal: ``0 < s1 < s2 < s3`` and unit trace."""

    s1: float
    s2: float
    s3: float

    TRACE_TOL = 1e-12

    def __post_init__(self):
        s = (self.s1, self.s2, self.s3)
        if not all(math.isfinite(v) for v in s):
            raise InvalidSpectrum(f"non-finite spectrum {s}")
        if not 0.0 < self.s1 < self.s2 < self.s3:
            raise InvalidSpectrum(f"need 0 < s1 < s2 < s3, got {s}")
        if abs(sum(s) - 1.0) > self.TRACE_TOL:
            raise InvalidSpectrum(f"need s1 + s2 + s3 = 1, got sum {sum(s)!r}")

    @classmethod
    def of(cls, s) -> "CrystalSpectrum":
        if isinstance(s, CrystalSpectrum):
            return s
        vals = [float(v) for v in s]
        if len(vals) != 3:
            raise InvalidSpectrum(f"expected three values, got {len(vals)}")
        return cls(*vals)

    def __iter__(self) -> Iterator[float]:
        return iter((self.s1, self.s2, self.s3))

    def array(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.s3])

    def matrix(self) -> np.ndarray:
        return np.diag(self.array())


def check_rotation(R, tol: float = 1e-12) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise InvalidRotation("rotation must be a finite 3x3 matrix")
    orth = np.linalg.norm(R.T @ R - np.eye(3))
    det = np.linalg.det(R)
    if orth > tol or abs(det - 1.0) > tol:
        raise InvalidRotation(f"not in SO(3): |R^tR - I| = {orth:.3e}, det = {det!r}")
    return R


def check_unit(n, tol: float = 1e-12) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or abs(n @ n - 1.0) > tol:
        raise InvalidMatrix(f"not a unit 3-vector: {n}")
    return n


def rotation(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation by ``angle`` about ``axis``."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def _det3(A: np.ndarray) -> float:
    return (
        A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
        - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
        + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0])
    )


def _minors_sum(A: np.ndarray) -> float:
    return (
        A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        + A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]
        + A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1]
    )


def _polish(A: np.ndarray, m: float) -> float:
    # one Newton step on det(A - mI); kept only if it lowers the residual
    shifted = A - m * np.eye(3)
    chi = _det3(shifted)
    dchi = -_minors_sum(shifted)
    if dchi == 0.0 or chi == 0.0:
        return m
    cand = m - chi / dchi
    if abs(_det3(A - cand * np.eye(3))) < abs(chi):
        return cand
    return m


def _cardano(A: np.ndarray) -> tuple[float, float, float]:
    q = np.trace(A) / 3.0
    B = A - q * np.eye(3)
    p = math.sqrt(float(np.sum(B * B)) / 6.0)
    if p == 0.0:
        return q, q, q
    r = min(1.0, max(-1.0, _det3(B / p) / 2.0))
    phi = math.acos(r) / 3.0
    hi = q + 2.0 * p * math.cos(phi)
    lo = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    return lo, 3.0 * q - hi - lo, hi


def _null_vector(A: np.ndarray) -> np.ndarray | None:
    rows = (A[0], A[1], A[2])
    cands = [np.cross(rows[0], rows[1]), np.cross(rows[0], rows[2]), np.cross(rows[1], rows[2])]
    best = max(cands, key=lambda v: float(v @ v))
    norm = math.sqrt(float(best @ best))
    if norm == 0.0:
        return None
    return best / norm


def _complement(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # any orthonormal pair spanning v-perp
    e = np.eye(3)[int(np.argmin(np.abs(v)))]
    u = np.cross(v, e)
    u /= np.linalg.norm(u)
    return u, np.cross(v, u)


def _deflated(A: np.ndarray):
    """Eigenvalues and eigenvector rows, ascending, or None when A is a multiple of I.

    Cardano only locates the most isolated eigenvalue; its eigenvector splits
    off a 2x2 block that is diagonalized by a rotation, which keeps close
    pairs accurate where the trigonometric formula loses half the digits.
    """
    scale = float(np.max(np.abs(A)))
    if scale == 0.0:
        return None
    A = A / scale
    lo, mid, hi = _cardano(A)
    if hi - lo == 0.0:
        return None
    iso = _polish(A, lo if mid - lo >= hi - mid else hi)
    v = _null_vector(A - iso * np.eye(3))
    if v is None:
        return None
    u, w = _complement(v)
    a, b, c = u @ A @ u, u @ A @ w, w @ A @ w
    ang = 0.5 * math.atan2(2.0 * b, a - c)
    cs, sn = math.cos(ang), math.sin(ang)
    big_vec = cs * u + sn * w
    small_vec = -sn * u + cs * w
    half = math.hypot(0.5 * (a - c), b)
    centre = 0.5 * (a + c)
    pairs = [(scale * float(v @ A @ v), v), (scale * (centre - half), small_vec),
             (scale * (centre + half), big_vec)]
    pairs.sort(key=lambda pv: pv[0])
    return [pv[0] for pv in pairs], np.array([pv[1] for pv in pairs])


def eigvals_sym3(M) -> Spectrum:
    """Ascending eigenvalues of a symmetric 3x3 matrix."""
    A = as_matrix(M)
    out = _deflated(A)
    if out is None:
        q = float(np.trace(A)) / 3.0
        return Spectrum(q, q, q)
    return Spectrum(*out[0])


class Eigendecomposition(NamedTuple):
    """``M = R^t diag(spectrum) R``; the rows of ``R`` are eigenvectors."""

    spectrum: Spectrum
    rotation: np.ndarray
    degenerate: bool


def eigendecompose_sym3(M) -> Eigendecomposition:
    """Spectrum and rotation with ``M = R^t diag(m) R``.

    Each row of ``R`` has its largest entry positive where the orientation
    allows, so a diagonal input with distinct entries gives the identity.
    """
    A = as_matrix(M)
    out = _deflated(A)
    if out is None:
        q = float(np.trace(A)) / 3.0
        return Eigendecomposition(Spectrum(q, q, q), np.eye(3), True)
    vals, R = out
    m = Spectrum(*vals)
    degenerate = min(m.m2 - m.m1, m.m3 - m.m2) < DEGENERACY_GAP
    lead = np.argmax(np.abs(R), axis=1)
    signs = np.sign(R[np.arange(3), lead])
    R = R * signs[:, None]
    if np.linalg.det(R) < 0:
        weakest = int(np.argmin(np.abs(R[np.arange(3), lead])))
        R[weakest] = -R[weakest]
    return Eigendecomposition(m, R, degenerate)


def conjugate(R, M) -> np.ndarray:
    """``R^t M R``."""
    R = check_rotation(R, tol=1e-10)
    A = as_matrix(M)
    out = R.T @ A @ R
    return 0.5 * (out + out.T)


def rank_one_defect(D) -> float:
    """Second singular value over the first; zero for an exact rank-one matrix."""
    sv = np.linalg.svd(np.asarray(D, dtype=float), compute_uv=False)
    if sv[0] == 0.0:
        return math.inf
    return float(sv[1] / sv[0])


class PlanePoint(NamedTuple):
    x: float
    y: float


def check_unit_trace(m, tol: float = UNIT_TRACE_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    tr = m.sum(axis=-1)
    if np.any(np.abs(tr - 1.0) > tol):
        raise NotUnitTrace(f"entries must sum to 1, got {tr}")
    return m


def project_unit_trace(m) -> PlanePoint:
    m = check_unit_trace(m)
    if m.shape != (3,):
        raise NotUnitTrace("expected a single triple")
    return PlanePoint((m[1] - m[0]) / SQRT2, (2.0 * m[2] - m[0] - m[1]) / SQRT6)


def project_many(ms) -> np.ndarray:
    """Vectorised :func:`project_unit_trace` on an (N, 3) array."""
    ms = check_unit_trace(np.atleast_2d(ms))
    return np.column_stack(
        ((ms[:, 1] - ms[:, 0]) / SQRT2, (2.0 * ms[:, 2] - ms[:, 0] - ms[:, 1]) / SQRT6)
    )


def lift_unit_trace(xy) -> np.ndarray:
    """Inverse of the projection: plane coordinates back to a unit-trace triple."""
    xy = np.asarray(xy, dtype=float)
    return PLANE_CENTER + xy @ PLANE_BASIS
