"""The attainable region of the unit-trace plane and its comparison polygon.

Two uniaxial seeds ``U_alpha`` and ``U_beta`` are rank-one connected to the
multiples ``alpha S`` and ``beta S``.  Sweeping the connecting segments and
renormalizing the trace gives the arcs ``Gamma_alpha`` and ``Gamma_beta``
from ``S`` to the seeds.  Their twelve images under coordinate permutations
close up into the boundary of the region.  Regions are sampled polylines, and
membership is a winding-number test with an inclusive band.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AngleOutOfRange,
    BoundaryGap,
    ConnectionFailure,
    IdentityFailure,
    InclusionViolation,
    ValidationError,
    WitnessFailure,
)
from .linalg import (
    CrystalSpectrum,
    certificate_tol,
    check_unit_trace,
    eigvals_sym3,
    project_many,
    rank_one_defect,
)
from .t2set import H_eval, uniaxial_roots

GAP_TOL = 1e-8
BOUNDARY_BAND = 1e-9
ROOT_TOL = 1e-12
IDENTITY_TOL = 1e-12
PERMUTATIONS = tuple(itertools.permutations(range(3)))


@dataclass(frozen=True)
class UniaxialPoints:
    u_alpha: float
    u_beta: float
    U_alpha: np.ndarray
    U_beta: np.ndarray
    alpha: float
    beta: float


def uniaxial_points(S) -> UniaxialPoints:
    S = CrystalSpectrum.of(S)
    s1, s2, s3 = S
    signs = (H_eval(0.0, S), H_eval(1.0 / 3.0, S), H_eval(1.0, S))
    if not (signs[0] > 0.0 and signs[1] < 0.0 and signs[2] > 0.0):
        raise ValidationError(f"unexpected sign pattern of H at 0, 1/3, 1: {signs}")
    ua, ub = uniaxial_roots(S)
    if not (ua < 1.0 / 3.0 < ub):
        raise ValidationError(f"roots {ua}, {ub} do not straddle 1/3")
    for u in (ua, ub):
        if abs(H_eval(u, S)) > ROOT_TOL:
            raise ValidationError(f"H({u}) = {H_eval(u, S):.3e} is not a root")
    return UniaxialPoints(
        ua, ub,
        np.array([ua, ua, 1.0 - 2.0 * ua]),
        np.array([1.0 - 2.0 * ub, ub, ub]),
        ua / s2, ub / s2,
    )


@dataclass(frozen=True)
class BoundaryAngles:
    phi_alpha: float
    phi_beta: float
    theta_alpha: float
    theta_beta: float
    R_alpha: np.ndarray
    R_beta: np.ndarray
    n_alpha: np.ndarray
    n_beta: np.ndarray
    residual_alpha: float
    residual_beta: float


def _half_angle(c: float, what: str) -> float:
    if abs(c) > 1.0 + 1e-10:
        raise AngleOutOfRange(f"cos(2 {what}) = {c} is not a cosine")
    return 0.5 * math.acos(min(1.0, max(-1.0, c)))


def _seed_rotation(branch: str, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    if branch == "alpha":
        return np.array([[0.0, -1.0, 0.0], [-c, 0.0, s], [-s, 0.0, -c]])
    return np.array([[c, 0.0, -s], [s, 0.0, c], [0.0, -1.0, 0.0]])


def boundary_angles(S, up: UniaxialPoints | None = None) -> BoundaryAngles:
    """Normals and rotations connecting each uniaxial seed to its multiple of ``S``.

    The doubled-angle cosines fix the angles up to sign.  The normal angle is
    taken in ``[0, pi/2]``.  Of the two rotation angles ``+-theta`` the one
    that satisfies the connection is kept.
    """
    S = CrystalSpectrum.of(S)
    up = up or uniaxial_points(S)
    s1, s2, s3 = S
    K = 1.0 + s1 * s1 - 9.0 * s2 * s2 - 2.0 * s1 * s3 + s3 * s3
    out = {}
    for branch, u, lam, U in (("alpha", up.u_alpha, up.alpha, up.U_alpha),
                              ("beta", up.u_beta, up.beta, up.U_beta)):
        c2phi = (2.0 * s2 * (3.0 * s2 - 1.0) + u * K) / (2.0 * (s3 - s1) * (s2 - u))
        phi = _half_angle(c2phi, "phi_" + branch)
        if branch == "alpha":
            c2theta = (u * (s3 - s1) + (u - s2) * c2phi) / (s2 * (1.0 - 3.0 * u))
        else:
            c2theta = (u * (s1 - s3) + (s2 - u) * c2phi) / (s2 * (1.0 - 3.0 * u))
        theta = _half_angle(c2theta, "theta_" + branch)
        n = np.array([math.cos(phi), 0.0, math.sin(phi)])
        G = lam * S.matrix() + (1.0 - lam) * np.outer(n, n)
        D = np.diag(U)
        best = None
        for th in (theta, -theta):
            R = _seed_rotation(branch, th)
            res = float(np.linalg.norm(R.T @ D @ R - G))
            if best is None or res < best[0]:
                best = (res, th, R)
        res, th, R = best
        if res > certificate_tol():
            raise ConnectionFailure(f"{branch} seed connection residual {res:.3e}")
        out[branch] = (phi, th, R, n, res)
    a, b = out["alpha"], out["beta"]
    return BoundaryAngles(a[0], b[0], a[1], b[1], a[2], b[2], a[3], b[3], a[4], b[4])


@dataclass(frozen=True)
class EigenCurve:
    branch: str
    p: np.ndarray
    m: np.ndarray
    xy: np.ndarray

    def __len__(self) -> int:
        return len(self.p)


def gamma_curve(S, up: UniaxialPoints, angles: BoundaryAngles, branch: str, count: int) -> EigenCurve:
    """Ordered spectra of the trace-normalized rank-one segment from ``S`` to a seed."""
    if count < 2:
        raise ValidationError("count must be at least 2")
    S = CrystalSpectrum.of(S)
    if branch == "alpha":
        lam, R, U = up.alpha, angles.R_alpha, up.U_alpha
    elif branch == "beta":
        lam, R, U = up.beta, angles.R_beta, up.U_beta
    else:
        raise ValidationError(f"unknown branch {branch!r}")
    seed = R.T @ np.diag(U) @ R
    ps = np.linspace(0.0, 1.0, count)
    ms = np.empty((count, 3))
    for i, p in enumerate(ps):
        eta = p / (p + (1.0 - p) * lam)
        ms[i] = eigvals_sym3(eta * seed + (1.0 - eta) * S.matrix()).array()
    # the ends are known exactly
    ms[0] = S.array()
    ms[-1] = np.sort(U)
    return EigenCurve(branch, ps, ms, project_many(ms))


@dataclass(frozen=True)
class Region:
    """Closed boundary polyline, first point repeated at the end."""

    S: CrystalSpectrum
    triples: np.ndarray
    points: np.ndarray
    arc: tuple[str, ...]
    perm: tuple[str, ...]
    p: np.ndarray
    per_arc: int

    def signed_area(self) -> float:
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def _perm_label(perm) -> str:
    return "".join(str(i + 1) for i in perm)


def _assemble(S: CrystalSpectrum, arcs: dict[str, tuple[np.ndarray, np.ndarray]], per_arc: int) -> Region:
    # arcs: label -> (p values, triples) running from S to its uniaxial end
    pieces = []
    for perm in PERMUTATIONS:
        for label, (ps, ms) in arcs.items():
            pieces.append((label, _perm_label(perm), ps, ms[:, list(perm)]))

    def ends(piece):
        return piece[3][0], piece[3][-1]

    first = pieces.pop(0)
    chain = [first]
    cursor = ends(first)[1]
    while pieces:
        for i, piece in enumerate(pieces):
            a, b = ends(piece)
            if np.linalg.norm(a - cursor) <= GAP_TOL:
                chain.append(piece)
                cursor = b
                break
            if np.linalg.norm(b - cursor) <= GAP_TOL:
                label, pl, ps, ms = piece
                chain.append((label, pl, ps[::-1], ms[::-1]))
                cursor = a
                break
        else:
            raise BoundaryGap(f"no arc continues the boundary from {tuple(cursor)}")
        pieces.pop(i)
    if np.linalg.norm(cursor - ends(first)[0]) > GAP_TOL:
        raise BoundaryGap("boundary does not close up")

    labels, perms, pvals, rows = [], [], [], []
    for k, (label, pl, ps, ms) in enumerate(chain):
        start = 0 if k == 0 else 1
        rows.append(ms[start:])
        pvals.append(ps[start:])
        labels += [label] * (len(ps) - start)
        perms += [pl] * (len(ps) - start)
    triples = np.vstack(rows)
    triples[-1] = triples[0]
    pv = np.concatenate(pvals)
    region = Region(S, triples, project_many(triples), tuple(labels), tuple(perms), pv, per_arc)
    if region.signed_area() < 0.0:
        region = Region(S, triples[::-1].copy(), region.points[::-1].copy(),
                        tuple(labels[::-1]), tuple(perms[::-1]), pv[::-1].copy(), per_arc)
    return region


def full_boundary(S, count: int = 256) -> Region:
    if count < 16:
        raise ValidationError("need at least 16 samples per arc")
    S = CrystalSpectrum.of(S)
    up = uniaxial_points(S)
    angles = boundary_angles(S, up)
    arcs = {}
    for branch in ("alpha", "beta"):
        c = gamma_curve(S, up, angles, branch, count)
        arcs[branch] = (c.p, c.m)
    return _assemble(S, arcs, count)


def nm_vertices(S) -> tuple[float, float]:
    s1, s2, s3 = CrystalSpectrum.of(S)
    return s2 / (2.0 * s2 + s3), s2 / (2.0 * s2 + s1)


def nm_region(S, count: int = 256) -> Region:
    """Outer boundary of the comparison polygon: segments from ``S`` to ``V_alpha`` and ``V_beta``."""
    if count < 2:
        raise ValidationError("count must be at least 2")
    S = CrystalSpectrum.of(S)
    va, vb = nm_vertices(S)
    ps = np.linspace(0.0, 1.0, count)
    s = S.array()
    arcs = {}
    for label, V in (("alpha", np.array([va, va, 1.0 - 2.0 * va])),
                     ("beta", np.array([1.0 - 2.0 * vb, vb, vb]))):
        ms = (1.0 - ps)[:, None] * s + ps[:, None] * V
        ms[0], ms[-1] = s, V
        arcs[label] = (ps, ms)
    return _assemble(S, arcs, count)


def _segment_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # distance from each of pts (N,2) to each segment a->b (M,2); returns (N,M)
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    rel = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("nmj,mj->nm", rel, d) / np.where(dd > 0.0, dd, 1.0), 0.0, 1.0)
    foot = a[None, :, :] + t[..., None] * d[None, :, :]
    return np.linalg.norm(pts[:, None, :] - foot, axis=2)


def winding_numbers(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    a, b = poly[:-1], poly[1:]
    px, py = points[:, 0:1], points[:, 1:2]
    ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
    side = (bx - ax) * (py - ay) - (px - ax) * (by - ay)
    up = (ay <= py) & (by > py) & (side > 0.0)
    down = (ay > py) & (by <= py) & (side < 0.0)
    return np.sum(up, axis=1) - np.sum(down, axis=1)


def boundary_distance(region: Region, xy: np.ndarray) -> np.ndarray:
    return _segment_distance(np.atleast_2d(xy), region.points[:-1], region.points[1:]).min(axis=1)


def contains_many(region: Region, ms) -> np.ndarray:
    ms = np.atleast_2d(np.asarray(ms, dtype=float))
    for m in ms:
        check_unit_trace(m)
    xy = project_many(ms)
    inside = winding_numbers(xy, region.points) != 0
    rest = ~inside
    if rest.any():
        inside[rest] = boundary_distance(region, xy[rest]) <= BOUNDARY_BAND
    return inside


def contains(region: Region, m) -> bool:
    return bool(contains_many(region, [m])[0])


@dataclass(frozen=True)
class Witness:
    P1: np.ndarray
    P2: np.ndarray
    lam: float
    weight: float
    axis: int
    defect: float


def straight_line_witness(region: Region, m) -> Witness:
    """Boundary points ``P1``, ``P2`` on the line through ``m`` and the vertex ``e_k``.

    ``k`` is the index of the largest entry of ``m``, ``m = w P1 + (1-w) P2``,
    and ``diag(P1) - lam diag(P2)`` is a multiple of ``e_k (x) e_k``.
    """
    m = check_unit_trace(np.asarray(m, dtype=float))
    if not contains(region, m):
        raise WitnessFailure(f"{tuple(m)} is not in the region")
    k = int(np.argmax(m))
    e = np.zeros(3)
    e[k] = 1.0
    d = m - e
    if np.linalg.norm(d) == 0.0:
        raise WitnessFailure("m coincides with the vertex")
    # parametrize the line as e + t d in the plane; m sits at t = 1
    exy, dxy = project_many([e])[0], project_many([m])[0] - project_many([e])[0]
    a, b = region.points[:-1], region.points[1:]
    seg = b - a
    den = dxy[0] * seg[:, 1] - dxy[1] * seg[:, 0]
    rel = a - exy
    ok = np.abs(den) > 1e-15
    t = np.where(ok, (rel[:, 0] * seg[:, 1] - rel[:, 1] * seg[:, 0]) / np.where(ok, den, 1.0), np.nan)
    s = np.where(ok, (rel[:, 0] * dxy[1] - rel[:, 1] * dxy[0]) / np.where(ok, den, 1.0), np.nan)
    hit = ok & (s >= -1e-12) & (s <= 1.0 + 1e-12)
    ts = t[hit]
    far, near = ts[ts >= 1.0 - 1e-12], ts[(ts <= 1.0 + 1e-12) & (ts > 0.0)]
    if far.size == 0 or near.size == 0:
        raise WitnessFailure(f"line through {tuple(m)} misses the boundary")
    t1, t2 = float(far.min()), float(near.max())
    P1, P2 = e + t1 * d, e + t2 * d
    lam = t1 / t2
    weight = 1.0 if t1 == t2 else (1.0 - t2) / (t1 - t2)
    gap = np.diag(P1) - lam * np.diag(P2)
    defect = 0.0 if np.linalg.norm(gap) < 1e-15 else rank_one_defect(gap)
    if defect > 1e-9:
        raise WitnessFailure(f"endpoints are not rank-one connected (defect {defect:.3e})")
    return Witness(P1, P2, lam, weight, k, defect)


@dataclass(frozen=True)
class InclusionReport:
    samples: int
    outside: int
    min_clearance_alpha: float
    min_clearance_beta: float
    inclusion_ok: bool


def _clearance(curve: EigenCurve, S: CrystalSpectrum, V: np.ndarray) -> np.ndarray:
    """Signed distance of curve samples from the line through ``S`` and ``V``,
    positive on the side away from the isotropic point."""
    xy = curve.xy
    a, b = project_many([S.array(), V])
    d = (b - a) / np.linalg.norm(b - a)
    normal = np.array([-d[1], d[0]])
    if np.dot(-a, normal) > 0.0:  # center of the plane is the origin
        normal = -normal
    return (xy - a) @ normal


def check_inclusion(S, count: int = 256) -> InclusionReport:
    """Comparison polygon inside the region, and each arc strictly outside its chord."""
    if count < 64:
        raise ValidationError("need at least 64 samples")
    S = CrystalSpectrum.of(S)
    region = full_boundary(S, count)
    poly = nm_region(S, count)
    flags = contains_many(region, poly.triples[:-1])
    outside = int(np.count_nonzero(~flags))
    up = uniaxial_points(S)
    angles = boundary_angles(S, up)
    va, vb = nm_vertices(S)
    ca = _clearance(gamma_curve(S, up, angles, "alpha", count), S, np.array([va, va, 1.0 - 2.0 * va]))
    cb = _clearance(gamma_curve(S, up, angles, "beta", count), S, np.array([1.0 - 2.0 * vb, vb, vb]))
    report = InclusionReport(len(flags), outside, float(ca[1:].min()), float(cb[1:].min()),
                             bool(outside == 0 and ca[1:].min() > 0.0 and cb[1:].min() > 0.0))
    if outside:
        raise InclusionViolation(f"{outside} of {len(flags)} polygon samples fall outside the region")
    return report


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def identity_suite(S, p1: float = 0.5, tol: float = IDENTITY_TOL) -> list[IdentityCheck]:
    """Closed-form identities behind the root bounds and the chord comparison.

    ``p1`` is the segment parameter used by the chord-intersection reduction.
    """
    S = CrystalSpectrum.of(S)
    s1, s2, s3 = S
    va, vb = nm_vertices(S)
    ua, _ = uniaxial_roots(S)
    alpha = ua / s2
    checks = [
        IdentityCheck("H(1/3)", H_eval(1.0 / 3.0, S), -(s1 - s2) * (s2 - s3) / 3.0),
        IdentityCheck("H(v_alpha)", H_eval(va, S), -s2 * s3 * (s3 - s2) * (s2 - s1) / (2 * s2 + s3) ** 2),
        IdentityCheck("H(v_beta)", H_eval(vb, S), -s1 * s2 * (s3 - s2) * (s2 - s1) / (s1 + 2 * s2) ** 2),
        IdentityCheck("H symmetric in s1, s3", H_eval(va, (s1, s2, s3)), H_eval(va, (s3, s2, s1))),
    ]

    def chord_B(a):
        return (a * (s1 * s3 + 2 * s2 * s2) - s2) / (1.0 - a)

    u = alpha * s2
    checks.append(IdentityCheck("B two forms", (alpha ** 2 * s1 * s3 - u * (1 - 2 * u)) / (alpha * (1 - alpha)),
                                chord_B(alpha)))
    den = 2 * s2 * s2 + 2 * s1 * s3 + s2 * s3 + s3 * s3
    a_root = (s2 + s3) / den
    checks.append(IdentityCheck("s3 - B at root", s3 - chord_B(a_root), 0.0))
    checks.append(IdentityCheck("f2 at root", den * a_root - (s2 + s3), 0.0))
    checks.append(IdentityCheck("u - v_alpha at root", a_root * s2 - va,
                                2 * s2 * s3 * (s2 - s1) / ((s3 + 2 * s2) * den)))

    # chord-intersection reduction at the actual alpha
    p2 = p1 * s2 * (s2 - s1) / ((2 * s2 + s3) * (s2 - ua))
    checks.append(IdentityCheck("p2 forms", p2, p1 * va / s2 * (s2 - s1) / (1 - alpha)))
    L = 1 - p2 * (1 - alpha)
    f1 = p1 * (s1 - s2) + 2 * s2 + s3
    checks.append(IdentityCheck("L from f1", L, f1 / (2 * s2 + s3)))
    checks.append(IdentityCheck("third eigen-entry", (1 - p1) * s3 + p1 * (1 - 2 * va), s3 * L))
    B = chord_B(alpha)
    lhs = s3 * ((1 - p1) * s1 + p1 * va) - L * s1 * s3 - (1 - L) * B
    checks.append(IdentityCheck("determinant reduction", lhs, p1 * (s2 - s1) / (2 * s2 + s3) * (s3 - B)))

    for c in checks:
        if c.residual > tol * max(1.0, abs(c.rhs)):
            raise IdentityFailure(f"{c.name}: {c.lhs!r} vs {c.rhs!r}")
    return checks
