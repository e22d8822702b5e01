"""Finite-order laminates and the infinite-rank lamination sequence.

A doubly connected seed ``T`` gives a rotation ``Q`` and a scale ``lam`` such
that the rank-one segment from ``S0 = lambda1 S`` to ``T0 = R1^t T R1`` can be
split forever: each generation replaces the single atom outside ``K(S)`` by
a rank-one pair scaled by ``lam`` and rotated by ``Q``.  Mass off ``K(S)``
decays like ``q^k`` while the atoms grow like ``lam^k``, which fixes the
integrability exponent ``r_bar``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConstructionDrift,
    DegenerateBarycenter,
    Inconclusive,
    NotConvexCombination,
    NotOnSegment,
    NotRankOne,
    PolylamError,
    ValidationError,
)
from .linalg import CrystalSpectrum, SymMat3, eigvals_sym3, rank_one_defect
from .t2set import DoubleConnection

WEIGHT_TOL = 1e-12
SPLIT_TOL = 1e-10
SEGMENT_TOL = 1e-10
KS_TOL = 1e-8
MAX_ATOMS = 64


def _as_array(M) -> np.ndarray:
    if isinstance(M, SymMat3):
        return M.array()
    A = np.asarray(M, dtype=float)
    if A.shape != (3, 3):
        raise ValidationError(f"expected a 3x3 matrix, got shape {A.shape}")
    return A


@dataclass(frozen=True)
class DiracAtom:
    matrix: np.ndarray
    weight: float

    def __post_init__(self):
        if not self.weight > 0.0:
            raise ValidationError(f"atom weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class LaminateMeasure:
    atoms: tuple[DiracAtom, ...]
    generation: int = 0

    def __post_init__(self):
        total = sum(a.weight for a in self.atoms)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"weights sum to {total!r}, not 1")

    @classmethod
    def dirac(cls, A) -> "LaminateMeasure":
        return cls((DiracAtom(_as_array(A).copy(), 1.0),))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[object, float]], generation: int = 0) -> "LaminateMeasure":
        return cls(tuple(DiracAtom(_as_array(M).copy(), float(w)) for M, w in pairs), generation)

    def __len__(self) -> int:
        return len(self.atoms)

    def weights(self) -> np.ndarray:
        return np.array([a.weight for a in self.atoms])

    def matrices(self) -> np.ndarray:
        return np.array([a.matrix for a in self.atoms])


def barycenter(mu: LaminateMeasure) -> np.ndarray:
    return np.einsum("i,ijk->jk", mu.weights(), mu.matrices())


def moment(mu: LaminateMeasure, r: float) -> float:
    if r < 1.0:
        raise ValidationError(f"moment order must be >= 1, got {r}")
    norms = np.linalg.norm(mu.matrices(), axis=(1, 2))
    return float(np.dot(mu.weights(), norms ** r))


def _scale(*Ms: np.ndarray) -> float:
    return 1.0 + max(float(np.linalg.norm(M)) for M in Ms)


def split(mu: LaminateMeasure, atom_index: int, B, C, t: float) -> LaminateMeasure:
    """Replace atom ``atom_index`` (= ``t B + (1-t) C``) by masses at ``B`` and ``C``.

    An endpoint of weight zero is dropped; a new atom bitwise equal to an
    existing one is folded into it.
    """
    B, C = _as_array(B), _as_array(C)
    atom = mu.atoms[atom_index]
    if not 0.0 <= t <= 1.0:
        raise NotConvexCombination(f"split parameter {t} outside [0, 1]")
    if np.linalg.norm(t * B + (1.0 - t) * C - atom.matrix) > SPLIT_TOL * _scale(atom.matrix, B, C):
        raise NotConvexCombination("atom is not the stated convex combination of B and C")
    if rank_one_defect(B - C) > SPLIT_TOL:
        raise NotRankOne(f"B - C is not rank one (defect {rank_one_defect(B - C):.3e})")

    rest = list(mu.atoms[:atom_index]) + list(mu.atoms[atom_index + 1:])
    for M, w in ((B, atom.weight * t), (C, atom.weight * (1.0 - t))):
        if w == 0.0:
            continue
        for i, other in enumerate(rest):
            if np.array_equal(other.matrix, M):
                rest[i] = DiracAtom(other.matrix, other.weight + w)
                break
        else:
            rest.append(DiracAtom(M.copy(), w))
    return LaminateMeasure(tuple(rest), mu.generation)


@dataclass(frozen=True)
class LaminationSchedule:
    p: float
    q: float
    lam: float
    Q: np.ndarray
    S0: np.ndarray
    T0: np.ndarray
    n: np.ndarray
    lambda1: float
    lambda2: float
    r_bar: float
    branch: str
    A: np.ndarray = field(repr=False)

    def ratio(self, r: float) -> float:
        """Per-generation growth factor ``q lam^r`` of the ``r``-th moment tail."""
        return self.q * self.lam ** r

    def S_k(self, k: int) -> np.ndarray:
        Qk = np.linalg.matrix_power(self.Q, k)
        return self.lam ** k * Qk.T @ self.S0 @ Qk

    def T_k(self, k: int) -> np.ndarray:
        Qk = np.linalg.matrix_power(self.Q, k)
        return self.lam ** k * Qk.T @ self.T0 @ Qk

    def normals(self, k_max: int) -> np.ndarray:
        """Lamination directions ``(Q^t)^k n`` for ``k = 0..k_max``."""
        out = [self.n]
        for _ in range(k_max):
            out.append(self.Q.T @ out[-1])
        return np.array(out)


def segment_point(conn: DoubleConnection, S, p: float) -> np.ndarray:
    """``p lambda1 S + (1-p) R1^t T R1`` for a double connection."""
    S = CrystalSpectrum.of(S)
    S0 = conn.point.lambda1 * S.matrix()
    T0 = conn.R1.T @ np.diag(conn.point.t) @ conn.R1
    return p * S0 + (1.0 - p) * T0


def exponent_threshold(t, S, branch: str) -> float:
    t1, t2, _ = t
    s2 = CrystalSpectrum.of(S).s2
    if branch == "beta":
        return math.inf
    return 1.0 + math.log((s2 - t1) / (s2 - t2)) / math.log(t2 / t1)


def make_schedule(conn: DoubleConnection, A, S) -> LaminationSchedule:
    S = CrystalSpectrum.of(S)
    A = _as_array(A)
    P = conn.point
    l1, l2 = P.lambda1, P.lambda2
    S0 = l1 * S.matrix()
    T0 = conn.R1.T @ np.diag(P.t) @ conn.R1
    D = T0 - S0
    # A = S0 + (1 - p) D in the least-squares sense
    one_minus_p = float(np.sum((A - S0) * D) / np.sum(D * D))
    p = 1.0 - one_minus_p
    off = float(np.linalg.norm(S0 + one_minus_p * D - A))
    if off > SEGMENT_TOL * _scale(A, S0, T0):
        raise NotOnSegment(f"A lies {off:.3e} away from the segment [lambda1 S, R1^t T R1]")
    if not SEGMENT_TOL < p < 1.0 - SEGMENT_TOL:
        raise DegenerateBarycenter(f"barycentric weight p = {p} is not in (0, 1)")

    q = l1 * (1.0 - l2) / (l2 * (1.0 - l1))
    lam = l2 / l1
    if not 0.0 < q < 1.0:
        raise ConstructionDrift(f"schedule weight q = {q} outside (0, 1)")
    if (lam > 1.0) != (P.branch == "alpha"):
        raise ConstructionDrift(f"scale {lam} on the wrong side of 1 for the {P.branch} branch")
    Q = conn.R2.T @ conn.R1
    r_bar = exponent_threshold(P.t, S, P.branch)
    return LaminationSchedule(p, q, lam, Q, S0, T0, conn.n.copy(), l1, l2, r_bar, P.branch, A.copy())


def build_sequence(sched: LaminationSchedule, k_max: int) -> list[LaminateMeasure]:
    """``nu_0 .. nu_{k_max}``; ``nu_0 = p delta_{S0} + (1-p) delta_{T0}``.

    Each generation splits the last ``T`` atom, so ``nu_k`` has ``k + 2`` atoms.
    """
    if k_max < 0:
        raise ValidationError("k_max must be nonnegative")
    try:
        mu = split(LaminateMeasure.dirac(sched.A), 0, sched.S0, sched.T0, sched.p)
    except PolylamError as exc:
        raise ConstructionDrift(f"initial split failed: {exc}", generation=0) from exc
    mu = LaminateMeasure(mu.atoms, 0)
    out = [mu]
    S_next, T_cur = sched.S0, sched.T0
    for k in range(k_max):
        S_next = sched.lam * sched.Q.T @ S_next @ sched.Q
        T_next = sched.lam * sched.Q.T @ T_cur @ sched.Q
        idx = _find_atom(mu, T_cur)
        try:
            mu = split(mu, idx, S_next, T_next, 1.0 - sched.q)
        except PolylamError as exc:
            raise ConstructionDrift(f"split at generation {k + 1} failed: {exc}", generation=k + 1) from exc
        mu = LaminateMeasure(mu.atoms, k + 1)
        out.append(mu)
        T_cur = T_next
    return out


def _find_atom(mu: LaminateMeasure, M: np.ndarray) -> int:
    for i in range(len(mu.atoms) - 1, -1, -1):
        if np.array_equal(mu.atoms[i].matrix, M):
            return i
    raise ConstructionDrift("tracked atom vanished from the measure")


@dataclass(frozen=True)
class SupportReport:
    inside: tuple[bool, ...]
    multiples: tuple[float, ...]
    mass_outside: float


def in_cone(M, S, tol: float = KS_TOL) -> tuple[bool, float]:
    """Whether ``M = c R^t S R`` for some real ``c`` and rotation ``R``; returns ``c`` too."""
    s = CrystalSpectrum.of(S).array()
    m = eigvals_sym3(_as_array(M)).array()
    band = tol * (1.0 + float(np.linalg.norm(m)))
    best = (math.inf, 0.0)
    # negative multiples reverse the eigenvalue order
    for ref in (s, s[::-1]):
        c = float(np.dot(m, ref) / np.dot(ref, ref))
        if ref is not s and c > 0.0:
            continue
        gap = float(np.linalg.norm(m - c * ref))
        if gap < best[0]:
            best = (gap, c)
    return best[0] <= band, best[1]


def classify_support(mu: LaminateMeasure, S) -> SupportReport:
    flags, mults = [], []
    outside = 0.0
    for atom in mu.atoms:
        ok, c = in_cone(atom.matrix, S)
        flags.append(ok)
        mults.append(c)
        if not ok:
            outside += atom.weight
    return SupportReport(tuple(flags), tuple(mults), outside)


def validate_laminate(mu: LaminateMeasure, max_depth: int | None = None,
                      rank_tol: float = 1e-9, node_budget: int = 20000) -> bool:
    """Decide whether ``mu`` collapses to one Dirac mass by undoing rank-one splits.

    Each step merges two whole atoms whose difference is rank one.  Success
    proves ``mu`` is a finite-order laminate.  ``False`` means no whole-atom
    merge order works; ``Inconclusive`` is raised when the depth or node budget
    cut the search short.
    """
    if len(mu.atoms) > MAX_ATOMS:
        raise ValidationError(f"at most {MAX_ATOMS} atoms supported, got {len(mu.atoms)}")
    if max_depth is None:
        max_depth = len(mu.atoms) - 1
    state = {"nodes": 0, "cut": False}
    seen: set[bytes] = set()

    def key(atoms: Sequence[DiracAtom]) -> bytes:
        order = sorted(range(len(atoms)), key=lambda i: atoms[i].matrix.tobytes())
        return b"".join(atoms[i].matrix.tobytes() + np.float64(atoms[i].weight).tobytes() for i in order)

    def search(atoms: list[DiracAtom], depth: int) -> bool:
        if len(atoms) == 1:
            return True
        if depth >= max_depth:
            state["cut"] = True
            return False
        k = key(atoms)
        if k in seen:
            return False
        seen.add(k)
        state["nodes"] += 1
        if state["nodes"] > node_budget:
            state["cut"] = True
            return False
        pairs = []
        for i in range(len(atoms)):
            for j in range(i + 1, len(atoms)):
                defect = rank_one_defect(atoms[i].matrix - atoms[j].matrix)
                if defect <= rank_tol:
                    pairs.append((defect, i, j))
        pairs.sort()
        for _, i, j in pairs:
            a, b = atoms[i], atoms[j]
            w = a.weight + b.weight
            merged = DiracAtom((a.weight * a.matrix + b.weight * b.matrix) / w, w)
            rest = [x for n, x in enumerate(atoms) if n not in (i, j)]
            if search(rest + [merged], depth + 1):
                return True
        return False

    if search(list(mu.atoms), 0):
        return True
    if state["cut"]:
        raise Inconclusive(f"search cut off (depth {max_depth}, {state['nodes']} nodes) without a verdict")
    return False
