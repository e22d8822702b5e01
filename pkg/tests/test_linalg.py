import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polylam.errors import InvalidMatrix, InvalidRotation, InvalidSpectrum, NotUnitTrace
from polylam.linalg import (
    CrystalSpectrum,
    SymMat3,
    check_rotation,
    conjugate,
    eigendecompose_sym3,
    eigvals_sym3,
    lift_unit_trace,
    project_many,
    project_unit_trace,
    rank_one_defect,
    rotation,
)

from support import random_rotation

finite = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)
sym_entries = st.tuples(finite, finite, finite, finite, finite, finite)


def det3(A):
    return (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
            - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
            + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))


def sym(entries):
    return SymMat3(*entries).array()


def test_symmat_roundtrip():
    A = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]])
    M = SymMat3.from_array(A)
    assert np.array_equal(M.array(), A)
    assert M.entries() == (1.0, 4.0, 6.0, 2.0, 3.0, 5.0)


def test_eigvals_trivial_cases():
    assert eigvals_sym3(np.eye(3)) == (1.0, 1.0, 1.0)
    assert np.allclose(eigvals_sym3(np.diag([0.5, 0.2, 0.3])), [0.2, 0.3, 0.5], atol=1e-15)


def test_eigvals_conjugated_diagonal():
    R = rotation([0, 0, 1], math.pi / 4)
    M = R.T @ np.diag([0.2, 0.3, 0.5]) @ R
    assert np.allclose(eigvals_sym3(M), [0.2, 0.3, 0.5], atol=1e-14)


def test_eigvals_rejects_non_finite():
    M = np.eye(3)
    M[0, 1] = M[1, 0] = np.nan
    with pytest.raises(InvalidMatrix):
        eigvals_sym3(M)


@settings(max_examples=300, deadline=None)
@given(sym_entries)
def test_eigvals_match_lapack_and_char_poly(entries):
    M = sym(entries)
    m = eigvals_sym3(M).array()
    assert np.all(np.diff(m) >= 0)
    scale = 1.0 + np.linalg.norm(M)
    assert np.allclose(m, np.linalg.eigvalsh(M), atol=1e-10 * scale)
    for v in m:
        assert abs(det3(M - v * np.eye(3))) <= 1e-9 * (1.0 + np.linalg.norm(M) ** 3)


@settings(max_examples=300, deadline=None)
@given(sym_entries)
def test_eigendecomposition_roundtrip(entries):
    M = sym(entries)
    dec = eigendecompose_sym3(M)
    R = dec.rotation
    check_rotation(R, tol=1e-10)
    rebuilt = R.T @ np.diag(dec.spectrum.array()) @ R
    assert np.linalg.norm(rebuilt - M) < 1e-9 * (1.0 + np.linalg.norm(M))


def test_eigendecomposition_of_diagonal_is_identity():
    dec = eigendecompose_sym3(np.diag([0.2, 0.3, 0.5]))
    assert np.allclose(dec.rotation, np.eye(3), atol=1e-15)
    assert not dec.degenerate


def test_isotropic_flags_degenerate():
    dec = eigendecompose_sym3(np.eye(3) / 3)
    assert dec.degenerate
    assert np.allclose(dec.spectrum.array(), 1 / 3)


def test_near_degenerate_still_reconstructs():
    M = np.diag([0.3, 0.3 + 1e-12, 0.4])
    dec = eigendecompose_sym3(M)
    assert dec.degenerate
    R = dec.rotation
    assert np.linalg.norm(R.T @ np.diag(dec.spectrum.array()) @ R - M) < 1e-9


def test_conjugate_identity_and_invariants():
    rng = np.random.default_rng(1)
    for _ in range(100):
        A = rng.normal(size=(3, 3))
        M = A + A.T
        R = random_rotation(rng)
        C = conjugate(R, M)
        assert np.allclose(conjugate(np.eye(3), M), M)
        assert abs(np.trace(C) - np.trace(M)) < 1e-12
        assert np.allclose(np.linalg.eigvalsh(C), np.linalg.eigvalsh(M), atol=1e-10)


def test_conjugate_rejects_reflection():
    with pytest.raises(InvalidRotation):
        conjugate(np.diag([1.0, 1.0, -1.0]), np.eye(3))


def test_projection_examples():
    assert project_unit_trace([1 / 3, 1 / 3, 1 / 3]) == pytest.approx((0.0, 0.0), abs=1e-16)
    assert project_unit_trace([0.25, 0.25, 0.5]).x == 0.0
    with pytest.raises(NotUnitTrace):
        project_unit_trace([0.2, 0.3, 0.6])


def test_projection_equivariance():
    rng = np.random.default_rng(2)
    c, s = math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3)
    for _ in range(50):
        m = rng.dirichlet(np.ones(3))
        p = np.array(project_unit_trace(m))
        cyc = np.array(project_unit_trace(m[[2, 0, 1]]))
        # (m1, m2, m3) -> (m3, m1, m2) turns the plane counterclockwise
        assert np.linalg.norm(np.array([[c, -s], [s, c]]) @ p - cyc) < 1e-12
        swap = np.array(project_unit_trace(m[[1, 0, 2]]))
        assert np.allclose(swap, [-p[0], p[1]], atol=1e-15)


def test_projection_is_isometric_and_invertible():
    rng = np.random.default_rng(3)
    ms = rng.dirichlet(np.ones(3), size=20)
    xy = project_many(ms)
    assert np.allclose(lift_unit_trace(xy), ms, atol=1e-15)
    d3 = np.linalg.norm(ms[0] - ms[1])
    d2 = np.linalg.norm(xy[0] - xy[1])
    assert d2 == pytest.approx(d3, rel=1e-13)


@pytest.mark.parametrize("bad", [(0.3, 0.2, 0.5), (0.2, 0.3, 0.6), (0.0, 0.5, 0.5), (0.25, 0.25, 0.5)])
def test_crystal_spectrum_guards(bad):
    with pytest.raises(InvalidSpectrum):
        CrystalSpectrum(*bad)


def test_rank_one_defect():
    n = np.array([1.0, 2.0, 2.0])
    assert rank_one_defect(np.outer(n, n)) < 1e-16
    assert rank_one_defect(np.diag([1.0, 1.0, 0.0])) == pytest.approx(1.0)
