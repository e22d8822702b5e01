"""Acceptance suite: one group of tests per criterion, summarized at the end of the run."""
import math
from fractions import Fraction

import numpy as np
import pytest

from polylam.attainable import (
    boundary_angles,
    check_inclusion,
    full_boundary,
    identity_suite,
    nm_vertices,
    uniaxial_points,
)
from polylam.laminate import (
    LaminateMeasure,
    barycenter,
    build_sequence,
    classify_support,
    make_schedule,
    segment_point,
    validate_laminate,
)
from polylam.linalg import CrystalSpectrum
from polylam.polycrystal import bound_residual, polycrystal_problem, sigma_star, solve_theta
from polylam.rank_one import admissible_lambdas, normal_squares
from polylam.t2set import F_eval, branch_point, sample_t2_curve, solve_double_connection

from support import S_REF, exact_normal_squares, random_spectra

S = CrystalSpectrum(*S_REF)


def connection_gaps(t, lams):
    worst_gap, worst_sum = 0.0, 0.0
    for lam in lams:
        sq = np.array(normal_squares(t, S, lam))
        n = np.sqrt(sq)
        M = lam * S.matrix() + (1.0 - lam) * np.outer(n, n)
        worst_gap = max(worst_gap, float(np.max(np.abs(np.linalg.eigvalsh(M) - np.sort(t)))))
        worst_sum = max(worst_sum, abs(float(sq.sum()) - 1.0))
    return worst_gap, worst_sum


@pytest.fixture(scope="module")
def alpha_schedule():
    points = sample_t2_curve(S, "alpha", 21)
    conn = solve_double_connection(points[10], S)
    sched = make_schedule(conn, segment_point(conn, S, 0.5), S)
    return conn, sched, build_sequence(sched, 40)


@pytest.mark.criterion(1, "connection certificate over A(S,S) and 50 curve points")
def test_c1_connections_at_s():
    lams = admissible_lambdas(S.array(), S).sample_interior(200)
    assert len(lams) == 200
    gap, total = connection_gaps(S.array(), lams)
    assert gap <= 1e-9
    assert total <= 1e-10


@pytest.mark.criterion(1, "connection certificate over A(S,S) and 50 curve points")
def test_c1_connections_on_curve():
    points = []
    for branch in ("alpha", "beta"):
        # interior samples only: the ends are S itself or uniaxial
        points += sample_t2_curve(S, branch, 27)[1:-1]
    assert len(points) == 50
    for P in points:
        lams = admissible_lambdas(P.t, S).sample_interior(200)
        assert len(lams) == 200
        gap, total = connection_gaps(P.t, lams)
        assert gap <= 1e-9
        assert total <= 1e-10


@pytest.mark.criterion(2, "exact rational spot check n^2 = (11/12, 0, 1/12)")
def test_c2_rational_spot_check():
    expected = [Fraction(11, 12), Fraction(0), Fraction(1, 12)]
    assert exact_normal_squares(["0.2", "0.3", "0.5"], ["0.2", "0.3", "0.5"], Fraction(2, 3)) == expected
    got = normal_squares(S.array(), S, 2.0 / 3.0)
    assert np.allclose(got, [float(e) for e in expected], rtol=0.0, atol=1e-12)


@pytest.mark.criterion(3, "curve endpoints F(s1,s2)=s3, F(s3,s2)=s1, terminus at U_alpha")
def test_c3_endpoints():
    s1, s2, s3 = S
    assert abs(F_eval(s1, s2, S) - s3) <= 1e-14
    assert abs(F_eval(s3, s2, S) - s1) <= 1e-14
    roots = np.sort(np.roots([6 * s2, s1 * s3 - 3 * s2 - 4 * s2 ** 2, 2 * s2 ** 2]).real)
    u = roots[0]
    last = sample_t2_curve(S, "alpha", 64)[-1].t
    assert np.max(np.abs(last - [u, u, 1 - 2 * u])) <= 1e-9
    # the branch approaches the root continuously, not just at the snapped end
    near = branch_point(S, "alpha", u - 1e-9)
    assert np.max(np.abs(near - [u, u, 1 - 2 * u])) <= 1e-6
    assert abs(F_eval(u, u, S) - (1 - 2 * u)) <= 1e-9


@pytest.mark.criterion(4, "lamination dynamics: barycenter, mass decay, moment ratio test")
def test_c4_barycenter(alpha_schedule):
    _, sched, seq = alpha_schedule
    assert len(seq) == 41
    for mu in seq:
        assert np.linalg.norm(barycenter(mu) - sched.A) < 1e-10


@pytest.mark.criterion(4, "lamination dynamics: barycenter, mass decay, moment ratio test")
def test_c4_mass_outside(alpha_schedule):
    conn, sched, seq = alpha_schedule
    t1, t2, _ = conn.point.t
    s2 = S.s2
    q = t1 * (s2 - t2) / (t2 * (s2 - t1))
    for k, mu in enumerate(seq):
        assert abs(classify_support(mu, S).mass_outside - 0.5 * q ** k) <= 1e-12


@pytest.mark.criterion(4, "lamination dynamics: barycenter, mass decay, moment ratio test")
def test_c4_ratio_test(alpha_schedule):
    conn, sched, _ = alpha_schedule
    t1, t2, _ = conn.point.t
    s2 = S.s2
    r_bar = 1 + math.log((s2 - t1) / (s2 - t2)) / math.log(t2 / t1)
    assert r_bar > 2
    assert sched.r_bar == pytest.approx(r_bar, rel=1e-12)
    assert sched.ratio(r_bar - 0.1) < 1.0 < sched.ratio(r_bar + 0.1)


@pytest.mark.criterion(5, "T_k - S_k is rank one for k <= 40")
def test_c5_rank_one_pairs(alpha_schedule):
    _, sched, seq = alpha_schedule
    for k, mu in enumerate(seq):
        S_k, T_k = mu.atoms[-2].matrix, mu.atoms[-1].matrix
        sv = np.linalg.svd(T_k - S_k, compute_uv=False)
        assert sv[1] < 1e-10 * np.linalg.norm(T_k - S_k)


@pytest.mark.criterion(6, "uniaxial points: roots of H, ordering, seed connections")
@pytest.mark.parametrize("spectrum", [S] + random_spectra(20, seed=6))
def test_c6_uniaxial(spectrum):
    s1, s2, s3 = spectrum
    up = uniaxial_points(spectrum)
    H = np.poly1d([6 * s2, s1 * s3 - 3 * s2 - 4 * s2 ** 2, 2 * s2 ** 2])
    assert abs(H(up.u_alpha)) <= 1e-12 and abs(H(up.u_beta)) <= 1e-12
    assert s1 <= up.u_alpha < 1 / 3 < up.u_beta <= s3
    ang = boundary_angles(spectrum, up)
    for R, U, lam, n in ((ang.R_alpha, up.U_alpha, up.alpha, ang.n_alpha),
                         (ang.R_beta, up.U_beta, up.beta, ang.n_beta)):
        lhs = R.T @ np.diag(U) @ R
        rhs = lam * spectrum.matrix() + (1 - lam) * np.outer(n, n)
        assert np.linalg.norm(lhs - rhs) < 1e-9


@pytest.mark.criterion(7, "comparison polygon inside the region, ordering, clearance")
@pytest.mark.parametrize("spectrum", [S] + random_spectra(50, seed=7))
def test_c7_region_comparison(spectrum):
    up = uniaxial_points(spectrum)
    va, vb = nm_vertices(spectrum)
    assert up.u_alpha < va < vb < up.u_beta
    rep = check_inclusion(spectrum, 128)
    assert rep.outside == 0
    assert rep.min_clearance_alpha > 0.0
    assert rep.inclusion_ok


@pytest.mark.criterion(8, "closed-form identities for 100 random spectra")
@pytest.mark.parametrize("spectrum", random_spectra(100, seed=8, min_gap=1e-3))
def test_c8_identities(spectrum):
    s1, s2, s3 = spectrum
    H = np.poly1d([6 * s2, s1 * s3 - 3 * s2 - 4 * s2 ** 2, 2 * s2 ** 2])
    va, vb = s2 / (2 * s2 + s3), s2 / (2 * s2 + s1)
    assert abs(H(va) + s2 * s3 * (s3 - s2) * (s2 - s1) / (2 * s2 + s3) ** 2) <= 1e-12
    assert abs(H(vb) + s1 * s2 * (s3 - s2) * (s2 - s1) / (s1 + 2 * s2) ** 2) <= 1e-12
    den = 2 * s2 ** 2 + 2 * s1 * s3 + s2 * s3 + s3 ** 2
    a = (s2 + s3) / den
    B = (a * (s1 * s3 + 2 * s2 ** 2) - s2) / (1 - a)
    assert abs(s3 - B) <= 1e-12
    assert abs(den * a - (s2 + s3)) <= 1e-12
    checks = identity_suite(spectrum)
    assert max(c.residual for c in checks) <= 1e-12


@pytest.mark.criterion(9, "polycrystal pipeline for sigma = (4, 2, 1)")
def test_c9_polycrystal():
    sigma = np.array([4.0, 2.0, 1.0])
    theta = solve_theta(sigma)
    oracle = max(r.real for r in np.roots([2, 7, 0, -8]) if abs(r.imag) < 1e-12 and r.real > 0)
    assert abs(theta - oracle) < 1e-12
    assert abs(2 * theta ** 3 + 7 * theta ** 2 - 8) < 1e-12
    problem = polycrystal_problem(sigma)
    assert abs(sum(problem.S) - 1) <= 1e-12
    back = sigma_star(problem, problem.S.array()).sigma_star
    assert np.max(np.abs(back - sigma) / sigma) <= 1e-10
    region = full_boundary(problem.S, 64)
    for m in region.triples[:-1]:
        res = sigma_star(problem, m)
        star = res.sigma_star
        assert abs(bound_residual(star, theta)) <= 1e-9 * np.prod(star)
        assert np.all(star >= 1.0 - 1e-10) and np.all(star <= 4.0 + 1e-10)
        assert star.sum() <= 7.0 + 1e-10


@pytest.mark.criterion(10, "laminate validator on constructed and rank-two measures")
def test_c10_validator(alpha_schedule):
    _, _, seq = alpha_schedule
    for mu in seq[:11]:
        assert validate_laminate(mu) is True
    bad = LaminateMeasure.from_pairs([(np.diag([1.0, 2.0, 3.0]), 0.5), (np.diag([1.0, 3.0, 4.0]), 0.5)])
    assert validate_laminate(bad) is False


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
