import json
import math

import numpy as np
import pytest

from momentsos import (
    AtomicMeasure,
    ExtractionError,
    GmpProblem,
    Polynomial,
    PopProblem,
    SemialgebraicSet,
    Tms,
    basis_size,
    certify_relaxation,
    check_optimality,
    dehomogenize_atoms,
    extract_atoms,
    flat_truncation,
    moment_relaxation,
    numerical_rank,
    pair,
    solve_sdp,
    tms_from_atoms,
    verify_atoms,
)

import oracles


def x(n, i):
    return Polynomial.variable(n, i)


def test_numerical_rank():
    m = np.diag([1.0, 1e-3, 1e-9])
    assert numerical_rank(m, 1e-6) == 2
    assert numerical_rank(m, 1e-10) == 3
    assert numerical_rank(m, 1e-2) == 1
    assert numerical_rank(np.zeros((3, 3)), 1e-6) == 0


def test_flat_truncation_on_atomic_moments():
    rng = np.random.default_rng(0)
    wts, pts = oracles.random_atoms(rng, 2, 2)
    w = tms_from_atoms(AtomicMeasure(wts, pts), 6)
    ft = flat_truncation(w, d0=1, dK=1)
    assert ft.flat
    assert ft.rank == 2
    assert not ft.zero_measure
    assert ft.order <= 3
    data = ft.as_json()
    assert data["flat"] is True and data["rank"] == 2


def test_flat_truncation_zero_measure():
    w = Tms(2, 4, np.zeros(basis_size(2, 4)))
    ft = flat_truncation(w, d0=1, dK=1)
    assert ft.flat and ft.rank == 0 and ft.zero_measure


def test_flat_truncation_rejects_bad_orders():
    w = Tms(2, 2, np.zeros(basis_size(2, 2)))
    with pytest.raises(ValueError):
        flat_truncation(w, d0=3, dK=1)
    with pytest.raises(ValueError):
        flat_truncation(w, d0=1, dK=0)


def test_flat_truncation_monotone_in_rank_tol():
    """Loosening rank_tol never increases the certified order."""
    rng = np.random.default_rng(1)
    for _ in range(10):
        n = int(rng.integers(1, 4))
        r = int(rng.integers(1, 4))
        wts, pts = oracles.random_atoms(rng, n, r)
        w = tms_from_atoms(AtomicMeasure(wts, pts), 6)
        # mild noise so rank decisions actually depend on the tolerance
        w = Tms(n, 6, w.values + rng.normal(0, 1e-9, len(w.values)))
        prev = None
        for tol in (1e-12, 1e-9, 1e-6, 1e-3, 1e-1):
            ft = flat_truncation(w, d0=1, dK=1, rank_tol=tol)
            t = ft.order if ft.flat else math.inf
            if prev is not None:
                assert t <= prev
            prev = t


def test_extract_atoms_single_atom():
    mu = AtomicMeasure(np.array([2.0]), np.array([[0.5, -0.25]]))
    w = tms_from_atoms(mu, 4)
    got = extract_atoms(w, 2)
    assert got.num_atoms == 1
    assert np.allclose(got.points[0], [0.5, -0.25], atol=1e-8)
    assert got.weights[0] == pytest.approx(2.0, abs=1e-8)


def test_extract_atoms_round_trip_small():
    rng = np.random.default_rng(2)
    for _ in range(10):
        n = int(rng.integers(1, 4))
        r = int(rng.integers(1, 4))
        wts, pts = oracles.random_atoms(rng, n, r)
        t = max(2, r)
        w = tms_from_atoms(AtomicMeasure(wts, pts), 2 * t)
        got = extract_atoms(w, t)
        assert got.num_atoms == r
        # nearest-neighbor pairing
        for lam, u in zip(wts, pts):
            d = np.linalg.norm(got.points - u, axis=1)
            j = int(np.argmin(d))
            assert d[j] < 1e-7
            assert abs(got.weights[j] - lam) < 1e-7


def test_extract_atoms_needs_enough_degree():
    mu = AtomicMeasure(np.array([1.0]), np.array([[0.5]]))
    w = tms_from_atoms(mu, 2)
    with pytest.raises((ValueError, ExtractionError)):
        extract_atoms(w, 3)


def test_dehomogenize_atoms_split_and_scaling():
    # one finite atom, one at infinity, one with negative tau
    pts = np.array(
        [
            [0.6, 0.8, 0.0],
            [0.0, 1.0, 0.0],
            [-0.6, 0.0, 0.8],
        ]
    )
    wts = np.array([1.0, 2.0, 3.0])
    finite, at_inf = dehomogenize_atoms(AtomicMeasure(wts, pts), degree=2)
    assert finite.num_atoms == 2
    assert at_inf.num_atoms == 1
    assert np.allclose(at_inf.points[0], [0.0, 1.0, 0.0])
    assert np.allclose(finite.points[0], [0.8 / 0.6, 0.0])
    assert finite.weights[0] == pytest.approx(1.0 * 0.6**2)
    # the tau < 0 atom is flipped to tau > 0 before slicing
    assert np.allclose(finite.points[1], [0.0, -0.8 / 0.6])
    assert finite.weights[1] == pytest.approx(3.0 * 0.6**2)


def test_dehomogenize_preserves_pairings():
    """pair(f, mu) = pair(f homogenized, mu lifted) within 1e-8."""
    rng = np.random.default_rng(3)
    for _ in range(25):
        n = int(rng.integers(1, 4))
        f = Polynomial(n, oracles.random_terms(rng, n, 3, 5))
        d = max(f.degree, 1)
        wts, pts = oracles.random_atoms(rng, n, int(rng.integers(1, 4)))
        # lift each atom onto the unit sphere in n+1 coordinates
        lifted_pts, lifted_wts = [], []
        for lam, u in zip(wts, pts):
            v = np.concatenate([[1.0], u])
            nrm = np.linalg.norm(v)
            lifted_pts.append(v / nrm)
            lifted_wts.append(lam * nrm**d)
        lifted = AtomicMeasure(np.array(lifted_wts), np.array(lifted_pts))
        fh = f.homogenize_to_degree(d)
        want = AtomicMeasure(wts, pts).integrate(f)
        got = lifted.integrate(fh)
        assert abs(got - want) <= 1e-8 * (1.0 + abs(want))
        # and dehomogenizing the lifted measure recovers the original
        finite, at_inf = dehomogenize_atoms(lifted, d)
        assert at_inf.num_atoms == 0
        back = finite.integrate(f)
        assert abs(back - want) <= 1e-8 * (1.0 + abs(want))


def test_verify_atoms_reports_violations():
    n = 2
    circle = SemialgebraicSet(
        n,
        equalities=(x(n, 0) ** 2 + x(n, 1) ** 2 - 1.0,),
        inequalities=(x(n, 1),),
    )
    good = AtomicMeasure(np.array([1.0]), np.array([[0.0, 1.0]]))
    rep = verify_atoms(good, circle, pairings=[(Polynomial.constant(n, 1.0), 1.0, True)])
    assert rep.ok
    assert rep.eq_violation < 1e-12 and rep.ineq_violation == 0.0
    bad = AtomicMeasure(np.array([1.0]), np.array([[0.0, -1.2]]))
    rep = verify_atoms(bad, circle)
    assert not rep.ok
    assert rep.eq_violation > 0.1
    assert rep.ineq_violation > 0.1
    data = rep.as_json()
    json.dumps(data)
    assert data["ok"] is False


def test_certify_relaxation_interval():
    pop = PopProblem(
        SemialgebraicSet(1, inequalities=(1.0 - x(1, 0) ** 2,), archimedean=True),
        -x(1, 0),
    )
    comp = moment_relaxation(pop, 2)
    sol = solve_sdp(comp.sdp)
    cert = certify_relaxation(comp, sol)
    assert cert.certified
    assert cert.value == pytest.approx(-1.0, abs=1e-6)
    assert cert.measure.num_atoms == 1
    assert cert.measure.points[0][0] == pytest.approx(1.0, abs=1e-6)
    json.dumps(cert.as_json())


def test_certify_relaxation_zero_measure():
    """A feasible GMP whose optimal measure is the zero measure."""
    n = 1
    one = Polynomial.constant(n, 1.0)
    f = one + x(n, 0) ** 2
    k = SemialgebraicSet(n, inequalities=(1.0 - x(n, 0) ** 2,), archimedean=True)
    gmp = GmpProblem(k, f, a=(one,), b=[0.0], m1=0, d=2)  # <1, y> >= 0
    comp = moment_relaxation(gmp, 1)
    sol = solve_sdp(comp.sdp)
    cert = certify_relaxation(comp, sol)
    assert cert.certified
    assert cert.flat.zero_measure
    assert cert.measure.num_atoms == 0
    assert cert.value == pytest.approx(0.0, abs=1e-6)


def test_check_optimality_sphere_subproblem():
    n = 3
    ball = sum(x(n, i) ** 2 for i in range(n)) - 1.0
    f = sum(x(n, i) ** 6 for i in range(n)) - (
        x(n, 0) ** 3 * x(n, 1) ** 3
        + x(n, 1) ** 3 * x(n, 2) ** 3
        + x(n, 2) ** 3 * x(n, 0) ** 3
    )
    pop = PopProblem(SemialgebraicSet(n, equalities=(ball,)), f)
    s = 1.0 / math.sqrt(3.0)
    for point in ((s, s, s), (-s, -s, -s)):
        rep = check_optimality(pop, point)
        assert rep.feasible
        assert rep.licq
        assert rep.stationary
        assert rep.strict_complementarity
        assert rep.sosc
        assert rep.objective == pytest.approx(0.0, abs=1e-12)


def test_check_optimality_flat_cubic_fails_sosc():
    pop = PopProblem(SemialgebraicSet(1), x(1, 0) ** 3)
    rep = check_optimality(pop, [0.0])
    assert rep.licq and rep.stationary
    assert not rep.sosc
    assert rep.reduced_hessian_min_eig == pytest.approx(0.0, abs=1e-12)


def test_check_optimality_active_set_rule():
    """Active set is exactly {j : |c_j(x)| <= act_tol}, even off-feasible."""
    n = 2
    g1 = x(n, 0)  # active at the test point
    g2 = x(n, 1) - 1.0  # inactive and violated
    pop = PopProblem(SemialgebraicSet(n, inequalities=(g1, g2)), x(n, 0) + x(n, 1))
    rep = check_optimality(pop, [0.0, -0.5])
    assert not rep.feasible
    assert rep.active_inequalities == (0,)
    rep2 = check_optimality(pop, [0.0, -0.5], act_tol=2.0)
    assert rep2.active_inequalities == (0, 1)


def test_check_optimality_residual_recompute():
    """Reported KKT residual matches an independent reconstruction."""
    n = 2
    ball = x(n, 0) ** 2 + x(n, 1) ** 2 - 1.0
    g = x(n, 1)
    f = x(n, 0) ** 2 - x(n, 1)
    pop = PopProblem(SemialgebraicSet(n, equalities=(ball,), inequalities=(g,)), f)
    pt = np.array([0.0, 1.0])
    rep = check_optimality(pop, pt)
    resid = f.gradient_at(pt)
    for lam, c in zip(rep.eq_multipliers, pop.set.equalities):
        resid = resid - lam * c.gradient_at(pt)
    for mu, c in zip(rep.ineq_multipliers, pop.set.inequalities):
        resid = resid - mu * c.gradient_at(pt)
    assert np.linalg.norm(resid) == pytest.approx(rep.kkt_residual, abs=1e-12)
    assert np.all(rep.ineq_multipliers >= 0.0)
    json.dumps(rep.as_json())


def test_check_optimality_point_shape():
    pop = PopProblem(SemialgebraicSet(2), x(2, 0))
    with pytest.raises(ValueError, match="coordinates"):
        check_optimality(pop, [1.0])
