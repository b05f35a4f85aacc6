"""Certificates of convergence: flat truncation, atom extraction, KKT checks.

A relaxation order is *certified* when its optimal truncated moment sequence
passes flat truncation, an atomic representing measure is extracted, and the
atoms verify against the problem data.  The pieces are usable separately:

* flat_truncation: rank stabilization test on nested moment matrices.
* extract_atoms: multiplication-operator recovery of atoms from a flat tms.
* dehomogenize_atoms: map sphere atoms (tau, v) back to v/tau, splitting off
  directions at infinity (tau ~ 0).
* verify_atoms: feasibility / pairing / objective checks for a candidate
  atomic measure.
* check_optimality: local first- and second-order tests (LICQ, KKT
  stationarity, strict complementarity, second-order sufficiency) for a
  candidate minimizer of a polynomial optimization problem.
* certify_relaxation: glue that runs the pipeline on a solved relaxation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.linalg as sla
from scipy.optimize import lsq_linear

from .moments import AtomicMeasure, Tms, moment_matrix, tms_from_atoms
from .polynomials import Polynomial, basis_size, monomial_basis
from .relaxations import (
    CompiledRelaxation,
    GmpProblem,
    PopProblem,
    SemialgebraicSet,
    Variant,
)
from .sdp import SdpSolution

__all__ = [
    "ExtractionError",
    "FlatTruncation",
    "flat_truncation",
    "numerical_rank",
    "extract_atoms",
    "dehomogenize_atoms",
    "VerificationReport",
    "verify_atoms",
    "MomentCertificate",
    "certify_relaxation",
    "OptimalityReport",
    "check_optimality",
]


class ExtractionError(RuntimeError):
    """Atom extraction failed structurally (distinct from a non-flat tms)."""


def numerical_rank(mat: np.ndarray, rank_tol: float = 1e-6) -> int:
    """Singular values above rank_tol times the largest one.

    A matrix whose largest singular value is itself below rank_tol counts as
    zero; ratio tests on pure noise are meaningless.
    """
    if mat.size == 0:
        return 0
    s = sla.svdvals(mat)
    if s[0] <= rank_tol:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


@dataclass(frozen=True)
class FlatTruncation:
    """Outcome of the rank stabilization test.

    ranks lists (t, rank of the step-dK-smaller moment matrix, rank of the
    order-t moment matrix) for every order tried; order/rank are set when the
    two agree.  zero_measure marks the degenerate success where the moment
    matrix itself is numerically zero.
    """

    flat: bool
    order: Optional[int]
    rank: Optional[int]
    zero_measure: bool
    ranks: tuple

    def as_json(self) -> dict:
        return {
            "flat": self.flat,
            "order": self.order,
            "rank": self.rank,
            "zero_measure": self.zero_measure,
            "ranks": [
                {"t": t, "rank_low": lo, "rank_high": hi} for t, lo, hi in self.ranks
            ],
        }


def flat_truncation(
    w: Tms, d0: int, dK: int, rank_tol: float = 1e-6
) -> FlatTruncation:
    """Find the smallest t in [d0, deg(w)/2] with stable moment-matrix rank.

    Flatness at t means rank M_{t-dK}[w] = rank M_t[w]; the common rank is
    the number of atoms of the representing measure on the degree-2t
    truncation.
    """
    k = w.degree // 2
    if d0 > k:
        raise ValueError(f"d0={d0} exceeds the half degree {k} of the sequence")
    if dK < 1:
        raise ValueError("dK must be at least 1")
    ranks = []
    hit = None
    for t in range(d0, k + 1):
        r_lo = numerical_rank(moment_matrix(w, t - dK), rank_tol)
        r_hi = numerical_rank(moment_matrix(w, t), rank_tol)
        ranks.append((t, r_lo, r_hi))
        if r_lo == r_hi and hit is None:
            hit = (t, r_hi)
    if hit is None:
        return FlatTruncation(False, None, None, False, tuple(ranks))
    t, r = hit
    return FlatTruncation(True, t, r, r == 0, tuple(ranks))


def extract_atoms(
    w: Tms, t: int, rank_tol: float = 1e-6, seed: int = 0
) -> AtomicMeasure:
    """Recover an atomic measure from a tms that is flat at order t.

    Factorizes the order-t moment matrix, selects pivot monomials of degree
    <= t-1 by column-pivoted QR, forms the coordinate multiplication
    operators, and reads atom coordinates from a joint real Schur
    triangularization of a random positive mixture.  Weights are fit by least
    squares against the degree-2t moments.

    Raises ExtractionError when the pivot basis is rank deficient or the
    mixed operator has complex eigenvalues; these indicate the sequence is
    not actually flat at t (or barely so), not a programming error.
    """
    n = w.nvars
    if 2 * t > w.degree:
        raise ValueError("order t exceeds the available moment degree")
    m = moment_matrix(w, t)
    vals, vecs = sla.eigh(m)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    top = max(vals[0], 0.0)
    if top <= rank_tol:
        return AtomicMeasure.empty(n)
    r = int(np.sum(vals > rank_tol * top))
    v = vecs[:, :r]

    basis_t = monomial_basis(n, t)
    n_small = basis_size(n, t - 1)
    _, rmat, piv = sla.qr(v[:n_small].T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(rmat))
    if diag.size < r or diag[r - 1] <= rank_tol * max(diag[0], rank_tol):
        raise ExtractionError(
            "pivot monomials of degree below t do not span the moment matrix "
            "range; the sequence is not flat at this order"
        )
    piv = piv[:r]
    try:
        coords = v @ sla.inv(v[piv])
    except sla.LinAlgError as exc:
        raise ExtractionError(f"singular pivot submatrix: {exc}") from None

    ops = []
    for i in range(n):
        rows = [
            basis_t.index[
                tuple(
                    e + (1 if axis == i else 0)
                    for axis, e in enumerate(basis_t.exponents[p])
                )
            ]
            for p in piv
        ]
        ops.append(coords[rows])

    rng = np.random.default_rng(seed)
    mix = rng.random(n)
    mix /= mix.sum()
    blend = sum(c * op for c, op in zip(mix, ops))
    tri, q = sla.schur(blend, output="real")
    sub = np.abs(np.diag(tri, -1)) if r > 1 else np.zeros(0)
    scale = 1.0 + np.abs(tri).max()
    if sub.size and sub.max() > 1e-6 * scale:
        raise ExtractionError(
            "the mixed multiplication operator has complex eigenvalues; "
            "no real atomic measure matches the sequence at this order"
        )
    points = np.empty((r, n))
    for ell in range(r):
        qv = q[:, ell]
        for i in range(n):
            points[ell, i] = qv @ ops[i] @ qv

    w2t = w.truncate(2 * t)
    basis_2t = monomial_basis(n, 2 * t)
    vand = np.empty((len(basis_2t), r))
    for pos, e in enumerate(basis_2t.exponents):
        vand[pos] = [np.prod(points[ell] ** np.array(e)) for ell in range(r)]
    weights, *_ = np.linalg.lstsq(vand, w2t.values, rcond=None)
    return AtomicMeasure(weights=weights, points=points)


def dehomogenize_atoms(
    measure: AtomicMeasure, degree: int, tau_tol: float = 1e-6
) -> tuple:
    """Split sphere atoms (tau, v) into finite points v/tau and directions.

    Weights of finite atoms scale by tau^degree, matching how pairings were
    homogenized.  Atoms with |tau| <= tau_tol are returned unchanged (in
    homogeneous coordinates) as the second component; they carry mass at
    infinity.  Atoms with tau < -tau_tol are sign-flipped first, which is
    valid because homogenized data is evaluated on antipodal pairs equally
    only when degrees are even; callers using odd data with a free sign
    should have kept the tau >= 0 constraint.
    """
    finite_pts, finite_wts = [], []
    inf_pts, inf_wts = [], []
    for lam, point in zip(measure.weights, measure.points):
        tau = point[0]
        if abs(tau) <= tau_tol:
            inf_pts.append(point)
            inf_wts.append(lam)
            continue
        if tau < 0:
            point = -point
            tau = -tau
        finite_pts.append(point[1:] / tau)
        finite_wts.append(lam * tau ** degree)
    n = measure.points.shape[1]
    finite = (
        AtomicMeasure(np.array(finite_wts), np.array(finite_pts))
        if finite_pts
        else AtomicMeasure.empty(n - 1)
    )
    at_inf = (
        AtomicMeasure(np.array(inf_wts), np.array(inf_pts))
        if inf_pts
        else AtomicMeasure.empty(n)
    )
    return finite, at_inf


@dataclass(frozen=True)
class VerificationReport:
    """Numeric summary of how well an atomic measure fits problem data."""

    ok: bool
    eq_violation: float
    ineq_violation: float
    pairing_violation: float
    objective: float
    objective_gap: Optional[float]
    min_weight: float

    def as_json(self) -> dict:
        return {
            "ok": self.ok,
            "eq_violation": self.eq_violation,
            "ineq_violation": self.ineq_violation,
            "pairing_violation": self.pairing_violation,
            "objective": None if math.isnan(self.objective) else self.objective,
            "objective_gap": self.objective_gap,
            "min_weight": self.min_weight,
        }


def verify_atoms(
    measure: AtomicMeasure,
    set_: SemialgebraicSet,
    pairings: Optional[list] = None,
    objective: Optional[Polynomial] = None,
    expected_value: Optional[float] = None,
    feas_tol: float = 1e-4,
) -> VerificationReport:
    """Check atom feasibility, pairing residuals, and the objective value.

    pairings entries are (polynomial, rhs, is_equality).  All comparisons use
    feas_tol scaled by 1 + the magnitude of the quantity compared.
    """
    eq_v = 0.0
    ineq_v = 0.0
    for point in measure.points:
        for c in set_.equalities:
            eq_v = max(eq_v, abs(c.evaluate(point)))
        for c in set_.inequalities:
            ineq_v = max(ineq_v, -min(c.evaluate(point), 0.0))
    pair_v = 0.0
    for poly, rhs, is_eq in pairings or []:
        val = measure.integrate(poly)
        gap = val - rhs
        miss = abs(gap) if is_eq else max(-gap, 0.0)
        pair_v = max(pair_v, miss / (1.0 + abs(rhs)))
    obj = measure.integrate(objective) if objective is not None else float("nan")
    gap = None
    if objective is not None and expected_value is not None:
        gap = abs(obj - expected_value) / (1.0 + abs(expected_value))
    wmin = float(measure.weights.min()) if measure.num_atoms else 0.0
    ok = bool(
        eq_v <= feas_tol
        and ineq_v <= feas_tol
        and pair_v <= feas_tol
        and (gap is None or gap <= feas_tol)
        and wmin >= -feas_tol
    )
    return VerificationReport(ok, eq_v, ineq_v, pair_v, obj, gap, wmin)


@dataclass
class MomentCertificate:
    """Full record of a certification attempt on one solved relaxation."""

    certified: bool
    reason: str
    value: float
    flat: FlatTruncation
    measure: Optional[AtomicMeasure] = None
    raw_measure: Optional[AtomicMeasure] = None
    atoms_at_infinity: Optional[AtomicMeasure] = None
    moment_error: Optional[float] = None
    raw_report: Optional[VerificationReport] = None
    report: Optional[VerificationReport] = None

    def as_json(self) -> dict:
        return {
            "certified": self.certified,
            "reason": self.reason,
            "value": self.value,
            "flat": self.flat.as_json() if self.flat is not None else None,
            "atoms": self.measure.to_json() if self.measure is not None else None,
            "raw_atoms": self.raw_measure.to_json()
            if self.raw_measure is not None
            else None,
            "atoms_at_infinity": self.atoms_at_infinity.to_json()
            if self.atoms_at_infinity is not None
            else None,
            "moment_error": self.moment_error,
            "raw_verification": self.raw_report.as_json()
            if self.raw_report is not None
            else None,
            "verification": self.report.as_json() if self.report is not None else None,
        }


def certify_relaxation(
    comp: CompiledRelaxation,
    sol: SdpSolution,
    rank_tol: float = 1e-6,
    feas_tol: float = 1e-4,
    tau_tol: float = 1e-6,
    seed: int = 0,
) -> MomentCertificate:
    """Run flat truncation, extraction, and verification on a solved SDP.

    For the homogenized variant the raw sphere atoms are checked against the
    homogenized data, then mapped back and checked against the original
    problem; mass at infinity blocks certification but is reported rather
    than discarded.
    """
    w = comp.tms(sol)
    value = comp.moment_value(sol)
    flat = flat_truncation(w, comp.d0, comp.dK, rank_tol)
    if not flat.flat:
        return MomentCertificate(
            certified=False,
            reason="no flat truncation order found",
            value=value,
            flat=flat,
        )
    if flat.zero_measure:
        raw = AtomicMeasure.empty(comp.nvars)
        raw_rep = verify_atoms(
            raw,
            comp.relaxed_set,
            pairings=comp.pairings,
            objective=comp.objective_poly,
            expected_value=value,
            feas_tol=feas_tol,
        )
        return MomentCertificate(
            certified=raw_rep.ok,
            reason="flat with the zero measure"
            if raw_rep.ok
            else "zero measure conflicts with the pairing data",
            value=value,
            flat=flat,
            measure=raw,
            raw_measure=raw,
            raw_report=raw_rep,
            report=raw_rep,
        )
    try:
        raw = extract_atoms(w, flat.order, rank_tol, seed=seed)
    except ExtractionError as exc:
        return MomentCertificate(
            certified=False, reason=str(exc), value=value, flat=flat
        )
    recon = tms_from_atoms(raw, 2 * flat.order)
    w_flat = w.truncate(2 * flat.order)
    moment_error = float(np.max(np.abs(recon.values - w_flat.values)))
    raw_rep = verify_atoms(
        raw,
        comp.relaxed_set,
        pairings=comp.pairings,
        objective=comp.objective_poly,
        expected_value=value,
        feas_tol=feas_tol,
    )

    if comp.variant is Variant.HOMOGENIZED:
        finite, at_inf = dehomogenize_atoms(raw, comp.homogenize_degree, tau_tol)
        origin = comp.homogenized_from
        gmp = origin.as_gmp() if isinstance(origin, PopProblem) else origin
        pairings = [
            (ai, float(bi), i < gmp.m1)
            for i, (ai, bi) in enumerate(zip(gmp.a, gmp.b))
        ]
        rep = verify_atoms(
            finite,
            gmp.set,
            pairings=pairings if at_inf.num_atoms == 0 else None,
            objective=gmp.objective,
            expected_value=value if at_inf.num_atoms == 0 else None,
            feas_tol=feas_tol,
        )
        certified = bool(
            raw_rep.ok and rep.ok and at_inf.num_atoms == 0 and moment_error <= feas_tol
        )
        if at_inf.num_atoms:
            reason = "measure carries mass at infinity"
        elif not certified:
            reason = "extracted atoms fail verification"
        else:
            reason = "atomic measure extracted and verified"
        return MomentCertificate(
            certified=certified,
            reason=reason,
            value=value,
            flat=flat,
            measure=finite,
            raw_measure=raw,
            atoms_at_infinity=at_inf,
            moment_error=moment_error,
            raw_report=raw_rep,
            report=rep,
        )

    certified = bool(raw_rep.ok and moment_error <= feas_tol)
    if certified and isinstance(comp.source, PopProblem):
        f = comp.source.objective
        spread = max(
            abs(f.evaluate(p) - value) for p in raw.points
        )
        if spread > feas_tol * (1.0 + abs(value)):
            certified = False
    return MomentCertificate(
        certified=certified,
        reason="atomic measure extracted and verified"
        if certified
        else "extracted atoms fail verification",
        value=value,
        flat=flat,
        measure=raw,
        raw_measure=raw,
        moment_error=moment_error,
        raw_report=raw_rep,
        report=raw_rep,
    )


# -- pointwise optimality conditions ---------------------------------------------


@dataclass(frozen=True)
class OptimalityReport:
    """First- and second-order condition checks at a candidate point.

    Multipliers follow the Lagrangian f - sum lambda c_eq - sum mu c_ineq,
    mu >= 0 and zero off the active set.  sosc tests the Lagrangian Hessian
    on the common null space of active constraint gradients and is vacuously
    true when that space is trivial.
    """

    point: np.ndarray
    objective: float
    feasible: bool
    active_inequalities: tuple
    licq: bool
    eq_multipliers: np.ndarray
    ineq_multipliers: np.ndarray
    kkt_residual: float
    stationary: bool
    strict_complementarity: bool
    sosc: bool
    reduced_hessian_min_eig: Optional[float]

    def as_json(self) -> dict:
        return {
            "point": self.point.tolist(),
            "objective": self.objective,
            "feasible": self.feasible,
            "active_inequalities": list(self.active_inequalities),
            "licq": self.licq,
            "eq_multipliers": self.eq_multipliers.tolist(),
            "ineq_multipliers": self.ineq_multipliers.tolist(),
            "kkt_residual": self.kkt_residual,
            "stationary": self.stationary,
            "strict_complementarity": self.strict_complementarity,
            "sosc": self.sosc,
            "reduced_hessian_min_eig": self.reduced_hessian_min_eig,
        }


def check_optimality(
    pop: PopProblem,
    point,
    act_tol: float = 1e-6,
    tol: float = 1e-6,
) -> OptimalityReport:
    """Evaluate LICQ, KKT stationarity, strict complementarity, and SOSC.

    act_tol decides which inequalities count as active; tol governs the rank,
    residual, positivity, and eigenvalue thresholds.
    """
    x = np.asarray(point, dtype=float)
    n = pop.nvars
    if x.shape != (n,):
        raise ValueError(f"point must have {n} coordinates")
    set_ = pop.set
    f = pop.objective

    feasible = set_.contains(x, act_tol)
    active = tuple(
        j for j, c in enumerate(set_.inequalities) if abs(c.evaluate(x)) <= act_tol
    )

    grads = [c.gradient_at(x) for c in set_.equalities]
    grads += [set_.inequalities[j].gradient_at(x) for j in active]
    g = np.array(grads) if grads else np.zeros((0, n))
    if g.shape[0] == 0:
        licq = True
    else:
        s = sla.svdvals(g)
        licq = bool(g.shape[0] <= n and s[0] > 0 and s[-1] > tol * s[0])

    grad_f = f.gradient_at(x)
    n_eq = len(set_.equalities)
    n_act = len(active)
    if n_eq + n_act:
        lower = np.concatenate([np.full(n_eq, -np.inf), np.zeros(n_act)])
        upper = np.full(n_eq + n_act, np.inf)
        fit = lsq_linear(g.T, grad_f, bounds=(lower, upper))
        mults = fit.x
        kkt_residual = float(np.linalg.norm(g.T @ mults - grad_f))
    else:
        mults = np.zeros(0)
        kkt_residual = float(np.linalg.norm(grad_f))
    stationary = bool(kkt_residual <= tol * (1.0 + np.linalg.norm(grad_f)))

    lam = mults[:n_eq]
    mu_active = mults[n_eq:]
    mu = np.zeros(len(set_.inequalities))
    for j, m in zip(active, mu_active):
        mu[j] = m
    # strict complementarity: every inequality has either slack or multiplier
    if len(set_.inequalities):
        scc = bool(
            min(m + c.evaluate(x) for m, c in zip(mu, set_.inequalities)) > tol
        )
    else:
        scc = True

    hess = f.hessian_at(x)
    for lam_l, c in zip(lam, set_.equalities):
        hess = hess - lam_l * c.hessian_at(x)
    for j, m in zip(active, mu_active):
        hess = hess - m * set_.inequalities[j].hessian_at(x)
    if g.shape[0]:
        null = sla.null_space(g)
    else:
        null = np.eye(n)
    if null.shape[1] == 0:
        sosc = True
        min_eig = None
    else:
        reduced = null.T @ hess @ null
        min_eig = float(sla.eigvalsh(reduced)[0])
        sosc = min_eig > tol
    return OptimalityReport(
        point=x,
        objective=float(f.evaluate(x)),
        feasible=feasible,
        active_inequalities=active,
        licq=licq,
        eq_multipliers=lam,
        ineq_multipliers=mu,
        kkt_residual=kkt_residual,
        stationary=stationary,
        strict_complementarity=scc,
        sosc=sosc,
        reduced_hessian_min_eig=min_eig,
    )
