"""Problem models and their moment relaxations.

Two problem classes are modeled over a basic closed semialgebraic set
K = {c = 0 (equalities), c >= 0 (inequalities)}:

* GmpProblem: minimize <f, y> over measures y supported on K subject to
  pairing constraints <a_i, y> = b_i (i < m1) and <a_i, y> >= b_i (i >= m1),
  all data of degree <= d.
* PopProblem: minimize f over K, handled as the special moment problem with
  the single pairing <1, y> = 1.

The order-k moment relaxation replaces y by a degree-2k truncated moment
sequence w and imposes

    <a_i, w> = / >= b_i,
    localizing vector of each equality constraint = 0   (ideal rows),
    localizing matrix of each inequality constraint PSD,
    moment matrix PSD.

Its SDP dual is the order-k sums-of-squares bound: maximize b^T theta such
that f - sum theta_i a_i lies in the degree-2k truncated ideal + quadratic
module of K, with theta_i free for equality pairings and >= 0 otherwise.
The SOS side is never compiled separately; `CompiledRelaxation.sos_certificate`
reads it off the SDP dual, so weak duality between the two sides is
structural rather than numerical luck.

Three variants are compiled:

* plain: the relaxation above.
* homogenized: for sets that need not be compact, work on the unit sphere in
  one more variable x0 (prepended), replacing each polynomial p by its
  homogenization x0^deg(p) p(x/x0) to common degree d and adding the sphere
  equality and x0 >= 0.  Atoms (tau, v) with tau > 0 map back to v/tau;
  tau = 0 flags mass at infinity.
* denominator: for a POP, multiply f - gamma by theta^k, theta = 1 + |x|^2,
  and ask for a truncated ideal + quadratic module certificate.  In moment
  form this is a relaxation over the original variables with normalization
  <theta^k, w> = 1 and objective <theta^k f, w>; gamma* is its optimal value.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .moments import Tms
from .polynomials import Polynomial, basis_size, monomial_basis
from .sdp import PsdBlock, SdpProblem, SdpSolution

__all__ = [
    "SemialgebraicSet",
    "GmpProblem",
    "PopProblem",
    "Variant",
    "constraint_half_degree",
    "minimum_order",
    "homogenize_set",
    "homogenize_gmp",
    "even_power_homogenization",
    "build_subproblem",
    "CompiledRelaxation",
    "SosCertificate",
    "moment_relaxation",
    "homogenized_relaxation",
    "denominator_relaxation",
    "problem_from_json",
    "problem_to_json",
]


def _half(degree: int) -> int:
    return (degree + 1) // 2


@dataclass(frozen=True)
class SemialgebraicSet:
    """K = {x : c(x) = 0 for c in equalities, c(x) >= 0 for c in inequalities}.

    The two assertion flags are caller-supplied knowledge, not derived facts:
    `archimedean` promises a ball constraint is implied (plain hierarchy
    convergence), `closed_at_infinity` promises the homogenized set adds no
    spurious points at infinity (homogenized hierarchy exactness).
    """

    nvars: int
    equalities: tuple = ()
    inequalities: tuple = ()
    archimedean: bool = False
    closed_at_infinity: bool = False

    def __post_init__(self):
        object.__setattr__(self, "equalities", tuple(self.equalities))
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        for c in self.equalities + self.inequalities:
            if not isinstance(c, Polynomial):
                raise TypeError("constraints must be Polynomial instances")
            if c.nvars != self.nvars:
                raise ValueError("constraint variable count mismatch")
            if c.is_zero:
                raise ValueError("the zero polynomial is not a usable constraint")

    @property
    def constraints(self) -> tuple:
        return self.equalities + self.inequalities

    def contains(self, point, tol: float) -> bool:
        return all(abs(c.evaluate(point)) <= tol for c in self.equalities) and all(
            c.evaluate(point) >= -tol for c in self.inequalities
        )


@dataclass(frozen=True)
class GmpProblem:
    """Linear moment problem over measures on a semialgebraic set.

    The first m1 pairings are equalities <a_i, y> = b_i, the rest are
    one-sided <a_i, y> >= b_i.  d bounds every degree in sight and fixes the
    homogenization degree.
    """

    set: SemialgebraicSet
    objective: Polynomial
    a: tuple
    b: np.ndarray
    m1: int
    d: int

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        if self.objective.nvars != self.set.nvars:
            raise ValueError("objective variable count mismatch")
        if len(self.a) != len(self.b):
            raise ValueError("pairing polynomials and right-hand sides disagree")
        if not 0 <= self.m1 <= len(self.a):
            raise ValueError("m1 must lie in [0, number of pairings]")
        for ai in self.a:
            if ai.nvars != self.set.nvars:
                raise ValueError("pairing variable count mismatch")
            if ai.degree > self.d:
                raise ValueError("pairing degree exceeds the declared bound d")
        if self.objective.degree > self.d:
            raise ValueError("objective degree exceeds the declared bound d")

    @property
    def nvars(self) -> int:
        return self.set.nvars


@dataclass(frozen=True)
class PopProblem:
    """minimize objective(x) over x in set."""

    set: SemialgebraicSet
    objective: Polynomial

    def __post_init__(self):
        if self.objective.nvars != self.set.nvars:
            raise ValueError("objective variable count mismatch")

    @property
    def nvars(self) -> int:
        return self.set.nvars

    def as_gmp(self) -> GmpProblem:
        """The equivalent moment problem over probability measures."""
        one = Polynomial.constant(self.nvars, 1.0)
        return GmpProblem(
            set=self.set,
            objective=self.objective,
            a=(one,),
            b=np.array([1.0]),
            m1=1,
            d=max(self.objective.degree, 0),
        )


class Variant(str, Enum):
    PLAIN = "plain"
    HOMOGENIZED = "homogenized"
    DENOMINATOR = "denominator"


def constraint_half_degree(set_: SemialgebraicSet) -> int:
    """max_j ceil(deg(c_j)/2) over all constraints, floored at 1.

    This is the rank-comparison gap used by flat truncation; a constraint-free
    set uses the classical gap of one.
    """
    degs = [_half(c.degree) for c in set_.constraints]
    return max([1] + degs)


def minimum_order(problem: Union[GmpProblem, PopProblem]) -> int:
    """Smallest k whose relaxation can express all problem data."""
    gmp = problem.as_gmp() if isinstance(problem, PopProblem) else problem
    half_pairings = [_half(ai.degree) for ai in gmp.a]
    return max(
        [_half(gmp.objective.degree), constraint_half_degree(gmp.set)] + half_pairings
    )


def homogenize_set(set_: SemialgebraicSet, x0_nonneg: bool = True) -> SemialgebraicSet:
    """Intersect the homogenized constraints with the unit sphere.

    New variable x0 is prepended.  Equalities become their homogenizations
    plus |xtilde|^2 - 1 = 0; inequalities homogenize likewise and, unless
    x0_nonneg is disabled, x0 >= 0 restricts to the closed upper half sphere.
    """
    n1 = set_.nvars + 1
    sphere = Polynomial.from_terms(
        n1,
        [(tuple(2 if j == i else 0 for j in range(n1)), 1.0) for i in range(n1)]
        + [((0,) * n1, -1.0)],
    )
    eqs = tuple(c.homogenize() for c in set_.equalities) + (sphere,)
    ineqs = tuple(c.homogenize() for c in set_.inequalities)
    if x0_nonneg:
        ineqs = ineqs + (Polynomial.variable(n1, 0),)
    return SemialgebraicSet(
        nvars=n1, equalities=eqs, inequalities=ineqs, archimedean=True
    )


def homogenize_gmp(gmp: GmpProblem) -> GmpProblem:
    """Degree-d homogenization of every pairing and the objective."""
    return GmpProblem(
        set=homogenize_set(gmp.set),
        objective=gmp.objective.homogenize_to_degree(gmp.d),
        a=tuple(ai.homogenize_to_degree(gmp.d) for ai in gmp.a),
        b=gmp.b.copy(),
        m1=gmp.m1,
        d=gmp.d,
    )


def even_power_homogenization(pop: PopProblem) -> PopProblem:
    """Homogenized problem with even-power inequality lifts and free x0.

    Each inequality c_j >= 0 becomes x0^{t_j} ctilde_j >= 0 with
    t_j = 2*ceil(deg c_j / 2) - deg c_j, so every inequality has even degree
    and no x0 >= 0 constraint is needed.  Only even-degree objectives admit
    this form.
    """
    f = pop.objective
    if f.degree % 2 != 0:
        raise ValueError(
            "even-power homogenization requires an even-degree objective; "
            f"got degree {f.degree}"
        )
    base = homogenize_set(pop.set, x0_nonneg=False)
    n1 = base.nvars
    x0 = Polynomial.variable(n1, 0)
    lifted = []
    for c in pop.set.inequalities:
        gap = 2 * _half(c.degree) - c.degree
        lifted.append((x0 ** gap) * c.homogenize())
    hom_set = SemialgebraicSet(
        nvars=n1,
        equalities=base.equalities,
        inequalities=tuple(lifted),
        archimedean=True,
    )
    return PopProblem(set=hom_set, objective=f.homogenize())


def build_subproblem(gmp: GmpProblem, theta: Sequence[float]) -> PopProblem:
    """POP minimizing f - sum theta_i a_i over the same set.

    At an optimal theta of the SOS side, optimal-measure atoms are global
    minimizers of this problem with value zero when strong duality holds.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (len(gmp.a),):
        raise ValueError("theta must have one entry per pairing")
    obj = gmp.objective
    for t, ai in zip(theta, gmp.a):
        obj = obj - float(t) * ai
    return PopProblem(set=gmp.set, objective=obj)


# -- compilation ---------------------------------------------------------------


@dataclass
class SosCertificate:
    """Weighted-sum representation read off a moment-relaxation dual.

    Encodes f = sum_i theta_i a_i + sum_eq phi_j c_j + sigma_0
              + sum_ineq sigma_j c_j  (coefficient-wise, up to residual),
    with sigma polynomials given by PSD Gram matrices over the stated bases.
    """

    theta: np.ndarray
    value: float
    gram_moment: np.ndarray
    gram_localizing: list
    ideal_multipliers: list

    def sos_polynomial(self, nvars: int, gram: np.ndarray, basis_degree: int) -> Polynomial:
        basis = monomial_basis(nvars, basis_degree)
        terms: dict = {}
        side = gram.shape[0]
        for i in range(side):
            ei = basis.exponents[i]
            for j in range(side):
                e = tuple(x + y for x, y in zip(ei, basis.exponents[j]))
                terms[e] = terms.get(e, 0.0) + gram[i, j]
        return Polynomial(nvars, terms)


@dataclass
class CompiledRelaxation:
    """An SDP together with the bookkeeping to interpret its solutions."""

    sdp: SdpProblem
    variant: Variant
    order: int
    block_order: int
    nvars: int
    objective_poly: Polynomial
    pairings: list
    pairing_eq_rows: list
    pairing_ineq_rows: list
    ideal_rows: list
    localizing_blocks: list
    d0: int
    dK: int
    source: Union[GmpProblem, PopProblem]
    relaxed_set: SemialgebraicSet
    homogenized_from: Optional[Union[GmpProblem, PopProblem]] = None
    homogenize_degree: Optional[int] = None

    @property
    def tms_degree(self) -> int:
        return 2 * self.block_order

    def tms(self, sol: SdpSolution) -> Tms:
        return Tms(self.nvars, self.tms_degree, sol.x)

    def moment_value(self, sol: SdpSolution) -> float:
        return float(sol.obj_primal)

    def sos_value(self, sol: SdpSolution) -> float:
        return float(sol.obj_dual)

    def sos_certificate(self, sol: SdpSolution) -> SosCertificate:
        """Dual readoff: pairing multipliers, Gram blocks, ideal multipliers."""
        theta = np.zeros(len(self.pairings))
        for i, row in self.pairing_eq_rows:
            theta[i] = sol.y_eq[row]
        for i, row in self.pairing_ineq_rows:
            theta[i] = sol.z_ineq[row]
        ideal = []
        for j, row_start, basis_degree in self.ideal_rows:
            basis = monomial_basis(self.nvars, basis_degree)
            coeffs = {
                e: sol.y_eq[row_start + pos] for pos, e in enumerate(basis.exponents)
            }
            ideal.append(Polynomial(self.nvars, coeffs))
        gram_loc = [sol.psd_duals[pos] for _, pos in self.localizing_blocks]
        return SosCertificate(
            theta=theta,
            value=float(sol.obj_dual),
            gram_moment=sol.psd_duals[0],
            gram_localizing=gram_loc,
            ideal_multipliers=ideal,
        )

    def certificate_residual(self, cert: SosCertificate) -> float:
        """max |coefficient| of f - sum theta a - sum phi c - sigma_0 - sum sigma c."""
        resid = self.objective_poly
        for t, (ai, _, _) in zip(cert.theta, self.pairings):
            resid = resid - float(t) * ai
        eqs = self.relaxed_set.equalities
        for phi, (j, _, _) in zip(cert.ideal_multipliers, self.ideal_rows):
            resid = resid - phi * eqs[j]
        resid = resid - cert.sos_polynomial(
            self.nvars, cert.gram_moment, self.block_order
        )
        ineqs = self.relaxed_set.inequalities
        for gram, (j, _) in zip(cert.gram_localizing, self.localizing_blocks):
            s = (2 * self.block_order - ineqs[j].degree) // 2
            resid = resid - cert.sos_polynomial(self.nvars, gram, s) * ineqs[j]
        if resid.is_zero:
            return 0.0
        return max(abs(c) for c in resid.terms.values())


def _moment_block(nvars: int, k: int, index: dict) -> PsdBlock:
    bk = monomial_basis(nvars, k)
    side = len(bk)
    var, row, col = [], [], []
    for i, a in enumerate(bk.exponents):
        for j in range(i, side):
            var.append(index[tuple(x + y for x, y in zip(a, bk.exponents[j]))])
            row.append(i)
            col.append(j)
    return PsdBlock(side, var, row, col, np.ones(len(var)))


def _localizing_block(q: Polynomial, nvars: int, k: int, index: dict) -> PsdBlock:
    s = (2 * k - q.degree) // 2
    bs = monomial_basis(nvars, s)
    side = len(bs)
    var, row, col, coef = [], [], [], []
    for g, cg in q.terms.items():
        for i, a in enumerate(bs.exponents):
            ga = tuple(x + y for x, y in zip(g, a))
            for j in range(i, side):
                b = bs.exponents[j]
                var.append(index[tuple(x + y for x, y in zip(ga, b))])
                row.append(i)
                col.append(j)
                coef.append(cg)
    return PsdBlock(side, var, row, col, coef)


def _poly_row(p: Polynomial, index: dict, width: int) -> np.ndarray:
    row = np.zeros(width)
    for e, c in p.terms.items():
        row[index[e]] += c
    return row


def _compile(
    variant: Variant,
    source,
    relaxed_set: SemialgebraicSet,
    objective_poly: Polynomial,
    pairings: list,
    order: int,
    block_order: int,
    d0: int,
    dK: int,
    homogenized_from=None,
    homogenize_degree=None,
) -> CompiledRelaxation:
    """Shared assembly: decision variables are the degree-2*block_order moments."""
    nvars = relaxed_set.nvars
    two_k = 2 * block_order
    index = monomial_basis(nvars, two_k).index
    width = basis_size(nvars, two_k)

    objective = _poly_row(objective_poly, index, width)

    eq_rows, eq_rhs = [], []
    ineq_rows, ineq_rhs = [], []
    pairing_eq_rows, pairing_ineq_rows = [], []
    for i, (ai, bi, is_eq) in enumerate(pairings):
        row = _poly_row(ai, index, width)
        if is_eq:
            pairing_eq_rows.append((i, len(eq_rows)))
            eq_rows.append(row)
            eq_rhs.append(bi)
        else:
            pairing_ineq_rows.append((i, len(ineq_rows)))
            ineq_rows.append(row)
            ineq_rhs.append(bi)

    ideal_rows = []
    for j, c in enumerate(relaxed_set.equalities):
        vec_basis = monomial_basis(nvars, two_k - c.degree)
        ideal_rows.append((j, len(eq_rows), vec_basis.degree))
        for a in vec_basis.exponents:
            row = np.zeros(width)
            for g, cg in c.terms.items():
                row[index[tuple(x + y for x, y in zip(g, a))]] += cg
            eq_rows.append(row)
            eq_rhs.append(0.0)

    blocks = [_moment_block(nvars, block_order, index)]
    localizing_blocks = []
    for j, c in enumerate(relaxed_set.inequalities):
        localizing_blocks.append((j, len(blocks)))
        blocks.append(_localizing_block(c, nvars, block_order, index))

    sdp = SdpProblem(
        nfree=width,
        objective=objective,
        eq_a=np.array(eq_rows) if eq_rows else None,
        eq_b=np.array(eq_rhs) if eq_rhs else None,
        ineq_b=np.array(ineq_rows) if ineq_rows else None,
        ineq_d=np.array(ineq_rhs) if ineq_rhs else None,
        psd_blocks=blocks,
    )
    return CompiledRelaxation(
        sdp=sdp,
        variant=variant,
        order=order,
        block_order=block_order,
        nvars=nvars,
        objective_poly=objective_poly,
        pairings=pairings,
        pairing_eq_rows=pairing_eq_rows,
        pairing_ineq_rows=pairing_ineq_rows,
        ideal_rows=ideal_rows,
        localizing_blocks=localizing_blocks,
        d0=d0,
        dK=dK,
        source=source,
        relaxed_set=relaxed_set,
        homogenized_from=homogenized_from,
        homogenize_degree=homogenize_degree,
    )


def _gmp_pairings(gmp: GmpProblem) -> list:
    return [
        (ai, float(bi), i < gmp.m1) for i, (ai, bi) in enumerate(zip(gmp.a, gmp.b))
    ]


def moment_relaxation(problem: Union[GmpProblem, PopProblem], k: int) -> CompiledRelaxation:
    """Order-k moment relaxation over the problem's own set."""
    gmp = problem.as_gmp() if isinstance(problem, PopProblem) else problem
    d0 = minimum_order(gmp)
    if k < d0:
        raise ValueError(f"order k={k} is below the minimum order {d0}")
    return _compile(
        variant=Variant.PLAIN,
        source=problem,
        relaxed_set=gmp.set,
        objective_poly=gmp.objective,
        pairings=_gmp_pairings(gmp),
        order=k,
        block_order=k,
        d0=d0,
        dK=constraint_half_degree(gmp.set),
    )


def homogenized_relaxation(
    problem: Union[GmpProblem, PopProblem], k: int
) -> CompiledRelaxation:
    """Order-k relaxation of the homogenized problem on the unit sphere.

    For a POP the single pairing <1, y> = 1 homogenizes to <x0^d, w> = 1.
    Atom weights scale by tau^d under dehomogenization, where d is the
    problem's degree bound.
    """
    gmp = problem.as_gmp() if isinstance(problem, PopProblem) else problem
    if not gmp.set.closed_at_infinity:
        warnings.warn(
            "homogenized relaxation of a set not asserted closed at infinity: "
            "values remain lower bounds but may not converge to the original "
            "optimum",
            stacklevel=2,
        )
    hom = homogenize_gmp(gmp)
    d0 = minimum_order(hom)
    if k < d0:
        raise ValueError(f"order k={k} is below the minimum order {d0}")
    comp = _compile(
        variant=Variant.HOMOGENIZED,
        source=problem,
        relaxed_set=hom.set,
        objective_poly=hom.objective,
        pairings=_gmp_pairings(hom),
        order=k,
        block_order=k,
        d0=d0,
        dK=constraint_half_degree(hom.set),
        homogenized_from=problem,
        homogenize_degree=gmp.d,
    )
    return comp


def denominator_relaxation(pop: PopProblem, k: int) -> CompiledRelaxation:
    """Order-k denominator relaxation: theta^k-weighted certificates.

    With theta = 1 + |x|^2, the value is

        max gamma s.t. theta^k (f - gamma) in Ideal + QuadraticModule

    truncated at degree 2k + 2*ceil(deg f / 2).  Compiled in moment form:
    minimize <theta^k f, w> over degree-(2k + 2*ceil(deg f/2)) tms with
    <theta^k, w> = 1 and the usual PSD/ideal structure; gamma* is the
    optimal value and the certificate is the SDP dual.
    """
    if not isinstance(pop, PopProblem):
        raise TypeError("the denominator relaxation applies to PopProblem only")
    f = pop.objective
    df = _half(f.degree)
    if k < df:
        raise ValueError(f"order k={k} is below the minimum order {df}")
    n = pop.nvars
    theta = Polynomial.constant(n, 1.0) + sum(
        (Polynomial.variable(n, i) ** 2 for i in range(n)), Polynomial.zero(n)
    )
    theta_k = theta ** k
    block_order = k + df
    dK = constraint_half_degree(pop.set)
    return _compile(
        variant=Variant.DENOMINATOR,
        source=pop,
        relaxed_set=pop.set,
        objective_poly=theta_k * f,
        pairings=[(theta_k, 1.0, True)],
        order=k,
        block_order=block_order,
        d0=block_order,
        dK=dK,
    )


# -- JSON problem schema --------------------------------------------------------


def _poly_from_json(nvars: int, data) -> Polynomial:
    if not isinstance(data, list):
        raise ValueError("polynomial must be a list of term objects")
    return Polynomial.from_json_terms(nvars, data)


def problem_from_json(data: dict) -> Union[GmpProblem, PopProblem]:
    """Parse the problem file schema.

    {"n": int, "f": poly, "set": {"eq": [poly], "ineq": [poly],
     "archimedean": bool, "closed_at_infinity": bool},
     "gmp": {"a": [poly], "b": [real], "m1": int, "d": int}}   (gmp optional)

    A polynomial is a list of {"c": coefficient, "e": exponent list} terms;
    duplicate exponents merge by summation.
    """
    if "n" not in data or "f" not in data:
        raise ValueError("problem JSON needs at least 'n' and 'f'")
    n = int(data["n"])
    if n < 1:
        raise ValueError("'n' must be a positive integer")
    f = _poly_from_json(n, data["f"])
    raw_set = data.get("set", {})
    set_ = SemialgebraicSet(
        nvars=n,
        equalities=tuple(_poly_from_json(n, p) for p in raw_set.get("eq", [])),
        inequalities=tuple(_poly_from_json(n, p) for p in raw_set.get("ineq", [])),
        archimedean=bool(raw_set.get("archimedean", False)),
        closed_at_infinity=bool(raw_set.get("closed_at_infinity", False)),
    )
    if "gmp" in data:
        g = data["gmp"]
        for key in ("a", "b", "m1", "d"):
            if key not in g:
                raise ValueError(f"gmp block is missing '{key}'")
        return GmpProblem(
            set=set_,
            objective=f,
            a=tuple(_poly_from_json(n, p) for p in g["a"]),
            b=np.asarray(g["b"], dtype=float),
            m1=int(g["m1"]),
            d=int(g["d"]),
        )
    return PopProblem(set=set_, objective=f)


def problem_to_json(problem: Union[GmpProblem, PopProblem]) -> dict:
    set_ = problem.set
    data = {
        "n": problem.nvars,
        "f": problem.objective.to_json_terms(),
        "set": {
            "eq": [c.to_json_terms() for c in set_.equalities],
            "ineq": [c.to_json_terms() for c in set_.inequalities],
            "archimedean": set_.archimedean,
            "closed_at_infinity": set_.closed_at_infinity,
        },
    }
    if isinstance(problem, GmpProblem):
        data["gmp"] = {
            "a": [ai.to_json_terms() for ai in problem.a],
            "b": problem.b.tolist(),
            "m1": problem.m1,
            "d": problem.d,
        }
    return data
