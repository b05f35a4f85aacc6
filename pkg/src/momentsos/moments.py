"""Truncated moment sequences and their structured matrices.

A truncated moment sequence (tms) of degree d in n variables assigns a real
value w_a to every monomial exponent a with |a| <= d, laid out in the shared
graded monomial order.  For a Borel measure mu, w_a = integral of x^a dmu.

The three structured objects built from a tms w of degree 2k:

* moment matrix  M_k[w][i, j]        = w_{a_i + a_j}
* localizing matrix of q             = sum_g q_g * w_{g + a_i + a_j},
  rows/columns over monomials of degree <= floor((2k - deg q) / 2)
* localizing vector of q             = sum_g q_g * w_{g + a},
  entries over monomials a of degree <= 2k - deg q

satisfying vec(p)^T L_q[w] vec(p) = <q p^2, w> and (V_q[w])^T vec(p) = <q p, w>.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .polynomials import MonomialBasis, Polynomial, basis_size, monomial_basis

__all__ = [
    "Tms",
    "AtomicMeasure",
    "pair",
    "tms_from_atoms",
    "moment_matrix",
    "localizing_matrix",
    "localizing_vector",
]


class Tms:
    """Truncated moment sequence: degree-d moment values in graded order."""

    __slots__ = ("nvars", "degree", "values")

    def __init__(self, nvars: int, degree: int, values):
        vals = np.asarray(values, dtype=float)
        expected = basis_size(nvars, degree)
        if vals.shape != (expected,):
            raise ValueError(
                f"tms of degree {degree} in {nvars} variables needs "
                f"{expected} values, got {vals.shape}"
            )
        self.nvars = nvars
        self.degree = degree
        self.values = vals

    def basis(self) -> MonomialBasis:
        return monomial_basis(self.nvars, self.degree)

    def __getitem__(self, exponent) -> float:
        return float(self.values[self.basis().position(exponent)])

    def truncate(self, degree: int) -> "Tms":
        """Restrict to moments of degree <= degree (a prefix in graded order)."""
        if not 0 <= degree <= self.degree:
            raise ValueError(
                f"truncation degree must lie in [0, {self.degree}], got {degree}"
            )
        return Tms(self.nvars, degree, self.values[: basis_size(self.nvars, degree)])

    def to_json(self) -> dict:
        return {"n": self.nvars, "d": self.degree, "values": self.values.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Tms":
        for key in ("n", "d", "values"):
            if key not in data:
                raise ValueError(f"tms JSON is missing the '{key}' field")
        return cls(int(data["n"]), int(data["d"]), data["values"])

    def __repr__(self) -> str:
        return f"Tms(nvars={self.nvars}, degree={self.degree})"


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely atomic measure sum_t weights[t] * delta(points[t])."""

    weights: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p.reshape(len(w), -1) if len(w) else p.reshape(0, 1)
        if p.ndim != 2 or p.shape[0] != w.shape[0]:
            raise ValueError("points must be (num_atoms, nvars) matching weights")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", p)

    @classmethod
    def empty(cls, nvars: int) -> "AtomicMeasure":
        return cls(np.zeros(0), np.zeros((0, nvars)))

    @property
    def num_atoms(self) -> int:
        return len(self.weights)

    @property
    def nvars(self) -> int:
        return self.points.shape[1]

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def integrate(self, p: Polynomial) -> float:
        return float(
            sum(w * p.evaluate(pt) for w, pt in zip(self.weights, self.points))
        )

    def to_json(self) -> list:
        return [
            {"weight": float(w), "point": [float(v) for v in p]}
            for w, p in zip(self.weights, self.points)
        ]

    @classmethod
    def from_json(cls, atoms: list, nvars: int) -> "AtomicMeasure":
        if not atoms:
            return cls.empty(nvars)
        return cls(
            np.array([a["weight"] for a in atoms]),
            np.array([a["point"] for a in atoms]),
        )


def pair(p: Polynomial, w: Tms) -> float:
    """Pairing <p, w> = sum_a p_a * w_a; requires deg(p) <= deg(w)."""
    if p.nvars != w.nvars:
        raise ValueError("polynomial and tms have different variable counts")
    if p.degree > w.degree:
        raise ValueError(
            f"cannot pair degree-{p.degree} polynomial with degree-{w.degree} tms"
        )
    idx = w.basis().index
    vals = w.values
    return float(sum(c * vals[idx[e]] for e, c in p.terms.items()))


def tms_from_atoms(measure: AtomicMeasure, degree: int) -> Tms:
    """Moments of an atomic measure up to the given degree."""
    if measure.num_atoms == 0:
        return Tms(measure.nvars, degree, np.zeros(basis_size(measure.nvars, degree)))
    basis = monomial_basis(measure.nvars, degree)
    vals = np.zeros(len(basis))
    for wt, pt in zip(measure.weights, measure.points):
        vals += wt * basis.evaluate(pt)
    return Tms(measure.nvars, degree, vals)


@lru_cache(maxsize=None)
def _moment_index_table(nvars: int, k: int) -> np.ndarray:
    """Positions of a_i + a_j in the global graded order, for |a| <= k.

    Positions are prefix-stable: the index of an exponent in the graded order
    does not depend on the ambient degree bound, so one table per (n, k)
    serves every tms of degree >= 2k.
    """
    bk = monomial_basis(nvars, k)
    b2k = monomial_basis(nvars, 2 * k)
    side = len(bk)
    table = np.empty((side, side), dtype=np.int64)
    for i, a in enumerate(bk.exponents):
        for j in range(i, side):
            b = bk.exponents[j]
            pos = b2k.index[tuple(x + y for x, y in zip(a, b))]
            table[i, j] = pos
            table[j, i] = pos
    return table


def moment_matrix(w: Tms, k: int) -> np.ndarray:
    """Moment matrix M_k[w]; requires 2k <= deg(w)."""
    if k < 0:
        raise ValueError("order k must be >= 0")
    if 2 * k > w.degree:
        raise ValueError(f"moment matrix of order {k} needs a tms of degree >= {2 * k}")
    return w.values[_moment_index_table(w.nvars, k)]


def localizing_matrix(q: Polynomial, w: Tms, k: int) -> np.ndarray:
    """Localizing matrix of q at order k; M_k[w] when q = 1.

    The matrix is indexed by monomials of degree <= floor((2k - deg q)/2) so
    that every referenced moment has degree <= 2k.
    """
    if q.nvars != w.nvars:
        raise ValueError("polynomial and tms have different variable counts")
    if q.is_zero:
        raise ValueError("localizing matrix of the zero polynomial is not defined")
    if 2 * k > w.degree:
        raise ValueError(f"order {k} needs a tms of degree >= {2 * k}")
    if q.degree > 2 * k:
        raise ValueError(f"deg(q) = {q.degree} exceeds 2k = {2 * k}")
    s = (2 * k - q.degree) // 2
    bs = monomial_basis(w.nvars, s)
    idx = monomial_basis(w.nvars, w.degree).index
    side = len(bs)
    out = np.zeros((side, side))
    vals = w.values
    for g, c in q.terms.items():
        for i, a in enumerate(bs.exponents):
            ga = tuple(x + y for x, y in zip(g, a))
            for j in range(i, side):
                b = bs.exponents[j]
                v = c * vals[idx[tuple(x + y for x, y in zip(ga, b))]]
                out[i, j] += v
                if i != j:
                    out[j, i] += v
    return out


def localizing_vector(q: Polynomial, w: Tms, two_k: int) -> np.ndarray:
    """Vector of <q * x^a, w> over monomials a with deg <= two_k - deg(q)."""
    if q.nvars != w.nvars:
        raise ValueError("polynomial and tms have different variable counts")
    if q.is_zero:
        raise ValueError("localizing vector of the zero polynomial is not defined")
    if two_k > w.degree:
        raise ValueError(f"degree bound {two_k} exceeds tms degree {w.degree}")
    if q.degree > two_k:
        raise ValueError(f"deg(q) = {q.degree} exceeds the degree bound {two_k}")
    bs = monomial_basis(w.nvars, two_k - q.degree)
    idx = monomial_basis(w.nvars, w.degree).index
    out = np.zeros(len(bs))
    vals = w.values
    for g, c in q.terms.items():
        for i, a in enumerate(bs.exponents):
            out[i] += c * vals[idx[tuple(x + y for x, y in zip(g, a))]]
    return out
