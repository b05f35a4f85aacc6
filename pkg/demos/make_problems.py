"""Build the bundled problem files with plain polynomial arithmetic.

Running this script regenerates everything under problems/: five benchmark
problems exercising each hierarchy variant, one subproblem used by the
check-kkt command, and a manifest of expected optimal values.  It is also a
worked example of constructing problems programmatically instead of writing
JSON by hand.
"""

import json
import math
import re
from pathlib import Path

from momentsos import (
    GmpProblem,
    Polynomial,
    PopProblem,
    SemialgebraicSet,
    build_subproblem,
    problem_to_json,
)

OUT = Path(__file__).resolve().parent.parent / "problems"

_TERM = re.compile(r"\{\s*\"c\":\s*([^,]+),\s*\"e\":\s*\[([\s\d,+-]*)\]\s*\}")


def dump_pretty(data, fh):
    """indent=1 JSON with each {"c": ..., "e": [...]} term on one line."""
    text = json.dumps(data, indent=1)
    text = _TERM.sub(
        lambda m: '{"c": %s, "e": [%s]}'
        % (m.group(1).strip(), ", ".join(s.strip() for s in m.group(2).split(","))),
        text,
    )
    fh.write(text)
    fh.write("\n")


def variables(n):
    return [Polynomial.variable(n, i) for i in range(n)]


def sphere_gmp():
    """Degree-6 moment problem over the unit sphere in R^3.

    Three equality pairings; the optimal measure splits its mass between the
    two antipodal points (1,1,1)/sqrt(3) and -(1,1,1)/sqrt(3), and the plain
    hierarchy certifies value 1 at order 3.
    """
    n = 3
    x1, x2, x3 = variables(n)
    f = x1**6 + x2**6 + x3**6
    a1 = x1**2 * x2**4 + x2**2 * x3**4 + x3**2 * x1**4
    a2 = x1**3 * x2**3 + x2**3 * x3**3 + x3**3 * x1**3
    a3 = x1**5 * x2 + x2**5 * x3 + x3**5 * x1
    sphere = x1**2 + x2**2 + x3**2 - Polynomial.constant(n, 1.0)
    K = SemialgebraicSet(n, equalities=(sphere,), archimedean=True)
    return GmpProblem(set=K, objective=f, a=(a1, a2, a3), b=[1, 1, 1], m1=3, d=6)


def simplex_like_gmp():
    """Six-variable moment problem with one equality and one one-sided pairing.

    The set fixes |x|^2 = 2 with two coupling equalities and nonnegative
    coordinates.  Certifies (2 + 2*sqrt(2))/3 at order 3 with a six-atom
    measure.
    """
    n = 6
    xs = variables(n)
    one = Polynomial.constant(n, 1.0)
    f = sum(xs[1:], xs[0])
    a_eq = sum((x**4 for x in xs[1:]), xs[0] ** 4)
    a_ge = sum((x**3 for x in xs[1:]), xs[0] ** 3)
    c1 = sum((x**2 for x in xs[1:]), xs[0] ** 2) - 2 * one
    c2 = 2 * (xs[0] ** 2 + xs[1] ** 2 + xs[2] ** 2) - xs[3]
    c3 = xs[3] - 2 * (xs[4] ** 2 + xs[5] ** 2)
    K = SemialgebraicSet(
        n, equalities=(c1, c2, c3), inequalities=tuple(xs), archimedean=True
    )
    return GmpProblem(set=K, objective=f, a=(a_eq, a_ge), b=[1.0, 1.0], m1=1, d=4)


def unbounded_gmp():
    """Moment problem on an unbounded variety, solved via homogenization.

    The three equalities cut out an unbounded curve arrangement that is
    closed at infinity, so the homogenized hierarchy is exact: value 32 at
    order 2, one atom mapping back to (0, -1/2, 1/2) with weight 2.
    """
    n = 3
    x1, x2, x3 = variables(n)
    one = Polynomial.constant(n, 1.0)
    f = x1**4 + (2 * x2 - one) ** 4 + (2 * x3 - one) ** 4
    a1 = x2**2 + x3**2
    a2 = x1**2 * x2 + x2**2 * x3 + x3**2 * x1
    K = SemialgebraicSet(
        n,
        equalities=(
            x1 * x2 * x3,
            x3 * (x1**2 + x2**2 + x3**2 + x2),
            x2 * (x2 + x3),
        ),
        closed_at_infinity=True,
    )
    return GmpProblem(set=K, objective=f, a=(a1, a2), b=[1.0, 0.2], m1=1, d=4)


def unbounded_pop():
    """Degree-6 minimization over an unbounded curve, one sign constraint.

    Minimum -1 is attained at (0, 1); the homogenized hierarchy certifies it
    at order 3 with the sphere atom (1, 0, 1)/sqrt(2).
    """
    n = 2
    x1, x2 = variables(n)
    one = Polynomial.constant(n, 1.0)
    f = (
        x1**6
        + x2**6
        + 3 * x1**2 * x2**2
        - x1**4 * (x2**2 + one)
        - x2**4 * (x1**2 + one)
        - (x1**2 + x2**2)
    )
    K = SemialgebraicSet(
        n,
        equalities=(x1**3 + x1 * x2**4 + x1,),
        inequalities=(x2,),
        closed_at_infinity=True,
    )
    return PopProblem(set=K, objective=f)


def denominator_pop():
    """Quartic with two equality constraints for the denominator variant.

    Minimum 0 at (1, 1, -1); the denominator hierarchy certifies at order 3.
    """
    n = 3
    x1, x2, x3 = variables(n)
    one = Polynomial.constant(n, 1.0)
    f = (
        x1**2 * (x1 - one) ** 2
        + (x2 - one) ** 2 * (x2 - 2 * one) ** 2
        + (x3 + one) ** 2 * x3**2
        + 2 * x1 * (x2 - one) * (x3 + one) * (x1 + x2 + x3 - 2 * one)
    )
    c1 = x1**3 - x2**3 - x3**3 - one
    c2 = (x1**4 + one) * (x1 - one) + (x1**2 - x1) * (x1 * x2**2 - 2 * x2)
    K = SemialgebraicSet(n, equalities=(c1, c2))
    return PopProblem(set=K, objective=f)


def main():
    OUT.mkdir(exist_ok=True)
    gmp35 = sphere_gmp()
    problems = {
        "ex35.json": gmp35,
        # f - a2 over the same sphere: the subproblem at the dual maximizer
        # (0, 1, 0); its global minimizers are the certified atoms
        "ex35_sub.json": build_subproblem(gmp35, [0.0, 1.0, 0.0]),
        "ex36.json": simplex_like_gmp(),
        "ex43.json": unbounded_gmp(),
        "ex46.json": unbounded_pop(),
        "ex48.json": denominator_pop(),
    }
    for name, prob in problems.items():
        with open(OUT / name, "w") as fh:
            dump_pretty(problem_to_json(prob), fh)
        print("wrote", OUT / name)

    s3 = 1.0 / math.sqrt(3.0)
    s2 = math.sqrt(2.0) / 2.0
    s6 = math.sqrt(6.0)
    manifest = {
        "ex35.json": {
            "variant": "plain",
            "k": 3,
            "value": 1.0,
            "value_tol": 1e-4,
            "atoms": [[s3, s3, s3], [-s3, -s3, -s3]],
            "atom_tol": 1e-4,
        },
        "ex36.json": {
            "variant": "plain",
            "k": 3,
            "value": (2.0 + 2.0 * math.sqrt(2.0)) / 3.0,
            "value_tol": 1e-4,
            "atoms": [
                [s2, 0, 0, 1, s2, 0],
                [0, s2, 0, 1, s2, 0],
                [0, 0, s2, 1, s2, 0],
                [s2, 0, 0, 1, 0, s2],
                [0, s2, 0, 1, 0, s2],
                [0, 0, s2, 1, 0, s2],
            ],
            "atom_tol": 1e-3,
        },
        "ex43.json": {
            "variant": "homogenized",
            "k": 2,
            "value": 32.0,
            "value_tol_relative": 1e-3,
            "raw_atoms": [[s6 / 3, 0, -s6 / 6, s6 / 6]],
            "atoms": [[0.0, -0.5, 0.5]],
            "atom_tol": 1e-3,
        },
        "ex46.json": {
            "variant": "homogenized",
            "k": 3,
            "value": -1.0,
            "value_tol": 1e-4,
            "raw_atoms": [[1 / math.sqrt(2), 0.0, 1 / math.sqrt(2)]],
            "atom_tol": 1e-4,
        },
        "ex48.json": {
            "variant": "denominator",
            "k": 3,
            "value": 0.0,
            "value_tol": 1e-4,
            "atoms": [[1.0, 1.0, -1.0]],
            "atom_tol": 1e-3,
        },
        "ex35_sub.json": {
            "kkt_points": [[s3, s3, s3], [-s3, -s3, -s3]],
            "licq": True,
            "scc": True,
            "sosc": True,
        },
    }
    with open(OUT / "expected.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    print("wrote", OUT / "expected.json")


if __name__ == "__main__":
    main()
