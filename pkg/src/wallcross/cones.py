"""Rational polyhedral cones generated by the weights ``e_i - e_j``.

All cone arithmetic is exact.  Duals are computed with the double
description method: half-spaces are inserted one at a time while keeping the
list of extreme rays, new rays coming from adjacent pairs across each new
hyperplane.  Only pointed cones living in a hyperplane ``{s . x = 0}`` are
handled.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .bundle import GradedBundle, invariant_subsets

Vector = tuple[Fraction, ...]


class Membership(str, enum.Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    OUTSIDE = "Outside"


@dataclass(frozen=True)
class Weight:
    vector: tuple[int, ...]
    edge: tuple[int, int]

    @classmethod
    def of(cls, length: int, i: int, j: int) -> "Weight":
        v = [0] * length
        v[i] = 1
        v[j] = -1
        return cls(tuple(v), (i, j))


@dataclass(frozen=True)
class RationalCone:
    """Pointed cone inside the subspace cut out by ``subspace``.

    ``rays`` are primitive integer extreme rays; ``facets`` are inward
    normals, so a point ``x`` of the subspace lies in the cone iff
    ``f . x >= 0`` for every facet ``f``.
    """

    ambient_dim: int
    rays: tuple[tuple[int, ...], ...]
    facets: tuple[tuple[int, ...], ...]
    subspace: tuple[tuple[int, ...], ...]

    @property
    def dimension(self) -> int:
        return _rank([tuple(Fraction(x) for x in r) for r in self.rays])


@dataclass(frozen=True)
class Partition:
    minus: frozenset[int]
    plus: frozenset[int]


@dataclass(frozen=True)
class DualGenerator:
    vector: Vector
    partition: Partition | None


# -- exact linear algebra ---------------------------------------------------

def _dot(u, v) -> Fraction:
    return sum((Fraction(a) * b for a, b in zip(u, v)), Fraction(0))


def _rank(rows: Sequence[Sequence[Fraction]]) -> int:
    mat = [list(map(Fraction, r)) for r in rows]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(mat)) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        p = mat[rank][col]
        for r in range(rank + 1, len(mat)):
            f = mat[r][col]
            if f:
                f /= p
                mat[r] = [a - f * b for a, b in zip(mat[r], mat[rank])]
        rank += 1
        if rank == len(mat):
            break
    return rank


def _inverse(square: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    n = len(square)
    aug = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(square)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [a / p for a in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def primitive(v: Sequence) -> tuple[int, ...]:
    """Scale a nonzero rational vector to a primitive integer vector."""
    fr = [Fraction(x) for x in v]
    lcm = 1
    for x in fr:
        lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
    ints = [int(x * lcm) for x in fr]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    if g == 0:
        raise ValueError("zero vector has no primitive form")
    return tuple(x // g for x in ints)


def _hyperplane_basis(normal: Sequence[int]) -> list[Vector]:
    """Basis of ``{x : normal . x = 0}``."""
    k = max(i for i, a in enumerate(normal) if a != 0)
    basis = []
    for i in range(len(normal)):
        if i == k:
            continue
        v = [Fraction(0)] * len(normal)
        v[i] = Fraction(1)
        v[k] = -Fraction(normal[i], normal[k])
        basis.append(tuple(v))
    return basis


# -- double description -------------------------------------------------------

def double_description(rows: Sequence[Sequence[Fraction]]) -> list[Vector]:
    """Extreme rays of the pointed cone ``{z : A z >= 0}``.

    ``A`` must have full column rank.  Rows are inserted in the given order
    after an initial simplicial cone built from the first independent rows.
    """
    A = [tuple(map(Fraction, r)) for r in rows]
    d = len(A[0])
    if _rank(A) < d:
        raise ValueError("cone is not pointed: constraint matrix is rank deficient")
    basis_rows: list[int] = []
    for k, row in enumerate(A):
        if _rank([A[b] for b in basis_rows] + [row]) > len(basis_rows):
            basis_rows.append(k)
        if len(basis_rows) == d:
            break
    inv = _inverse([A[b] for b in basis_rows])
    rays = [tuple(map(Fraction, primitive(inv[r][c] for r in range(d)))) for c in range(d)]
    processed = list(basis_rows)
    for k, row in enumerate(A):
        if k in basis_rows:
            continue
        vals = [_dot(row, r) for r in rays]
        pos = [r for r, v in zip(rays, vals) if v > 0]
        zero = [r for r, v in zip(rays, vals) if v == 0]
        neg = [(r, v) for r, v in zip(rays, vals) if v < 0]
        if not neg:
            processed.append(k)
            continue
        tight = {r: frozenset(q for q in processed if _dot(A[q], r) == 0) for r in rays}
        new = []
        for p in pos:
            vp = _dot(row, p)
            for n_, vn in neg:
                common = tight[p] & tight[n_]
                if len(common) < d - 2:
                    continue
                # algebraic adjacency: the common tight rows cut out a 2-face
                if d > 2 and _rank([A[q] for q in common]) != d - 2:
                    continue
                if any(
                    r is not p and r is not n_ and common <= tight[r]
                    for r in rays
                ):
                    continue
                new.append(tuple(map(Fraction, primitive(vp * b - vn * a for a, b in zip(p, n_)))))
        rays = pos + zero + new
        processed.append(k)
    return rays


def _dual_rays(generators: Sequence[Sequence], trace_weights: Sequence[int]) -> list[tuple[int, ...]]:
    basis = _hyperplane_basis(trace_weights)
    rows = [tuple(_dot(g, b) for b in basis) for g in generators]
    zs = double_description(rows)
    out = set()
    for z in zs:
        y = [sum((z[k] * basis[k][i] for k in range(len(basis))), Fraction(0)) for i in range(len(trace_weights))]
        out.add(primitive(y))
    return sorted(out, reverse=True)


def _extreme_among(generators, facets) -> list[tuple[int, ...]]:
    """Generators whose tight facets have full corank-one rank."""
    if not generators:
        return []
    dim = _rank([tuple(map(Fraction, g)) for g in generators])
    out = set()
    for g in generators:
        tight = [tuple(map(Fraction, f)) for f in facets if _dot(f, g) == 0]
        if _rank(tight) == dim - 1:
            out.add(primitive(g))
    return sorted(out, reverse=True)


# -- cones attached to a bundle -------------------------------------------------

@lru_cache(maxsize=4096)
def cone_from_edges(length: int, edges: tuple[tuple[int, int], ...], ranks: tuple[int, ...]) -> RationalCone:
    """Cone generated by ``e_i - e_j`` over ``edges``, facets in ``{r . a = 0}``."""
    if not edges:
        raise ValueError("weight cone of an empty edge set")
    gens = [Weight.of(length, i, j).vector for i, j in edges]
    facets = _dual_rays(gens, ranks)
    rays = _extreme_among(gens, facets)
    return RationalCone(length, tuple(rays), tuple(facets), ((1,) * length,))


def weight_cone(gb: GradedBundle) -> RationalCone:
    return cone_from_edges(gb.length, gb.edges, gb.ranks)


def dual_cone(cone: RationalCone, trace_weights: Sequence[int]) -> RationalCone:
    """Dual of ``cone`` represented in ``{trace_weights . a = 0}``."""
    trace_weights = tuple(int(t) for t in trace_weights)
    if len(trace_weights) != cone.ambient_dim:
        raise ValueError("trace weights do not match the ambient dimension")
    for s in cone.subspace:
        if _dot(s, trace_weights) == 0:
            raise ValueError("trace weights do not pair nondegenerately with the cone's subspace")
    rays = _dual_rays(cone.rays, trace_weights)
    return RationalCone(cone.ambient_dim, tuple(rays), tuple(cone.rays), (trace_weights,))


def partition_form(v: Sequence, ranks: Sequence[int]) -> Partition | None:
    """Split ``v`` into its negative and positive level sets if it has exactly two.

    The canonical scaling ``+1/r(I+)`` on ``I+`` and ``-1/r(I-)`` on ``I-``
    is a consequence of the two-value shape and the rank-weighted trace
    condition; it is asserted here.
    """
    v = [Fraction(x) for x in v]
    if _dot(v, ranks) != 0:
        raise ValueError("vector is not trace free for the given ranks")
    values = sorted(set(v))
    if len(values) != 2:
        return None
    low, high = values
    plus = frozenset(i for i, x in enumerate(v) if x == high)
    minus = frozenset(i for i, x in enumerate(v) if x == low)
    r_plus = sum(ranks[i] for i in plus)
    r_minus = sum(ranks[i] for i in minus)
    assert high * r_plus == -low * r_minus
    return Partition(minus, plus)


def partition_vector(plus, ranks: Sequence[int]) -> Vector:
    plus = frozenset(plus)
    r_plus = sum(r for i, r in enumerate(ranks) if i in plus)
    r_minus = sum(r for i, r in enumerate(ranks) if i not in plus)
    return tuple(
        Fraction(1, r_plus) if i in plus else Fraction(-1, r_minus) for i in range(len(ranks))
    )


def candidate_dual_generators(gb: GradedBundle) -> list[DualGenerator]:
    out = []
    for s in invariant_subsets(gb):
        minus = frozenset(range(gb.length)) - s.indices
        out.append(DualGenerator(partition_vector(s.indices, gb.ranks), Partition(minus, s.indices)))
    return out


def interior_membership(cone: RationalCone, v: Sequence) -> Membership:
    v = [Fraction(x) for x in v]
    if len(v) != cone.ambient_dim:
        raise ValueError("vector length does not match the cone")
    for s in cone.subspace:
        if _dot(s, v) != 0:
            raise ValueError("vector violates the cone's subspace constraints")
    vals = [_dot(f, v) for f in cone.facets]
    if any(x < 0 for x in vals):
        return Membership.OUTSIDE
    if any(x == 0 for x in vals) or all(x == 0 for x in v):
        return Membership.BOUNDARY
    return Membership.INTERIOR


# -- floating-point LP cross-checks -------------------------------------------

def lp_in_cone(generators: Sequence[Sequence], v: Sequence, margin: float = 0.0) -> bool:
    """Whether ``v = sum t_k g_k`` with every ``t_k >= margin`` is feasible."""
    G = np.array(generators, dtype=float).T
    if G.size == 0:
        return bool(np.allclose(np.asarray(v, dtype=float), 0.0))
    res = linprog(
        np.zeros(G.shape[1]),
        A_eq=G,
        b_eq=np.asarray(v, dtype=float),
        bounds=[(margin, None)] * G.shape[1],
        method="highs",
    )
    return res.status == 0


def lp_max_margin(generators: Sequence[Sequence], v: Sequence) -> float | None:
    """Largest ``delta <= 1`` with ``v = sum t_k g_k`` and every ``t_k >= delta``.

    ``None`` if ``v`` is not in the cone at all.  A strictly positive optimum
    certifies that ``v`` is interior to the cone spanned by the generators.
    """
    G = np.array(generators, dtype=float).T
    k = G.shape[1]
    # variables (t_1..t_k, delta); maximise delta
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-np.eye(k), np.ones((k, 1))])
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=np.zeros(k),
        A_eq=np.hstack([G, np.zeros((G.shape[0], 1))]),
        b_eq=np.asarray(v, dtype=float),
        bounds=[(0, None)] * k + [(None, 1.0)],
        method="highs",
    )
    return float(-res.fun) if res.status == 0 else None


def lp_extremality(cone: RationalCone) -> list[bool]:
    """Per ray: True if it is not a nonnegative combination of the others."""
    out = []
    for k, r in enumerate(cone.rays):
        others = [q for j, q in enumerate(cone.rays) if j != k]
        out.append(not lp_in_cone(others, r))
    return out


def lp_is_pointed(cone: RationalCone) -> bool:
    """No nonzero ``x`` with ``x`` and ``-x`` both in the cone.

    Checked as infeasibility of ``sum t_k g_k = 0, sum t_k = 1, t >= 0``.
    """
    G = np.array(cone.rays, dtype=float).T
    k = G.shape[1]
    A_eq = np.vstack([G, np.ones((1, k))])
    b_eq = np.concatenate([np.zeros(G.shape[0]), [1.0]])
    res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * k, method="highs")
    return res.status == 2
