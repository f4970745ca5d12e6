"""Seeded generators of quivers and valid graded bundles for property checks."""
from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations, combinations_with_replacement

from .bundle import GradedBundle, Piece, is_connected
from .cohomology import CohClass, IntersectionForm, degree_vector


def all_pairs(length: int) -> list[tuple[int, int]]:
    return list(combinations(range(length), 2))


def connected_quivers(length: int):
    """Every connected edge set ``{(i, j) : i < j}`` on ``length`` vertices."""
    pairs = all_pairs(length)
    for mask in range(1, 1 << len(pairs)):
        edges = tuple(p for k, p in enumerate(pairs) if mask >> k & 1)
        if is_connected(length, edges):
            yield edges


def random_quiver(rng: random.Random, length: int, extra: float = 0.3) -> tuple[tuple[int, int], ...]:
    """Random spanning tree plus each remaining pair with probability ``extra``."""
    edges = set()
    for j in range(1, length):
        i = rng.randrange(j)
        edges.add((i, j))
    for p in all_pairs(length):
        if p not in edges and rng.random() < extra:
            edges.add(p)
    return tuple(sorted(edges))


def random_rational(rng: random.Random, size: int = 3, den: int = 4) -> Fraction:
    return Fraction(rng.randint(-size * den, size * den), rng.randint(1, den))


def random_bundle(
    rng: random.Random,
    length: int | None = None,
    rank_one: bool = False,
    dimension: int | None = None,
    h11_rank: int | None = None,
) -> GradedBundle:
    """Random valid bundle: connected quiver and equal slopes at omega.

    The first Chern classes are drawn at random and one coordinate of each is
    then shifted so that ``deg c1_i = r_i s`` for a common slope ``s``.
    """
    ell = length or rng.randint(2, 5)
    n = dimension or rng.choice([2, 2, 3])
    p = h11_rank or rng.randint(2, 3)
    while True:
        entries = {
            idx: Fraction(rng.randint(-3, 3))
            for idx in combinations_with_replacement(range(p), n)
        }
        form = IntersectionForm(n, p, entries)
        omega = CohClass(tuple(Fraction(rng.randint(-2, 3)) for _ in range(p)))
        D = degree_vector(form, omega)
        if any(D):
            break
    k = max(i for i, d in enumerate(D) if d != 0)
    s = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
    pieces = []
    for _ in range(ell):
        r = 1 if rank_one else rng.randint(1, 3)
        c1 = [Fraction(rng.randint(-3, 3)) for _ in range(p)]
        deg = sum((a * b for a, b in zip(c1, D)), Fraction(0))
        c1[k] += (r * s - deg) / D[k]
        pieces.append(Piece(r, CohClass(tuple(c1))))
    return GradedBundle(form, omega, tuple(pieces), random_quiver(rng, ell))


def random_eps(rng: random.Random, m: int, size: int = 1, den: int = 8) -> tuple[Fraction, ...]:
    return tuple(random_rational(rng, size, den) for _ in range(m))
