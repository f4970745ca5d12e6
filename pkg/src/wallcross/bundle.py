"""Graded objects, their extension quiver and the closed subsets of pieces.

Pieces are indexed from 0 internally.  Reports and config files use 1-based
indices; translation happens in :mod:`wallcross.config`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .cohomology import CohClass, IntersectionForm, degree, slope


@dataclass(frozen=True)
class Piece:
    rank: int
    c1: CohClass


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


@dataclass(frozen=True)
class GradedBundle:
    """Graded pieces, the support of the extension data, and the base class.

    ``edges`` holds pairs ``(i, j)`` with ``i < j`` for which the extension
    component from piece ``j`` into piece ``i`` is nonzero.  ``pert_basis``
    gives the perturbation directions; it defaults to the standard basis.
    """

    form: IntersectionForm
    omega: CohClass
    pieces: tuple[Piece, ...]
    edges: tuple[tuple[int, int], ...]
    pert_basis: tuple[CohClass, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(
            self, "edges", tuple(sorted({(int(i), int(j)) for i, j in self.edges}))
        )
        if self.pert_basis is None:
            p = self.form.h11_rank
            basis = tuple(CohClass.basis(p, k) for k in range(p))
        else:
            basis = tuple(self.pert_basis)
        object.__setattr__(self, "pert_basis", basis)

    @property
    def length(self) -> int:
        return len(self.pieces)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(pc.rank for pc in self.pieces)

    @property
    def total_rank(self) -> int:
        return sum(self.ranks)

    @property
    def total_c1(self) -> CohClass:
        total = CohClass.zero(self.form.h11_rank)
        for pc in self.pieces:
            total = total + pc.c1
        return total

    @property
    def n_directions(self) -> int:
        return len(self.pert_basis)

    def polarisation(self, eps: Sequence = ()) -> CohClass:
        """``omega + sum_k eps_k alpha_k``; an empty ``eps`` gives ``omega``."""
        if len(eps) == 0:
            return self.omega
        if len(eps) != self.n_directions:
            raise ValueError(
                f"eps has length {len(eps)}, expected {self.n_directions}"
            )
        L = self.omega
        for e, a in zip(eps, self.pert_basis):
            L = L + Fraction(e) * a
        return L

    def piece_degrees(self, L: CohClass) -> tuple[Fraction, ...]:
        return tuple(degree(self.form, pc.c1, L) for pc in self.pieces)

    def slope(self, L: CohClass) -> Fraction:
        return slope(sum(self.piece_degrees(L), Fraction(0)), self.total_rank)

    def predecessors(self) -> tuple[frozenset[int], ...]:
        pred: list[set[int]] = [set() for _ in range(self.length)]
        for i, j in self.edges:
            if 0 <= i < self.length and 0 <= j < self.length:
                pred[j].add(i)
        return tuple(frozenset(s) for s in pred)


@dataclass(frozen=True)
class InvariantSubset:
    """Nonempty proper subset of pieces closed under the extension quiver."""

    indices: frozenset[int]
    rank: int = field(compare=False)
    c1: CohClass = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "indices", frozenset(self.indices))

    @classmethod
    def of(cls, gb: GradedBundle, indices) -> "InvariantSubset":
        idx = frozenset(int(i) for i in indices)
        if not idx or len(idx) >= gb.length or not idx <= set(range(gb.length)):
            raise ValueError(f"{sorted(idx)} is not a nonempty proper subset")
        if not is_closed(gb.edges, idx):
            raise ValueError(f"{sorted(idx)} is not closed under the quiver")
        c1 = CohClass.zero(gb.form.h11_rank)
        for i in sorted(idx):
            c1 = c1 + gb.pieces[i].c1
        return cls(idx, sum(gb.pieces[i].rank for i in idx), c1)

    @property
    def sorted_indices(self) -> tuple[int, ...]:
        return tuple(sorted(self.indices))

    def label(self) -> str:
        """1-based set notation used in reports, e.g. ``{1,2}``."""
        return "{" + ",".join(str(i + 1) for i in self.sorted_indices) + "}"


def is_closed(edges, indices) -> bool:
    """``j in I`` implies ``i in I`` for every edge ``(i, j)``."""
    return all(i in indices for i, j in edges if j in indices)


def is_connected(length: int, edges) -> bool:
    if length == 0:
        return False
    adj: list[list[int]] = [[] for _ in range(length)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == length


def validate(gb: GradedBundle) -> list[Violation]:
    """List every broken invariant of ``gb``; an empty list means valid."""
    out: list[Violation] = []
    p = gb.form.h11_rank
    ell = gb.length
    if ell == 0:
        return [Violation("no pieces", "the graded object has no pieces")]
    if len(gb.omega) != p:
        out.append(Violation("class length", f"omega has length {len(gb.omega)}, expected {p}"))
    for k, a in enumerate(gb.pert_basis):
        if len(a) != p:
            out.append(Violation("class length", f"direction {k + 1} has length {len(a)}, expected {p}"))
    for i, pc in enumerate(gb.pieces):
        if pc.rank < 1:
            out.append(Violation("rank", f"piece {i + 1} has rank {pc.rank} < 1"))
        if len(pc.c1) != p:
            out.append(Violation("class length", f"c1 of piece {i + 1} has length {len(pc.c1)}, expected {p}"))
    for i, j in gb.edges:
        if not (0 <= i < ell and 0 <= j < ell):
            out.append(Violation("edge range", f"edge ({i + 1},{j + 1}) refers to a missing piece"))
        elif i >= j:
            out.append(Violation("edge order", f"edge ({i + 1},{j + 1}) must satisfy i < j"))
    if out:
        return out
    if not is_connected(ell, gb.edges):
        out.append(Violation("quiver disconnected", "the extension quiver is not connected"))
    degs = gb.piece_degrees(gb.omega)
    slopes = [slope(d, pc.rank) for d, pc in zip(degs, gb.pieces)]
    for i in range(1, ell):
        if slopes[i] != slopes[0]:
            out.append(
                Violation(
                    "unequal slopes",
                    f"pieces 1 and {i + 1} have degrees {degs[0]} and {degs[i]} "
                    f"(slopes {slopes[0]} vs {slopes[i]}) at omega",
                )
            )
    return out


def _closed_sets(length: int, pred: Sequence[frozenset[int]]) -> Iterator[frozenset[int]]:
    # Vertices are decided in increasing order; every predecessor of j is < j,
    # so j may be added only once all its predecessors are already in.
    def rec(j: int, current: frozenset[int]):
        if j == length:
            yield current
            return
        yield from rec(j + 1, current)
        if pred[j] <= current:
            yield from rec(j + 1, current | {j})

    yield from rec(0, frozenset())


def invariant_subsets(gb: GradedBundle) -> list[InvariantSubset]:
    """All nonempty proper closed subsets, sorted by rank then indices."""
    ell = gb.length
    found = [
        InvariantSubset.of(gb, s)
        for s in _closed_sets(ell, gb.predecessors())
        if 0 < len(s) < ell
    ]
    found.sort(key=lambda s: (s.rank, s.sorted_indices))
    return found


def subsheaf_slope(gb: GradedBundle, subset: InvariantSubset, L: CohClass) -> Fraction:
    return slope(degree(gb.form, subset.c1, L), subset.rank)
