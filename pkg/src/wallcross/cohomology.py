"""Exact intersection numbers on a basis of (1,1)-classes.

An :class:`IntersectionForm` stores the symmetric n-linear cup product
``alpha_{i1} . ... . alpha_{in}`` on sorted multi-indices.  Everything here
is exact: coefficients are :class:`fractions.Fraction` and no floats are
ever produced.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Iterable, Mapping, Sequence

Rational = Fraction


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"a/b"`` strings to a Fraction.

    Floats are refused so that they never leak into sign decisions.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


@dataclass(frozen=True)
class CohClass:
    """Coordinates of a class in the basis ``[alpha_1], ..., [alpha_p]``."""

    coefficients: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "coefficients", tuple(as_fraction(c) for c in self.coefficients)
        )

    @classmethod
    def of(cls, *values) -> "CohClass":
        return cls(tuple(values))

    @classmethod
    def zero(cls, p: int) -> "CohClass":
        return cls((Fraction(0),) * p)

    @classmethod
    def basis(cls, p: int, k: int) -> "CohClass":
        return cls(tuple(Fraction(int(i == k)) for i in range(p)))

    def __len__(self) -> int:
        return len(self.coefficients)

    def __iter__(self):
        return iter(self.coefficients)

    def __getitem__(self, k: int) -> Fraction:
        return self.coefficients[k]

    def __add__(self, other: "CohClass") -> "CohClass":
        if len(other) != len(self):
            raise ValueError("cannot add classes of different lengths")
        return CohClass(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: "CohClass") -> "CohClass":
        return self + (-1) * other

    def __rmul__(self, scalar) -> "CohClass":
        s = as_fraction(scalar)
        return CohClass(tuple(s * a for a in self))

    def __mul__(self, scalar) -> "CohClass":
        return self.__rmul__(scalar)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coefficients)

    def __str__(self) -> str:
        return "(" + ", ".join(str(c) for c in self.coefficients) + ")"


@dataclass(frozen=True)
class IntersectionForm:
    """Symmetric n-linear form on a rank-p lattice.

    Parameters
    ----------
    dimension : int
        Complex dimension ``n`` of the underlying manifold.
    h11_rank : int
        Number ``p`` of basis classes.
    entries : mapping
        Values on sorted, 0-based multi-indices of length ``n``.  Missing
        entries are zero.
    """

    dimension: int
    h11_rank: int
    entries: Mapping[tuple[int, ...], Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.h11_rank < 1:
            raise ValueError("h11_rank must be positive")
        canonical: dict[tuple[int, ...], Fraction] = {}
        for key, value in dict(self.entries).items():
            idx = tuple(int(i) for i in key)
            if len(idx) != self.dimension:
                raise ValueError(f"multi-index {key} does not have length {self.dimension}")
            if any(i < 0 or i >= self.h11_rank for i in idx):
                raise ValueError(f"multi-index {key} out of range for p={self.h11_rank}")
            if list(idx) != sorted(idx):
                raise ValueError(f"multi-index {key} is not sorted")
            if idx in canonical:
                raise ValueError(f"duplicate multi-index {key}")
            v = as_fraction(value)
            if v != 0:
                canonical[idx] = v
        object.__setattr__(self, "entries", canonical)

    @classmethod
    def diagonal(cls, values: Sequence, dimension: int = 2) -> "IntersectionForm":
        """Form with ``T(e_k, ..., e_k) = values[k]`` and all mixed products zero."""
        return cls(dimension, len(values), {(k,) * dimension: v for k, v in enumerate(values)})

    def entry(self, index: Iterable[int]) -> Fraction:
        return self.entries.get(tuple(sorted(index)), Fraction(0))

    def __hash__(self):
        return hash((self.dimension, self.h11_rank, tuple(sorted(self.entries.items()))))


def _check(form: IntersectionForm, classes: Sequence[CohClass]) -> None:
    if len(classes) != form.dimension:
        raise ValueError(
            f"expected {form.dimension} classes, got {len(classes)}"
        )
    for c in classes:
        if len(c) != form.h11_rank:
            raise ValueError(
                f"class of length {len(c)} does not match h11_rank {form.h11_rank}"
            )


def evaluate(form: IntersectionForm, classes: Sequence[CohClass]) -> Fraction:
    """Cup product of ``n`` classes.

    Expands multilinearly over the stored entries: each sorted multi-index
    contributes its value times the sum, over its distinct orderings, of the
    products of the matching coefficients.
    """
    _check(form, classes)
    total = Fraction(0)
    for key, value in form.entries.items():
        acc = Fraction(0)
        for order in set(permutations(key)):
            term = Fraction(1)
            for c, i in zip(classes, order):
                term *= c[i]
                if term == 0:
                    break
            acc += term
        total += value * acc
    return total


def degree(form: IntersectionForm, c1: CohClass, polarisation: CohClass) -> Fraction:
    """``c1 . L^(n-1)``."""
    return evaluate(form, [c1] + [polarisation] * (form.dimension - 1))


def slope(deg, rank: int) -> Fraction:
    if rank < 1:
        raise ValueError("rank must be positive")
    return as_fraction(deg) / rank


def volume(form: IntersectionForm, polarisation: CohClass) -> Fraction:
    """Top self-intersection ``L^n`` (the volume up to ``1/n!``)."""
    return evaluate(form, [polarisation] * form.dimension)


def degree_vector(form: IntersectionForm, polarisation: CohClass) -> tuple[Fraction, ...]:
    """Linear functional ``c1 -> degree(c1, L)`` in coordinates."""
    p = form.h11_rank
    return tuple(degree(form, CohClass.basis(p, k), polarisation) for k in range(p))
