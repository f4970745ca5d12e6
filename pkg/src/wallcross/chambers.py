"""Slope-deficit polynomials and the stable/unstable/semistable partition.

For a closed subset ``I`` the deficit is
``nu_I(eps) = mu_{L_eps}(E) - mu_{L_eps}(F_I)`` with
``L_eps = omega + sum_k eps_k alpha_k``.  Labels are exact sign conditions
on these polynomials.
"""
from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement, product
from typing import Iterable, Mapping, Sequence

from .bundle import GradedBundle, InvariantSubset, invariant_subsets, subsheaf_slope
from .cohomology import CohClass, evaluate

Monomial = tuple[int, ...]

RADIUS_WARNING = (
    "chamber labels are exact sign conditions on the slope-deficit polynomials; "
    "they describe actual (in)stability only inside some ball around omega whose "
    "radius is not computable from the input data"
)


class Label(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    STRICTLY_SEMISTABLE = "StrictlySemistable"


@dataclass(frozen=True)
class SlopePolynomial:
    subset: InvariantSubset
    coefficients: Mapping[Monomial, Fraction]

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self.coefficients), default=0)

    def constant_term(self) -> Fraction:
        n = len(next(iter(self.coefficients), ()))
        return self.coefficients.get((0,) * n, Fraction(0))

    def __call__(self, eps: Sequence) -> Fraction:
        return poly_eval(self.coefficients, eps)


@dataclass(frozen=True)
class ChamberLabel:
    label: Label
    witnesses: tuple[InvariantSubset, ...]
    min_nu: Fraction | None
    values: tuple[tuple[InvariantSubset, Fraction], ...]


@dataclass(frozen=True)
class GridSample:
    eps: tuple[Fraction, ...]
    in_ball: bool
    chamber: ChamberLabel


def poly_eval(coeffs: Mapping[Monomial, Fraction], eps: Sequence) -> Fraction:
    total = Fraction(0)
    for mono, c in coeffs.items():
        term = c
        for e, k in zip(eps, mono):
            if k:
                term *= Fraction(e) ** k
        total += term
    return total


def poly_shift(coeffs: Mapping[Monomial, Fraction], center: Sequence) -> dict[Monomial, Fraction]:
    """Coefficients of ``delta -> P(center + delta)``."""
    center = [Fraction(c) for c in center]
    out: dict[Monomial, Fraction] = {}
    for mono, c in coeffs.items():
        # prod_k (c_k + d_k)^{a_k} = sum over b <= a of prod binom(a_k, b_k) c_k^{a_k-b_k} d^b
        for sub in product(*(range(a + 1) for a in mono)):
            term = c
            for a, b, x in zip(mono, sub, center):
                term *= math.comb(a, b) * x ** (a - b)
            if term:
                out[sub] = out.get(sub, Fraction(0)) + term
    return {m: v for m, v in out.items() if v != 0}


def _degree_polynomial(gb: GradedBundle, c1: CohClass) -> dict[Monomial, Fraction]:
    """``eps -> c1 . (omega + sum eps_k alpha_k)^(n-1)`` as exact coefficients."""
    n = gb.form.dimension
    m = gb.n_directions
    classes = (gb.omega,) + tuple(gb.pert_basis)
    out: dict[Monomial, Fraction] = {}
    for pick in combinations_with_replacement(range(m + 1), n - 1):
        counts = [pick.count(k) for k in range(m + 1)]
        multinom = math.factorial(n - 1)
        for k in counts:
            multinom //= math.factorial(k)
        value = evaluate(gb.form, [c1] + [classes[k] for k in pick])
        if value:
            mono = tuple(counts[1:])
            out[mono] = out.get(mono, Fraction(0)) + multinom * value
    return out


def nu_value(gb: GradedBundle, subset: InvariantSubset, eps: Sequence) -> Fraction:
    L = gb.polarisation(eps)
    return gb.slope(L) - subsheaf_slope(gb, subset, L)


def nu_polynomial(gb: GradedBundle, subset: InvariantSubset) -> SlopePolynomial:
    whole = _degree_polynomial(gb, gb.total_c1)
    part = _degree_polynomial(gb, subset.c1)
    coeffs: dict[Monomial, Fraction] = {}
    for mono, v in whole.items():
        coeffs[mono] = coeffs.get(mono, Fraction(0)) + v / gb.total_rank
    for mono, v in part.items():
        coeffs[mono] = coeffs.get(mono, Fraction(0)) - v / subset.rank
    return SlopePolynomial(subset, {k: v for k, v in sorted(coeffs.items()) if v != 0})


def _label_from_values(values: Sequence[tuple[InvariantSubset, Fraction]]) -> ChamberLabel:
    negative = tuple(s for s, v in values if v < 0)
    zero = tuple(s for s, v in values if v == 0)
    min_nu = min((v for _, v in values), default=None)
    if negative:
        label, witnesses = Label.UNSTABLE, negative
    elif zero:
        label, witnesses = Label.STRICTLY_SEMISTABLE, zero
    else:
        label, witnesses = Label.STABLE, ()
    return ChamberLabel(label, witnesses, min_nu, tuple(values))


def classify(gb: GradedBundle, eps: Sequence, subsets: Sequence[InvariantSubset] | None = None) -> ChamberLabel:
    """Exact label of ``L_eps``.

    Stable iff every deficit is positive, Unstable iff one is negative,
    StrictlySemistable otherwise.  A bundle without proper closed subsets is
    Stable everywhere.
    """
    if subsets is None:
        subsets = invariant_subsets(gb)
    eps = [Fraction(e) for e in eps]
    return _label_from_values([(s, nu_value(gb, s, eps)) for s in subsets])


def certified_radius(gb: GradedBundle, eps: Sequence, subsets=None) -> Fraction | None:
    """Radius ``rho`` such that the label of ``eps`` holds on the l1 ball.

    Uses ``|P(eps + d) - P(eps)| <= sum_{a != 0} |c'_a| rho^|a|`` for
    ``|d|_1 <= rho``, with ``c'`` the coefficients of the shifted
    polynomial.  For Stable every deficit is checked against the smallest
    one; for Unstable only the most negative witness is.  Returns ``None``
    for StrictlySemistable points.
    """
    if subsets is None:
        subsets = invariant_subsets(gb)
    chamber = classify(gb, eps, subsets)
    if chamber.label is Label.STRICTLY_SEMISTABLE:
        return None
    if chamber.label is Label.STABLE:
        if not subsets:
            return None
        margin = chamber.min_nu
        polys = [nu_polynomial(gb, s) for s in subsets]
    else:
        worst = min(chamber.values, key=lambda sv: sv[1])
        margin = -worst[1]
        polys = [nu_polynomial(gb, worst[0])]
    shifted = [poly_shift(p.coefficients, eps) for p in polys]

    def bound(rho: Fraction) -> Fraction:
        worst_change = Fraction(0)
        for coeffs in shifted:
            change = sum(
                (abs(c) * rho ** sum(mono) for mono, c in coeffs.items() if sum(mono) > 0),
                Fraction(0),
            )
            worst_change = max(worst_change, change)
        return worst_change

    rho = Fraction(1)
    while bound(rho) >= margin:
        rho /= 2
    return rho


def _grid_axis(radius: Fraction, resolution: int) -> list[Fraction]:
    pts = [-radius + 2 * radius * Fraction(k, resolution - 1) for k in range(resolution)]
    return sorted(set(pts))


def sample_ball(
    gb: GradedBundle,
    radius,
    plane: tuple[int, int] | str = "all",
    resolution: int = 21,
    threads: int = 1,
) -> list[GridSample]:
    """Label a regular grid on ``[-radius, radius]`` in the chosen coordinates.

    ``plane`` is a pair of 0-based direction indices or ``"all"``.  Every
    grid point is reported; ``in_ball`` marks those inside the l1 ball of
    the given radius.  Output order is row-major over the grid and does not
    depend on ``threads``.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    radius = Fraction(radius)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    m = gb.n_directions
    if plane == "all":
        axes = list(range(m))
    else:
        axes = [int(k) for k in plane]
        if len(axes) != 2 or len(set(axes)) != 2 or any(not 0 <= k < m for k in axes):
            raise ValueError(f"plane must name two distinct directions in 0..{m - 1}")
    axis = _grid_axis(radius, resolution)
    points = []
    for coords in product(axis, repeat=len(axes)):
        eps = [Fraction(0)] * m
        for k, v in zip(axes, coords):
            eps[k] = v
        points.append(tuple(eps))
    subsets = invariant_subsets(gb)

    def work(eps):
        return GridSample(eps, sum(abs(e) for e in eps) <= radius, classify(gb, eps, subsets))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, points))
    return [work(e) for e in points]


def sign_conditions(gb: GradedBundle) -> list[dict]:
    """Semialgebraic description: one polynomial per closed subset."""
    out = []
    for s in invariant_subsets(gb):
        poly = nu_polynomial(gb, s)
        out.append({"subset": s.label(), "polynomial": format_polynomial(poly.coefficients)})
    return out


def format_polynomial(coeffs: Mapping[Monomial, Fraction]) -> str:
    if not coeffs:
        return "0"
    terms = []
    for mono, c in sorted(coeffs.items(), key=lambda mc: (sum(mc[0]), tuple(-a for a in mc[0]))):
        factors = [f"e{k + 1}" + (f"^{a}" if a > 1 else "") for k, a in enumerate(mono) if a]
        body = "*".join(factors)
        if not body:
            terms.append(str(c))
        elif c == 1:
            terms.append(body)
        elif c == -1:
            terms.append("-" + body)
        else:
            terms.append(f"{c}*{body}")
    return " + ".join(terms).replace("+ -", "- ")


def write_grid_csv(samples: Iterable[GridSample], path) -> None:
    samples = list(samples)
    m = len(samples[0].eps) if samples else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"eps{k + 1}" for k in range(m)] + ["in_ball", "label", "min_nu", "active_walls"])
        for s in samples:
            walls = ";".join(w.label() for w in s.chamber.witnesses)
            min_nu = "" if s.chamber.min_nu is None else str(s.chamber.min_nu)
            writer.writerow([str(e) for e in s.eps] + [int(s.in_ball), s.chamber.label.value, min_nu, walls])
