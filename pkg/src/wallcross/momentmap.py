"""Torus moment map in Darboux normal form and its zeros.

Normalisation: the moment map at the origin is represented by
``w_i = deg_{L_eps}(G_i) - r_i mu_{L_eps}(E)``; all positive scalar factors
(volumes, ``2 pi``) are dropped since every decision made here is invariant
under positive rescaling.  On the orbit, the moment map reads
``w + sum_e t_e m_e`` with ``t_e = t0_e exp(2 (x_i - x_j))`` for the edge
``e = (i, j)``, which is the gradient of the Kempf-Ness functional

    Phi(x) = <w, x> + 1/2 sum_e t0_e exp(2 (x_i - x_j)).

Zeros are found by damped Newton on the gauge slice ``sum_i r_i x_i = 0``,
after deciding existence exactly by cone membership.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .bundle import GradedBundle, InvariantSubset, invariant_subsets, subsheaf_slope
from .chambers import ChamberLabel, Label, classify
from .cohomology import slope
from .cones import Membership, cone_from_edges, interior_membership


class Status(str, enum.Enum):
    SOLVED = "Solved"
    NO_SOLUTION = "NoSolution"
    MAX_ITERATIONS = "MaxIterations"


class SolverError(RuntimeError):
    """Raised when the Newton iteration produces non-finite values."""


@dataclass(frozen=True)
class MomentOrigin:
    w: tuple[Fraction, ...]


@dataclass(frozen=True)
class OrbitModel:
    """Edges with base magnitudes ``t0_e > 0`` and the piece ranks."""

    length: int
    edges: tuple[tuple[int, int], ...]
    base: tuple[float, ...]
    ranks: tuple[int, ...]

    def __post_init__(self):
        if len(self.base) != len(self.edges):
            raise ValueError("one base magnitude per edge is required")
        if any(not (t > 0 and math.isfinite(t)) for t in self.base):
            raise ValueError("base magnitudes must be positive and finite")
        if len(self.ranks) != self.length:
            raise ValueError("one rank per piece is required")

    @classmethod
    def from_bundle(cls, gb: GradedBundle, magnitudes: Mapping[tuple[int, int], float] | float | None = None) -> "OrbitModel":
        if magnitudes is None:
            base = (1.0,) * len(gb.edges)
        elif isinstance(magnitudes, (int, float)):
            base = (float(magnitudes),) * len(gb.edges)
        else:
            unknown = set(magnitudes) - set(gb.edges)
            if unknown:
                raise ValueError(f"magnitudes given for non-edges {sorted(unknown)}")
            base = tuple(float(magnitudes.get(e, 1.0)) for e in gb.edges)
        return cls(gb.length, gb.edges, base, gb.ranks)

    def weight_matrix(self) -> np.ndarray:
        """Columns are the weights ``m_e``."""
        M = np.zeros((self.length, len(self.edges)))
        for k, (i, j) in enumerate(self.edges):
            M[i, k] = 1.0
            M[j, k] = -1.0
        return M


@dataclass(frozen=True)
class MomentSolution:
    x: np.ndarray | None
    t: tuple[float, ...] | None
    residual: float | None
    status: Status
    reason: str = ""
    iterations: int = 0

    @property
    def total(self) -> float | None:
        return None if self.t is None else float(sum(self.t))


@dataclass(frozen=True)
class PathSample:
    t: float
    eps: tuple[Fraction, ...]
    chamber: ChamberLabel
    solution: MomentSolution


@dataclass(frozen=True)
class PathResult:
    edges: tuple[tuple[int, int], ...]
    samples: tuple[PathSample, ...]

    def edge_series(self, edge: tuple[int, int]) -> np.ndarray:
        k = self.edges.index(edge)
        return np.array([np.nan if s.solution.t is None else s.solution.t[k] for s in self.samples])

    @property
    def params(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def totals(self) -> np.ndarray:
        return np.array([np.nan if s.solution.t is None else s.solution.total for s in self.samples])


@dataclass(frozen=True)
class DegenerationReport:
    filtration: tuple[frozenset[int], ...]
    surviving_edges: tuple[tuple[int, int], ...]
    dying_edges: tuple[tuple[int, int], ...]
    limit_pieces: tuple[tuple[frozenset[int], int, Fraction], ...]
    ties: tuple[str, ...] = ()


@dataclass(frozen=True)
class SupportVerdict:
    confirmed: bool
    mismatches: tuple[str, ...]
    fitted_exponents: dict = field(default_factory=dict)


# -- exact side ---------------------------------------------------------------

def moment_origin(gb: GradedBundle, eps: Sequence) -> MomentOrigin:
    L = gb.polarisation([Fraction(e) for e in eps])
    mu = gb.slope(L)
    return MomentOrigin(tuple(d - pc.rank * mu for d, pc in zip(gb.piece_degrees(L), gb.pieces)))


def existence(orbit: OrbitModel, w: Sequence) -> tuple[bool, str]:
    """Exact decision: a zero exists iff ``-w`` is interior to the weight cone."""
    w = [Fraction(x) for x in w]
    if all(x == 0 for x in w):
        return False, "apex"
    cone = cone_from_edges(orbit.length, orbit.edges, orbit.ranks)
    where = interior_membership(cone, [-x for x in w])
    if where is Membership.INTERIOR:
        return True, ""
    return False, "boundary" if where is Membership.BOUNDARY else "outside"


# -- Kempf-Ness functional ------------------------------------------------------

def edge_magnitudes(orbit: OrbitModel, x: np.ndarray) -> np.ndarray:
    M = orbit.weight_matrix()
    return np.asarray(orbit.base) * np.exp(2.0 * (M.T @ x))


def functional(orbit: OrbitModel, w: np.ndarray, x: np.ndarray) -> float:
    return float(w @ x + 0.5 * edge_magnitudes(orbit, x).sum())


def gradient(orbit: OrbitModel, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Moment map at ``x``: ``w + sum_e t_e(x) m_e``."""
    return w + orbit.weight_matrix() @ edge_magnitudes(orbit, x)


def hessian(orbit: OrbitModel, x: np.ndarray) -> np.ndarray:
    M = orbit.weight_matrix()
    return (M * (2.0 * edge_magnitudes(orbit, x))) @ M.T


def slice_basis(ranks: Sequence[int]) -> np.ndarray:
    """Orthonormal basis (columns) of ``{x : sum r_i x_i = 0}``."""
    r = np.asarray(ranks, dtype=float).reshape(1, -1)
    _, _, vt = np.linalg.svd(r)
    return vt[1:].T


def _newton_direction(H: np.ndarray, g: np.ndarray, r: np.ndarray) -> np.ndarray:
    n = len(g)
    K = np.zeros((n + 1, n + 1))
    K[:n, :n] = H
    K[:n, n] = r
    K[n, :n] = r
    rhs = np.concatenate([-g, [0.0]])
    return np.linalg.solve(K, rhs)[:n]


def kempf_ness_solve(
    orbit: OrbitModel,
    w: Sequence,
    tol: float = 1e-10,
    max_iter: int = 200,
    x0: np.ndarray | None = None,
    c1: float = 1e-4,
) -> MomentSolution:
    """Zero of the moment map on the orbit, if one exists.

    Existence is settled exactly first; the Newton iteration only runs when
    ``-w`` is interior to the weight cone.

    Parameters
    ----------
    orbit : OrbitModel
    w : sequence of rationals
        Moment map at the origin, see :func:`moment_origin`.
    tol : float
        Max-norm tolerance on ``w + sum_e t_e m_e``.
    max_iter : int
        Newton iteration cap.
    x0 : ndarray, optional
        Warm start; projected onto the gauge slice.  Defaults to the origin.
    c1 : float
        Armijo sufficient-decrease constant; steps are halved.

    Raises
    ------
    SolverError
        If the iteration produces non-finite values.
    """
    w_exact = [Fraction(v) for v in w]
    ok, reason = existence(orbit, w_exact)
    if not ok:
        return MomentSolution(None, None, None, Status.NO_SOLUTION, reason)

    wf = np.array([float(v) for v in w_exact])
    r = np.asarray(orbit.ranks, dtype=float)
    x = np.zeros(orbit.length) if x0 is None else np.array(x0, dtype=float)
    x = x - (r @ x) / (r @ r) * r

    def solved(x, res, it):
        t = edge_magnitudes(orbit, x)
        return MomentSolution(x, tuple(float(v) for v in t), res, Status.SOLVED, "", it)

    polish = 0
    for it in range(max_iter + 1):
        g = gradient(orbit, wf, x)
        if not np.all(np.isfinite(g)):
            raise SolverError(f"non-finite moment map at iteration {it}")
        res = float(np.max(np.abs(g)))
        if res <= tol and polish == _POLISH_STEPS:
            return solved(x, res, it)
        if it == max_iter:
            break
        d = _newton_direction(hessian(orbit, x), g, r)
        if not np.all(np.isfinite(d)):
            raise SolverError(f"non-finite Newton step at iteration {it}")
        if res <= tol:
            # a few full Newton steps past the tolerance fix the small t_e to
            # relative accuracy; keep them only while the residual improves
            x_try = x + d
            g_try = gradient(orbit, wf, x_try)
            if float(np.max(np.abs(d))) < 1e-15 or not float(np.max(np.abs(g_try))) < res:
                return solved(x, res, it)
            x = x_try
            polish += 1
            continue
        x = x + _armijo(orbit, wf, x, g, d, c1) * d
    t = edge_magnitudes(orbit, x)
    return MomentSolution(x, tuple(float(v) for v in t), res, Status.MAX_ITERATIONS, "iteration cap reached", max_iter)


_POLISH_STEPS = 3


def _armijo(orbit, wf, x, g, d, c1) -> float:
    slope_ = float(g @ d)
    f0 = functional(orbit, wf, x)
    if -slope_ <= 1e-10 * max(1.0, abs(f0)):
        # Newton decrement below what Phi can resolve: quadratic regime
        return 1.0
    step = 1.0
    with np.errstate(over="ignore"):
        while step > 1e-12:
            f1 = functional(orbit, wf, x + step * d)
            if math.isfinite(f1) and f1 <= f0 + c1 * step * slope_:
                return step
            step *= 0.5
    # the decrease is below the rounding of Phi: accept the first step that
    # lowers the moment residual instead
    res0 = np.max(np.abs(gradient(orbit, wf, x)))
    step = 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        while step > 1e-12:
            if np.max(np.abs(gradient(orbit, wf, x + step * d))) < res0:
                return step
            step *= 0.5
    return step


def boundary_descent(orbit: OrbitModel, w: Sequence, iterations: int = 40, c1: float = 1e-4) -> np.ndarray:
    """Edge magnitudes along a damped Newton descent run without the existence gate.

    Diagnostic for the boundary case: there the functional is bounded below
    but has no minimiser, so ``sum t_e`` stays bounded while the edges
    leaving the minimal face decay to zero.  Returns one row per iterate.
    """
    wf = np.array([float(Fraction(v)) for v in w])
    r = np.asarray(orbit.ranks, dtype=float)
    x = np.zeros(orbit.length)
    rows = [edge_magnitudes(orbit, x)]
    for _ in range(iterations):
        g = gradient(orbit, wf, x)
        d = _newton_direction(hessian(orbit, x), g, r)
        if not np.all(np.isfinite(d)):
            break
        x = x + _armijo(orbit, wf, x, g, d, c1) * d
        rows.append(edge_magnitudes(orbit, x))
    return np.array(rows)


# -- paths ----------------------------------------------------------------------

def geometric_samples(t_start: float, ratio: float, steps: int) -> list[float]:
    return [t_start * ratio ** k for k in range(steps)]


def straight_path(eps_from: Sequence, eps_to: Sequence) -> Callable[[Fraction], tuple[Fraction, ...]]:
    """``t -> eps_to + t (eps_from - eps_to)``; ``t = 1`` is the start."""
    a = [Fraction(v) for v in eps_from]
    b = [Fraction(v) for v in eps_to]

    def path(t):
        t = Fraction(t)
        return tuple(bb + t * (aa - bb) for aa, bb in zip(a, b))

    return path


def solve_path(
    gb: GradedBundle,
    orbit: OrbitModel,
    path: Callable,
    samples: Sequence,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> PathResult:
    """Solve along ``eps(t)`` for decreasing ``t``, warm-starting each solve."""
    subsets = invariant_subsets(gb)
    out = []
    x_prev = None
    for t in samples:
        eps = tuple(Fraction(e) for e in path(Fraction(t)))
        chamber = classify(gb, eps, subsets)
        sol = kempf_ness_solve(orbit, moment_origin(gb, eps).w, tol=tol, max_iter=max_iter, x0=x_prev)
        if sol.x is not None:
            x_prev = sol.x
        out.append(PathSample(float(t), eps, chamber, sol))
    return PathResult(orbit.edges, tuple(out))


def loglog_fit(params: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """Least-squares ``log v = slope log t + log C``; returns ``(slope, C)``."""
    lt = np.log(np.asarray(params, dtype=float))
    lv = np.log(np.asarray(values, dtype=float))
    slope_, intercept = np.polyfit(lt, lv, 1)
    return float(slope_), float(np.exp(intercept))


def write_path_csv(result: PathResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["t"] + [f"t_{i + 1}_{j + 1}" for i, j in result.edges] + ["sum_t", "residual", "iterations", "status"]
        )
        for s in result.samples:
            sol = s.solution
            ts = [""] * len(result.edges) if sol.t is None else [repr(v) for v in sol.t]
            writer.writerow(
                [repr(s.t)]
                + ts
                + [
                    "" if sol.t is None else repr(sol.total),
                    "" if sol.residual is None else repr(sol.residual),
                    sol.iterations,
                    sol.status.value if not sol.reason else f"{sol.status.value}({sol.reason})",
                ]
            )


# -- degenerations ----------------------------------------------------------------

def degeneration_filtration(gb: GradedBundle, wall_eps: Sequence) -> DegenerationReport:
    """Chain of maximal-rank equal-slope closed subsets at a wall.

    Built top-down from the whole index set: at each step the closed subset
    strictly inside the current level with slope equal to that of ``E`` at
    the wall and maximal rank is chosen; ties go to the lexicographically
    smallest index set and are recorded.
    """
    wall_eps = [Fraction(e) for e in wall_eps]
    subsets = invariant_subsets(gb)
    chamber = classify(gb, wall_eps, subsets)
    if chamber.label is not Label.STRICTLY_SEMISTABLE:
        raise ValueError(f"wall class must be StrictlySemistable, got {chamber.label.value}")
    L = gb.polarisation(wall_eps)
    mu = gb.slope(L)
    equal = [s for s in subsets if subsheaf_slope(gb, s, L) == mu]
    everything = frozenset(range(gb.length))
    chain = [everything]
    ties = []
    current = everything
    while True:
        inside = [s for s in equal if s.indices < current]
        if not inside:
            break
        best_rank = max(s.rank for s in inside)
        best = sorted((s for s in inside if s.rank == best_rank), key=lambda s: s.sorted_indices)
        if len(best) > 1:
            ties.append(
                f"rank {best_rank} tie inside {_fmt(current)}: " + ", ".join(b.label() for b in best)
            )
        current = best[0].indices
        chain.append(current)
    chain.reverse()
    level = {}
    for k, s in enumerate(chain):
        for i in s:
            level.setdefault(i, k)
    surviving = tuple(e for e in gb.edges if level[e[0]] == level[e[1]])
    dying = tuple(e for e in gb.edges if level[e[0]] != level[e[1]])
    pieces = []
    prev: frozenset[int] = frozenset()
    for s in chain:
        quotient = s - prev
        rank = sum(gb.pieces[i].rank for i in quotient)
        deg = sum((gb.piece_degrees(L)[i] for i in quotient), Fraction(0))
        pieces.append((frozenset(quotient), rank, slope(deg, rank)))
        prev = s
    return DegenerationReport(tuple(chain), surviving, dying, tuple(pieces), tuple(ties))


def _fmt(s) -> str:
    return "{" + ",".join(str(i + 1) for i in sorted(s)) + "}"


def limit_support_check(
    result: PathResult,
    report: DegenerationReport,
    threshold_fit: float = 0.5,
    tail: int = 4,
) -> SupportVerdict:
    """Compare the edge magnitudes at the end of a path with a filtration.

    Over the last ``tail`` samples, an edge is judged to vanish when it
    decreases monotonically and its log-log exponent against the path
    parameter is at least ``threshold_fit``; it is judged to survive when
    the exponent stays below the threshold.
    """
    mismatches = []
    exponents = {}
    params = result.params[-tail:]
    if any(s.solution.status is not Status.SOLVED for s in result.samples[-tail:]):
        return SupportVerdict(False, ("unsolved samples at the end of the path",))
    for edge in result.edges:
        series = result.edge_series(edge)[-tail:]
        exp_, _ = loglog_fit(params, series)
        exponents[edge] = exp_
        vanishing = exp_ >= threshold_fit and bool(np.all(np.diff(series) < 0))
        name = f"({edge[0] + 1},{edge[1] + 1})"
        if edge in report.dying_edges and not vanishing:
            mismatches.append(f"edge {name} expected to vanish but exponent is {exp_:.3g}")
        if edge in report.surviving_edges and vanishing:
            mismatches.append(f"edge {name} expected to survive but vanishes with exponent {exp_:.3g}")
    return SupportVerdict(not mismatches, tuple(mismatches), exponents)
