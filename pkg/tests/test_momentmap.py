import math
import random
from fractions import Fraction

import numpy as np
import pytest

from wallcross.bundle import InvariantSubset, subsheaf_slope
from wallcross.chambers import Label, classify
from wallcross.cones import Membership, candidate_dual_generators, interior_membership, weight_cone
from wallcross.momentmap import (
    OrbitModel,
    Status,
    degeneration_filtration,
    functional,
    geometric_samples,
    gradient,
    hessian,
    kempf_ness_solve,
    limit_support_check,
    loglog_fit,
    moment_origin,
    slice_basis,
    solve_path,
    straight_path,
    write_path_csv,
)
from wallcross.random_configs import random_bundle, random_eps, random_quiver

F = Fraction
FULL3 = ((0, 1), (0, 2), (1, 2))


def test_moment_origin_examples(e1, e5):
    assert moment_origin(e5, [0, F(1, 2), F(1, 8)]).w == (F(-1, 2), F(3, 8), F(1, 8))
    assert moment_origin(e5, [0, 0, 0]).w == (0, 0, 0)
    s = F(2, 7)
    assert moment_origin(e1, [0, s]).w == (-s, s)


def test_moment_origin_trace_free():
    rng = random.Random(1)
    for _ in range(20):
        gb = random_bundle(rng)
        w = moment_origin(gb, random_eps(rng, gb.n_directions)).w
        assert sum(w) == 0


def test_sign_link_with_slopes():
    rng = random.Random(2)
    for _ in range(20):
        gb = random_bundle(rng)
        for _ in range(5):
            eps = random_eps(rng, gb.n_directions)
            w = moment_origin(gb, eps).w
            L = gb.polarisation(eps)
            mu = gb.slope(L)
            for gen in candidate_dual_generators(gb):
                plus, minus = gen.partition.plus, gen.partition.minus
                pair = sum(a * b for a, b in zip(w, gen.vector))
                r_plus = sum(gb.ranks[i] for i in plus)
                r_minus = sum(gb.ranks[i] for i in minus)
                lhs = sum(w[i] for i in plus) / r_plus
                rhs = sum(w[i] for i in minus) / r_minus
                sub = InvariantSubset.of(gb, plus)
                assert (pair < 0) == (lhs < rhs) == (subsheaf_slope(gb, sub, L) < mu)
                assert (pair > 0) == (lhs > rhs) == (subsheaf_slope(gb, sub, L) > mu)


def test_solver_closed_forms():
    two = OrbitModel(2, ((0, 1),), (1.0,), (1, 1))
    sol = kempf_ness_solve(two, [-4, 4])
    assert sol.status is Status.SOLVED
    assert np.allclose(sol.x, [0.5 * math.log(2), -0.5 * math.log(2)], atol=1e-12)
    assert abs(sol.t[0] - 4) < 1e-12
    assert sol.residual < 1e-10

    three = OrbitModel(3, FULL3, (1.0, 1.0, 1.0), (1, 1, 1))
    sol = kempf_ness_solve(three, [-2, 0, 2])
    assert sol.status is Status.SOLVED
    assert np.allclose(sol.x, 0) and np.allclose(sol.t, 1)


def test_no_solution_reasons():
    three = OrbitModel(3, FULL3, (1.0, 1.0, 1.0), (1, 1, 1))
    assert kempf_ness_solve(three, [0, 0, 0]).reason == "apex"
    assert kempf_ness_solve(three, [-1, 1, 0]).reason == "boundary"
    out = kempf_ness_solve(three, [1, -1, 0])
    assert out.status is Status.NO_SOLUTION and out.reason == "outside" and out.x is None


def test_gauge_fixed_and_balanced():
    rng = random.Random(3)
    for _ in range(20):
        gb = random_bundle(rng)
        orbit = OrbitModel.from_bundle(gb)
        eps = random_eps(rng, gb.n_directions)
        w = moment_origin(gb, eps).w
        sol = kempf_ness_solve(orbit, w)
        if sol.status is not Status.SOLVED:
            continue
        r = np.array(gb.ranks, dtype=float)
        assert abs(r @ sol.x) < 1e-12 * max(1.0, np.abs(sol.x).max())
        M = orbit.weight_matrix()
        assert np.max(np.abs(M @ np.array(sol.t) + np.array([float(v) for v in w]))) <= 1e-10
        assert all(t > 0 for t in sol.t)


def _random_orbit(rng):
    length = rng.randint(2, 6)
    edges = random_quiver(rng, length, extra=0.4)
    base = tuple(10 ** rng.uniform(-1, 1) for _ in edges)
    ranks = tuple(rng.randint(1, 3) for _ in range(length))
    return OrbitModel(length, edges, base, ranks)


def test_gradient_matches_finite_differences():
    rng = random.Random(4)
    h = 1e-6
    for _ in range(50):
        orbit = _random_orbit(rng)
        w = np.array([rng.uniform(-2, 2) for _ in range(orbit.length)])
        w -= w.mean()
        x = np.array([rng.uniform(-1, 1) for _ in range(orbit.length)])
        g = gradient(orbit, w, x)
        fd = np.array([
            (functional(orbit, w, x + h * e) - functional(orbit, w, x - h * e)) / (2 * h)
            for e in np.eye(orbit.length)
        ])
        assert np.linalg.norm(fd - g) <= 1e-6 * max(np.linalg.norm(g), 1.0)


def test_hessian_positive_on_slice():
    rng = random.Random(5)
    for _ in range(50):
        orbit = _random_orbit(rng)
        x = np.array([rng.uniform(-1, 1) for _ in range(orbit.length)])
        P = slice_basis(orbit.ranks)
        assert np.linalg.eigvalsh(P.T @ hessian(orbit, x) @ P).min() > 0


def test_existence_iff_interior():
    rng = random.Random(6)
    seen = set()
    for _ in range(40):
        gb = random_bundle(rng)
        orbit = OrbitModel.from_bundle(gb)
        sigma = weight_cone(gb)
        for _ in range(5):
            eps = random_eps(rng, gb.n_directions)
            w = moment_origin(gb, eps).w
            where = interior_membership(sigma, [-v for v in w])
            sol = kempf_ness_solve(orbit, w)
            seen.add(where)
            assert (sol.status is Status.SOLVED) == (where is Membership.INTERIOR)
            label = classify(gb, eps).label
            if label is Label.STABLE:
                assert where is Membership.INTERIOR
            if label is Label.UNSTABLE:
                assert where is Membership.OUTSIDE
    assert Membership.INTERIOR in seen and Membership.OUTSIDE in seen


def test_path_e1_closed_form(e1):
    orbit = OrbitModel.from_bundle(e1)
    ts = [10.0 ** -k for k in range(1, 5)]
    res = solve_path(e1, orbit, lambda t: (0, t), ts)
    for s in res.samples:
        assert s.solution.status is Status.SOLVED
        assert abs(s.solution.t[0] - s.t) <= 1e-12
    assert res.totals[-1] < res.totals[0]


def test_path_e5_closed_form(e5):
    orbit = OrbitModel.from_bundle(e5)
    res = solve_path(e5, orbit, lambda t: (0, F(1, 2), t), geometric_samples(0.1, 0.1, 4))
    for s in res.samples:
        t12, t23 = s.solution.t
        assert abs(t12 - 0.5) <= 1e-10 and abs(t23 - s.t) <= 1e-10


def test_constant_path_is_constant(e5):
    orbit = OrbitModel.from_bundle(e5)
    res = solve_path(e5, orbit, lambda t: (0, F(1, 3), F(1, 5)), [1, 0.5, 0.25])
    ts = [s.solution.t for s in res.samples]
    assert np.allclose(ts[0], ts[1]) and np.allclose(ts[1], ts[2])
    assert res.samples[1].solution.iterations <= 1


def test_linear_convergence_rate(e5):
    orbit = OrbitModel.from_bundle(e5)
    direction = (0, F(1, 3), F(1, 2))
    ts = geometric_samples(0.1, 10 ** -0.25, 13)
    res = solve_path(e5, orbit, lambda t: tuple(t * d for d in direction), ts)
    exponent, _ = loglog_fit(res.params, res.totals)
    assert 0.9 <= exponent <= 1.1


def test_filtration_examples(e1, e5):
    rep = degeneration_filtration(e5, [0, F(1, 2), 0])
    assert rep.filtration == (frozenset({0, 1}), frozenset({0, 1, 2}))
    assert rep.dying_edges == ((1, 2),) and rep.surviving_edges == ((0, 1),)
    assert [(set(s), r, mu) for s, r, mu in rep.limit_pieces] == [({0, 1}, 2, 1), ({2}, 1, 1)]
    rep = degeneration_filtration(e1, [0, 0])
    assert rep.filtration == (frozenset({0}), frozenset({0, 1}))
    assert rep.dying_edges == ((0, 1),) and rep.surviving_edges == ()
    with pytest.raises(ValueError):
        degeneration_filtration(e1, [0, F(1, 3)])


def test_filtration_ties_reported():
    from conftest import make_line_bundles

    # all pieces trivial: every closed subset has equal slope at any class
    gb = make_line_bundles(((0, 2), (1, 2)), 3)
    rep = degeneration_filtration(gb, [0, 0])
    assert rep.filtration[-2] == frozenset({0, 1})
    assert rep.filtration[0] == frozenset({0})
    assert rep.ties and "{1}, {2}" in rep.ties[0]


def test_limit_support_check(e1, e5):
    orbit = OrbitModel.from_bundle(e5)
    res = solve_path(e5, orbit, lambda t: (0, F(1, 2), t), geometric_samples(0.1, 0.1, 5))
    rep = degeneration_filtration(e5, [0, F(1, 2), 0])
    verdict = limit_support_check(res, rep)
    assert verdict.confirmed, verdict.mismatches
    swapped = type(rep)(rep.filtration, rep.dying_edges, rep.surviving_edges, rep.limit_pieces)
    bad = limit_support_check(res, swapped)
    assert not bad.confirmed and len(bad.mismatches) == 2

    res1 = solve_path(e1, OrbitModel.from_bundle(e1), lambda t: (0, t), geometric_samples(0.1, 0.1, 5))
    assert limit_support_check(res1, degeneration_filtration(e1, [0, 0])).confirmed


def test_path_csv_deterministic(e5, tmp_path):
    orbit = OrbitModel.from_bundle(e5)
    path = straight_path([0, F(1, 2), F(1, 10)], [0, F(1, 2), 0])
    for name in ("a.csv", "b.csv"):
        write_path_csv(solve_path(e5, orbit, path, geometric_samples(1, F(1, 10), 6)), tmp_path / name)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header == "t,t_1_2,t_2_3,sum_t,residual,iterations,status"


@pytest.mark.parametrize("scale", [1e-3, 1.0, 1e3])
def test_base_magnitudes_do_not_change_existence(e5, scale):
    orbit = OrbitModel.from_bundle(e5, scale)
    sol = kempf_ness_solve(orbit, moment_origin(e5, [0, F(1, 2), F(1, 100)]).w)
    assert sol.status is Status.SOLVED
    assert abs(sol.t[0] - 0.5) < 1e-10 and abs(sol.t[1] - 0.01) < 1e-10


def test_orbit_model_rejects_bad_magnitudes(e5):
    with pytest.raises(ValueError):
        OrbitModel.from_bundle(e5, 0.0)
    with pytest.raises(ValueError):
        OrbitModel.from_bundle(e5, {(0, 2): 1.0})


def test_boundary_descent_diagnostic(e5):
    from wallcross.momentmap import boundary_descent

    orbit = OrbitModel.from_bundle(e5)
    w = moment_origin(e5, [0, F(1, 2), 0]).w
    assert kempf_ness_solve(orbit, w).reason == "boundary"
    rows = boundary_descent(orbit, w, iterations=60)
    assert np.all(np.isfinite(rows))
    assert rows.sum(axis=1).max() < 10
    assert rows[-1, 1] < 1e-6 < rows[-1, 0]
