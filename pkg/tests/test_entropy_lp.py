import io
import math
import random
from fractions import Fraction

import pytest

from dientropy import lp
from dientropy.core import Behavior, Scenario, binary_entropy, shannon_entropy
from dientropy.entropy_lp import (
    Infeasible,
    conjectured_min_entropy,
    linear_grid,
    literal_closed_form_entropy,
    message_polytope,
    min_entropy_brute_force,
    min_entropy_curve,
    min_entropy_exact,
    slice_points,
    witness_columns,
    witness_minimum,
    write_curve_csv,
)
from dientropy.polytope import convex_hull, project_with_oracle
from dientropy.strategies import StrategyMixture, behavior_from_mixture, enumerate_strategies, message_marginal
from dientropy.witnesses import evaluate, make_In, make_R4

F = Fraction


def test_anchor_bounds_at_i3_equals_4():
    poly = message_polytope(make_In(3), 4, 3)
    assert poly.coordinate_bounds() == [(F(1, 6), F(1, 2))] * 3
    assert poly.conditional["p_min"] == F(1, 6)
    assert poly.conditional["p_max"] == F(1, 2)


def test_anchor_vertices_are_permutations():
    poly = message_polytope(make_In(3), 4, 3)
    import itertools

    expected = sorted(set(itertools.permutations((F(1, 6), F(1, 3), F(1, 2)))))
    assert list(poly.vertices) == expected
    # the subset-sum description is tight here
    assert poly.outer_vertices() == expected


def test_algebraic_maximum_forces_uniform_messages():
    poly = message_polytope(make_In(3), 5, 3)
    assert poly.vertices == ((F(1, 3),) * 3,)


def test_unreachable_value():
    with pytest.raises(Infeasible):
        message_polytope(make_In(3), 6, 3)
    with pytest.raises(Infeasible):
        witness_minimum(make_In(3), 6, 3)


def _oracle_minimum(witness, value, d):
    """Minimum entropy over the slice, found through the exact LP on every
    raw deterministic strategy (no signature merging, no pair shortcut)."""
    s = witness.scenario
    pool = enumerate_strategies(s, d)
    coeffs = witness.coefficients()
    wv = [sum(c * p for c, p in zip(coeffs, st.point(s))) for st in pool]
    marg = [st.marginal(s) for st in pool]

    def maximize(u):
        c = [sum(ui * m for ui, m in zip(u, mm[:-1])) for mm in marg]
        res = lp.solve(c, [wv, [1] * len(pool)], [value, 1], maximize=True)
        assert res.ok
        return tuple(sum((q * mm[i] for q, mm in zip(res.x, marg) if q), F(0)) for i in range(d - 1))

    verts = project_with_oracle(maximize, d - 1)
    return min(shannon_entropy(v + (1 - sum(v),)) for v in verts)


@pytest.mark.parametrize("value", [F(3, 2), 2, F(5, 2), 3])
def test_witness_route_matches_exact_lp_d2(value):
    w = make_In(3)
    assert witness_minimum(w, value, 2).entropy == pytest.approx(_oracle_minimum(w, value, 2), abs=1e-12)


@pytest.mark.parametrize("value", [F(7, 2), 4, F(9, 2)])
def test_witness_route_matches_exact_lp_d3(value):
    w = make_In(3)
    assert witness_minimum(w, value, 3).per_d[3] == pytest.approx(_oracle_minimum(w, value, 3), abs=1e-12)


def test_slice_points_contain_hull_vertices():
    cols = witness_columns(make_In(3), 3)
    pts = slice_points(cols, F(17, 4))
    verts, _, _ = convex_hull(pts)
    assert set(verts) <= set(pts)


def _by_hand(n, value, bound_d, d):
    # d - 2 messages of weight 1/n, then alpha and beta
    p = (bound_d - value) / 2
    alpha = (1 - p) / n
    beta = 1 - alpha - F(d - 2, n)
    probs = [F(1, n)] * (d - 2) + [alpha, beta]
    return -sum(float(q) * math.log2(q) for q in probs if q)


@pytest.mark.parametrize(
    "value, expected",
    [(1, 0.0), (2, _by_hand(3, 2, 3, 2)), (3, _by_hand(3, 3, 3, 2)), (4, _by_hand(3, 4, 5, 3)), (5, math.log2(3))],
)
def test_i3_frozen_curve_points(value, expected):
    assert witness_minimum(make_In(3), value, 3).entropy == pytest.approx(expected, abs=1e-12)


def test_i3_at_4_frozen_value():
    # H(1/6, 1/3, 1/2)
    assert witness_minimum(make_In(3), 4, 3).entropy == pytest.approx(1.4591479170272448, abs=1e-12)


def test_literal_reading_is_rejected():
    w = make_In(3)
    truth = witness_minimum(w, 4, 3).entropy
    assert literal_closed_form_entropy(w, 4) - truth > 1.0
    assert conjectured_min_entropy(w, 4).entropy == pytest.approx(truth, abs=1e-12)


@pytest.mark.parametrize("value", [F(1, 2), 1, 2, 3, 4])
def test_rac_binary_branch(value):
    assert witness_minimum(make_R4(), value, 2).entropy == pytest.approx(binary_entropy(value / 16), abs=1e-12)


@pytest.mark.parametrize("value", [5, 6, 7, 8])
def test_rac_upper_branch(value):
    w = make_R4()
    assert witness_minimum(w, value, 4).entropy == pytest.approx(conjectured_min_entropy(w, value).entropy, abs=1e-9)


def test_rac_top_is_two_bits():
    assert witness_minimum(make_R4(), 8, 4).entropy == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("w, value, d", [(make_In(3), 2, 2), (make_In(3), 3, 2), (make_In(3), 4, 3), (make_R4(), 2, 2), (make_R4(), 6, 3)])
def test_extra_message_does_not_help(w, value, d):
    a = witness_minimum(w, value, d).entropy
    b = witness_minimum(w, value, d + 1).entropy
    assert abs(a - b) < 1e-9


def test_boundary_value_uses_both_sizes():
    res = witness_minimum(make_In(3), 3, 3)
    assert set(res.per_d) == {2, 3}


def test_curve_csv_is_monotone():
    w = make_In(3)
    rows = min_entropy_curve(w, linear_grid(1, 5, 9), 3)
    hs = [r.h_min for r in rows]
    assert all(a <= b + 1e-12 for a, b in zip(hs, hs[1:]))
    buf = io.StringIO()
    write_curve_csv(rows, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "value,H_min_bits,H_closed_form_bits,d_active"
    assert len(lines) == 10
    assert lines[1].startswith("1,0.000000000000")


def test_linear_grid():
    assert linear_grid(1, 5, 5) == [1, 2, 3, 4, 5]
    assert linear_grid(2, 2, 1) == [2]


# -- full data ------------------------------------------------------------------


def _random_mixture(scenario, d, rng, size=3):
    pool = enumerate_strategies(scenario, d)
    picks = rng.sample(pool, size)
    raw = [rng.randint(1, 9) for _ in picks]
    return StrategyMixture(tuple(picks), tuple(F(r, sum(raw)) for r in raw))


@pytest.mark.parametrize("seed", range(6))
def test_exact_matches_brute_force_small(seed):
    s = Scenario(2, 1, 2)
    rng = random.Random(seed)
    mix = _random_mixture(s, 2, rng, size=2)
    b = behavior_from_mixture(mix, s)
    assert min_entropy_exact(b, 2).entropy == pytest.approx(min_entropy_brute_force(b, 2), abs=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_exact_never_exceeds_generating_mixture(seed):
    s = Scenario(3, 2, 2)
    rng = random.Random(100 + seed)
    mix = _random_mixture(s, 2, rng)
    b = behavior_from_mixture(mix, s)
    res = min_entropy_exact(b, 2)
    assert res.entropy <= shannon_entropy(message_marginal(mix, s)) + 1e-12
    # the returned mixture reproduces the data with the reported marginal
    assert behavior_from_mixture(res.mixture, s) == b
    assert tuple(message_marginal(res.mixture, s).weights) == res.distribution


def test_exact_infeasible_with_too_few_messages():
    s = Scenario(2, 1, 2)
    b = Behavior(s, (1, 0, 0, 1))
    with pytest.raises(Infeasible):
        min_entropy_exact(b, 1)
    assert min_entropy_exact(b, 2).entropy == pytest.approx(1.0)


def test_exact_agrees_with_witness_route_at_extreme_point():
    # the unique I3 = 5 behavior needs uniform messages
    w = make_In(3)
    s = w.scenario
    pool = enumerate_strategies(s, 3)
    best = [st for st in pool if evaluate(w, behavior_from_mixture(StrategyMixture.single(st), s)) == 5]
    b = behavior_from_mixture(StrategyMixture.single(best[0]), s)
    assert min_entropy_exact(b, 3).entropy == pytest.approx(math.log2(3), abs=1e-12)
