import itertools
import json
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from dientropy.core import Behavior, Distribution, Scenario
from dientropy.entropic_cone import (
    EQ,
    GE,
    CausalDag,
    InequalitySystem,
    Row,
    UnsupportedDag,
    causal_constraints,
    certify,
    dag_system,
    derive_facets,
    entropy_vector,
    eq8_lhs,
    evaluate_entropic_witness,
    facets_json,
    fig1b,
    fig1c,
    fig1c_split,
    fm_eliminate,
    format_form,
    holevo_lhs,
    implied_equalities,
    info_form,
    reduce_modulo,
    shannon_cone,
    single_flip_joint,
    write_facets,
)


@pytest.mark.parametrize("n, count", [(2, 3), (3, 9), (4, 28), (5, 85), (6, 246)])
def test_elemental_count(n, count):
    names = [f"V{i}" for i in range(n)]
    assert len(shannon_cone(names).rows) == count == n + math.comb(n, 2) * 2 ** (n - 2)


def _random_joint(rng, nvars, card=2):
    outcomes = list(itertools.product(range(card), repeat=nvars))
    w = rng.random(len(outcomes)) ** 3
    w /= w.sum()
    return {o: float(p) for o, p in zip(outcomes, w)}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_entropy_vectors_satisfy_elemental_inequalities(seed, nvars):
    rng = np.random.default_rng(seed)
    h = entropy_vector(_random_joint(rng, nvars), nvars)
    for row in shannon_cone([f"V{i}" for i in range(nvars)]).rows:
        assert row.value(h) >= -1e-9


def test_fig1b_constraints_literal():
    dag = fig1b()
    system = causal_constraints(dag)
    v = dag.nodes
    expected = [
        info_form(v, "H(X,Y,L) - H(X) - H(Y) - H(L)"),
        info_form(v, "H(X,M,L) - H(X,L)"),
        info_form(v, "H(Y,B,M,L) - H(Y,M,L)"),
    ]
    got = [r.as_dict() for r in system.rows]
    assert all(r.relation == EQ for r in system.rows)
    assert sorted(map(sorted_items, got)) == sorted(map(sorted_items, expected))


def sorted_items(d):
    return tuple(sorted((m, c) for m, c in d.items() if c))


def test_fig1c_constraints_literal():
    dag = fig1c()
    v = dag.nodes
    expected = [
        info_form(v, "H(X1,X2,L) - H(X1,X2) - H(L)"),
        info_form(v, "H(X1,X2,M,L) - H(X1,X2,L)"),
        info_form(v, "H(B1,B2,M,L) - H(M,L)"),
    ]
    got = [r.as_dict() for r in causal_constraints(dag).rows]
    assert sorted(map(sorted_items, got)) == sorted(map(sorted_items, expected))


def test_split_constraints_literal():
    dag = fig1c_split()
    v = dag.nodes
    expected = [
        info_form(v, "H(X1,X2,L1,L2) - H(X1,X2) - H(L1) - H(L2)"),
        info_form(v, "H(X1,X2,M,L1) - H(X1,X2,L1)"),
        info_form(v, "H(B1,B2,M,L2) - H(M,L2)"),
    ]
    got = [r.as_dict() for r in causal_constraints(dag).rows]
    assert sorted(map(sorted_items, got)) == sorted(map(sorted_items, expected))


def test_cycle_is_rejected():
    with pytest.raises(UnsupportedDag):
        CausalDag(("A", "B"), (("A", "B"), ("B", "A")))


def test_dag_json_round_trip():
    dag = fig1c()
    data = json.loads(json.dumps(dag.to_json()))
    assert CausalDag.from_json(data) == dag
    data["roles"]["M"] = "exogenous"
    with pytest.raises(UnsupportedDag):
        CausalDag.from_json(data)


def test_implied_equalities_are_valid():
    """Each derived equality holds on entropy vectors of random distributions
    compatible with the one-measurement template."""
    system = dag_system(fig1b())
    eqs = implied_equalities(system)
    assert eqs
    rng = random.Random(0)
    for _ in range(20):
        # X, Y, L independent; M = f(X, L); B = g(Y, M, L)
        fm = {(x, l): rng.randint(0, 1) for x in range(2) for l in range(2)}
        fb = {(y, m, l): rng.randint(0, 1) for y in range(2) for m in range(2) for l in range(2)}
        px, py, pl = rng.random(), rng.random(), rng.random()
        joint = {}
        for x, y, l in itertools.product(range(2), repeat=3):
            p = (px if x else 1 - px) * (py if y else 1 - py) * (pl if l else 1 - pl)
            m = fm[(x, l)]
            b = fb[(y, m, l)]
            key = (x, y, b, m, l)
            joint[key] = joint.get(key, 0) + p
        h = entropy_vector(joint, 5)
        for e in eqs:
            assert abs(e.value(h)) < 1e-9


def _lp_implied(system, form):
    """Does ``form . h >= 0`` follow from the system? (floating LP)"""
    n = len(system.variables)
    cols = list(range(1, 1 << n))
    idx = {m: i for i, m in enumerate(cols)}

    def vec(d):
        v = np.zeros(len(cols))
        for m, c in d.items():
            v[idx[m]] += float(c)
        return v

    a_ub = np.array([-vec(r.as_dict()) for r in system.inequalities])
    a_eq = np.array([vec(r.as_dict()) for r in system.equalities])
    target = vec(form)
    res = linprog(target, A_ub=np.vstack([a_ub, -target]), b_ub=np.append(np.zeros(len(a_ub)), 1.0),
                  A_eq=a_eq, b_eq=np.zeros(len(a_eq)), bounds=(None, None), method="highs")
    return res.status == 0 and res.fun > -0.5


@pytest.fixture(scope="module")
def fig1b_result():
    return derive_facets(fig1b())


def test_fig1b_nontrivial_set(fig1b_result):
    r = fig1b_result
    v = r.variables
    ineqs = {sorted_items(reduce_modulo(f, r.equalities)) for f in r.nontrivial_inequalities}
    eqs = [sorted_items(f) for f in r.nontrivial_equalities]
    assert ineqs == {sorted_items(reduce_modulo(info_form(v, "H(M) - I(X:Y,B)"), r.equalities))}
    target = info_form(v, "I(X:Y)")
    assert eqs in ([sorted_items(target)], [sorted_items({m: -c for m, c in target.items()})])


def test_fig1b_text_export(fig1b_result):
    import io

    buf = io.StringIO()
    write_facets(fig1b_result, buf)
    assert "I(X:Y,B) - H(M) <= 0" in buf.getvalue().splitlines()


def test_fig1b_outputs_are_implied(fig1b_result):
    system = dag_system(fig1b())
    for f in fig1b_result.inequalities:
        assert _lp_implied(system, f)
    for f in fig1b_result.equalities:
        assert _lp_implied(system, f) and _lp_implied(system, {m: -c for m, c in f.items()})


def test_fig1b_certificates(fig1b_result):
    for i in range(len(fig1b_result.inequalities)):
        cert = certify(fig1b_result, i)
        assert cert is not None
        assert all(c >= 0 for c in cert.values())


def test_fig1b_json(fig1b_result):
    data = facets_json(fig1b_result)
    assert data["variables"] == list(fig1b().nodes)
    assert len(data["nontrivial_inequalities"]) == 1


def test_identity_projection_only_drops_redundant_rows():
    names = ["A", "B", "C"]
    system = shannon_cone(names)
    # add a redundant row: H(A,B) >= 0 is implied by the elemental ones
    system = system + InequalitySystem(tuple(names), [Row.make({3: 1}, GE, "extra")])
    result = fm_eliminate(system, range(1, 8), classify=False)
    got = {sorted_items(f) for f in result.inequalities}
    assert got == {sorted_items(r.as_dict()) for r in shannon_cone(names).rows}


def test_format_and_parse_agree():
    v = ("X", "Y", "B", "M")
    form = info_form(v, "H(M) - I(X:Y,B)")
    # forms are stored as ``form >= 0`` and printed as ``-form <= 0``
    assert format_form(form, v) == "I(X:Y,B) - H(M) <= 0"


# -- evaluation on data -----------------------------------------------------------


def _random_behavior(rng, s):
    p = []
    for _ in range(s.n * s.l):
        a = Fraction(rng.randint(0, 20), 20)
        p += [a, 1 - a]
    return Behavior(s, tuple(p))


def test_independent_outcomes_give_zero():
    s = Scenario(4, 2, 2)
    b = Behavior.uniform(s)
    joint = Distribution((Fraction(1, 4),) * 4, ((0, 0), (0, 1), (1, 0), (1, 1)))
    assert evaluate_entropic_witness(b, joint).lhs == pytest.approx(0.0, abs=1e-12)
    assert holevo_lhs(b) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("n", [2, 4, 8])
def test_perfect_channel_gives_log_n(n):
    s = Scenario(n, 1, n)
    b = Behavior(s, tuple(Fraction(int(x == j)) for x in range(n) for j in range(n)))
    joint = Distribution((Fraction(1, n),) * n, tuple((x,) for x in range(n)))
    assert evaluate_entropic_witness(b, joint, 1).lhs == pytest.approx(math.log2(n), abs=1e-12)
    assert holevo_lhs(b) == pytest.approx(math.log2(n), abs=1e-12)


def _swap_measurements(b, joint):
    s = b.scenario
    p = tuple(b(bb, x, 1 - y) for x in range(s.n) for y in range(2) for bb in range(s.k))
    return Behavior(s, p), Distribution(joint.weights, tuple((t[1], t[0]) for t in joint.labels))


def test_two_measurement_form_matches_eq8():
    # the general form conditions on B2 where the two-measurement form
    # conditions on B1; they agree once the measurements are relabelled
    rng = random.Random(5)
    s = Scenario(4, 2, 2)
    for _ in range(30):
        b = _random_behavior(rng, s)
        raw = [rng.randint(1, 9) for _ in range(4)]
        joint = Distribution(tuple(Fraction(r, sum(raw)) for r in raw), ((0, 0), (0, 1), (1, 0), (1, 1)))
        general = evaluate_entropic_witness(b, joint).lhs
        assert general == pytest.approx(eq8_lhs(*_swap_measurements(b, joint)), abs=1e-12)
        terms = evaluate_entropic_witness(b, joint).terms
        assert set(terms) == {"I(X1:B1)", "I(X2:B2)", "I(X1:X2|B2)", "H(X1)", "H(X2)", "H(X1..Xl)"}


def test_single_flip_joint():
    j = single_flip_joint(4)
    assert j.labels == ((0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0))
    assert j.weights == (Fraction(1, 4),) * 4


def test_tuple_length_is_checked():
    s = Scenario(4, 2, 2)
    joint = Distribution((Fraction(1, 4),) * 4, ((0,), (1,), (2,), (3,)))
    with pytest.raises(ValueError):
        evaluate_entropic_witness(Behavior.uniform(s), joint)
