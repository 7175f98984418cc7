import itertools
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dientropy.core import Behavior, Scenario
from dientropy.strategies import StrategyMixture, behavior_from_mixture, enumerate_strategies
from dientropy.witnesses import (
    LinearWitness,
    ScenarioMismatch,
    builtin_witness,
    classical_max,
    evaluate,
    load_witness,
    make_In,
    make_R4,
    sign_behavior,
)


def test_i3_coefficients():
    assert make_In(3).vxy == ((1, 1), (1, -1), (-1, 0))


def test_i4_coefficients():
    assert make_In(4).vxy == ((1, 1, 1), (1, 1, -1), (1, -1, 0), (-1, 0, 0))


def test_r4_coefficients():
    assert make_R4().vxy == ((1, 1), (1, -1), (-1, 1), (-1, -1))


@pytest.mark.parametrize("n, expected", [(3, [1, 3, 5]), (4, [3, 5, 7, 9]), (5, [6, 8, 10, 12, 14])])
def test_in_bounds(n, expected):
    w = make_In(n)
    assert [w.bound(d) for d in range(1, n + 1)] == expected
    # at d = n the bound is the algebraic maximum
    assert w.bound(n) == w.algebraic_max


@pytest.mark.parametrize("name", ["I3", "I4", "R4"])
def test_bounds_equal_enumerated_maxima(name):
    w = builtin_witness(name)
    for d in sorted(w.bounds):
        assert classical_max(w, d) == w.bound(d)


def _brute_max(w, d):
    best = None
    for st_ in enumerate_strategies(w.scenario, d):
        v = evaluate(w, behavior_from_mixture(StrategyMixture.single(st_), w.scenario))
        best = v if best is None else max(best, v)
    return best


@pytest.mark.parametrize("d", [1, 2, 3])
def test_signature_shortcut_matches_brute_force(d):
    w = make_In(3)
    assert classical_max(w, d) == _brute_max(w, d)


def test_r4_brute_force_d2():
    w = make_R4()
    assert _brute_max(w, 2) == 4


def test_uniform_behavior_scores_zero():
    w = make_In(4)
    assert evaluate(w, Behavior.uniform(w.scenario)) == 0


def test_scenario_mismatch():
    with pytest.raises(ScenarioMismatch):
        evaluate(make_In(3), Behavior.uniform(Scenario(4, 3, 2)))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=12, max_size=12), st.lists(st.integers(0, 5), min_size=12, max_size=12), st.fractions(0, 1))
def test_evaluation_is_linear(a, b, t):
    s = Scenario(3, 2, 2)

    def behavior(raw):
        rows = []
        for i in range(0, 12, 2):
            tot = raw[i] + raw[i + 1] or 1
            p = Fraction(raw[i], tot) if raw[i] + raw[i + 1] else Fraction(1, 2)
            rows += [p, 1 - p]
        return Behavior(s, tuple(rows))

    w = make_In(3)
    p, q = behavior(a), behavior(b)
    assert evaluate(w, p.mix(q, t)) == (1 - t) * evaluate(w, p) + t * evaluate(w, q)


def test_json_round_trip(tmp_path):
    w = make_R4()
    path = tmp_path / "r4.json"
    path.write_text(json.dumps(w.to_json()))
    assert load_witness(str(path)) == w
    assert load_witness("i4") == make_In(4)


def test_unknown_builtin():
    with pytest.raises(KeyError):
        builtin_witness("Q7")


def test_active_dimension():
    w = make_In(3)
    assert [w.active_dimension(v) for v in (1, Fraction(3, 2), 3, 4, 5)] == [1, 2, 2, 3, 3]
    with pytest.raises(ValueError):
        w.active_dimension(6)


def test_bounds_must_be_monotone():
    with pytest.raises(ValueError):
        LinearWitness("bad", Scenario(2, 1, 2), ((1,), (1,)), {1: 2, 2: 1})


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_sign_behavior_reaches_algebraic_maximum(n):
    w = make_In(n)
    assert evaluate(w, sign_behavior(w)) == w.algebraic_max == w.bound(n)
    assert evaluate(make_R4(), sign_behavior(make_R4())) == 8
