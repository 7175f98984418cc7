from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from dientropy import lp


def test_textbook_problem():
    # max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 (slacks made explicit)
    c = [3, 5, 0, 0, 0]
    a = [[1, 0, 1, 0, 0], [0, 2, 0, 1, 0], [3, 2, 0, 0, 1]]
    res = lp.solve(c, a, [4, 12, 18], maximize=True)
    assert res.ok
    assert res.value == 36
    assert res.x[:2] == (2, 6)


def test_infeasible_and_unbounded():
    assert lp.solve([0, 0], [[1, 1]], [-1]).status == lp.INFEASIBLE
    assert lp.solve([1, -1], [[1, -1]], [0], maximize=True).status == lp.OPTIMAL
    assert lp.solve([0, 1], [[1, -1]], [0], maximize=True).status == lp.UNBOUNDED


def test_redundant_rows_are_tolerated():
    res = lp.solve([1, 1], [[1, 1], [2, 2]], [1, 2])
    assert res.ok and res.value == 1


def test_exact_fraction_output():
    res = lp.solve_mixture([[0], [3]], [1], objective=[0, 1])
    assert res.x == (Fraction(2, 3), Fraction(1, 3))


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook rule; Bland's rule terminates
    c = [Fraction(-3, 4), 150, Fraction(-1, 50), 6, 0, 0, 0]
    a = [
        [Fraction(1, 4), -60, Fraction(-1, 25), 9, 1, 0, 0],
        [Fraction(1, 2), -90, Fraction(-1, 50), 3, 0, 1, 0],
        [0, 0, 1, 0, 0, 0, 1],
    ]
    res = lp.solve(c, a, [0, 0, 1])
    assert res.ok
    assert res.value == Fraction(-1, 20)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(2, 7), st.integers(0, 10**6))
def test_matches_floating_solver(m, n, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(-3, 4, size=(m, n))
    x0 = rng.integers(0, 3, size=n)
    b = a @ x0
    c = rng.integers(-4, 5, size=n)
    # keep the problem bounded by capping the sum of x
    a = np.vstack([a, np.ones(n, dtype=int)])
    a = np.hstack([a, np.zeros((m + 1, 1), dtype=int)])
    a[-1, -1] = 1
    b = np.append(b, x0.sum() + 5)
    c = np.append(c, 0)
    res = lp.solve(c.tolist(), a.tolist(), b.tolist())
    ref = linprog(c, A_eq=a, b_eq=b, bounds=(0, None), method="highs")
    assert res.ok and ref.status == 0
    assert float(res.value) == pytest.approx(ref.fun, abs=1e-7)
    assert all(v >= 0 for v in res.x)
    assert [sum(Fraction(int(ai)) * xi for ai, xi in zip(row, res.x)) for row in a] == [Fraction(int(v)) for v in b]
