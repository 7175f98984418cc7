"""Minimum classical message entropy compatible with data or a witness value.

Two routes are provided:

* full data: the polytope of strategy mixtures reproducing a behavior is
  projected onto message distributions with an LP oracle, and the concave
  entropy is minimized over the vertices of the projection;
* witness value: only ``sum_l q_l w_l = W`` constrains the mixture, so the
  message polytope is the W-slice of the convex hull of (w_l, p_l(m))
  columns, and its vertices come from single columns or pairs of columns.
"""

from __future__ import annotations

import csv
import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import lp
from .core import Behavior, Distribution, Scenario, as_fraction, binary_entropy, shannon_entropy
from .polytope import convex_hull, dot, project_with_oracle, vertices_from_halfspaces
from .strategies import DEFAULT_CAP, DeterministicStrategy, SizeCapExceeded, StrategyMixture, enumerate_strategies
from .witnesses import LinearWitness, message_map_signatures


class Infeasible(ValueError):
    """The data cannot be reproduced with the allowed message size."""


# witnesses whose low-value branch is a binary entropy of value / denominator
BINARY_BRANCH = {"R4": 16}


@dataclass(frozen=True)
class Column:
    witness: Fraction
    marginal: tuple[Fraction, ...]


def witness_columns(witness: LinearWitness, d: int, cap: int = DEFAULT_CAP) -> list[Column]:
    """Extreme (witness value, message marginal) pairs for message size d.

    Message maps sharing a marginal are merged, keeping the largest and
    smallest reachable witness value.
    """
    if d**witness.scenario.n > cap:
        raise SizeCapExceeded(f"{d ** witness.scenario.n} message maps exceed cap {cap}")
    hi: dict = {}
    lo: dict = {}
    for sig in message_map_signatures(witness, d):
        key = sig.marginal
        hi[key] = max(hi.get(key, sig.high), sig.high)
        lo[key] = min(lo.get(key, sig.low), sig.low)
    cols = {Column(v, key) for key, v in hi.items()} | {Column(v, key) for key, v in lo.items()}
    return sorted(cols, key=lambda c: (c.witness, c.marginal))


def slice_points(columns: Sequence[Column], value: Fraction) -> list[tuple[Fraction, ...]]:
    """Images of the vertices of {q >= 0 : sum q = 1, sum q w = value}.

    Those vertices use one column (w = value) or two columns straddling the
    value, so the returned points contain every vertex of the message polytope.
    """
    value = as_fraction(value)
    below = [c for c in columns if c.witness < value]
    above = [c for c in columns if c.witness > value]
    out = {c.marginal for c in columns if c.witness == value}
    for a, b in itertools.product(below, above):
        t = (value - a.witness) / (b.witness - a.witness)
        out.add(tuple((1 - t) * x + t * y for x, y in zip(a.marginal, b.marginal)))
    return sorted(out)


def _slice_lp(columns: Sequence[Column], value: Fraction, objective: Sequence, extra: Sequence[tuple[Sequence, Fraction]] = (), maximize=False):
    a_eq = [[c.witness for c in columns], [1] * len(columns)]
    b_eq = [value, 1]
    for coeffs, rhs in extra:
        a_eq.append([dot(coeffs, c.marginal) for c in columns])
        b_eq.append(rhs)
    c = [dot(objective, col.marginal) for col in columns]
    res = lp.solve(c, a_eq, b_eq, maximize=maximize)
    if not res.ok:
        raise Infeasible(f"witness value {value} unreachable with these columns ({res.status})")
    return res.value


@dataclass(frozen=True)
class Inequality:
    """``coeffs . p(m) >= lower`` and/or ``<= upper``; None marks an absent side."""

    coeffs: tuple[int, ...]
    lower: Fraction | None
    upper: Fraction | None

    def holds(self, p) -> bool:
        v = dot(self.coeffs, p)
        return (self.lower is None or v >= self.lower) and (self.upper is None or v <= self.upper)

    def tight(self, p) -> bool:
        v = dot(self.coeffs, p)
        return v == self.lower or v == self.upper


@dataclass(frozen=True)
class MessagePolytope:
    """Message distributions p(m) compatible with a witness value.

    ``vertices`` are the exact vertices of the true polytope. ``facets`` are
    the LP-derived subset-sum bounds (the coordinate bounds plus the sum
    facets built from conditional extrema); they describe an outer
    approximation whose vertices are available from :meth:`outer_vertices`.
    """

    d: int
    vertices: tuple
    facets: tuple
    provenance: str
    conditional: dict = field(default_factory=dict)

    def coordinate_bounds(self) -> list[tuple[Fraction, Fraction]]:
        out = []
        for m in range(self.d):
            unit = tuple(int(i == m) for i in range(self.d))
            f = next(f for f in self.facets if f.coeffs == unit)
            out.append((f.lower, f.upper))
        return out

    def outer_vertices(self) -> list:
        ineqs = []
        for f in self.facets:
            if f.upper is not None:
                ineqs.append((f.coeffs, f.upper))
            if f.lower is not None:
                ineqs.append((tuple(-c for c in f.coeffs), -f.lower))
        for m in range(self.d):
            ineqs.append((tuple(-int(i == m) for i in range(self.d)), Fraction(0)))
        return vertices_from_halfspaces(ineqs, [((1,) * self.d, Fraction(1))], self.d)


def message_polytope(witness: LinearWitness, value, d: int, columns: Sequence[Column] | None = None) -> MessagePolytope:
    """Message polytope for ``witness == value`` with d messages.

    The facets follow the sequential-LP construction: bounds on every p(m),
    then p(m=1) extremes conditioned on p(m=0) sitting at its bounds, and
    the resulting bounds on partial sums, generalized to every subset of
    labels. Vertices come from the exact slice of the column hull.
    """
    value = as_fraction(value)
    cols = list(columns) if columns is not None else witness_columns(witness, d)
    if not cols or value > max(c.witness for c in cols) or value < min(c.witness for c in cols):
        raise Infeasible(f"{witness.name} = {value} is not reachable with d = {d}")
    facets = []
    for size in range(1, d):
        for subset in itertools.combinations(range(d), size):
            coeffs = tuple(int(i in subset) for i in range(d))
            lower = _slice_lp(cols, value, coeffs)
            upper = _slice_lp(cols, value, coeffs, maximize=True)
            facets.append(Inequality(coeffs, lower, upper))
    conditional = {}
    if d >= 2:
        e0 = tuple(int(i == 0) for i in range(d))
        e1 = tuple(int(i == 1) for i in range(d))
        p_min, p_max = facets[0].lower, facets[0].upper
        conditional = {
            "p_min": p_min,
            "p_max": p_max,
            "p_prime_min": _slice_lp(cols, value, e1, extra=[(e0, p_min)]),
            "p_prime_max": _slice_lp(cols, value, e1, extra=[(e0, p_max)], maximize=True),
        }
    vertices, _, _ = convex_hull(slice_points(cols, value))
    return MessagePolytope(d, tuple(vertices), tuple(facets), f"{witness.name}={value}", conditional)


@dataclass(frozen=True)
class WitnessMinimum:
    value: Fraction
    entropy: float
    distribution: tuple
    d: int
    per_d: dict


def witness_minimum(witness: LinearWitness, value, d_max: int, cap: int = DEFAULT_CAP) -> WitnessMinimum:
    """Minimum message entropy over all message sizes 1..d_max."""
    value = as_fraction(value)
    per_d = {}
    best = None
    for d in range(1, d_max + 1):
        cols = witness_columns(witness, d, cap)
        if value > cols[-1].witness or value < cols[0].witness:
            continue
        points = slice_points(cols, value)
        h, p = min(((shannon_entropy(p), p) for p in points), key=lambda t: t[0])
        per_d[d] = h
        if best is None or h < best[0] - 1e-12:
            best = (h, p, d)
    if best is None:
        raise Infeasible(f"{witness.name} = {value} exceeds the d <= {d_max} classical range")
    return WitnessMinimum(value, best[0], best[1], best[2], per_d)


def min_entropy_witness(witness: LinearWitness, value, d_max: int) -> float:
    return witness_minimum(witness, value, d_max).entropy


@dataclass(frozen=True)
class ClosedFormPoint:
    """Closed-form minimum-entropy strategy for a witness value.

    ``distribution`` lists ``d - 2`` labels of weight 1/n followed by alpha
    and beta (or a binary / point-mass distribution on the special branches).
    """

    value: Fraction
    d: int
    p: Fraction | None
    alpha: Fraction | None
    beta: Fraction | None
    distribution: tuple
    branch: str

    @property
    def entropy(self) -> float:
        return shannon_entropy(self.distribution)


def conjectured_min_entropy(witness: LinearWitness, value) -> ClosedFormPoint:
    value = as_fraction(value)
    n = witness.scenario.n
    top = max(witness.bounds)
    if value > witness.bounds[top]:
        raise ValueError(f"{value} above the largest bound of {witness.name}")
    denom = BINARY_BRANCH.get(witness.name)
    if denom is not None:
        if value < 0:
            raise ValueError(f"{witness.name} closed form needs value >= 0")
        if value <= witness.bounds[2]:
            x = value / denom
            return ClosedFormPoint(value, 2, None, None, None, (x, 1 - x), "binary")
    elif value <= witness.bounds[1]:
        return ClosedFormPoint(value, 1, None, None, None, (Fraction(1),), "constant")
    d = witness.active_dimension(value)
    p = (witness.bounds[d] - value) / 2
    alpha = (1 - p) / n
    beta = 1 - alpha - Fraction(d - 2, n)
    if not (0 <= p <= 1 and alpha >= 0 and beta >= 0):
        raise ValueError(f"closed form undefined at {witness.name} = {value}")
    dist = (Fraction(1, n),) * (d - 2) + (alpha, beta)
    return ClosedFormPoint(value, d, p, alpha, beta, dist, "mixed")


def literal_closed_form_entropy(witness: LinearWitness, value) -> float:
    """The formula read with a bare (d-2) log n term; kept for comparison."""
    pt = conjectured_min_entropy(witness, value)
    if pt.branch != "mixed":
        return pt.entropy

    def xlx(t):
        t = float(t)
        return t * math.log2(t) if t > 0 else 0.0

    return (pt.d - 2) * math.log2(witness.scenario.n) - xlx(pt.alpha) - xlx(pt.beta)


@dataclass(frozen=True)
class CurveRow:
    value: Fraction
    h_min: float
    h_closed_form: float
    d_active: int


class CurvePointFailed(RuntimeError):
    def __init__(self, value, cause):
        super().__init__(f"curve point {value}: {cause}")
        self.value = value
        self.cause = cause


def min_entropy_curve(witness: LinearWitness, grid: Iterable, d_max: int) -> list[CurveRow]:
    rows = []
    for v in grid:
        v = as_fraction(v)
        try:
            res = witness_minimum(witness, v, d_max)
            closed = conjectured_min_entropy(witness, v)
        except (Infeasible, ValueError) as exc:
            raise CurvePointFailed(v, exc) from exc
        rows.append(CurveRow(v, res.entropy, closed.entropy, closed.d))
    return rows


def linear_grid(lo, hi, points: int) -> list[Fraction]:
    lo, hi = as_fraction(lo), as_fraction(hi)
    if points == 1:
        return [lo]
    return [lo + (hi - lo) * i / (points - 1) for i in range(points)]


def write_curve_csv(rows: Sequence[CurveRow], fh) -> None:
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(["value", "H_min_bits", "H_closed_form_bits", "d_active"])
    for r in rows:
        out.writerow([_fmt_value(r.value), f"{r.h_min:.12f}", f"{r.h_closed_form:.12f}", r.d_active])


def _fmt_value(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{float(v):.12g}"


# -- full data --------------------------------------------------------------


@dataclass(frozen=True)
class ExactMinimum:
    entropy: float
    distribution: tuple
    mixture: StrategyMixture
    vertices: tuple


@functools.lru_cache(maxsize=16)
def _full_data_columns(scenario: Scenario, d: int, cap: int):
    """Strategies with distinct (point, marginal) pairs, every labelling included."""
    if d == 1:
        strategies = enumerate_strategies(scenario, d, dedup=False, cap=cap)
    else:
        strategies = []
        seen = set()
        for st in enumerate_strategies(scenario, d, dedup=True, cap=cap):
            for perm in itertools.permutations(range(d)):
                g = tuple(perm[m] for m in st.g)
                f = tuple(tuple(row[perm.index(j)] for j in range(d)) for row in st.f)
                cand = DeterministicStrategy(d, g, f)
                key = (cand.point(scenario), cand.marginal(scenario))
                if key not in seen:
                    seen.add(key)
                    strategies.append(cand)
    points = tuple(st.point(scenario) for st in strategies)
    marginals = tuple(st.marginal(scenario) for st in strategies)
    return tuple(strategies), points, marginals


def _full_data_problem(behavior: Behavior, d: int, cap: int):
    s = behavior.scenario
    strategies, points, marginals = _full_data_columns(s, d, cap)
    rows_idx = [s.index(x, y, b) for x in range(s.n) for y in range(s.l) for b in range(s.k - 1)]
    a_eq = [[pt[i] for pt in points] for i in rows_idx] + [[1] * len(points)]
    b_eq = [behavior.p[i] for i in rows_idx] + [Fraction(1)]
    return list(strategies), a_eq, b_eq, list(marginals)


def min_entropy_exact(behavior: Behavior, d: int, cap: int = DEFAULT_CAP) -> ExactMinimum:
    """Minimum H(M) over strategy mixtures with d messages reproducing ``behavior``."""
    strategies, a_eq, b_eq, marginals = _full_data_problem(behavior, d, cap)
    feas = lp.solve([0] * len(strategies), a_eq, b_eq)
    if not feas.ok:
        raise Infeasible(f"behavior not reproducible with d = {d}")
    if d == 1:
        vertices = [(Fraction(1),)]
    else:
        # reduced coordinates p(0..d-2); p(d-1) follows from normalization
        def maximize(u):
            c = [dot(u, m[:-1]) for m in marginals]
            res = lp.solve(c, a_eq, b_eq, maximize=True)
            return tuple(sum((q * m[i] for q, m in zip(res.x, marginals) if q), Fraction(0)) for i in range(d - 1))

        reduced = project_with_oracle(maximize, d - 1)
        vertices = [v + (1 - sum(v),) for v in reduced]
    best = min(vertices, key=shannon_entropy)
    extra = [[m[i] for m in marginals] for i in range(d - 1)]
    res = lp.solve([0] * len(strategies), a_eq + extra, b_eq + list(best[:-1]))
    support = [(st, q) for st, q in zip(strategies, res.x) if q]
    mix = StrategyMixture(tuple(st for st, _ in support), tuple(q for _, q in support))
    return ExactMinimum(shannon_entropy(best), best, mix, tuple(vertices))


def min_entropy_brute_force(behavior: Behavior, d: int) -> float:
    """Minimum entropy over every basic feasible solution of A q = p.

    Enumerates all column subsets up to the row rank; only usable for tiny
    scenarios and kept as an independent check of :func:`min_entropy_exact`.
    """
    from .polytope import rref
    from .strategies import enumerate_strategies as _all

    s = behavior.scenario
    strategies = _all(s, d)
    rows_idx = [s.index(x, y, b) for x in range(s.n) for y in range(s.l) for b in range(s.k - 1)]
    points = [st.point(s) for st in strategies]
    a = [[pt[i] for pt in points] for i in rows_idx] + [[1] * len(points)]
    rhs = [behavior.p[i] for i in rows_idx] + [Fraction(1)]
    rank = len(rref(a)[1])
    marg = [st.marginal(s) for st in strategies]
    best = None
    for size in range(1, rank + 1):
        for combo in itertools.combinations(range(len(strategies)), size):
            sub = [[row[j] for j in combo] for row in a]
            red, piv = rref([r + [v] for r, v in zip(sub, rhs)])
            if len(piv) != size or size in piv:
                continue
            q = [red[i][-1] for i in range(size)]
            if any(v < 0 for v in q):
                continue
            pm = [sum((qi * marg[j][m] for qi, j in zip(q, combo)), Fraction(0)) for m in range(d)]
            h = shannon_entropy(pm)
            best = h if best is None else min(best, h)
    if best is None:
        raise Infeasible("no decomposition")
    return best
