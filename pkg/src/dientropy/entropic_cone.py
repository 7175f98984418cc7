"""Entropic description of causal structures.

Entropy coordinates are indexed by bitmasks over an ordered variable list:
bit ``i`` set means variable ``i`` belongs to the subset. A linear form is a
``{mask: coefficient}`` dict, read as ``sum_T c_T H(T) >= 0`` (or ``= 0``).

Pipeline: elemental Shannon inequalities, causal equalities from a DAG,
then Fourier-Motzkin projection onto the observable coordinates.
"""

from __future__ import annotations

import functools
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Sequence

import highspy
import numpy as np

from . import lp
from .core import Behavior, Distribution, mutual_information, shannon_entropy

log = logging.getLogger(__name__)

MAX_CONE_VARS = 7
GE, EQ = ">=", "="


class RowCapExceeded(RuntimeError):
    pass


class UnsupportedDag(ValueError):
    pass


@dataclass(frozen=True)
class Row:
    coeffs: tuple  # sorted ((mask, coeff), ...)
    relation: str = GE
    label: str = ""

    @classmethod
    def make(cls, coeffs: dict, relation: str = GE, label: str = "") -> "Row":
        return cls(tuple(sorted((m, c) for m, c in coeffs.items() if c != 0)), relation, label)

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def value(self, h: dict) -> float:
        return sum(c * h[m] for m, c in self.coeffs)


@dataclass
class InequalitySystem:
    variables: tuple[str, ...]
    rows: list[Row] = field(default_factory=list)

    def __post_init__(self):
        self.variables = tuple(self.variables)
        full = (1 << len(self.variables)) - 1
        for r in self.rows:
            if any(m <= 0 or m & ~full for m, _ in r.coeffs):
                raise ValueError(f"row {r} references subsets outside the variable set")

    @property
    def inequalities(self) -> list[Row]:
        return [r for r in self.rows if r.relation == GE]

    @property
    def equalities(self) -> list[Row]:
        return [r for r in self.rows if r.relation == EQ]

    def __add__(self, other: "InequalitySystem") -> "InequalitySystem":
        if other.variables != self.variables:
            raise ValueError("variable sets differ")
        return InequalitySystem(self.variables, self.rows + other.rows)

    def mask(self, names: Iterable[str]) -> int:
        out = 0
        for name in names:
            out |= 1 << self.variables.index(name)
        return out

    def format_row(self, row: Row) -> str:
        return format_form(row.as_dict(), self.variables, row.relation)

    def to_json(self) -> dict:
        return {
            "variables": list(self.variables),
            "rows": [
                {
                    "coeffs": {subset_name(m, self.variables): str(c) for m, c in r.coeffs},
                    "relation": r.relation,
                    "label": r.label,
                }
                for r in self.rows
            ],
        }


def subset_name(mask: int, variables: Sequence[str]) -> str:
    return ",".join(v for i, v in enumerate(variables) if mask >> i & 1)


def shannon_cone(variables: Sequence[str]) -> InequalitySystem:
    """Elemental monotonicity and submodularity inequalities."""
    n = len(variables)
    if n > MAX_CONE_VARS:
        raise RowCapExceeded(f"{n} variables exceed the cap of {MAX_CONE_VARS}")
    full = (1 << n) - 1
    rows = []
    for i in range(n):
        rows.append(Row.make({full: 1, full & ~(1 << i): -1}, GE, "monotonicity"))
    for i, j in itertools.combinations(range(n), 2):
        rest = [t for t in range(n) if t not in (i, j)]
        for size in range(len(rest) + 1):
            for ks in itertools.combinations(rest, size):
                k = sum(1 << t for t in ks)
                coeffs: dict = {}
                for m, c in ((k | 1 << i, 1), (k | 1 << j, 1), (k | 1 << i | 1 << j, -1), (k, -1)):
                    if m:
                        coeffs[m] = coeffs.get(m, 0) + c
                rows.append(Row.make(coeffs, GE, "submodularity"))
    return InequalitySystem(tuple(variables), rows)


# -- causal structures ---------------------------------------------------------


@dataclass(frozen=True)
class CausalDag:
    """DAG with node roles.

    Root nodes are exogenous; roots sharing a ``group`` are jointly
    distributed inputs (no independence imposed among them). Every other
    node is a deterministic function of its parents.
    """

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    groups: tuple[tuple[str, ...], ...] = ()
    name: str = ""

    def __post_init__(self):
        nodes = set(self.nodes)
        for a, b in self.edges:
            if a not in nodes or b not in nodes:
                raise UnsupportedDag(f"edge {a}->{b} uses an unknown node")
        try:
            tuple(TopologicalSorter(self.parent_map()).static_order())
        except CycleError as exc:
            raise UnsupportedDag(f"graph has a directed cycle: {exc.args[1]}") from exc
        grouped = [v for g in self.groups for v in g]
        if len(grouped) != len(set(grouped)):
            raise UnsupportedDag("a node appears in two groups")
        for v in grouped:
            if self.parents(v):
                raise UnsupportedDag(f"grouped node {v} must be a root")

    def parent_map(self) -> dict:
        return {v: {a for a, b in self.edges if b == v} for v in self.nodes}

    def parents(self, v: str) -> tuple[str, ...]:
        return tuple(a for a in self.nodes if (a, v) in self.edges)

    @property
    def roots(self) -> tuple[str, ...]:
        return tuple(v for v in self.nodes if not self.parents(v))

    def exogenous_groups(self) -> list[tuple[str, ...]]:
        grouped = {v for g in self.groups for v in g}
        out = [tuple(g) for g in self.groups]
        out += [(v,) for v in self.roots if v not in grouped]
        return out

    def to_json(self) -> dict:
        roles = {v: ("exogenous" if not self.parents(v) else "deterministic") for v in self.nodes}
        return {"name": self.name, "nodes": list(self.nodes), "edges": [list(e) for e in self.edges], "groups": [list(g) for g in self.groups], "roles": roles}

    @classmethod
    def from_json(cls, data: dict) -> "CausalDag":
        dag = cls(tuple(data["nodes"]), tuple(tuple(e) for e in data["edges"]), tuple(tuple(g) for g in data.get("groups", ())), data.get("name", ""))
        for v, role in data.get("roles", {}).items():
            is_root = not dag.parents(v)
            if role == "exogenous" and not is_root:
                raise UnsupportedDag(f"node {v} is marked exogenous but has parents")
            if role == "deterministic" and is_root:
                raise UnsupportedDag(f"node {v} is marked deterministic but has no parents")
            if role not in ("exogenous", "deterministic"):
                raise UnsupportedDag(f"unknown role {role!r} for {v}")
        return dag


def fig1b() -> CausalDag:
    """Inputs X, Y, shared strategy L, message M and outcome B."""
    return CausalDag(
        ("X", "Y", "B", "M", "L"),
        (("X", "M"), ("L", "M"), ("Y", "B"), ("M", "B"), ("L", "B")),
        name="fig1b",
    )


def fig1c() -> CausalDag:
    """Split input (X1, X2), one outcome variable per measurement, shared L."""
    return CausalDag(
        ("X1", "X2", "B1", "B2", "M", "L"),
        (("X1", "M"), ("X2", "M"), ("L", "M"), ("M", "B1"), ("M", "B2"), ("L", "B1"), ("L", "B2")),
        (("X1", "X2"),),
        name="fig1c",
    )


def fig1c_split() -> CausalDag:
    """As :func:`fig1c` with independent sources L1 (preparer) and L2 (measurer)."""
    return CausalDag(
        ("X1", "X2", "B1", "B2", "M", "L1", "L2"),
        (("X1", "M"), ("X2", "M"), ("L1", "M"), ("M", "B1"), ("M", "B2"), ("L2", "B1"), ("L2", "B2")),
        (("X1", "X2"),),
        name="fig1c_split",
    )


TEMPLATES = {"fig1b": fig1b, "fig1c": fig1c, "fig1c_split": fig1c_split}


def causal_constraints(dag: CausalDag, variables: Sequence[str] | None = None) -> InequalitySystem:
    """Independence of the exogenous groups and determinism of the other nodes.

    Deterministic nodes sharing a parent set are combined into one
    equality ``H(children | parents) = 0``.
    """
    variables = tuple(variables or dag.nodes)
    idx = {v: i for i, v in enumerate(variables)}

    def mask(names):
        return sum(1 << idx[v] for v in names)

    rows = []
    groups = dag.exogenous_groups()
    if len(groups) > 1:
        coeffs = {mask([v for g in groups for v in g]): 1}
        for g in groups:
            coeffs[mask(g)] = coeffs.get(mask(g), 0) - 1
        rows.append(Row.make(coeffs, EQ, "independence"))
    by_parents: dict = {}
    for v in dag.nodes:
        ps = dag.parents(v)
        if ps:
            by_parents.setdefault(tuple(sorted(ps, key=idx.get)), []).append(v)
    for ps, children in by_parents.items():
        rows.append(Row.make({mask(ps) | mask(children): 1, mask(ps): -1}, EQ, "determinism"))
    return InequalitySystem(variables, rows)


def dag_system(dag: CausalDag) -> InequalitySystem:
    return shannon_cone(dag.nodes) + causal_constraints(dag)


# -- implied equalities ------------------------------------------------------


def implied_equalities(system: InequalitySystem) -> list[Row]:
    """Equalities implied by the Shannon cone plus the system's equalities.

    Recognizes functional dependencies ``H(S u T) = H(S)`` and mutual
    independence ``H(G1 u ... u Gk) = sum H(Gi)`` among the equalities and
    emits their standard consequences: ``H(A) = H(cl(A))`` for the closure
    under the dependencies, and additivity for every sub-collection of
    subsets of independent groups.
    """
    n = len(system.variables)
    fds = []
    indep = []
    for r in system.equalities:
        d = r.as_dict()
        pos = [m for m, c in d.items() if c > 0]
        neg = [m for m, c in d.items() if c < 0]
        if len(d) == 2 and len(pos) == 1 and d[pos[0]] == 1 and d[neg[0]] == -1 and neg[0] & pos[0] == neg[0]:
            fds.append((neg[0], pos[0]))
        elif len(pos) == 1 and d[pos[0]] == 1 and all(d[m] == -1 for m in neg):
            union = 0
            disjoint = True
            for m in neg:
                disjoint &= not (union & m)
                union |= m
            if disjoint and union == pos[0]:
                indep.append(neg)

    def closure(m):
        changed = True
        while changed:
            changed = False
            for lhs, rhs in fds:
                if m & lhs == lhs and m | rhs != m:
                    m |= rhs
                    changed = True
        return m

    out = []
    for m in range(1, 1 << n):
        c = closure(m)
        if c != m:
            out.append(Row.make({c: 1, m: -1}, EQ, "implied determinism"))
    for groups in indep:
        subsets = [[s for s in _submasks(g)] for g in groups]
        for choice in itertools.product(*[[0] + s for s in subsets]):
            parts = [c for c in choice if c]
            if len(parts) < 2:
                continue
            union = 0
            for c in parts:
                union |= c
            coeffs = {union: 1}
            for c in parts:
                coeffs[c] = coeffs.get(c, 0) - 1
            out.append(Row.make(coeffs, EQ, "implied independence"))
    return out


def _submasks(mask: int) -> list[int]:
    out = []
    s = mask
    while s:
        out.append(s)
        s = (s - 1) & mask
    return sorted(out)


# -- Fourier-Motzkin ---------------------------------------------------------


class _RedundancyLP:
    """One HiGHS model holding every row; row ``i`` is tested by switching it
    off and minimizing ``rows[i] . h`` over the box ``|h| <= 1``. A negative
    optimum means the row cuts something off. Successive solves warm-start
    from the previous basis."""

    def __init__(self, rows: np.ndarray, eq_rows: np.ndarray):
        self.rows = rows.astype(float)
        ncol = rows.shape[1]
        self.h = highspy.Highs()
        self.h.setOptionValue("output_flag", False)
        self.h.addVars(ncol, -np.ones(ncol), np.ones(ncol))
        full = np.vstack([self.rows, eq_rows.astype(float)])
        lower = np.zeros(len(full))
        upper = np.concatenate([np.full(len(rows), highspy.kHighsInf), np.zeros(len(eq_rows))])
        starts, idx, vals = [], [], []
        for r in full:
            nz = np.flatnonzero(r)
            starts.append(len(idx))
            idx.extend(nz)
            vals.extend(r[nz])
        self.h.addRows(
            len(full), lower, upper, len(idx),
            np.array(starts, dtype=np.int32), np.array(idx, dtype=np.int32), np.array(vals, dtype=float),
        )
        self.cols = np.arange(ncol, dtype=np.int32)

    def redundant(self, i: int) -> bool:
        self.h.changeRowBounds(i, -highspy.kHighsInf, highspy.kHighsInf)
        self.h.changeColsCost(len(self.cols), self.cols, self.rows[i])
        self.h.run()
        ok = self.h.getModelStatus() == highspy.HighsModelStatus.kOptimal
        if ok and self.h.getInfo().objective_function_value > -1e-7:
            return True  # stays switched off
        self.h.changeRowBounds(i, 0.0, highspy.kHighsInf)
        return False


def _normalize_int(row: np.ndarray) -> np.ndarray:
    g = np.gcd.reduce(np.abs(row[row != 0])) if np.any(row) else 1
    return row // g if g > 1 else row


def _incremental_filter(rows: np.ndarray, eq_rows: np.ndarray) -> list[int]:
    """Indices of a subset implying every row: each row is compared only with
    the rows accepted before it, sparsest first, so the LPs stay small."""
    ncol = rows.shape[1]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.addVars(ncol, -np.ones(ncol), np.ones(ncol))
    cols = np.arange(ncol, dtype=np.int32)
    for r in eq_rows.astype(float):
        nz = np.flatnonzero(r)
        h.addRow(0.0, 0.0, len(nz), nz.astype(np.int32), r[nz])
    accepted = []
    for i in sorted(range(len(rows)), key=lambda i: np.count_nonzero(rows[i])):
        r = rows[i].astype(float)
        if accepted:
            h.changeColsCost(ncol, cols, r)
            h.run()
            if (
                h.getModelStatus() == highspy.HighsModelStatus.kOptimal
                and h.getInfo().objective_function_value > -1e-7
            ):
                continue
        nz = np.flatnonzero(r)
        h.addRow(0.0, highspy.kHighsInf, len(nz), nz.astype(np.int32), r[nz])
        accepted.append(i)
    return sorted(accepted)


def remove_redundant(rows: np.ndarray, eq_rows: np.ndarray | None = None, history: list | None = None):
    """Drop rows implied by the remaining ones, one at a time."""
    eq_rows = np.zeros((0, rows.shape[1]), dtype=rows.dtype) if eq_rows is None else eq_rows
    if len(rows) > 2 * rows.shape[1]:
        pick = _incremental_filter(rows, eq_rows)
        rows = rows[pick]
        history = None if history is None else [history[i] for i in pick]
    keep = set(range(len(rows)))
    if len(rows) > 1:
        lp = _RedundancyLP(rows, eq_rows)
        # test densest rows first; they are the most likely to be combinations
        for i in sorted(range(len(rows)), key=lambda i: -np.count_nonzero(rows[i])):
            if len(keep) > 1 and lp.redundant(i):
                keep.discard(i)
    keep = sorted(keep)
    if history is not None:
        return rows[keep], [history[i] for i in keep]
    return rows[keep]


@dataclass
class ProjectionResult:
    variables: tuple[str, ...]
    kept: tuple[int, ...]  # masks of the retained coordinates
    inequalities: list[dict]
    equalities: list[dict]
    nontrivial_inequalities: list[dict]
    nontrivial_equalities: list[dict]
    base_rows: list[dict]
    supports: list[list[int]]

    @property
    def system(self) -> InequalitySystem:
        rows = [Row.make(d, GE, "projected") for d in self.inequalities]
        rows += [Row.make(d, EQ, "projected") for d in self.equalities]
        return InequalitySystem(self.variables, rows)

    def nontrivial(self) -> InequalitySystem:
        rows = [Row.make(d, GE, "non-trivial") for d in self.nontrivial_inequalities]
        rows += [Row.make(d, EQ, "non-trivial") for d in self.nontrivial_equalities]
        return InequalitySystem(self.variables, rows)


def _substitute(eqs: list[dict], ineqs: list[dict], eliminate: set[int], kept: set[int]):
    """Gaussian substitution of equalities, pivoting only on eliminated coordinates."""
    eqs = [dict(e) for e in eqs]
    ineqs = [dict(r) for r in ineqs]
    leftover = []
    while eqs:
        e = eqs.pop()
        e = {m: c for m, c in e.items() if c != 0}
        if not e:
            continue
        candidates = [m for m in e if m in eliminate]
        if not candidates:
            leftover.append(e)
            continue
        piv = max(candidates, key=lambda m: (bin(m).count("1"), m))
        pc = Fraction(e[piv])

        def sub(r):
            c = r.get(piv)
            if not c:
                return r
            f = Fraction(c) / pc
            out = dict(r)
            for m, v in e.items():
                out[m] = out.get(m, 0) - f * v
            out.pop(piv, None)
            return {m: v for m, v in out.items() if v != 0}

        eqs = [sub(r) for r in eqs]
        ineqs = [sub(r) for r in ineqs]
        leftover = [sub(r) for r in leftover]
    leftover = [r for r in leftover if r]
    return ineqs, leftover


def _to_int_rows(forms: list[dict], columns: list[int]) -> np.ndarray:
    col = {m: i for i, m in enumerate(columns)}
    out = np.zeros((len(forms), len(columns)), dtype=np.int64)
    for r, f in enumerate(forms):
        den = math.lcm(*[Fraction(v).denominator for v in f.values()]) if f else 1
        for m, v in f.items():
            out[r, col[m]] = int(Fraction(v) * den)
        out[r] = _normalize_int(out[r])
    return out


def _support(row: np.ndarray) -> int:
    return sum(1 << int(j) for j in np.flatnonzero(row))


def _history_support(h: int, origin: dict) -> int:
    out = 0
    while h:
        low = h & -h
        out |= origin[low]
        h ^= low
    return out


def _dedupe(rows: np.ndarray, hist: list) -> tuple[np.ndarray, list]:
    seen = {}
    for i, r in enumerate(rows):
        key = r.tobytes()
        if key not in seen or bin(hist[i]).count("1") < bin(hist[seen[key]]).count("1"):
            seen[key] = i
    idx = sorted(seen.values())
    return rows[idx], [hist[i] for i in idx]


def fm_eliminate(
    system: InequalitySystem,
    keep: Iterable[int],
    row_cap: int = 20000,
    use_implied: bool = True,
    classify: bool = True,
    order: str = "growth",
) -> ProjectionResult:
    """Project the cone described by ``system`` onto the coordinates ``keep``.

    Equalities are substituted first (pivoting on coordinates to be
    eliminated); the remaining inequalities go through Fourier-Motzkin
    elimination, one coordinate at a time, with Chernikov's history rule and
    an LP redundancy sweep after every step. ``order="growth"`` picks the
    coordinate whose elimination adds the fewest rows (p*q - p - q);
    ``order="count"`` picks the one appearing in the fewest rows.
    """
    n = len(system.variables)
    kept = set(keep)
    all_masks = set(range(1, 1 << n))
    eliminate = all_masks - kept
    eqs = [r.as_dict() for r in system.equalities]
    if use_implied:
        eqs += [r.as_dict() for r in implied_equalities(system)]
    ineqs, leftover = _substitute(eqs, [r.as_dict() for r in system.inequalities], eliminate, kept)

    columns = sorted(all_masks, key=lambda m: (m not in kept, m))
    ineqs = [f for f in ineqs if f]
    rows = _to_int_rows(ineqs, columns)
    base = [dict((columns[j], int(v)) for j, v in enumerate(r) if v) for r in rows]
    hist = [1 << i for i in range(len(rows))]
    rows, hist = _dedupe(rows, hist)
    eq_kept = _to_int_rows(leftover, columns) if leftover else np.zeros((0, len(columns)), dtype=np.int64)

    live = [j for j in range(len(columns)) if columns[j] in eliminate and np.any(rows[:, j])]
    dead = [j for j in range(len(columns)) if columns[j] in eliminate and j not in live]
    # coordinates absent from every inequality can be dropped outright
    active_cols = [j for j in range(len(columns)) if j not in dead]
    rows = rows[:, active_cols]
    eq_kept = eq_kept[:, active_cols]
    columns = [columns[j] for j in active_cols]
    todo = [j for j, m in enumerate(columns) if m in eliminate]
    log.info("FM: %d rows, %d coordinates to eliminate", len(rows), len(todo))

    rows, hist = remove_redundant(rows, eq_kept, hist)
    # column support of every base row, for the effective-elimination test
    supp = [_support(r) for r in rows]
    origin = {h: s for h, s in zip(hist, supp)}
    steps = 0
    while todo:
        counts = []
        for j in todo:
            p = int(np.sum(rows[:, j] > 0))
            q = int(np.sum(rows[:, j] < 0))
            if order == "growth":
                counts.append((p * q - p - q, p + q, j))
            else:
                counts.append((p + q, p * q, j))
        _, _, j = min(counts)
        todo.remove(j)
        steps += 1
        pos = np.where(rows[:, j] > 0)[0]
        neg = np.where(rows[:, j] < 0)[0]
        zero = np.where(rows[:, j] == 0)[0]
        new_rows = [rows[i] for i in zero]
        new_hist = [hist[i] for i in zero]
        limit = steps + 1
        for a in pos:
            for b in neg:
                h = hist[a] | hist[b]
                size = bin(h).count("1")
                if size > limit:
                    continue
                r = rows[a] * (-rows[b, j]) + rows[b] * rows[a, j]
                r = _normalize_int(r)
                if not np.any(r):
                    continue
                # a combination of |h| base rows is redundant unless at least
                # |h| - 1 of the columns they touch have cancelled out
                touched = _history_support(h, origin)
                if size > 1 + bin(touched & ~_support(r)).count("1"):
                    continue
                new_rows.append(r)
                new_hist.append(h)
        if len(new_rows) > row_cap:
            raise RowCapExceeded(f"{len(new_rows)} rows after eliminating a coordinate (cap {row_cap})")
        rows = np.array(new_rows, dtype=np.int64).reshape(-1, len(columns))
        if rows.size and np.abs(rows).max() > 2**40:
            raise OverflowError("coefficient growth in Fourier-Motzkin elimination")
        rows, hist = _dedupe(rows, new_hist)
        log.debug("FM step %d: %d candidates", steps, len(rows))
        rows, hist = remove_redundant(rows, eq_kept, hist)
        log.info("FM step %d: %d rows, %d left", steps, len(rows), len(todo))

    kcols = [j for j, m in enumerate(columns) if m in kept]
    kmasks = [columns[j] for j in kcols]
    rows = rows[:, kcols]
    eq_rows = eq_kept[:, kcols]
    ineq_forms, eq_forms, supports = _finalize(rows, eq_rows, hist, kmasks)
    result = ProjectionResult(system.variables, tuple(sorted(kept)), ineq_forms, eq_forms, [], [], base, supports)
    if classify:
        classify_projection(result)
    return result


def _finalize(rows: np.ndarray, eq_rows: np.ndarray, hist: list, kmasks: list):
    """Turn opposite inequality pairs into equalities and canonicalize."""
    ineq = []
    eqs = [r for r in eq_rows if np.any(r)]
    keys = {r.tobytes(): i for i, r in enumerate(rows)}
    used = set()
    supports = []
    for i, r in enumerate(rows):
        if i in used:
            continue
        opp = keys.get((-r).tobytes())
        if opp is not None and opp != i:
            used.update({i, opp})
            eqs.append(r)
        else:
            ineq.append(r)
            supports.append([t for t in range(hist[i].bit_length()) if hist[i] >> t & 1])
    eq_forms = []
    seen = set()
    for r in eqs:
        r = _normalize_int(r)
        first = r[np.nonzero(r)[0][0]]
        if first < 0:
            r = -r
        if r.tobytes() not in seen:
            seen.add(r.tobytes())
            eq_forms.append({m: int(v) for m, v in zip(kmasks, r) if v})
    ineq_forms = [{m: int(v) for m, v in zip(kmasks, r) if v} for r in ineq]
    return ineq_forms, eq_forms, supports


def _implied_exact(target: dict, cone_rows: list[dict], eq_rows: list[dict], masks: list[int]) -> bool:
    """Exact test: target . h >= 0 on {h >= 0 : cone_rows >= 0, eq_rows = 0}."""
    ncoord = len(masks)
    nslack = len(cone_rows)
    a_eq = []
    b_eq = []
    for k, r in enumerate(cone_rows):
        a_eq.append([r.get(m, 0) for m in masks] + [-1 if t == k else 0 for t in range(nslack)])
        b_eq.append(0)
    for r in eq_rows:
        a_eq.append([r.get(m, 0) for m in masks] + [0] * nslack)
        b_eq.append(0)
    a_eq.append([1] * ncoord + [0] * nslack)
    b_eq.append(1)
    c = [target.get(m, 0) for m in masks] + [0] * nslack
    res = lp.solve(c, a_eq, b_eq)
    if res.status == lp.INFEASIBLE:
        return True
    return res.ok and res.value >= 0


def kept_shannon_rows(variables: Sequence[str], kept: Iterable[int]) -> list[dict]:
    """Shannon inequalities on the kept coordinates alone.

    Uses the elemental inequalities of every maximal variable set whose
    subsets are all kept, plus nonnegativity of the remaining kept
    coordinates.
    """
    kept = set(kept)
    n = len(variables)
    closed = [m for m in range(1, 1 << n) if all(s in kept for s in _submasks(m))]
    maximal = [m for m in closed if not any(o != m and o & m == m for o in closed)]
    rows = []
    covered = set()
    for best in maximal:
        if bin(best).count("1") < 2:
            continue
        bits = [i for i in range(n) if best >> i & 1]
        for r in shannon_cone([variables[i] for i in bits]).rows:
            row = {_lift(m, bits): c for m, c in r.coeffs}
            if row not in rows:
                rows.append(row)
        covered.update(_submasks(best))
    for m in sorted(kept - covered):
        rows.append({m: 1})
    return rows


def _lift(mask: int, bits: list[int]) -> int:
    return sum(1 << bits[t] for t in range(len(bits)) if mask >> t & 1)


def classify_projection(result: ProjectionResult) -> None:
    """Split outputs into trivial and non-trivial.

    An equality is trivial when both directions follow from the Shannon
    inequalities of the kept variables. An inequality is trivial when it
    follows from those Shannon inequalities together with the projected
    equalities.
    """
    masks = sorted(result.kept)
    shannon = kept_shannon_rows(result.variables, result.kept)
    result.nontrivial_equalities = [
        e
        for e in result.equalities
        if not (_implied_exact(e, shannon, [], masks) and _implied_exact({m: -c for m, c in e.items()}, shannon, [], masks))
    ]
    result.nontrivial_inequalities = [r for r in result.inequalities if not _implied_exact(r, shannon, result.equalities, masks)]


def certify(result: ProjectionResult, index: int) -> dict | None:
    """Exact nonnegative multipliers expressing an output inequality through its base rows.

    Returns ``{base_row_index: multiplier}`` with
    ``sum mult * base_row == output`` on the kept coordinates and zero
    elsewhere, or None if no such combination exists.
    """
    target = result.inequalities[index]
    support = result.supports[index]
    masks = sorted({m for i in support for m in result.base_rows[i]} | set(target))
    a_eq = [[result.base_rows[i].get(m, 0) for i in support] for m in masks]
    b_eq = [target.get(m, 0) for m in masks]
    # allow a positive rescaling of the output row
    a_eq = [row + [-t] for row, t in zip(a_eq, b_eq)]
    a_eq.append([0] * len(support) + [1])
    b_eq = [0] * len(masks) + [1]
    res = lp.solve([0] * (len(support) + 1), a_eq, b_eq)
    if not res.ok:
        return None
    return {support[k]: res.x[k] for k in range(len(support)) if res.x[k]}


# -- canonical comparison and formatting ---------------------------------------


def reduce_modulo(form: dict, equalities: list[dict]) -> dict:
    """Canonical representative of ``form`` modulo the span of ``equalities``."""
    form = {m: Fraction(c) for m, c in form.items() if c}
    for e in sorted(equalities, key=lambda e: sorted(e)):
        piv = max(e)
        if piv in form:
            f = form[piv] / Fraction(e[piv])
            for m, c in e.items():
                form[m] = form.get(m, 0) - f * c
            form = {m: c for m, c in form.items() if c}
    if form:
        scale = abs(form[min(form)])
        form = {m: c / scale for m, c in form.items()}
    return form


def info_form(variables: Sequence[str], expr: str) -> dict:
    """Parse sums of ``H(A,B)``, ``I(A:B)`` and ``I(A:B|C)`` terms into a linear form.

    Example: ``"H(M) - I(X:Y,B)"``.
    """
    idx = {v: i for i, v in enumerate(variables)}

    def mask(s):
        s = s.strip()
        return sum(1 << idx[v.strip()] for v in s.split(",")) if s else 0

    out: dict = {}

    def add(m, c):
        if m:
            out[m] = out.get(m, 0) + c

    expr = expr.replace(" ", "")
    tokens = []
    i = 0
    sign = 1
    coef = 1
    while i < len(expr):
        ch = expr[i]
        if ch in "+-":
            sign = 1 if ch == "+" else -1
            i += 1
            continue
        if ch.isdigit():
            j = i
            while expr[j].isdigit():
                j += 1
            coef = int(expr[i:j])
            i = j
            if expr[i] == "*":
                i += 1
            continue
        j = expr.index(")", i)
        tokens.append((sign * coef, expr[i:j + 1]))
        sign, coef = 1, 1
        i = j + 1
    for c, tok in tokens:
        kind, body = tok[0], tok[2:-1]
        if kind == "H":
            add(mask(body), c)
        elif kind == "I":
            cond = ""
            if "|" in body:
                body, cond = body.split("|")
            a, b = body.split(":")
            ma, mb, mc = mask(a), mask(b), mask(cond)
            add(ma | mc, c)
            add(mb | mc, c)
            add(ma | mb | mc, -c)
            add(mc, -c)
        else:
            raise ValueError(f"cannot parse term {tok!r}")
    return {m: c for m, c in out.items() if c}


def format_form(form: dict, variables: Sequence[str], relation: str = GE, pretty: bool = True) -> str:
    """Render ``form >= 0`` as ``expr <= 0`` using information measures when possible."""
    negated = {m: -c for m, c in form.items()}
    expr = _decompose_cached(tuple(sorted(negated.items())), tuple(variables)) if pretty else None
    if expr is None:
        expr = _raw(negated, variables)
    rel = "= 0" if relation == EQ else "<= 0"
    return f"{expr} {rel}"


def _raw(form: dict, variables) -> str:
    parts = []
    for m in sorted(form, key=lambda m: (bin(m).count("1"), m)):
        parts.append((form[m], f"H({subset_name(m, variables)})"))
    return _join(parts)


def _join(parts) -> str:
    out = ""
    for c, term in parts:
        c = Fraction(c)
        mag = abs(c)
        txt = term if mag == 1 else f"{mag}*{term}"
        if not out:
            out = txt if c > 0 else f"-{txt}"
        else:
            out += f" + {txt}" if c > 0 else f" - {txt}"
    return out or "0"


@functools.lru_cache(maxsize=None)
def _decompose_cached(items: tuple, variables: tuple) -> str | None:
    return _decompose(dict(items), variables)


def _decompose(form: dict, variables) -> str | None:
    """Sparsest integer combination of I(A:B|C) and H(A) terms equal to ``form``."""
    from scipy.optimize import Bounds, LinearConstraint, milp

    support = 0
    for m in form:
        support |= m
    bits = [i for i in range(len(variables)) if support >> i & 1]
    if len(bits) > 6:
        return None
    terms = []
    sub = [m for m in range(1, 1 << len(variables)) if m & ~support == 0]
    for a in sub:
        terms.append((f"H({subset_name(a, variables)})", {a: 1}, 1.0 + 0.01 * bin(a).count("1")))
    for a, b in itertools.combinations(sub, 2):
        if a & b or a > b:
            continue
        rest = support & ~(a | b)
        for c in [0] + _submasks(rest):
            f: dict = {}
            for m, v in ((a | c, 1), (b | c, 1), (a | b | c, -1), (c, -1)):
                if m:
                    f[m] = f.get(m, 0) + v
            f = {m: v for m, v in f.items() if v}
            name = f"I({subset_name(a, variables)}:{subset_name(b, variables)}"
            name += f"|{subset_name(c, variables)})" if c else ")"
            cost = 1.0 + 0.05 * bin(c).count("1") + 0.001 * (bin(a).count("1") + bin(b).count("1"))
            terms.append((name, f, cost))
    coords = sorted({m for _, f, _ in terms for m in f} | set(form))
    nt = len(terms)
    big = 3
    # variables: coefficients x_t (integer in [-big, big]) then indicators z_t
    a = np.zeros((len(coords), 2 * nt))
    for t, (_, f, _) in enumerate(terms):
        for m, v in f.items():
            a[coords.index(m), t] = v
    rhs = np.array([float(form.get(m, 0)) for m in coords])
    link = np.zeros((2 * nt, 2 * nt))
    for t in range(nt):
        link[2 * t, t], link[2 * t, nt + t] = 1, -big
        link[2 * t + 1, t], link[2 * t + 1, nt + t] = -1, -big
    cons = [LinearConstraint(a, rhs, rhs), LinearConstraint(link, -np.inf, 0)]
    cost = np.concatenate([np.zeros(nt), [c for _, _, c in terms]])
    lb = np.concatenate([-big * np.ones(nt), np.zeros(nt)])
    ub = np.concatenate([big * np.ones(nt), np.ones(nt)])
    res = milp(cost, constraints=cons, integrality=np.ones(2 * nt), bounds=Bounds(lb, ub))
    if res.status != 0:
        return None
    x = np.round(res.x[:nt]).astype(int)
    parts = [(int(x[t]), terms[t][0]) for t in range(nt) if x[t]]
    # positive terms first, then by name for stable output
    parts.sort(key=lambda p: (p[0] < 0, p[1].startswith("H"), p[1]))
    check: dict = {}
    for c, name in parts:
        f = next(f for nm, f, _ in terms if nm == name)
        for m, v in f.items():
            check[m] = check.get(m, 0) + c * v
    if {m: v for m, v in check.items() if v} != {m: v for m, v in form.items() if v}:
        return None
    return _join(parts)


# -- evaluation on data ------------------------------------------------------


@dataclass(frozen=True)
class EntropicBound:
    lhs: float
    terms: dict
    statement: str


def _tuple_joint(behavior: Behavior, input_joint: Distribution, y: int) -> dict:
    s = behavior.scenario
    labels = list(input_joint.labels)
    if len(labels) != s.n:
        raise ValueError(f"input joint has {len(labels)} labels for {s.n} preparations")
    width = len(labels[0])
    if any(len(t) != width for t in labels) or len(set(labels)) != len(labels):
        raise ValueError("input labels must be distinct tuples of equal length")
    joint: dict = {}
    for x, (t, px) in enumerate(zip(labels, input_joint.weights)):
        for b in range(s.k):
            w = px * behavior(b, x, y)
            if w:
                key = tuple(t) + (b,)
                joint[key] = joint.get(key, 0) + w
    return joint


def evaluate_entropic_witness(behavior: Behavior, input_joint: Distribution, l: int | None = None) -> EntropicBound:
    """Left-hand side of the l-measurement entropic witness, in bits.

    ``input_joint.labels[x]`` is the tuple (x_1, ..., x_l) encoding
    preparation x and ``input_joint.weights[x]`` its probability; B_i is the
    outcome of measurement i. The value lower-bounds the message entropy.
    """
    s = behavior.scenario
    l = s.l if l is None else l
    if l > s.l:
        raise ValueError(f"l = {l} exceeds the {s.l} measurements of the scenario")
    if len(input_joint.labels[0]) != l:
        raise ValueError(f"input tuples have length {len(input_joint.labels[0])}, expected {l}")
    terms = {}
    total = 0.0
    for i in range(l):
        joint = _tuple_joint(behavior, input_joint, i)
        v = mutual_information(joint, [i], [l])
        terms[f"I(X{i + 1}:B{i + 1})"] = v
        total += v
        if i > 0:
            v = mutual_information(joint, [0], [i], [l])
            terms[f"I(X1:X{i + 1}|B{i + 1})"] = v
            total += v
    joint = _tuple_joint(behavior, input_joint, 0)
    for i in range(l):
        v = mutual_information(joint, [i], [i])
        terms[f"H(X{i + 1})"] = -v
        total -= v
    v = shannon_entropy(tuple(input_joint.weights))
    terms["H(X1..Xl)"] = v
    total += v
    return EntropicBound(total, terms, f"H(M) >= {total:.9f} and S(rho) >= {total:.9f}")


def eq8_lhs(behavior: Behavior, input_joint: Distribution) -> float:
    """I(X1:B1) + I(X2:B2) + I(X1:X2|B1) - I(X1:X2) for two measurements."""
    j1 = _tuple_joint(behavior, input_joint, 0)
    j2 = _tuple_joint(behavior, input_joint, 1)
    return (
        mutual_information(j1, [0], [2])
        + mutual_information(j2, [1], [2])
        + mutual_information(j1, [0], [1], [2])
        - mutual_information(j1, [0], [1])
    )


def holevo_lhs(behavior: Behavior) -> float:
    """I(X : Y, B) under the scenario's input distributions."""
    s = behavior.scenario
    joint = {}
    for x in range(s.n):
        for y in range(s.l):
            for b in range(s.k):
                w = s.input_weights[x] * s.measurement_weights[y] * behavior(b, x, y)
                if w:
                    joint[(x, y, b)] = w
    return mutual_information(joint, [0], [1, 2])


def single_flip_joint(n: int) -> Distribution:
    """Inputs of n preparations as n-1 bits: all zeros or exactly one bit set.

    Preparation 0 maps to all zeros and preparation x >= 1 sets bit
    ``n - 1 - x``, so measurement i singles out preparation ``n - 1 - i``.
    """
    l = n - 1
    labels = [tuple(0 for _ in range(l))]
    labels += [tuple(int(i == n - 1 - x) for i in range(l)) for x in range(1, n)]
    return Distribution(tuple(Fraction(1, n) for _ in range(n)), tuple(labels))


def entropy_vector(joint: dict, nvars: int) -> dict:
    """All 2^n - 1 subset entropies of a joint ``{outcome tuple: prob}``."""
    out = {}
    for m in range(1, 1 << nvars):
        idx = [i for i in range(nvars) if m >> i & 1]
        marg: dict = {}
        for key, w in joint.items():
            sub = tuple(key[i] for i in idx)
            marg[sub] = marg.get(sub, 0) + w
        out[m] = shannon_entropy(tuple(marg.values()))
    return out


def keep_observables(dag: CausalDag, contexts: Sequence[Sequence[str]], bounded: Sequence[str]) -> list[int]:
    """Masks of every subset of each jointly observed context plus the
    singletons in ``bounded``."""
    idx = {v: i for i, v in enumerate(dag.nodes)}
    out = set()
    for ctx in contexts:
        out.update(_submasks(sum(1 << idx[v] for v in ctx)))
    out.update(1 << idx[v] for v in bounded)
    return sorted(out)


def observed_contexts(dag: CausalDag) -> list[list[str]]:
    """Jointly observable variable sets of a template.

    Outcome variables of different measurements are never observed together,
    so each context holds every input variable and one outcome variable.
    """
    if "M" not in dag.nodes:
        raise UnsupportedDag("the DAG has no message node M")
    inputs = [v for v in dag.nodes if v.startswith(("X", "Y"))]
    outcomes = [v for v in dag.nodes if v.startswith("B")]
    if not inputs or not outcomes:
        raise UnsupportedDag("expected input nodes X*/Y and outcome nodes B*")
    return [inputs + [b] for b in outcomes]


def derive_facets(dag: CausalDag, **options) -> ProjectionResult:
    """Project a template's entropic cone onto the observable coordinates plus H(M)."""
    return fm_eliminate(dag_system(dag), keep_observables(dag, observed_contexts(dag), ["M"]), **options)


def write_facets(result: ProjectionResult, fh, nontrivial_only: bool = True) -> None:
    ineqs = result.nontrivial_inequalities if nontrivial_only else result.inequalities
    eqs = result.nontrivial_equalities if nontrivial_only else result.equalities
    for f in eqs:
        fh.write(format_form(f, result.variables, EQ) + "\n")
    for f in ineqs:
        fh.write(format_form(f, result.variables, GE) + "\n")


def facets_json(result: ProjectionResult) -> dict:
    def conv(f):
        return {subset_name(m, result.variables): c for m, c in sorted(f.items())}

    return {
        "variables": list(result.variables),
        "nontrivial_inequalities": [conv(f) for f in result.nontrivial_inequalities],
        "nontrivial_equalities": [conv(f) for f in result.nontrivial_equalities],
        "inequalities": [conv(f) for f in result.inequalities],
        "equalities": [conv(f) for f in result.equalities],
    }
