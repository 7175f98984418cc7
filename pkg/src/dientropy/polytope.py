"""Exact low-dimensional polytope helpers: affine hulls, V->H conversion,
H->V enumeration and projection through an LP oracle.

Everything here is meant for dimension <= 4 and small point sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

Vector = tuple  # tuple of Fractions


def rref(rows: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    m = [[Fraction(v) for v in r] for r in rows]
    pivots: list[int] = []
    if not m:
        return m, pivots
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Basis of {v : rows v = 0}."""
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    red, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -red[r][fc]
        basis.append(v)
    return basis


def solve_square(a: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """Unique solution of a x = b, or None when singular."""
    n = len(a)
    aug = [list(map(Fraction, row)) + [Fraction(rhs)] for row, rhs in zip(a, b)]
    red, pivots = rref(aug)
    if pivots != list(range(n)):
        return None
    return [red[i][-1] for i in range(n)]


def dot(u, v) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


@dataclass(frozen=True)
class AffineHull:
    base: Vector
    directions: tuple  # basis of the direction space
    normals: tuple  # basis of its orthogonal complement

    @property
    def dim(self) -> int:
        return len(self.directions)


def affine_hull(points: Sequence[Sequence]) -> AffineHull:
    pts = [tuple(Fraction(v) for v in p) for p in points]
    base = pts[0]
    diffs = [[a - b for a, b in zip(p, base)] for p in pts[1:]]
    red, _ = rref(diffs) if diffs else ([], [])
    directions = tuple(tuple(r) for r in red)
    normals = tuple(tuple(v) for v in nullspace(list(directions), len(base)))
    return AffineHull(base, directions, normals)


@dataclass(frozen=True)
class Facet:
    """Inequality ``normal . p <= offset`` valid on the polytope."""

    normal: Vector
    offset: Fraction


def _float_prefilter(points: list[Vector], hull: AffineHull, margin: float = 1e-9) -> list[Vector]:
    """Drop points that are strictly interior by a clear floating margin."""
    if hull.dim < 2 or len(points) <= hull.dim + 3:
        return points
    from scipy.spatial import ConvexHull, QhullError

    base = np.array([float(v) for v in hull.base])
    basis = np.array([[float(v) for v in d] for d in hull.directions])
    q, _ = np.linalg.qr(basis.T)
    coords = (np.array([[float(v) for v in p] for p in points]) - base) @ q
    try:
        ch = ConvexHull(coords)
    except QhullError:
        return points
    slack = coords @ ch.equations[:, :-1].T + ch.equations[:, -1]
    keep = slack.max(axis=1) > -margin
    return [p for p, k in zip(points, keep) if k]


def convex_hull(points: Sequence[Sequence]) -> tuple[list[Vector], list[Facet], AffineHull]:
    """Exact vertices and facets of conv(points).

    Facets are expressed inside the affine hull; together with the hull's
    equations ``normals . p = normals . base`` they describe the polytope.
    """
    pts = sorted({tuple(Fraction(v) for v in p) for p in points})
    hull = affine_hull(pts)
    k = hull.dim
    if k == 0:
        return pts[:1], [], hull
    if k == 1:
        direction = hull.directions[0]
        proj = sorted(pts, key=lambda p: dot(direction, p))
        lo, hi = proj[0], proj[-1]
        facets = [Facet(tuple(-v for v in direction), -dot(direction, lo)), Facet(direction, dot(direction, hi))]
        return sorted({lo, hi}), facets, hull
    pts = _float_prefilter(pts, hull)
    facets: dict = {}
    for combo in itertools.combinations(range(len(pts)), k):
        chosen = [pts[i] for i in combo]
        diffs = [[a - b for a, b in zip(p, chosen[0])] for p in chosen[1:]]
        # normal lies in the direction space and is orthogonal to the chosen differences
        coeff_rows = [[dot(dv, dirv) for dirv in hull.directions] for dv in diffs]
        ns = nullspace(coeff_rows, k)
        if len(ns) != 1:
            continue
        normal = [sum((c * dirv[j] for c, dirv in zip(ns[0], hull.directions)), Fraction(0)) for j in range(len(hull.base))]
        offset = dot(normal, chosen[0])
        vals = [dot(normal, p) for p in pts]
        if all(v <= offset for v in vals):
            pass
        elif all(v >= offset for v in vals):
            normal = [-v for v in normal]
            offset = -offset
        else:
            continue
        key = _normalize(normal, offset)
        facets[key] = Facet(key[0], key[1])
    facet_list = sorted(facets.values(), key=lambda f: (f.normal, f.offset))
    vertices = []
    for p in pts:
        tight = [list(f.normal) for f in facet_list if dot(f.normal, p) == f.offset]
        if tight and len(rref(tight + [list(n) for n in hull.normals])[1]) == len(hull.base):
            vertices.append(p)
    return sorted(vertices), facet_list, hull


def _normalize(normal, offset):
    scale = next(abs(v) for v in normal if v != 0)
    return tuple(v / scale for v in normal), offset / scale


def vertices_from_halfspaces(ineqs: Sequence[tuple[Sequence, Fraction]], eqs: Sequence[tuple[Sequence, Fraction]], dim: int) -> list[Vector]:
    """Vertices of {p : a.p <= b for (a, b) in ineqs, a.p == b for (a, b) in eqs}.

    Brute-force facet intersection; fine for dim <= 4 and a few dozen rows.
    """
    eq_rows = [list(map(Fraction, a)) for a, _ in eqs]
    eq_rhs = [Fraction(b) for _, b in eqs]
    rank_eq = len(rref(eq_rows)[1]) if eq_rows else 0
    need = dim - rank_eq
    ineqs = [(list(map(Fraction, a)), Fraction(b)) for a, b in ineqs]
    found = set()
    for combo in itertools.combinations(range(len(ineqs)), need):
        rows = eq_rows + [ineqs[i][0] for i in combo]
        rhs = eq_rhs + [ineqs[i][1] for i in combo]
        red, pivots = rref([r + [v] for r, v in zip(rows, rhs)])
        if len(pivots) != dim or dim in pivots:
            continue
        x = [Fraction(0)] * dim
        for r, pc in enumerate(pivots):
            x[pc] = red[r][-1]
        if all(dot(a, x) <= b for a, b in ineqs):
            found.add(tuple(x))
    return sorted(found)


def project_with_oracle(maximize: Callable[[Sequence[Fraction]], Vector], dim: int, max_rounds: int = 10_000) -> list[Vector]:
    """Vertices of a polytope known only through a linear-optimization oracle.

    ``maximize(u)`` must return a point of the polytope maximizing ``u . p``.
    Works by growing an inner hull until every facet is certified.
    """
    points = set()
    for i in range(dim):
        for s in (1, -1):
            u = [Fraction(0)] * dim
            u[i] = Fraction(s)
            points.add(tuple(maximize(u)))
    # grow the affine hull until no normal direction can be extended
    while True:
        hull = affine_hull(sorted(points))
        grew = False
        for normal in hull.normals:
            level = dot(normal, hull.base)
            for s in (1, -1):
                u = [s * v for v in normal]
                p = tuple(maximize(u))
                if dot(u, p) != s * level:
                    points.add(p)
                    grew = True
                    break
            if grew:
                break
        if not grew:
            break
    certified = set()
    for _ in range(max_rounds):
        vertices, facets, hull = convex_hull(sorted(points))
        pending = [f for f in facets if (f.normal, f.offset) not in certified]
        if not pending:
            return vertices
        for f in pending:
            p = tuple(maximize(list(f.normal)))
            if dot(f.normal, p) > f.offset:
                points.add(p)
            else:
                certified.add((f.normal, f.offset))
        points = set(vertices) | {p for p in points if p not in vertices and any(dot(f.normal, p) > f.offset for f in facets)}
    raise RuntimeError("projection did not converge")
