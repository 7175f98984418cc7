"""Which message distributions can produce a given I_3 value with three messages?"""
import itertools
from fractions import Fraction

from dientropy import make_In
from dientropy.core import shannon_entropy
from dientropy.entropy_lp import message_polytope, witness_minimum

w = make_In(3)
print(w.name, "classical bounds:", {d: str(v) for d, v in w.bounds.items()})

# The slice I_3 = 4 is a hexagon in the simplex of message distributions.
poly = message_polytope(w, 4, 3)
for lo, hi in poly.coordinate_bounds():
    print(f"  {lo} <= p(m) <= {hi}")
for v in poly.vertices:
    print("  vertex", [str(q) for q in v], f"H = {shannon_entropy(v):.6f}")

# entropy is concave, so the minimum sits on a vertex
best = witness_minimum(w, 4, 3)
print("min H(M) =", best.entropy, "at", [str(q) for q in best.distribution])

# walking up the slice: each extra unit of I_3 costs entropy
for value in range(1, 6):
    print(value, round(witness_minimum(w, value, 3).entropy, 6))

# every hexagon vertex is a permutation of (1/6, 1/3, 1/2)
perms = set(itertools.permutations((Fraction(1, 6), Fraction(1, 3), Fraction(1, 2))))
print(set(poly.vertices) == perms)
