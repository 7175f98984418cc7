"""Minimum-entropy curves for I_3, I_4 and the random access code witness."""
import sys

from dientropy import make_In, make_R4
from dientropy.entropy_lp import conjectured_min_entropy, linear_grid, min_entropy_curve, write_curve_csv

for w, dmax in ((make_In(3), 3), (make_In(4), 4)):
    rows = min_entropy_curve(w, linear_grid(w.bound(1), w.bound(dmax), 9), dmax)
    print(f"# {w.name}")
    write_curve_csv(rows, sys.stdout)

# The closed form with d - 2 saturated messages tracks the LP curve exactly.
w = make_In(4)
gap = max(abs(r.h_min - conjectured_min_entropy(w, r.value).entropy) for r in min_entropy_curve(w, linear_grid(1, 9, 41), 4))
print("largest gap to the closed form:", gap)

# R_4 has a binary branch below 4 and a three-message branch above it.
r4 = make_R4()
for r in min_entropy_curve(r4, linear_grid(0, 8, 9), 4):
    print(r.value, round(r.h_min, 6), r.d_active)
