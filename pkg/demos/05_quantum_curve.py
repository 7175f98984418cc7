"""Qubits beat classical bits: the I_3 value reachable under a von Neumann entropy cap."""
from fractions import Fraction

import numpy as np

from dientropy import make_In
from dientropy.entropy_lp import min_entropy_witness
from dientropy.quantum import max_witness_given_entropy, quantum_entropy_curve

w = make_In(3)
rows = quantum_entropy_curve(w, 2, np.linspace(0, 1, 6), restarts=4, seed=0)
for r in rows:
    classical = min_entropy_witness(w, Fraction(r.value), 3)
    print(f"S <= {r.cap:.1f}: I3 = {r.value:.4f}  (classical needs H >= {classical:.4f})")

# one qubit with maximally mixed average reaches 1 + 2 sqrt 2
opt = max_witness_given_entropy(w, 2, 1.0, restarts=5, seed=1)
print(opt.value, 1 + 2 * np.sqrt(2))
