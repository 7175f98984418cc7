"""Entropy bounds straight from data: the exact LP versus the entropic witness."""
import random
from fractions import Fraction

from dientropy import Behavior, Distribution, Scenario, make_In
from dientropy.entropic_cone import eq8_lhs, evaluate_entropic_witness, single_flip_joint
from dientropy.entropy_lp import min_entropy_exact
from dientropy.witnesses import sign_behavior

rng = random.Random(1)
s = Scenario(3, 2, 2)
joint = Distribution((Fraction(1, 3),) * 3, ((0, 0), (0, 1), (1, 0)))
for _ in range(5):
    p = []
    for _ in range(6):
        a = Fraction(rng.randint(0, 8), 8)
        p += [a, 1 - a]
    b = Behavior(s, tuple(p))
    exact = min_entropy_exact(b, 3)
    print(f"entropic bound {eq8_lhs(b, joint):.4f} <= LP minimum {exact.entropy:.4f}")

# at the algebraic maximum of I_n the entropic witness already certifies log2 n bits
for n in (3, 4):
    b = sign_behavior(make_In(n))
    print(n, evaluate_entropic_witness(b, single_flip_joint(n)).lhs)
