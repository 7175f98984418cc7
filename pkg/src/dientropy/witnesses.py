"""Linear dimension witnesses in correlator form."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

from .core import Behavior, Scenario, as_fraction


class ScenarioMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LinearWitness:
    """V(p) = sum_xy v_xy E_xy for binary outcomes.

    Outcome index 0 stands for +1 and index 1 for -1, so the expanded
    coefficient of p(b|x,y) is ``v_xy`` for b = 0 and ``-v_xy`` for b = 1.
    ``bounds`` maps a message size d to the classical bound L_d.
    """

    name: str
    scenario: Scenario
    vxy: tuple[tuple[Fraction, ...], ...]
    bounds: dict

    def __post_init__(self):
        s = self.scenario
        if s.k != 2:
            raise ValueError("correlator witnesses need two outcomes")
        vxy = tuple(tuple(as_fraction(v) for v in row) for row in self.vxy)
        if len(vxy) != s.n or any(len(row) != s.l for row in vxy):
            raise ValueError("coefficient table must be n x l")
        bounds = {int(d): as_fraction(v) for d, v in self.bounds.items()}
        ds = sorted(bounds)
        if any(bounds[a] > bounds[b] for a, b in zip(ds, ds[1:])):
            raise ValueError("bounds must be nondecreasing in d")
        object.__setattr__(self, "vxy", vxy)
        object.__setattr__(self, "bounds", bounds)

    def coefficients(self) -> tuple[Fraction, ...]:
        """Expanded v_xyb in the flattened (x, y, b) order of a behavior."""
        s = self.scenario
        out = [Fraction(0)] * s.size
        for x in range(s.n):
            for y in range(s.l):
                out[s.index(x, y, 0)] = self.vxy[x][y]
                out[s.index(x, y, 1)] = -self.vxy[x][y]
        return tuple(out)

    @property
    def algebraic_max(self) -> Fraction:
        return sum(abs(v) for row in self.vxy for v in row)

    def bound(self, d: int) -> Fraction:
        """L_d, extended past the largest tabulated d by the algebraic maximum."""
        if d in self.bounds:
            return self.bounds[d]
        if d > max(self.bounds):
            return max(self.bounds[max(self.bounds)], self.algebraic_max)
        raise KeyError(d)

    def active_dimension(self, value) -> int:
        """Smallest tabulated d with value <= L_d."""
        for d in sorted(self.bounds):
            if value <= self.bounds[d]:
                return d
        raise ValueError(f"{value} exceeds every classical bound of {self.name}")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "n": self.scenario.n,
            "l": self.scenario.l,
            "vxy": [[str(v) for v in row] for row in self.vxy],
            "bounds": {str(d): str(v) for d, v in sorted(self.bounds.items())},
        }

    @classmethod
    def from_json(cls, data: dict) -> "LinearWitness":
        scenario = Scenario(int(data["n"]), int(data["l"]), 2)
        return cls(data["name"], scenario, tuple(tuple(r) for r in data["vxy"]), dict(data["bounds"]))


def make_In(n: int) -> LinearWitness:
    if n < 3:
        raise ValueError("I_n is defined for n >= 3")
    scenario = Scenario(n, n - 1, 2)
    vxy = []
    for x in range(1, n + 1):
        row = []
        for y in range(1, n):
            if x == 1:
                row.append(1)
            elif y <= n + 1 - x:
                row.append(1 if x + y <= n else -1)
            else:
                row.append(0)
        vxy.append(tuple(row))
    bounds = {d: Fraction(n * (n - 3), 2) + 2 * d - 1 for d in range(1, n + 1)}
    return LinearWitness(f"I{n}", scenario, tuple(vxy), bounds)


def make_R4() -> LinearWitness:
    scenario = Scenario(4, 2, 2)
    vxy = ((1, 1), (1, -1), (-1, 1), (-1, -1))
    bounds = {1: 0, 2: 4, 3: 6, 4: 8}
    return LinearWitness("R4", scenario, vxy, bounds)


BUILTIN = {"R4": make_R4}


def builtin_witness(name: str) -> LinearWitness:
    """Resolve ``I3``, ``I4``, ... or ``R4``."""
    key = name.upper().replace("_", "")
    if key in BUILTIN:
        return BUILTIN[key]()
    if key.startswith("I") and key[1:].isdigit():
        return make_In(int(key[1:]))
    raise KeyError(f"unknown witness {name!r}")


def load_witness(spec: str) -> LinearWitness:
    """Built-in name or path to a witness JSON file."""
    try:
        return builtin_witness(spec)
    except KeyError:
        pass
    with open(spec) as fh:
        return LinearWitness.from_json(json.load(fh))


def evaluate(witness: LinearWitness, behavior: Behavior) -> Fraction:
    s = witness.scenario
    b = behavior.scenario
    if (s.n, s.l, s.k) != (b.n, b.l, b.k):
        raise ScenarioMismatch(f"witness {witness.name} expects {(s.n, s.l, s.k)}, got {(b.n, b.l, b.k)}")
    total = Fraction(0)
    for x in range(s.n):
        for y in range(s.l):
            v = witness.vxy[x][y]
            if v:
                total += v * behavior.correlator(x, y)
    return total


def sign_behavior(witness: LinearWitness) -> Behavior:
    """Deterministic behavior answering +1 where v_xy >= 0 and -1 elsewhere.

    It reaches the algebraic maximum, which needs one message per input.
    """
    s = witness.scenario
    p = []
    for x in range(s.n):
        for y in range(s.l):
            plus = witness.vxy[x][y] >= 0
            p += [Fraction(int(plus)), Fraction(int(not plus))]
    return Behavior(s, tuple(p))


@dataclass(frozen=True)
class MessageMapSignature:
    """Witness range and message marginal of all strategies sharing a message map."""

    g: tuple[int, ...]
    marginal: tuple[Fraction, ...]
    low: Fraction
    high: Fraction


def message_map_signatures(witness: LinearWitness, d: int):
    """One signature per message map g (labels 0..d-1, all d**n of them).

    For a fixed g the best decoder answers each (y, m) with the sign of
    ``sum_{x in g^-1(m)} v_xy``, so the witness range over decoders is
    ``[-S, S]`` with ``S = sum_{y,m} |sum_{x in g^-1(m)} v_xy|``. Mixing the
    two extreme decoders reaches every value in between.
    """
    s = witness.scenario
    for g in itertools.product(range(d), repeat=s.n):
        high = Fraction(0)
        for y in range(s.l):
            acc = [Fraction(0)] * d
            for x, m in enumerate(g):
                acc[m] += witness.vxy[x][y]
            high += sum(abs(a) for a in acc)
        pm = [Fraction(0)] * d
        for x, m in enumerate(g):
            pm[m] += s.input_weights[x]
        yield MessageMapSignature(g, tuple(pm), -high, high)


def classical_max(witness: LinearWitness, d: int) -> Fraction:
    """Largest witness value over deterministic strategies with d messages."""
    return max(sig.high for sig in message_map_signatures(witness, d))
