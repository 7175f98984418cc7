"""Scenario, behavior and distribution types plus Shannon entropy helpers.

Probabilities are held as :class:`fractions.Fraction` so that polytope and
LP code downstream can stay exact. Entropies are evaluated in floating point
(bits) only at the last step.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

ATOL = 1e-9


class InvalidDistribution(ValueError):
    pass


class InvalidBehavior(ValueError):
    pass


def as_fraction(value) -> Fraction:
    """Parse ints, Fractions, ``"num/den"`` strings and floats (exactly)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**12)
    return Fraction(value)


def _uniform(size: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(1, size) for _ in range(size))


@dataclass(frozen=True)
class Scenario:
    """Prepare-and-measure scenario with ``n`` preparations, ``l`` measurements
    and ``k`` outcomes. Inputs are indexed from 0."""

    n: int
    l: int
    k: int
    input_weights: tuple[Fraction, ...] = ()
    measurement_weights: tuple[Fraction, ...] = ()

    def __post_init__(self):
        if self.n < 1 or self.l < 1 or self.k < 2:
            raise ValueError(f"need n >= 1, l >= 1, k >= 2, got {self.n, self.l, self.k}")
        px = tuple(as_fraction(w) for w in self.input_weights) or _uniform(self.n)
        py = tuple(as_fraction(w) for w in self.measurement_weights) or _uniform(self.l)
        for name, w, size in (("input_weights", px, self.n), ("measurement_weights", py, self.l)):
            if len(w) != size:
                raise ValueError(f"{name} has length {len(w)}, expected {size}")
            if any(v < 0 for v in w) or sum(w) != 1:
                raise ValueError(f"{name} must be nonnegative and sum to 1")
        object.__setattr__(self, "input_weights", px)
        object.__setattr__(self, "measurement_weights", py)

    @property
    def size(self) -> int:
        return self.n * self.l * self.k

    def index(self, x: int, y: int, b: int) -> int:
        """Position of p(b|x,y) in the flattened vector."""
        return (x * self.l + y) * self.k + b


@dataclass(frozen=True)
class Distribution:
    """A finite probability distribution with optional labels.

    Rational weights are checked for exact normalization; float weights are
    accepted within 1e-12 and flagged through :attr:`exact`.
    """

    weights: tuple
    labels: tuple = ()

    def __post_init__(self):
        weights = tuple(self.weights)
        exact = all(isinstance(w, (int, Fraction)) for w in weights)
        if exact:
            weights = tuple(Fraction(w) for w in weights)
        else:
            weights = tuple(float(w) for w in weights)
        if not weights:
            raise InvalidDistribution("empty distribution")
        if any(w < 0 for w in weights):
            raise InvalidDistribution(f"negative weight in {weights}")
        total = sum(weights)
        if exact and total != 1:
            raise InvalidDistribution(f"weights sum to {total}, not 1")
        if not exact and abs(total - 1.0) > 1e-12:
            raise InvalidDistribution(f"weights sum to {total!r}, not 1")
        labels = tuple(self.labels) or tuple(range(len(weights)))
        if len(labels) != len(weights):
            raise InvalidDistribution("labels and weights differ in length")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "labels", labels)

    @property
    def exact(self) -> bool:
        return isinstance(self.weights[0], Fraction)

    def __len__(self):
        return len(self.weights)

    def merge(self, i: int, j: int) -> "Distribution":
        """Combine labels ``i`` and ``j`` into a single label (kept at ``i``)."""
        if i == j:
            raise ValueError("cannot merge a label with itself")
        weights = list(self.weights)
        labels = list(self.labels)
        weights[i] += weights[j]
        del weights[j], labels[j]
        return Distribution(tuple(weights), tuple(labels))


def shannon_entropy(dist) -> float:
    """Shannon entropy in bits, with ``0 log 0 = 0``.

    Accepts a :class:`Distribution` or any sequence of weights (validated by
    wrapping it in a Distribution).
    """
    if not isinstance(dist, Distribution):
        dist = Distribution(tuple(dist))
    h = 0.0
    for w in dist.weights:
        if w > 0:
            w = float(w)
            h -= w * math.log2(w)
    return max(h, 0.0)


def binary_entropy(x) -> float:
    if not 0 <= x <= 1:
        raise ValueError(f"binary entropy argument {x} outside [0, 1]")
    x = float(x)
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


@dataclass(frozen=True)
class Violation:
    kind: str  # "negative", "above_one" or "normalization"
    index: tuple
    value: Fraction

    def __str__(self):
        return f"{self.kind} at {self.index}: {self.value}"


@dataclass(frozen=True)
class Behavior:
    """Conditional outcome table p(b|x,y), stored flat in (x, y, b) order."""

    scenario: Scenario
    p: tuple[Fraction, ...]
    _checked: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        p = tuple(as_fraction(v) for v in self.p)
        if len(p) != self.scenario.size:
            raise InvalidBehavior(f"table has {len(p)} entries, expected {self.scenario.size}")
        object.__setattr__(self, "p", p)
        if self._checked:
            problems = validate_behavior(self)
            if problems:
                raise InvalidBehavior("; ".join(map(str, problems)))

    @classmethod
    def from_table(cls, scenario: Scenario, table, check: bool = True) -> "Behavior":
        """Build from a nested ``table[x][y][b]``."""
        flat = [table[x][y][b] for x in range(scenario.n) for y in range(scenario.l) for b in range(scenario.k)]
        return cls(scenario, tuple(flat), check)

    @classmethod
    def uniform(cls, scenario: Scenario) -> "Behavior":
        return cls(scenario, tuple(Fraction(1, scenario.k) for _ in range(scenario.size)))

    def __call__(self, b: int, x: int, y: int) -> Fraction:
        return self.p[self.scenario.index(x, y, b)]

    def table(self) -> list:
        s = self.scenario
        return [[[self(b, x, y) for b in range(s.k)] for y in range(s.l)] for x in range(s.n)]

    def correlator(self, x: int, y: int) -> Fraction:
        """E_xy for binary outcomes, with outcome index 0 read as +1 and 1 as -1."""
        if self.scenario.k != 2:
            raise ValueError("correlators are defined for two outcomes only")
        return self(0, x, y) - self(1, x, y)

    def mix(self, other: "Behavior", t) -> "Behavior":
        """(1 - t) * self + t * other."""
        t = as_fraction(t)
        if other.scenario != self.scenario:
            raise ValueError("scenario mismatch")
        return Behavior(self.scenario, tuple((1 - t) * a + t * b for a, b in zip(self.p, other.p)))

    def to_json(self) -> dict:
        s = self.scenario
        return {
            "n": s.n,
            "l": s.l,
            "k": s.k,
            "p": [[[str(v) for v in row] for row in block] for block in self.table()],
            "px": [str(v) for v in s.input_weights],
            "py": [str(v) for v in s.measurement_weights],
        }

    @classmethod
    def from_json(cls, data: dict, check: bool = True) -> "Behavior":
        scenario = Scenario(
            int(data["n"]),
            int(data["l"]),
            int(data["k"]),
            tuple(as_fraction(v) for v in data.get("px", ())),
            tuple(as_fraction(v) for v in data.get("py", ())),
        )
        table = [[[as_fraction(v) for v in row] for row in block] for block in data["p"]]
        if len(table) != scenario.n or any(len(block) != scenario.l for block in table) or any(
            len(row) != scenario.k for block in table for row in block
        ):
            raise InvalidBehavior("table shape does not match (n, l, k)")
        return cls.from_table(scenario, table, check)


def validate_behavior(behavior: Behavior) -> list[Violation]:
    """All nonnegativity and normalization violations; empty when valid."""
    s = behavior.scenario
    found = []
    for x in range(s.n):
        for y in range(s.l):
            total = Fraction(0)
            for b in range(s.k):
                v = behavior(b, x, y)
                total += v
                if v < 0:
                    found.append(Violation("negative", (x, y, b), v))
                elif v > 1:
                    found.append(Violation("above_one", (x, y, b), v))
            if total != 1:
                found.append(Violation("normalization", (x, y), total))
    return found


def load_behavior(path, check: bool = True) -> Behavior:
    with open(path) as fh:
        return Behavior.from_json(json.load(fh), check)


def dump_behavior(behavior: Behavior, path) -> None:
    with open(path, "w") as fh:
        json.dump(behavior.to_json(), fh, indent=1)
        fh.write("\n")


def mutual_information(joint: dict, left: Sequence[int], right: Sequence[int], given: Iterable[int] = ()) -> float:
    """I(left : right | given) in bits from a joint ``{outcome tuple: prob}``."""
    given = tuple(given)

    def h(idx):
        idx = tuple(sorted(set(idx)))
        if not idx:
            return 0.0
        marg: dict = {}
        for key, w in joint.items():
            sub = tuple(key[i] for i in idx)
            marg[sub] = marg.get(sub, 0) + w
        return shannon_entropy(tuple(v for v in marg.values()))

    left, right = tuple(left), tuple(right)
    return h(left + given) + h(right + given) - h(left + right + given) - h(given)
