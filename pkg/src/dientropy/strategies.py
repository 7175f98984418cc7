"""Deterministic classical strategies and their convex mixtures."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .core import Behavior, Distribution, Scenario, shannon_entropy
from .witnesses import evaluate, make_In

DEFAULT_CAP = 10**7


class SizeCapExceeded(RuntimeError):
    """Raised when an enumeration would exceed its configured size cap."""


@dataclass(frozen=True)
class DeterministicStrategy:
    """Message map ``g[x]`` and decoding table ``f[y][m]``."""

    d: int
    g: tuple[int, ...]
    f: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(int(m) for m in self.g))
        object.__setattr__(self, "f", tuple(tuple(int(b) for b in row) for row in self.f))
        if self.d < 1:
            raise ValueError("message size must be at least 1")
        if any(not 0 <= m < self.d for m in self.g):
            raise ValueError(f"g={self.g} uses labels outside 0..{self.d - 1}")
        if any(len(row) != self.d for row in self.f):
            raise ValueError("f must give an outcome for every message")

    def check(self, scenario: Scenario) -> None:
        if len(self.g) != scenario.n or len(self.f) != scenario.l:
            raise ValueError("strategy does not match scenario dimensions")
        if any(not 0 <= b < scenario.k for row in self.f for b in row):
            raise ValueError("f produces an outcome outside the scenario")

    def point(self, scenario: Scenario) -> tuple[int, ...]:
        """The deterministic behavior (0/1 vector in (x, y, b) order)."""
        self.check(scenario)
        out = [0] * scenario.size
        for x, m in enumerate(self.g):
            for y in range(scenario.l):
                out[scenario.index(x, y, self.f[y][m])] = 1
        return tuple(out)

    def marginal(self, scenario: Scenario) -> tuple[Fraction, ...]:
        self.check(scenario)
        pm = [Fraction(0)] * self.d
        for x, m in enumerate(self.g):
            pm[m] += scenario.input_weights[x]
        return tuple(pm)

    def canonical(self) -> "DeterministicStrategy":
        """Relabel messages by order of first appearance in ``g``."""
        order: dict[int, int] = {}
        for m in self.g:
            order.setdefault(m, len(order))
        for m in range(self.d):
            order.setdefault(m, len(order))
        inverse = sorted(order, key=order.get)
        g = tuple(order[m] for m in self.g)
        f = tuple(tuple(row[inverse[j]] for j in range(self.d)) for row in self.f)
        return DeterministicStrategy(self.d, g, f)

    def to_json(self) -> dict:
        return {"d": self.d, "g": list(self.g), "f": [list(row) for row in self.f]}

    @classmethod
    def from_json(cls, data: dict) -> "DeterministicStrategy":
        return cls(int(data["d"]), tuple(data["g"]), tuple(tuple(r) for r in data["f"]))


@dataclass(frozen=True)
class StrategyMixture:
    strategies: tuple[DeterministicStrategy, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        weights = tuple(Fraction(w) for w in self.weights)
        if len(weights) != len(self.strategies):
            raise ValueError("one weight per strategy required")
        if any(w < 0 for w in weights) or sum(weights) != 1:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "weights", weights)

    @classmethod
    def single(cls, strategy: DeterministicStrategy) -> "StrategyMixture":
        return cls((strategy,), (Fraction(1),))

    @property
    def d(self) -> int:
        return max(s.d for s in self.strategies)


def strategy_count(scenario: Scenario, d: int) -> int:
    return d**scenario.n * scenario.k ** (scenario.l * d)


def canonical_message_maps(n: int, d: int) -> Iterator[tuple[int, ...]]:
    """Message maps with labels in order of first appearance (restricted growth strings)."""

    def grow(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for m in range(min(top + 2, d)):
            yield from grow(prefix + [m], max(top, m))

    yield from grow([], -1)


def enumerate_strategies(scenario: Scenario, d: int, dedup: bool = False, cap: int = DEFAULT_CAP) -> list[DeterministicStrategy]:
    """All deterministic strategies with message alphabet size ``d``.

    Without ``dedup`` this is the full set of ``d**n * k**(l*d)`` strategies.
    With ``dedup`` messages are canonically relabeled and only one strategy
    per (behavior point, message marginal) signature is kept.
    """
    if d < 1:
        raise ValueError("message size must be at least 1")
    total = strategy_count(scenario, d)
    if total > cap:
        raise SizeCapExceeded(f"{total} strategies exceed cap {cap}")
    n, l, k = scenario.n, scenario.l, scenario.k
    if not dedup:
        out = []
        for g in itertools.product(range(d), repeat=n):
            for flat in itertools.product(range(k), repeat=l * d):
                f = tuple(flat[y * d:(y + 1) * d] for y in range(l))
                out.append(DeterministicStrategy(d, g, f))
        return out

    seen = set()
    out = []
    for g in canonical_message_maps(n, d):
        used = max(g) + 1
        for flat in itertools.product(range(k), repeat=l * used):
            f = tuple(tuple(flat[y * used:(y + 1) * used]) + (0,) * (d - used) for y in range(l))
            s = DeterministicStrategy(d, g, f)
            key = (s.point(scenario), s.marginal(scenario))
            if key not in seen:
                seen.add(key)
                out.append(s)
    return out


def behavior_from_mixture(mix: StrategyMixture, scenario: Scenario) -> Behavior:
    p = [Fraction(0)] * scenario.size
    for s, q in zip(mix.strategies, mix.weights):
        if q:
            for i, v in enumerate(s.point(scenario)):
                if v:
                    p[i] += q
    return Behavior(scenario, tuple(p))


def message_marginal(mix: StrategyMixture, scenario: Scenario) -> Distribution:
    pm = [Fraction(0)] * mix.d
    for s, q in zip(mix.strategies, mix.weights):
        for m, v in enumerate(s.marginal(scenario)):
            pm[m] += q * v
    return Distribution(tuple(pm))


def dump_strategies(strategies: Sequence[DeterministicStrategy], path) -> None:
    with open(path, "w") as fh:
        for s in strategies:
            fh.write(json.dumps(s.to_json(), separators=(",", ":")) + "\n")


def load_strategies(path) -> list[DeterministicStrategy]:
    with open(path) as fh:
        return [DeterministicStrategy.from_json(json.loads(line)) for line in fh if line.strip()]


@dataclass(frozen=True)
class ZeroEntropyExample:
    d: int
    strategy: DeterministicStrategy
    behavior: Behavior
    witness_value: Fraction
    bound: Fraction
    entropy: float

    @property
    def closed_form_entropy(self) -> float:
        d = self.d
        return (2 / d) * math.log2(d) - (1 - 1 / d) * math.log2(1 - 1 / d)


def zero_entropy_example(d: int, max_d: int = 12) -> ZeroEntropyExample:
    """Behavior needing more than ``d`` messages yet with low message entropy.

    Uses ``n = d**2`` preparations and ``n - 1`` binary measurements. The
    first ``d`` inputs get their own message; every other input sends
    message 0. Each decoding bit is chosen to maximize that measurement's
    share of the I_n witness under this message map.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    if d > max_d:
        raise SizeCapExceeded(f"d={d} exceeds example cap {max_d}")
    n = d * d
    witness = make_In(n)
    scenario = witness.scenario
    g = tuple(x + 1 if x < d else 0 for x in range(n))
    f = []
    for y in range(scenario.l):
        row = []
        for m in range(d + 1):
            score = sum(witness.vxy[x][y] for x in range(n) if g[x] == m)
            row.append(0 if score >= 0 else 1)
        f.append(tuple(row))
    strategy = DeterministicStrategy(d + 1, g, tuple(f))
    mix = StrategyMixture.single(strategy)
    behavior = behavior_from_mixture(mix, scenario)
    value = evaluate(witness, behavior)
    entropy = shannon_entropy(message_marginal(mix, scenario))
    return ZeroEntropyExample(d, strategy, behavior, value, witness.bounds[d], entropy)
