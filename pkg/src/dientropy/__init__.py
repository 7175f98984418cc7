"""Device-independent bounds on the entropy of communicated messages."""

from .core import Behavior, Distribution, Scenario, binary_entropy, shannon_entropy
from .witnesses import LinearWitness, builtin_witness, evaluate, make_In, make_R4

__version__ = "0.1.0"

__all__ = [
    "Behavior",
    "Distribution",
    "LinearWitness",
    "Scenario",
    "binary_entropy",
    "builtin_witness",
    "evaluate",
    "make_In",
    "make_R4",
    "shannon_entropy",
]
