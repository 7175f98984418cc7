"""Quantum ensembles: von Neumann entropy, optimal witness values and
entropy-constrained witness maximization."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .witnesses import LinearWitness

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10


class InvalidEnsemble(ValueError):
    pass


def von_neumann_entropy(rho: np.ndarray) -> float:
    """S(rho) in bits."""
    mu = np.linalg.eigvalsh(rho)
    mu = mu[mu > 1e-15]
    return float(max(-np.sum(mu * np.log2(mu)), 0.0))


@dataclass(frozen=True)
class QuantumEnsemble:
    states: np.ndarray  # (n, d, d) complex
    input_weights: np.ndarray = None
    real_only: bool = False

    def __post_init__(self):
        states = np.asarray(self.states, dtype=complex)
        if states.ndim != 3 or states.shape[1] != states.shape[2]:
            raise InvalidEnsemble("states must have shape (n, d, d)")
        n = states.shape[0]
        w = np.full(n, 1.0 / n) if self.input_weights is None else np.asarray(self.input_weights, dtype=float)
        if w.shape != (n,) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise InvalidEnsemble("input weights must be a probability vector over the states")
        for x, rho in enumerate(states):
            if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
                raise InvalidEnsemble(f"state {x} is not Hermitian")
            if abs(np.trace(rho).real - 1) > TRACE_TOL:
                raise InvalidEnsemble(f"state {x} does not have unit trace")
            if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
                raise InvalidEnsemble(f"state {x} is not positive semidefinite")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "input_weights", w)

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def d(self) -> int:
        return self.states.shape[1]

    @property
    def average(self) -> np.ndarray:
        return np.einsum("x,xij->ij", self.input_weights, self.states)

    @classmethod
    def from_pure(cls, vectors, input_weights=None) -> "QuantumEnsemble":
        v = np.asarray(vectors, dtype=complex)
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
        return cls(np.einsum("xi,xj->xij", v, v.conj()), input_weights)

    def conjugate(self, unitary: np.ndarray) -> "QuantumEnsemble":
        u = np.asarray(unitary)
        return QuantumEnsemble(u @ self.states @ u.conj().T, self.input_weights)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "input_weights": self.input_weights.tolist(),
            "states": [[[[float(z.real), float(z.imag)] for z in row] for row in rho] for rho in self.states],
        }

    @classmethod
    def from_json(cls, data: dict) -> "QuantumEnsemble":
        states = np.array([[[complex(re, im) for re, im in row] for row in rho] for rho in data["states"]])
        return cls(states, np.array(data.get("input_weights")) if data.get("input_weights") else None)


def ensemble_entropy(ensemble: QuantumEnsemble) -> float:
    return von_neumann_entropy(ensemble.average)


def _witness_matrix(witness: LinearWitness) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in witness.vxy])


def combined_operators(states: np.ndarray, witness: LinearWitness) -> np.ndarray:
    """rho'_y = sum_x v_xy rho_x for every measurement y."""
    return np.einsum("xy,xij->yij", _witness_matrix(witness), states)


def optimal_witness_value(ensemble: QuantumEnsemble, witness: LinearWitness) -> float:
    """Witness value with the best +-1 observables: sum_y sum_k |eig_k(rho'_y)|."""
    if ensemble.n != witness.scenario.n:
        raise ValueError(f"ensemble has {ensemble.n} states, witness needs {witness.scenario.n}")
    ops = combined_operators(ensemble.states, witness)
    if np.max(np.abs(ops - np.conj(np.swapaxes(ops, 1, 2)))) > 1e-9:
        raise InvalidEnsemble("combined operators are not Hermitian")
    return float(np.abs(np.linalg.eigvalsh(ops)).sum())


def witness_value_with_observables(ensemble: QuantumEnsemble, witness: LinearWitness, observables: Sequence[np.ndarray]) -> float:
    """sum_xy v_xy tr(rho_x M_y) for explicit observables M_y."""
    ops = combined_operators(ensemble.states, witness)
    return float(sum(np.trace(op @ m).real for op, m in zip(ops, observables)))


def correlators(ensemble: QuantumEnsemble, observables: Sequence[np.ndarray]) -> np.ndarray:
    """E_xy = tr(rho_x M_y)."""
    return np.array([[np.trace(rho @ m).real for m in observables] for rho in ensemble.states])


def optimal_observables(ensemble: QuantumEnsemble, witness: LinearWitness) -> list[np.ndarray]:
    """The +-1 observables diagonal in each rho'_y eigenbasis."""
    out = []
    for op in combined_operators(ensemble.states, witness):
        vals, vecs = np.linalg.eigh(op)
        signs = np.where(vals >= 0, 1.0, -1.0)
        out.append((vecs * signs) @ vecs.conj().T)
    return out


# -- parametrization ------------------------------------------------------


def _param_count(n: int, d: int, real_only: bool, mixed: bool) -> int:
    per = d * d if mixed else d
    return n * per * (1 if real_only else 2)


def states_from_params(params: np.ndarray, n: int, d: int, real_only: bool = False, mixed: bool = False) -> np.ndarray:
    """Unnormalized amplitudes (pure) or square-root factors T (mixed) to density matrices."""
    per = d * d if mixed else d
    if real_only:
        z = params.reshape(n, per).astype(complex)
    else:
        z = params[: n * per].reshape(n, per) + 1j * params[n * per:].reshape(n, per)
    if mixed:
        t = z.reshape(n, d, d)
        rho = t @ np.conj(np.swapaxes(t, 1, 2))
    else:
        rho = np.einsum("xi,xj->xij", z, z.conj())
    tr = np.trace(rho, axis1=1, axis2=2).real
    tr = np.where(tr > 1e-300, tr, 1.0)
    return rho / tr[:, None, None]


def _entropy_of(states: np.ndarray, weights: np.ndarray) -> float:
    return von_neumann_entropy(np.einsum("x,xij->ij", weights, states))


def _value_of(states: np.ndarray, vmat: np.ndarray) -> float:
    ops = np.einsum("xy,xij->yij", vmat, states)
    return float(np.abs(np.linalg.eigvalsh(ops)).sum())


def _restore(states: np.ndarray, weights: np.ndarray, cap: float) -> np.ndarray:
    """Pull all states toward the top eigenvector of the average until S <= cap."""
    if _entropy_of(states, weights) <= cap:
        return states
    avg = np.einsum("x,xij->ij", weights, states)
    _, vecs = np.linalg.eigh(avg)
    top = np.outer(vecs[:, -1], vecs[:, -1].conj())

    def blend(t):
        return (1 - t) * states + t * top

    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if _entropy_of(blend(mid), weights) <= cap:
            hi = mid
        else:
            lo = mid
    return blend(hi)


@dataclass
class QuantumOptimum:
    value: float
    entropy: float
    ensemble: QuantumEnsemble
    params: np.ndarray
    best_index: int
    seed: int
    restart_values: list = field(default_factory=list)


def _one_restart(args):
    vmat, n, d, cap, real_only, mixed, x0, maxfev, weights = args
    vmat = np.asarray(vmat)

    def unpack(p):
        return states_from_params(p, n, d, real_only, mixed)

    def terms(p):
        st = unpack(p)
        value = float(np.abs(np.linalg.eigvalsh(np.einsum("xy,xij->yij", vmat, st))).sum())
        mu_ = np.linalg.eigvalsh(np.einsum("x,xij->ij", weights, st))
        mu_ = mu_[mu_ > 1e-15]
        return value, float(-np.sum(mu_ * np.log2(mu_)))

    options = {"maxfev": maxfev, "xatol": 1e-10, "fatol": 1e-13, "adaptive": True}
    x = np.array(x0, dtype=float)
    mu = 10.0
    for stage in range(4):
        def objective(p, mu=mu):
            value, entropy = terms(p)
            excess = max(entropy - cap, 0.0)
            return -value + mu * excess * excess

        x = minimize(objective, x, method="Nelder-Mead", options=options).x
        if terms(x)[1] <= cap:
            # feasible already; a heavier penalty would not move the optimum
            break
        mu *= 10
    # one more simplex from the end point guards against a collapsed simplex
    x = minimize(objective, x, method="Nelder-Mead", options=options).x
    states = _restore(unpack(x), weights, cap)
    return _value_of(states, vmat), _entropy_of(states, weights), x, states


def max_witness_given_entropy(
    witness: LinearWitness,
    d: int,
    s: float,
    restarts: int = 50,
    real_only: bool = False,
    mixed: bool = False,
    seed: int = 0,
    warm_start: np.ndarray | None = None,
    maxfev: int = 4000,
    jobs: int = 1,
    stream: int = 0,
) -> QuantumOptimum:
    """Best witness value found with S(rho) <= s over ``restarts`` random starts.

    Each start is refined by Nelder-Mead on an exterior quadratic penalty
    whose weight starts at 10 and grows tenfold up to three times while the
    iterate stays infeasible; the final ensemble is pulled back into
    the feasible set, so every reported value is attained with
    ``S(rho) <= s``. This is a lower bound on the constrained maximum.
    """
    if s < 0:
        raise ValueError("entropy cap must be nonnegative")
    if d not in (2, 3, 4):
        raise ValueError("dimension must be 2, 3 or 4")
    n = witness.scenario.n
    vmat = _witness_matrix(witness)
    weights = np.array([float(w) for w in witness.scenario.input_weights])
    npar = _param_count(n, d, real_only, mixed)
    starts = []
    for r in range(restarts):
        if r == 0 and warm_start is not None:
            starts.append(np.asarray(warm_start, dtype=float))
        else:
            rng = np.random.default_rng([seed, stream, r])
            starts.append(rng.normal(size=npar))
    tasks = [(vmat, n, d, s, real_only, mixed, x0, maxfev, weights) for x0 in starts]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_one_restart, tasks))
    else:
        results = [_one_restart(t) for t in tasks]
    values = [r[0] for r in results]
    best = int(np.argmax(values))
    value, entropy, params, states = results[best]
    ens = QuantumEnsemble(_hermitize(states), weights, real_only)
    return QuantumOptimum(value, entropy, ens, params, best, seed, values)


def _hermitize(states: np.ndarray) -> np.ndarray:
    return (states + np.conj(np.swapaxes(states, 1, 2))) / 2


@dataclass(frozen=True)
class QuantumCurveRow:
    cap: float
    value: float
    entropy: float
    best_index: int
    seed: int


def quantum_entropy_curve(
    witness: LinearWitness,
    d: int,
    grid: Sequence[float],
    restarts: int = 50,
    real_only: bool = False,
    mixed: bool = False,
    seed: int = 0,
    maxfev: int = 4000,
    jobs: int = 1,
) -> list[QuantumCurveRow]:
    """Best witness value for each entropy cap, swept upward with warm starts.

    The value column is nondecreasing: a cap that fails to improve keeps the
    previous ensemble, which remains feasible.
    """
    rows = []
    prev = None
    for i, cap in enumerate(sorted(grid)):
        opt = max_witness_given_entropy(
            witness, d, cap, restarts, real_only, mixed, seed,
            warm_start=None if prev is None else prev.params, maxfev=maxfev, jobs=jobs, stream=i + 1,
        )
        if prev is not None and opt.value < prev.value:
            opt = QuantumOptimum(prev.value, prev.entropy, prev.ensemble, prev.params, opt.best_index, seed, opt.restart_values)
        rows.append(QuantumCurveRow(float(cap), opt.value, opt.entropy, opt.best_index, seed))
        prev = opt
        log.info("cap %.4f: value %.6f (entropy %.6f)", cap, opt.value, opt.entropy)
    return rows


def invert_curve(rows: Sequence[QuantumCurveRow]) -> list[tuple[float, float]]:
    """(witness value, entropy) pairs: each value is reachable with that entropy."""
    return [(r.value, r.entropy) for r in rows]


def entropy_for_value(rows: Sequence[QuantumCurveRow], value: float) -> float | None:
    """Smallest recorded entropy whose best value reaches ``value``.

    Lower witness values are reachable with the same states by degrading
    the measurements, so the step inversion is an upper bound on min S.
    """
    feasible = [r.entropy for r in rows if r.value >= value]
    return min(feasible) if feasible else None


def write_quantum_csv(rows: Sequence[QuantumCurveRow], fh) -> None:
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(["s_bits", "witness_value", "restart_best_index", "seed"])
    for r in rows:
        out.writerow([f"{r.cap:.12g}", f"{r.value:.12f}", r.best_index, r.seed])


def dump_ensemble(ensemble: QuantumEnsemble, path) -> None:
    with open(path, "w") as fh:
        json.dump(ensemble.to_json(), fh)
        fh.write("\n")
