"""Variational input-state preparation: VQE, penalties, and a VQD chain.

The objective assembled here is

    E(params) = <H> + sum_k w_k <(O_k - t_k)^2> + sum_i w_i |<psi_i|psi>|^2

with every expectation value computed exactly from the simulated state
vector. Optimization is quasi-Newton (BFGS) with central finite-difference
gradients, which is adequate because the simulator is noiseless.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox
from scipy.optimize import minimize as scipy_minimize

from .circuits import Circuit, StateVector, expectation, simulate
from .pauli import PauliString, QubitHamiltonian

INIT_SPREAD = 0.1


@dataclass(frozen=True)
class PenaltyTerm:
    operator: QubitHamiltonian
    target: float
    weight: float

    def __post_init__(self):
        if self.weight < 0.0:
            raise ValueError("penalty weight must be >= 0")


@dataclass(frozen=True)
class OverlapTerm:
    state: StateVector
    weight: float

    def __post_init__(self):
        if self.weight < 0.0:
            raise ValueError("overlap weight must be >= 0")


@dataclass
class ObjectiveSpec:
    hamiltonian: QubitHamiltonian
    penalties: list = field(default_factory=list)
    overlaps: list = field(default_factory=list)


@dataclass
class MinimizeSettings:
    max_iterations: int = 400
    gradient_tol: float = 1e-7
    fd_step: float = 1e-6


@dataclass
class OptimizationTrace:
    """Accepted iterates of one optimization run.

    `energies[i]` is the objective value at `params_history[i]`; with no
    penalty or overlap terms that is the bare energy in Hartree.
    """

    params_history: list
    energies: list

    def __len__(self):
        return len(self.energies)

    @property
    def final_params(self) -> np.ndarray:
        return self.params_history[-1]

    @property
    def final_energy(self) -> float:
        return self.energies[-1]

    def to_csv(self, params_ref: str = "params.npz") -> str:
        buf = io.StringIO()
        buf.write("iteration,energy,params_ref\n")
        for i, e in enumerate(self.energies):
            buf.write(f"{i},{e!r},{params_ref}:iter_{i}\n")
        return buf.getvalue()

    def save(self, prefix: str):
        """Write `<prefix>.csv` plus `<prefix>_params.npz`."""
        blob = f"{prefix}_params.npz"
        with open(f"{prefix}.csv", "w") as fh:
            fh.write(self.to_csv(params_ref=blob))
        np.savez(blob, **{f"iter_{i}": p
                          for i, p in enumerate(self.params_history)})


def _squared_deviation(op: QubitHamiltonian, target: float):
    """(O - t)^2 as an operator, for exact penalty expectation values."""
    shifted = op + (-target)
    return shifted.multiply(shifted)


def assemble_objective(spec: ObjectiveSpec, ansatz: Circuit, initial: int):
    """Build objective(params) for the given ansatz and reference state."""
    nq = spec.hamiltonian.n_qubits
    if ansatz.n_qubits != nq:
        raise ValueError("ansatz qubit count differs from Hamiltonian")
    penalties = []
    for term in spec.penalties:
        if term.operator.n_qubits != nq:
            raise ValueError("penalty operator qubit count mismatch")
        penalties.append((_squared_deviation(term.operator, term.target),
                          term.weight))
    for term in spec.overlaps:
        if term.state.n_qubits != nq:
            raise ValueError("overlap state qubit count mismatch")

    def objective(params):
        s = simulate(ansatz, params, initial)
        val = expectation(s, spec.hamiltonian)
        for sq_op, w in penalties:
            val += w * expectation(s, sq_op)
        for term in spec.overlaps:
            val += term.weight * abs(term.state.overlap(s)) ** 2
        return val

    return objective


def minimize(objective, initial_params, settings: MinimizeSettings | None = None):
    """BFGS descent with central-difference gradients; returns the trace of
    accepted iterates (initial point first)."""
    settings = settings or MinimizeSettings()
    x0 = np.asarray(initial_params, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial parameters must be finite")

    def checked(params):
        val = objective(params)
        if not np.isfinite(val):
            raise ValueError("non-finite objective value encountered")
        return val

    def gradient(params):
        g = np.empty_like(params)
        h = settings.fd_step
        for i in range(params.size):
            up = params.copy()
            dn = params.copy()
            up[i] += h
            dn[i] -= h
            g[i] = (checked(up) - checked(dn)) / (2.0 * h)
        return g

    trace = OptimizationTrace([x0.copy()], [checked(x0)])
    if settings.max_iterations == 0:
        return trace

    def record(xk):
        trace.params_history.append(np.array(xk, dtype=float))
        trace.energies.append(checked(np.asarray(xk, dtype=float)))

    scipy_minimize(checked, x0, jac=gradient, method="BFGS",
                   callback=record,
                   options={"maxiter": settings.max_iterations,
                            "gtol": settings.gradient_tol})
    return trace


def initial_parameters(n_params: int, seed: int, stream: int = 0,
                       restart: int = 0) -> np.ndarray:
    """Seeded uniform draw around the HF point (zero parameters leave the
    reference determinant unchanged). Restart 0 uses the default spread of
    0.1; later restarts widen it geometrically up to pi, because deflated
    or penalized landscapes can trap every narrow draw in one basin.
    Restarts draw from disjoint Philox streams of the same seed."""
    spread = min(INIT_SPREAD * 4.0 ** restart, np.pi)
    gen = Generator(Philox(key=[seed, stream + (restart << 32)]))
    return gen.uniform(-spread, spread, n_params)


def default_penalties(n_orbitals: int, n_electrons: int, weight: float = 3.0):
    """Weighted (S_z)^2 and (N_e - n)^2 penalties on the interleaved layout."""
    from .pauli import symmetry_operators

    sz, ne = symmetry_operators(n_orbitals)
    return [PenaltyTerm(sz, 0.0, weight),
            PenaltyTerm(ne, float(n_electrons), weight)]


@dataclass
class VqeResult:
    params: np.ndarray
    energy: float
    state: StateVector
    trace: OptimizationTrace


def run_vqe(ham: QubitHamiltonian, ansatz: Circuit, initial: int, seed: int,
            penalties=None, overlaps=None,
            settings: MinimizeSettings | None = None,
            stream: int = 0, restarts: int = 1) -> VqeResult:
    """Single VQE run; with restarts > 1, the best (by objective value) of
    several seeded starting points is kept. Penalty and deflation
    landscapes have local minima, so restarts widen the starting spread."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    spec = ObjectiveSpec(ham, list(penalties or ()), list(overlaps or ()))
    objective = assemble_objective(spec, ansatz, initial)
    best = None
    for r in range(restarts):
        x0 = initial_parameters(ansatz.n_params, seed, stream, restart=r)
        trace = minimize(objective, x0, settings)
        if best is None or trace.final_energy < best.final_energy:
            best = trace
    state = simulate(ansatz, best.final_params, initial)
    return VqeResult(best.final_params, expectation(state, ham),
                     state, best)


def prepare_vqd_chain(ham: QubitHamiltonian, ansatz: Circuit, initial: int,
                      n_states: int, seed: int, penalties=None,
                      overlap_weight: float = 1.0,
                      settings: MinimizeSettings | None = None,
                      restarts: int = 1):
    """Deflation chain: state k is optimized with overlap penalties against
    the converged states 0..k-1, each carrying `overlap_weight` (Hartree).

    Returns a list of VqeResult, ground state first. State k draws its
    starting points from stream k of the run seed. Use restarts >= 3 for
    excited states: the previous states remain stationary points of the
    deflated objective, and every narrow draw around the HF point falls
    into the lowest basin, so the widened restart draws are what actually
    reach the next eigenstate.
    """
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    results = []
    for k in range(n_states):
        overlaps = [OverlapTerm(r.state, overlap_weight) for r in results]
        results.append(run_vqe(ham, ansatz, initial, seed,
                               penalties=penalties, overlaps=overlaps,
                               settings=settings, stream=k,
                               restarts=restarts))
    return results
