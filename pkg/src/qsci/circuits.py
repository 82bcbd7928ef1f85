"""Dense state-vector circuit simulation, sampling, and the noise model.

Gates act on amplitudes indexed so that qubit 0 is the least significant bit
of the basis-state integer (rightmost character of the printed bitstring).

RNG discipline (counter-based Philox, one 64-bit run seed):
  stream key [seed, 0]: outcome uniforms, one per shot, drawn as a batch.
    sample() and noisy_sample() share this stream, so the zero-noise limit
    of noisy_sample reproduces sample() bit for bit.
  stream key [seed, 1]: noise uniforms, consumed in shot-major order with a
    fixed per-shot width (padded to the generator's 4-draw block so chunks
    can fast-forward with Philox.advance). Results are therefore independent
    of chunk size and thread count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox

from . import kernels

MAX_QUBITS = 24
NORM_TOL = 1e-10

PARAM_KINDS = ("ry", "rz", "givens")
FIXED_KINDS = ("x", "h", "sdg", "cx", "cz")
_ARITY = {"ry": 1, "rz": 1, "x": 1, "h": 1, "sdg": 1,
          "cx": 2, "cz": 2, "givens": 2}

# 2x2 gate entries (m00, m01, m10, m11) for the fixed gates
_RT2 = 1.0 / math.sqrt(2.0)
_H = (_RT2, _RT2, _RT2, -_RT2)
_X = (0.0, 1.0, 1.0, 0.0)
_Y = (0.0, -1.0j, 1.0j, 0.0)
_Z = (1.0, 0.0, 0.0, -1.0)
_SDG = (1.0, 0.0, 0.0, -1.0j)
_PAULIS = (_X, _Y, _Z)


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple
    slot: int | None = None

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {_ARITY[self.kind]} qubits")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("repeated qubit in gate")
        needs_slot = self.kind in PARAM_KINDS
        if needs_slot != (self.slot is not None):
            raise ValueError(f"{self.kind}: bad parameter slot")


@dataclass
class Circuit:
    n_qubits: int
    gates: list = field(default_factory=list)

    def _add(self, kind, *qubits, slot=None):
        for q in qubits:
            if not 0 <= q < self.n_qubits:
                raise ValueError(f"qubit {q} out of range")
        self.gates.append(Gate(kind, tuple(qubits), slot))
        return self

    def ry(self, q):
        return self._add("ry", q, slot=self.n_params)

    def rz(self, q):
        return self._add("rz", q, slot=self.n_params)

    def givens(self, q1, q2):
        return self._add("givens", q1, q2, slot=self.n_params)

    def x(self, q):
        return self._add("x", q)

    def h(self, q):
        return self._add("h", q)

    def sdg(self, q):
        return self._add("sdg", q)

    def cx(self, control, target):
        return self._add("cx", control, target)

    def cz(self, q1, q2):
        return self._add("cz", q1, q2)

    @property
    def n_params(self) -> int:
        return sum(1 for g in self.gates if g.slot is not None)

    def validate(self):
        slots = sorted(g.slot for g in self.gates if g.slot is not None)
        if slots != list(range(len(slots))):
            raise ValueError("parameter slots not contiguous")

    def to_text(self) -> str:
        lines = [f"qubits {self.n_qubits}"]
        for g in self.gates:
            parts = [g.kind] + [str(q) for q in g.qubits]
            if g.slot is not None:
                parts.append(str(g.slot))
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("qubits "):
            raise ValueError("missing 'qubits N' header")
        c = cls(int(lines[0].split()[1]))
        for ln in lines[1:]:
            parts = ln.split()
            kind = parts[0]
            arity = _ARITY.get(kind)
            if arity is None:
                raise ValueError(f"unknown gate kind {kind!r}")
            qubits = [int(p) for p in parts[1:1 + arity]]
            slot = int(parts[1 + arity]) if kind in PARAM_KINDS else None
            c._add(kind, *qubits, slot=slot)
        c.validate()
        return c


@dataclass
class StateVector:
    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError("amplitude length is not 2^n_qubits")
        norm2 = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |norm^2 - 1| = "
                             f"{abs(norm2 - 1.0):.2e}")

    @classmethod
    def from_determinant(cls, det: int, n_qubits: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[det] = 1.0
        return cls(amps, n_qubits)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _apply_gate(amps, n_qubits, gate: Gate, theta=None):
    kind = gate.kind
    if kind == "ry":
        c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
        kernels.apply_1q(amps, n_qubits, gate.qubits[0], c, -s, s, c)
    elif kind == "rz":
        p = complex(math.cos(theta / 2.0), -math.sin(theta / 2.0))
        kernels.apply_1q(amps, n_qubits, gate.qubits[0],
                         p, 0.0, 0.0, p.conjugate())
    elif kind == "givens":
        kernels.apply_givens(amps, n_qubits, gate.qubits[0], gate.qubits[1],
                             theta)
    elif kind in ("x", "h", "sdg"):
        m = {"x": _X, "h": _H, "sdg": _SDG}[kind]
        kernels.apply_1q(amps, n_qubits, gate.qubits[0], *m)
    elif kind == "cx":
        kernels.apply_cnot(amps, n_qubits, gate.qubits[0], gate.qubits[1])
    elif kind == "cz":
        kernels.apply_cz(amps, n_qubits, gate.qubits[0], gate.qubits[1])
    else:
        raise ValueError(f"unknown gate kind {kind!r}")


def simulate(circuit: Circuit, params, initial: int = 0) -> StateVector:
    """Exact evolution of the basis state `initial` through the circuit."""
    if circuit.n_qubits > MAX_QUBITS:
        raise ValueError(f"dense simulation limited to {MAX_QUBITS} qubits")
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, "
                         f"got {params.shape}")
    if not 0 <= initial < (1 << circuit.n_qubits):
        raise ValueError("initial determinant out of range")
    amps = np.zeros(1 << circuit.n_qubits, dtype=complex)
    amps[initial] = 1.0
    for g in circuit.gates:
        theta = params[g.slot] if g.slot is not None else None
        _apply_gate(amps, circuit.n_qubits, g, theta)
    return StateVector(amps, circuit.n_qubits)


def expectation(state: StateVector, ham) -> float:
    """<s|H|s> with the imaginary residue checked, then discarded."""
    if ham.n_qubits != state.n_qubits:
        raise ValueError("qubit count mismatch")
    amps = state.amplitudes
    if state.n_qubits <= 12:
        val = complex(np.vdot(amps, ham.to_sparse() @ amps))
    else:
        idx = np.arange(amps.size, dtype=np.uint64)
        val = 0.0
        for coeff, ps in ham.terms:
            z = np.uint64(ps.z_mask)
            sign = 1.0 - 2.0 * (np.bitwise_count(idx & z) % np.uint64(2))
            ph = sign * 1j ** ((ps.x_mask & ps.z_mask).bit_count() % 4)
            val += coeff * np.vdot(amps[idx ^ np.uint64(ps.x_mask)],
                                   ph * amps)
    if abs(val.imag) > 1e-8:
        raise ValueError(f"imaginary expectation residue {val.imag:.2e}")
    return float(val.real)


@dataclass(frozen=True)
class SampleCounts:
    counts: dict
    total_shots: int
    n_qubits: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.total_shots:
            raise ValueError("counts do not sum to total_shots")

    def ranked(self):
        """(determinant, count) pairs, most frequent first; ties broken by
        the lexicographically smaller bitstring (= smaller integer)."""
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))

    def to_json(self) -> str:
        width = self.n_qubits
        body = {format(k, f"0{width}b"): v for k, v in self.ranked()}
        return json.dumps({"n_qubits": self.n_qubits,
                           "total_shots": self.total_shots,
                           "counts": body}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SampleCounts":
        obj = json.loads(text)
        counts = {int(k, 2): v for k, v in obj["counts"].items()}
        return cls(counts, obj["total_shots"], obj["n_qubits"])


def _counts_from_outcomes(outcomes: np.ndarray, n_shots, n_qubits):
    vals, cnt = np.unique(outcomes, return_counts=True)
    return SampleCounts({int(v): int(c) for v, c in zip(vals, cnt)},
                        n_shots, n_qubits)


def sample(state: StateVector, n_shots: int, seed: int) -> SampleCounts:
    """Seeded i.i.d. computational-basis draws from |alpha_x|^2."""
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    cdf = np.cumsum(state.probabilities())
    cdf[-1] = 1.0
    u = Generator(Philox(key=[seed, 0])).random(n_shots)
    outcomes = np.searchsorted(cdf, u, side="right")
    return _counts_from_outcomes(outcomes, n_shots, state.n_qubits)


@dataclass(frozen=True)
class NoiseModel:
    """Stochastic gate and readout noise.

    p1: depolarizing probability after each single-qubit gate (when the
        event fires, one of X, Y, Z is applied uniformly at random).
    p2: two-qubit gate infidelity; realized as an independent depolarizing
        event with probability 1 - sqrt(1 - p2) on each of the two qubits.
    p_ro: independent readout bit-flip probability per qubit.
    """

    p1: float = 0.0
    p2: float = 0.0
    p_ro: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "p_ro"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    @classmethod
    def device(cls) -> "NoiseModel":
        """Superconducting-device parameters used by the noisy demos
        (gate fidelities 99.61% and 96.868%, readout fidelity 99.824%)."""
        return cls(p1=1.0 - 0.9961, p2=1.0 - 0.96868, p_ro=1.0 - 0.99824)

    @property
    def is_trivial(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0 and self.p_ro == 0.0

    def to_dict(self):
        return {"p1": self.p1, "p2": self.p2, "p_ro": self.p_ro}


def _error_sites(circuit: Circuit, noise: NoiseModel):
    """(gate_index, qubit, rate) for every stochastic-Pauli insertion point,
    in circuit order."""
    r2 = 1.0 - math.sqrt(1.0 - noise.p2)
    sites = []
    for i, g in enumerate(circuit.gates):
        if len(g.qubits) == 1:
            if noise.p1 > 0.0:
                sites.append((i, g.qubits[0], noise.p1))
        else:
            if r2 > 0.0:
                sites.append((i, g.qubits[0], r2))
                sites.append((i, g.qubits[1], r2))
    return sites


def _trajectory_cdf(circuit, params, initial, events):
    """Final-state cdf with Pauli insertions after the flagged gates.

    events: tuple of (site position in gate order, qubit, pauli index)."""
    amps = np.zeros(1 << circuit.n_qubits, dtype=complex)
    amps[initial] = 1.0
    by_gate = {}
    for gate_idx, qubit, pauli in events:
        by_gate.setdefault(gate_idx, []).append((qubit, pauli))
    for i, g in enumerate(circuit.gates):
        theta = params[g.slot] if g.slot is not None else None
        _apply_gate(amps, circuit.n_qubits, g, theta)
        for qubit, pauli in by_gate.get(i, ()):
            kernels.apply_1q(amps, circuit.n_qubits, qubit, *_PAULIS[pauli])
    cdf = np.cumsum(np.abs(amps) ** 2)
    cdf[-1] = 1.0
    return cdf


_NOISE_CHUNK = 65536


def noisy_sample(circuit: Circuit, params, initial: int, noise: NoiseModel,
                 n_shots: int, seed: int, threads: int = 1) -> SampleCounts:
    """Monte-Carlo trajectory sampling under the noise model.

    Per shot: each gate-error site fires independently with its rate and
    inserts a uniformly random Pauli; readout bits flip with p_ro. With all
    rates zero this reproduces sample(simulate(...)) exactly.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    params = np.asarray(params, dtype=float)
    nq = circuit.n_qubits
    ideal = simulate(circuit, params, initial)
    cdf0 = np.cumsum(ideal.probabilities())
    cdf0[-1] = 1.0

    u_out = Generator(Philox(key=[seed, 0])).random(n_shots)
    sites = _error_sites(circuit, noise)
    n_sites = len(sites)
    rates = np.array([s[2] for s in sites], dtype=float)

    if n_sites == 0 and noise.p_ro == 0.0:
        outcomes = np.searchsorted(cdf0, u_out, side="right")
        return _counts_from_outcomes(outcomes, n_shots, nq)

    # per-shot noise-uniform layout: [site fire | site pauli | readout],
    # padded so each shot consumes a whole number of 4-draw Philox blocks
    width_raw = 2 * n_sites + nq
    width = -4 * (-width_raw // 4)
    outcomes = np.empty(n_shots, dtype=np.int64)
    traj_cache: dict[tuple, np.ndarray] = {}
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for start in range(0, n_shots, _NOISE_CHUNK):
            stop = min(start + _NOISE_CHUNK, n_shots)
            bg = Philox(key=[seed, 1])
            bg.advance(start * width // 4)
            u = Generator(bg).random((stop - start) * width)
            u = u.reshape(stop - start, width)
            fired = u[:, :n_sites] < rates[None, :]
            any_fired = fired.any(axis=1)

            clean = ~any_fired
            outcomes[start:stop][clean] = np.searchsorted(
                cdf0, u_out[start:stop][clean], side="right")

            rows = np.nonzero(any_fired)[0]
            paulis = np.minimum((u[:, n_sites:2 * n_sites] * 3).astype(int), 2)

            def run_row(r):
                events = tuple((sites[k][0], sites[k][1], int(paulis[r, k]))
                               for k in np.nonzero(fired[r])[0])
                cdf = traj_cache.get(events)
                if cdf is None:
                    cdf = _trajectory_cdf(circuit, params, initial, events)
                    if len(traj_cache) < 50_000:
                        traj_cache[events] = cdf
                return np.searchsorted(cdf, u_out[start + r], side="right")

            if pool is not None and len(rows) > 1:
                for r, res in zip(rows, pool.map(run_row, rows)):
                    outcomes[start + r] = res
            else:
                for r in rows:
                    outcomes[start + r] = run_row(r)

            if noise.p_ro > 0.0:
                flips = u[:, 2 * n_sites:2 * n_sites + nq] < noise.p_ro
                masks = flips @ (1 << np.arange(nq, dtype=np.int64))
                outcomes[start:stop] ^= masks
    finally:
        if pool is not None:
            pool.shutdown()
    return _counts_from_outcomes(outcomes, n_shots, nq)


def ry_ansatz(n_qubits: int, depth: int) -> Circuit:
    """RY layer, then `depth` blocks of (CZ neighbor ladder + RY layer).

    Parameter count is n_qubits * (depth + 1)."""
    if n_qubits < 2:
        raise ValueError("n_qubits must be >= 2")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    c = Circuit(n_qubits)
    for q in range(n_qubits):
        c.ry(q)
    for _ in range(depth):
        for q in range(n_qubits - 1):
            c.cz(q, q + 1)
        for q in range(n_qubits):
            c.ry(q)
    return c


def rsp_ansatz(n_qubits: int, depth: int) -> Circuit:
    """Real-valued symmetry-preserving ansatz on the interleaved layout.

    Each layer places one-parameter Givens blocks on alternating pairs of
    neighboring spatial orbitals, acting separately on the alpha qubits
    (2p, 2p+2) and the beta qubits (2p+1, 2p+3). Particle number per spin
    sector is conserved exactly, so states keep their (N_e, S_z) support.
    """
    if n_qubits < 4 or n_qubits % 2:
        raise ValueError("rsp_ansatz needs an even qubit count >= 4")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    n_orb = n_qubits // 2
    c = Circuit(n_qubits)
    for layer in range(depth):
        for p in range(layer % 2, n_orb - 1, 2):
            c.givens(2 * p, 2 * p + 2)
            c.givens(2 * p + 1, 2 * p + 3)
    return c
