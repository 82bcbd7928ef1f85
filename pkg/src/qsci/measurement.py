"""Conventional sampling-estimation baseline: qubit-wise-commuting (QWC)
grouping by sorted insertion, variance proxies, optimal shot allocation,
and the seeded group-by-group estimator.

Variance conventions: sigma_l denotes the square root of the group variance
model. The Haar proxy for a group is sigma_l^2 = sum of member c_j^2 (cross
terms average to zero over Haar states); the exact mode computes
<O_l^2> - <O_l>^2 on the given state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from . import kernels
from .circuits import StateVector, expectation
from .pauli import QubitHamiltonian

_H_GATE = (1.0 / np.sqrt(2.0),) * 3 + (-1.0 / np.sqrt(2.0),)
_SDG_GATE = (1.0, 0.0, 0.0, -1.0j)


@dataclass
class MeasurementGroup:
    """Terms sharing one measurement basis. The basis is the union of the
    member Pauli letters; qubits outside `basis_x | basis_z` are free."""

    term_indices: list
    basis_x: int
    basis_z: int
    n_qubits: int

    def admits(self, ps) -> bool:
        """Qubit-wise compatibility: on every shared support qubit the
        letters must agree."""
        common = (ps.x_mask | ps.z_mask) & (self.basis_x | self.basis_z)
        return ((ps.x_mask ^ self.basis_x) & common) == 0 and \
               ((ps.z_mask ^ self.basis_z) & common) == 0

    def absorb(self, index: int, ps):
        self.term_indices.append(index)
        self.basis_x |= ps.x_mask
        self.basis_z |= ps.z_mask

    def basis_label(self) -> str:
        out = []
        for q in range(self.n_qubits - 1, -1, -1):
            xb = (self.basis_x >> q) & 1
            zb = (self.basis_z >> q) & 1
            out.append("-XZY"[xb + 2 * zb])
        return "".join(out)


def qwc_groups(ham: QubitHamiltonian):
    """Sorted insertion: non-identity terms in descending |coefficient|
    order, each joining the first qubit-wise compatible group."""
    order = sorted((i for i, (c, ps) in enumerate(ham.terms)
                    if not ps.is_identity),
                   key=lambda i: (-abs(ham.terms[i][0]),
                                  ham.terms[i][1].x_mask,
                                  ham.terms[i][1].z_mask))
    groups: list[MeasurementGroup] = []
    for i in order:
        ps = ham.terms[i][1]
        for g in groups:
            if g.admits(ps):
                g.absorb(i, ps)
                break
        else:
            groups.append(MeasurementGroup([i], ps.x_mask, ps.z_mask,
                                           ham.n_qubits))
    return groups


def haar_variances(ham: QubitHamiltonian, groups) -> np.ndarray:
    """sigma_l from the Haar-average model sigma_l^2 = sum_j c_j^2."""
    out = np.empty(len(groups))
    for l, g in enumerate(groups):
        out[l] = np.sqrt(sum(abs(ham.terms[i][0]) ** 2
                             for i in g.term_indices))
    return out


def _group_operator(ham: QubitHamiltonian, group) -> QubitHamiltonian:
    return QubitHamiltonian(ham.n_qubits,
                            [ham.terms[i] for i in group.term_indices])


def exact_variances(state: StateVector, ham: QubitHamiltonian,
                    groups) -> np.ndarray:
    """sigma_l from the true per-group variance on `state`."""
    out = np.empty(len(groups))
    for l, g in enumerate(groups):
        op = _group_operator(ham, g)
        mean = expectation(state, op)
        second = expectation(state, op.multiply(op))
        out[l] = np.sqrt(max(second - mean ** 2, 0.0))
    return out


@dataclass(frozen=True)
class ShotAllocation:
    shots: tuple
    total: int

    def __post_init__(self):
        if sum(self.shots) != self.total:
            raise ValueError("allocation does not sum to total")
        if any(m < 0 for m in self.shots):
            raise ValueError("negative shot count")

    def to_json(self) -> str:
        return json.dumps({"shots": list(self.shots), "total": self.total})


def _largest_remainder(weights: np.ndarray, total: int) -> ShotAllocation:
    wsum = float(weights.sum())
    if wsum <= 0.0:
        raise ValueError("all variances are zero; nothing to allocate")
    quota = weights / wsum * total
    base = np.floor(quota).astype(int)
    short = total - int(base.sum())
    # distribute the remainder by largest fractional part, index tie-break
    order = sorted(range(weights.size), key=lambda i: (-(quota[i] - base[i]),
                                                       i))
    for i in order[:short]:
        base[i] += 1
    return ShotAllocation(tuple(int(b) for b in base), total)


def allocate_single(variances, total: int) -> ShotAllocation:
    """M_l proportional to sigma_l, largest-remainder rounding."""
    v = np.asarray(variances, dtype=float)
    if np.any(v < 0.0):
        raise ValueError("variances must be >= 0")
    if total < int(np.count_nonzero(v > 0.0)):
        raise ValueError("total shots below the number of active groups")
    return _largest_remainder(v, total)


def allocate_multi(variance_matrix, total: int) -> ShotAllocation:
    """Multi-observable allocation: M_l proportional to the root sum of
    squares of each group's column across observables."""
    m = np.atleast_2d(np.asarray(variance_matrix, dtype=float))
    if np.any(m < 0.0):
        raise ValueError("variances must be >= 0")
    norms = np.sqrt((m ** 2).sum(axis=0))
    if total < int(np.count_nonzero(norms > 0.0)):
        raise ValueError("total shots below the number of active groups")
    return _largest_remainder(norms, total)


def _rotated_cdf(state: StateVector, group: MeasurementGroup) -> np.ndarray:
    """Probabilities after rotating the group basis onto Z: H for X letters,
    S-dagger then H for Y letters."""
    amps = state.amplitudes.copy()
    for q in range(group.n_qubits):
        xb = (group.basis_x >> q) & 1
        zb = (group.basis_z >> q) & 1
        if xb and zb:
            kernels.apply_1q(amps, group.n_qubits, q, *_SDG_GATE)
            kernels.apply_1q(amps, group.n_qubits, q, *_H_GATE)
        elif xb:
            kernels.apply_1q(amps, group.n_qubits, q, *_H_GATE)
    cdf = np.cumsum(np.abs(amps) ** 2)
    cdf[-1] = 1.0
    return cdf


def _group_samples(state, ham, group, m_shots, seed, stream):
    """Per-shot values of the group observable from m_shots basis draws."""
    cdf = _rotated_cdf(state, group)
    u = Generator(Philox(key=[seed, stream])).random(m_shots)
    outcomes = np.searchsorted(cdf, u, side="right").astype(np.uint64)
    values = np.zeros(m_shots)
    for i in group.term_indices:
        coeff, ps = ham.terms[i]
        support = np.uint64(ps.x_mask | ps.z_mask)
        parity = np.bitwise_count(outcomes & support) % np.uint64(2)
        values += coeff * (1.0 - 2.0 * parity.astype(float))
    return values


def estimate_sampling(state: StateVector, ham: QubitHamiltonian, groups,
                      allocation: ShotAllocation, seed: int,
                      rounds: int = 1):
    """(estimate, standard_error) for <state|ham|state> by QWC sampling.

    Group l draws its shots from Philox stream (seed, l). The identity
    coefficient enters exactly. With rounds=2, half the budget is spent per
    the given allocation, per-group empirical deviations re-allocate the
    second half (streams offset by the group count), and samples pool.
    Groups allocated zero shots must have zero variance on `state`.
    """
    if len(allocation.shots) != len(groups):
        raise ValueError("allocation does not cover all groups")
    if rounds not in (1, 2):
        raise ValueError("rounds must be 1 or 2")

    shots_first = list(allocation.shots)
    if rounds == 2:
        half = allocation.total // 2
        shots_first = list(_largest_remainder(
            np.asarray(allocation.shots, dtype=float), half).shots)

    samples = [np.empty(0)] * len(groups)
    for l, g in enumerate(groups):
        if shots_first[l] > 0:
            samples[l] = _group_samples(state, ham, g, shots_first[l],
                                        seed, l)

    if rounds == 2:
        sigma = np.array([s.std(ddof=1) if s.size > 1 else 0.0
                          for s in samples])
        rest = allocation.total - sum(shots_first)
        if sigma.sum() > 0.0 and rest > 0:
            second = _largest_remainder(sigma, rest)
            for l, g in enumerate(groups):
                if second.shots[l] > 0:
                    extra = _group_samples(state, ham, g, second.shots[l],
                                           seed, len(groups) + l)
                    samples[l] = np.concatenate([samples[l], extra])

    estimate = float(ham.identity_coefficient)
    var_of_mean = 0.0
    for l, g in enumerate(groups):
        s = samples[l]
        if s.size == 0:
            op = _group_operator(ham, g)
            mean = expectation(state, op)
            spread = expectation(state, op.multiply(op)) - mean ** 2
            if spread > 1e-12:
                raise ValueError(f"group {l} got zero shots but has "
                                 f"variance {spread:.2e}")
            estimate += mean
            continue
        estimate += float(s.mean())
        if s.size > 1:
            var_of_mean += float(s.var(ddof=1)) / s.size
    return estimate, float(np.sqrt(var_of_mean))
