"""Configuration selection, subspace diagonalization, and the three QSCI
algorithm variants (ground state, single diagonalization for several states,
sequential deflated diagonalization).

Selections order determinants most-frequent first; ties go to the
lexicographically smaller bitstring, which for our printing convention is
the smaller integer. All subspace energies are variational upper bounds on
the matching sector eigenvalues because the subspace matrix is a principal
submatrix of the sector Hamiltonian.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .circuits import SampleCounts, StateVector
from .determinants import (connected_determinants, det_to_string,
                           particle_number, two_sz)
from .integrals import MolecularIntegrals
from .pauli import QubitHamiltonian

DENSE_SOLVER_CAP = 2000
IDEALIZED_NOMINAL_SHOTS = 1_000_000
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class SectorFilter:
    """Post-selection target: electron count, and optionally S_z (in units
    of hbar; None leaves spin projection unconstrained)."""

    n_electrons: int
    sz: float | None = 0.0

    def admits(self, det: int) -> bool:
        if particle_number(det) != self.n_electrons:
            return False
        return self.sz is None or two_sz(det) == round(2 * self.sz)


@dataclass
class SelectionResult:
    configs: list
    frequencies: list
    discarded_by_postselect: float = 0.0

    def __post_init__(self):
        if len(self.configs) != len(self.frequencies):
            raise ValueError("configs and frequencies differ in length")
        if len(set(self.configs)) != len(self.configs):
            raise ValueError("selected configs must be distinct")
        f = self.frequencies
        if any(f[i] < f[i + 1] for i in range(len(f) - 1)):
            raise ValueError("frequencies must be non-increasing")

    def __len__(self):
        return len(self.configs)

    def to_json(self, n_qubits: int) -> str:
        return json.dumps({
            "configs": [det_to_string(d, n_qubits) for d in self.configs],
            "frequencies": list(map(float, self.frequencies)),
            "discarded_by_postselect": float(self.discarded_by_postselect),
        }, indent=2)


def _ranked_filter(items, flt: SectorFilter | None):
    """items: (det, weight) pairs. Returns (survivors sorted by
    (-weight, det), discarded weight)."""
    discarded = 0.0
    kept = []
    for det, w in items:
        if flt is not None and not flt.admits(det):
            discarded += w
        else:
            kept.append((det, w))
    kept.sort(key=lambda kv: (-kv[1], kv[0]))
    return kept, discarded


def select_top_r(counts: SampleCounts, r: int,
                 flt: SectorFilter | None = None) -> SelectionResult:
    """Up to r most frequent outcomes after post-selection. Returns fewer
    when fewer distinct outcomes survive."""
    if r < 1:
        raise ValueError("r must be >= 1")
    kept, discarded = _ranked_filter(counts.counts.items(), flt)
    kept = kept[:r]
    return SelectionResult([d for d, _ in kept], [w for _, w in kept],
                           discarded)


def select_by_threshold(counts: SampleCounts, epsilon: float,
                        flt: SectorFilter | None = None) -> SelectionResult:
    """Outcomes whose post-selected occurrence rate is >= epsilon."""
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    kept, discarded = _ranked_filter(counts.counts.items(), flt)
    total = sum(w for _, w in kept)
    kept = [(d, w) for d, w in kept if total and w / total >= epsilon]
    return SelectionResult([d for d, _ in kept], [w for _, w in kept],
                           discarded)


def idealized_top_r(state: StateVector, r: int,
                    flt: SectorFilter | None = None) -> SelectionResult:
    """Selection straight from exact probabilities |alpha_x|^2 (no shot
    noise). Frequencies are probabilities scaled by a nominal 10^6 shots."""
    if r < 1:
        raise ValueError("r must be >= 1")
    probs = state.probabilities()
    support = np.nonzero(probs > 0.0)[0]
    items = [(int(x), probs[x] * IDEALIZED_NOMINAL_SHOTS) for x in support]
    kept, discarded = _ranked_filter(items, flt)
    kept = kept[:r]
    return SelectionResult([d for d, _ in kept], [w for _, w in kept],
                           discarded)


def _check_sectors(configs, allow_mixed: bool):
    if not configs:
        raise ValueError("empty selection: post-selection removed "
                         "every outcome")
    if allow_mixed:
        return
    n = particle_number(configs[0])
    if any(particle_number(d) != n for d in configs[1:]):
        raise ValueError("selected configs mix particle numbers; "
                         "post-select on N_e or pass allow_mixed=True")


def build_subspace_hamiltonian(sel: SelectionResult,
                               mol: MolecularIntegrals,
                               allow_mixed: bool = False):
    """(H_R)_{xy} = <x|H|y> over the selected determinants, via the
    Slater-Condon rules. Dense below the solver cap, sparse above (assembled
    from the single/double excitation neighborhood of each row)."""
    _check_sectors(sel.configs, allow_mixed)
    dets = np.asarray(sel.configs, dtype=np.uint64)
    if len(dets) <= DENSE_SOLVER_CAP:
        return kernels.sc_matrix(dets, mol.n_orbitals, mol.one_body,
                                 mol.two_body, mol.core_energy)
    from scipy.sparse import coo_matrix

    index = {int(d): i for i, d in enumerate(dets)}
    rows, cols, vals = [], [], []
    for i, x in enumerate(sel.configs):
        cand = [x] + [y for y in connected_determinants(x, mol.n_orbitals)
                      if y in index and index[y] >= i]
        block = kernels.sc_block(np.asarray([x], dtype=np.uint64),
                                 np.asarray(cand, dtype=np.uint64),
                                 mol.n_orbitals, mol.one_body, mol.two_body,
                                 mol.core_energy)[0]
        for y, v in zip(cand, block):
            if v != 0.0:
                j = index[y]
                rows.append(i)
                cols.append(j)
                vals.append(v)
                if j != i:
                    rows.append(j)
                    cols.append(i)
                    vals.append(v)
    n = len(dets)
    return coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def _davidson(a, k: int, tol: float = 1e-9, max_iter: int = 300):
    """Block Davidson for the k lowest eigenpairs of a symmetric matrix
    (dense or sparse), with diagonal preconditioning and thick restarts."""
    dim = a.shape[0]
    diag = np.asarray(a.diagonal()).ravel()
    nb = min(dim, max(2 * k, k + 4))
    order = np.argsort(diag)
    v = np.zeros((dim, nb))
    v[order[:nb], np.arange(nb)] = 1.0
    av = a @ v
    max_basis = min(dim, max(6 * k, 48))

    for _ in range(max_iter):
        t = v.T @ av
        theta, s = np.linalg.eigh((t + t.T) / 2.0)
        theta, s = theta[:k], s[:, :k]
        ritz = v @ s
        residual = av @ s - ritz * theta
        norms = np.linalg.norm(residual, axis=0)
        if np.all(norms < tol):
            return theta, ritz
        new_dirs = []
        for i in range(k):
            if norms[i] < tol:
                continue
            denom = diag - theta[i]
            denom = np.where(np.abs(denom) < 1e-8,
                             np.copysign(1e-8, denom + 1e-300), denom)
            new_dirs.append(residual[:, i] / denom)
        if v.shape[1] + len(new_dirs) > max_basis:
            v = ritz
            av = a @ v
        for d in new_dirs:
            d = d - v @ (v.T @ d)
            d = d - v @ (v.T @ d)
            nrm = np.linalg.norm(d)
            if nrm > 1e-10:
                d = (d / nrm)[:, None]
                v = np.hstack([v, d])
                av = np.hstack([av, a @ d])
    raise RuntimeError(f"Davidson did not converge in {max_iter} iterations "
                       f"(worst residual {norms.max():.2e})")


def diagonalize_lowest(m, k: int):
    """k smallest eigenpairs: dense solver up to dimension 2000, Davidson
    beyond. Returns (eigenvalues ascending, column eigenvectors)."""
    dim = m.shape[0]
    if not 1 <= k <= dim:
        raise ValueError(f"k={k} out of range for dimension {dim}")
    if dim <= DENSE_SOLVER_CAP or k > dim // 4:
        dense = m.toarray() if hasattr(m, "toarray") else np.asarray(m)
        vals, vecs = np.linalg.eigh((dense + dense.T) / 2.0)
        return vals[:k], vecs[:, :k]
    return _davidson(m, k)


@dataclass
class SubspaceSolution:
    configs: list
    eigenvalues: np.ndarray
    vectors: np.ndarray
    n_qubits: int

    def __post_init__(self):
        self.eigenvalues = np.atleast_1d(np.asarray(self.eigenvalues,
                                                    dtype=float))
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if self.vectors.shape != (len(self.configs),
                                  self.eigenvalues.size):
            raise ValueError("vectors shape mismatch")
        norms = np.linalg.norm(self.vectors, axis=0)
        if np.abs(norms - 1.0).max() > 1e-10:
            raise ValueError("CI vectors must be normalized")

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    def output_state(self, state_index: int = 0) -> StateVector:
        """Embed CI vector `state_index` in the full 2^n register."""
        amps = np.zeros(1 << self.n_qubits, dtype=complex)
        amps[np.asarray(self.configs, dtype=np.int64)] = \
            self.vectors[:, state_index]
        return StateVector(amps, self.n_qubits)

    def to_json(self) -> str:
        return json.dumps({
            "n_qubits": self.n_qubits,
            "configs": [det_to_string(d, self.n_qubits)
                        for d in self.configs],
            "eigenvalues": [float(e) for e in self.eigenvalues],
            "vectors": self.vectors.T.tolist(),
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SubspaceSolution":
        obj = json.loads(text)
        return cls([int(s, 2) for s in obj["configs"]],
                   np.asarray(obj["eigenvalues"]),
                   np.asarray(obj["vectors"]).T,
                   obj["n_qubits"])


def _check_residuals(m, vals, vecs):
    for i in range(vals.size):
        r = m @ vecs[:, i] - vals[i] * vecs[:, i]
        nrm = float(np.linalg.norm(r))
        if nrm > RESIDUAL_TOL:
            raise RuntimeError(f"eigen-residual {nrm:.2e} exceeds "
                               f"{RESIDUAL_TOL:.0e} for pair {i}")


def _solve(sel: SelectionResult, mol: MolecularIntegrals, k: int,
           allow_mixed: bool = False) -> SubspaceSolution:
    m = build_subspace_hamiltonian(sel, mol, allow_mixed=allow_mixed)
    vals, vecs = diagonalize_lowest(m, k)
    _check_residuals(m, vals, vecs)
    return SubspaceSolution(list(sel.configs), vals, vecs, mol.n_qubits)


def _select_any(source, r: int, flt: SectorFilter | None) -> SelectionResult:
    if isinstance(source, SelectionResult):
        sel = SelectionResult(source.configs[:r], source.frequencies[:r],
                              source.discarded_by_postselect)
        return sel
    if isinstance(source, SampleCounts):
        return select_top_r(source, r, flt)
    if isinstance(source, StateVector):
        return idealized_top_r(source, r, flt)
    raise TypeError(f"cannot select from {type(source).__name__}")


def qsci_ground(source, r: int, flt: SectorFilter | None,
                mol: MolecularIntegrals,
                allow_mixed: bool = False) -> SubspaceSolution:
    """Select, build, diagonalize (lowest pair only). `source` may be
    SampleCounts, a StateVector (idealized selection), or a ready
    SelectionResult (truncated to its first r entries)."""
    sel = _select_any(source, r, flt)
    return _solve(sel, mol, 1, allow_mixed=allow_mixed)


MERGE_STRATEGIES = ("concatenate-by-rank", "round-robin")


def merge_subspaces(selections, r: int,
                    strategy: str = "round-robin") -> SelectionResult:
    """Common subspace from per-state selections, truncated to r distinct
    configs. Ranks are only compared within each state (shot counts across
    states need not be commensurate), so the merged frequencies are
    synthetic rank weights, not counts.

    concatenate-by-rank: state 0's list, then state 1's, ... skipping
    duplicates. round-robin: cycle states, each contributing its next
    not-yet-included config, until r configs or exhaustion."""
    if not selections:
        raise ValueError("no selections to merge")
    if strategy not in MERGE_STRATEGIES:
        raise ValueError(f"unknown merge strategy {strategy!r}")
    merged = []
    seen = set()

    def push(det):
        if det not in seen:
            seen.add(det)
            merged.append(det)

    if strategy == "concatenate-by-rank":
        for sel in selections:
            for det in sel.configs:
                if len(merged) >= r:
                    break
                push(det)
    else:
        cursors = [0] * len(selections)
        progressed = True
        while len(merged) < r and progressed:
            progressed = False
            for s, sel in enumerate(selections):
                while cursors[s] < len(sel.configs) and \
                        sel.configs[cursors[s]] in seen:
                    cursors[s] += 1
                if cursors[s] < len(sel.configs):
                    push(sel.configs[cursors[s]])
                    cursors[s] += 1
                    progressed = True
                    if len(merged) >= r:
                        break
    if not merged:
        raise ValueError("merge produced an empty subspace")
    ranks = list(range(len(merged), 0, -1))
    discarded = sum(s.discarded_by_postselect for s in selections)
    return SelectionResult(merged, ranks, discarded)


def qsci_single_diag(selections, r: int, strategy: str,
                     mol: MolecularIntegrals, n_states: int,
                     allow_mixed: bool = False) -> SubspaceSolution:
    """One diagonalization in the merged subspace; n_states lowest pairs.
    Cauchy interlacing makes every returned energy an upper bound on its
    exact counterpart."""
    if r < n_states:
        raise ValueError("r must be >= n_states")
    merged = merge_subspaces(selections, r, strategy)
    if len(merged) < n_states:
        raise ValueError(f"merged subspace dimension {len(merged)} < "
                         f"n_states {n_states}")
    return _solve(merged, mol, n_states, allow_mixed=allow_mixed)


def deflated_subspace_matrix(sel: SelectionResult, mol: MolecularIntegrals,
                             priors, betas,
                             allow_mixed: bool = False):
    """Subspace matrix plus rank-1 deflation shifts:

        (H_R)_{xy} + sum_i beta_i c_x^(i) c_y^(i)*

    priors: earlier SubspaceSolution objects; their ground vectors supply
    the c^(i), taken as zero on configs outside their own subspaces."""
    priors = list(priors)
    betas = [float(b) for b in betas]
    if len(priors) != len(betas):
        raise ValueError("betas length differs from priors length")
    if any(b <= 0.0 for b in betas):
        raise ValueError("betas must be positive")
    m = build_subspace_hamiltonian(sel, mol, allow_mixed=allow_mixed)
    if hasattr(m, "toarray"):
        m = m.toarray()
    m = np.array(m, dtype=float)
    index = {d: i for i, d in enumerate(sel.configs)}
    for prior, beta in zip(priors, betas):
        c = np.zeros(len(sel.configs))
        for d, coeff in zip(prior.configs, prior.vectors[:, 0]):
            i = index.get(d)
            if i is not None:
                c[i] = coeff
        m += beta * np.outer(c, c)
    return m


def default_beta(ham: QubitHamiltonian) -> float:
    """Deflation shift satisfying the loose sufficient condition
    beta > 2 sum_j |c_j|, with a 1% margin. The identity coefficient is
    excluded: constant shifts cannot change gaps."""
    return 1.01 * 2.0 * ham.one_norm(include_identity=False)


def qsci_sequential(sources, r_list, flt: SectorFilter | None,
                    mol: MolecularIntegrals, betas="auto",
                    allow_mixed: bool = False):
    """Deflated chain: state k diagonalizes its own selection's subspace
    matrix shifted by the rank-1 terms of states 0..k-1 and keeps the
    single lowest pair. No variational guarantee holds for k >= 1; the
    shifts only push earlier states up in their own subspaces."""
    sources = list(sources)
    r_list = list(r_list)
    if len(sources) != len(r_list):
        raise ValueError("r_list length differs from input count")
    if any(r < 1 for r in r_list):
        raise ValueError("r_list entries must be >= 1")
    if betas == "auto":
        from .pauli import jordan_wigner

        beta_value = default_beta(jordan_wigner(mol))
        beta_list = [beta_value] * len(sources)
    else:
        beta_list = [float(b) for b in betas]
        if len(beta_list) != len(sources):
            raise ValueError("betas length differs from input count")
    results = []
    for k, (source, r) in enumerate(zip(sources, r_list)):
        sel = _select_any(source, r, flt)
        _check_sectors(sel.configs, allow_mixed)
        m = deflated_subspace_matrix(sel, mol, results[:k], beta_list[:k],
                                     allow_mixed=allow_mixed)
        vals, vecs = diagonalize_lowest(m, 1)
        _check_residuals(m, vals, vecs)
        results.append(SubspaceSolution(list(sel.configs), vals, vecs,
                                        mol.n_qubits))
    return results


def expectation_on_output(sol: SubspaceSolution, state_index: int,
                          observable) -> float:
    """<psi_out|O|psi_out> over the selected configs, without realizing the
    state on a register. Fermionic observables go through Slater-Condon;
    qubit observables through direct Pauli action."""
    if not 0 <= state_index < sol.eigenvalues.size:
        raise ValueError("state_index out of range")
    c = sol.vectors[:, state_index]
    dets = np.asarray(sol.configs, dtype=np.uint64)
    if isinstance(observable, MolecularIntegrals):
        if 2 * observable.n_orbitals != sol.n_qubits:
            raise ValueError("observable orbital count mismatch")
        m = kernels.sc_matrix(dets, observable.n_orbitals,
                              observable.one_body, observable.two_body,
                              observable.core_energy)
        return float(c @ m @ c)
    if isinstance(observable, QubitHamiltonian):
        if observable.n_qubits != sol.n_qubits:
            raise ValueError("observable qubit count mismatch")
        index = {int(d): i for i, d in enumerate(sol.configs)}
        val = 0.0 + 0.0j
        for coeff, ps in observable.terms:
            zmask = np.uint64(ps.z_mask)
            partners = dets ^ np.uint64(ps.x_mask)
            sign = 1.0 - 2.0 * (np.bitwise_count(dets & zmask)
                                % np.uint64(2)).astype(float)
            phase = sign * 1j ** ((ps.x_mask & ps.z_mask).bit_count() % 4)
            for j, (y, p) in enumerate(zip(partners, phase)):
                i = index.get(int(y))
                if i is not None:
                    val += coeff * p * c[i] * c[j]
        if abs(val.imag) > 1e-8:
            raise ValueError(f"imaginary residue {val.imag:.2e}")
        return float(val.real)
    raise TypeError(f"unsupported observable type "
                    f"{type(observable).__name__}")
