"""Pauli strings, qubit Hamiltonians, and the Jordan-Wigner transformation.

A PauliString is stored symplectically as (x_mask, z_mask): bit q of x_mask
flips qubit q, bit q of z_mask applies a Z phase, both set means Y. The
canonical operator for masks (x, z) is the tensor product of per-qubit
letters I/X/Z/Y, so that on a computational basis state

    P |y> = i^{n_Y} * (-1)^{popcount(y & z_mask)} |y XOR x_mask>.

Labels print like bitstrings: qubit 0 is the rightmost character.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PRUNE_TOL = 1e-14


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x_mask: int = 0
    z_mask: int = 0

    def __post_init__(self):
        limit = 1 << self.n_qubits
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError("mask exceeds qubit count")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        x = z = 0
        n = len(label)
        for k, letter in enumerate(label):
            q = n - 1 - k
            if letter == "X":
                x |= 1 << q
            elif letter == "Y":
                x |= 1 << q
                z |= 1 << q
            elif letter == "Z":
                z |= 1 << q
            elif letter != "I":
                raise ValueError(f"invalid Pauli letter {letter!r}")
        return cls(n, x, z)

    def to_label(self) -> str:
        out = []
        for q in range(self.n_qubits - 1, -1, -1):
            xb = (self.x_mask >> q) & 1
            zb = (self.z_mask >> q) & 1
            out.append("IXZY"[xb + 2 * zb])
        return "".join(out)

    @property
    def support_mask(self) -> int:
        return self.x_mask | self.z_mask

    @property
    def weight(self) -> int:
        return self.support_mask.bit_count()

    @property
    def is_identity(self) -> bool:
        return self.support_mask == 0

    def __repr__(self):
        return f"PauliString({self.to_label()!r})"


def pauli_product(a: PauliString, b: PauliString):
    """(phase, PauliString) with a·b = phase·result, phase in {1, i, -1, -i}."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("qubit count mismatch")
    ax, az, bx, bz = a.x_mask, a.z_mask, b.x_mask, b.z_mask
    # per-qubit cyclic sign table: XY=iZ, YZ=iX, ZX=iY and anticyclic -i
    plus = (((ax & ~az) & (bx & bz)).bit_count()
            + ((ax & az) & (~bx & bz)).bit_count()
            + ((~ax & az) & (bx & ~bz)).bit_count())
    minus = (((ax & az) & (bx & ~bz)).bit_count()
             + ((~ax & az) & (bx & bz)).bit_count()
             + ((ax & ~az) & (~bx & bz)).bit_count())
    phase = 1j ** ((plus - minus) % 4)
    return phase, PauliString(a.n_qubits, ax ^ bx, az ^ bz)


def pauli_action(p: PauliString, ket: int):
    """(phase, bra_index) with P|ket> = phase |bra_index>."""
    n_y = (p.x_mask & p.z_mask).bit_count()
    sign = -1.0 if (ket & p.z_mask).bit_count() % 2 else 1.0
    return sign * 1j ** (n_y % 4), ket ^ p.x_mask


def pauli_matrix_element(p: PauliString, x: int, y: int) -> complex:
    """<x|P|y>, letter by letter (zero unless X/Y letters cover x XOR y)."""
    phase, out = pauli_action(p, y)
    return phase if out == x else 0.0


class QubitHamiltonian:
    """Weighted sum of Pauli strings, sum_j c_j P_j, with merged terms.

    Immutable by convention; the term list is normalized (duplicates merged,
    |c| < 1e-14 dropped) and deterministically ordered.
    """

    def __init__(self, n_qubits: int, terms):
        self.n_qubits = n_qubits
        acc: dict[tuple[int, int], complex] = {}
        for coeff, ps in terms:
            if ps.n_qubits != n_qubits:
                raise ValueError("term qubit count mismatch")
            key = (ps.x_mask, ps.z_mask)
            acc[key] = acc.get(key, 0.0) + complex(coeff)
        items = []
        for (x, z), c in acc.items():
            if abs(c) < PRUNE_TOL:
                continue
            if abs(c.imag) < PRUNE_TOL:
                c = c.real
            items.append((c, PauliString(n_qubits, x, z)))
        items.sort(key=lambda t: (t[1].x_mask, t[1].z_mask))
        self.terms = items
        self._cache = {}

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @property
    def identity_coefficient(self):
        for c, ps in self.terms:
            if ps.is_identity:
                return c
        return 0.0

    def one_norm(self, include_identity: bool = True) -> float:
        return sum(abs(c) for c, ps in self.terms
                   if include_identity or not ps.is_identity)

    def __add__(self, other):
        if isinstance(other, QubitHamiltonian):
            if other.n_qubits != self.n_qubits:
                raise ValueError("qubit count mismatch")
            return QubitHamiltonian(self.n_qubits, self.terms + other.terms)
        # scalar: shift the identity coefficient
        shift = [(complex(other), PauliString(self.n_qubits))]
        return QubitHamiltonian(self.n_qubits, self.terms + shift)

    __radd__ = __add__

    def __mul__(self, scalar):
        return QubitHamiltonian(self.n_qubits,
                                [(c * scalar, ps) for c, ps in self.terms])

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (other * -1.0)

    def multiply(self, other: "QubitHamiltonian") -> "QubitHamiltonian":
        """Operator product, expanded over the Pauli algebra."""
        out = []
        for c1, p1 in self.terms:
            for c2, p2 in other.terms:
                phase, ps = pauli_product(p1, p2)
                out.append((c1 * c2 * phase, ps))
        return QubitHamiltonian(self.n_qubits, out)

    def matrix_element(self, x: int, y: int) -> complex:
        """<x|H|y> by direct Pauli action, vectorized over terms."""
        xs, zs, cs = self._term_arrays()
        hits = (y ^ xs) == x
        if not hits.any():
            return 0.0
        n_y = np.bitwise_count(xs[hits] & zs[hits]).astype(np.int64)
        sign = 1.0 - 2.0 * (np.bitwise_count(np.uint64(y) & zs[hits]) % 2)
        return complex(np.sum(cs[hits] * sign * 1j ** (n_y % 4)))

    def _term_arrays(self):
        if "arrays" not in self._cache:
            xs = np.array([ps.x_mask for _, ps in self.terms], dtype=np.uint64)
            zs = np.array([ps.z_mask for _, ps in self.terms], dtype=np.uint64)
            cs = np.array([c for c, _ in self.terms], dtype=complex)
            self._cache["arrays"] = (xs, zs, cs)
        return self._cache["arrays"]

    def to_dense(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix; guarded to small systems."""
        if self.n_qubits > 14:
            raise ValueError("dense matrix limited to 14 qubits")
        dim = 1 << self.n_qubits
        idx = np.arange(dim, dtype=np.uint64)
        m = np.zeros((dim, dim), dtype=complex)
        for c, ps in self.terms:
            phase, rows = _action_vector(ps, idx)
            m[rows, idx] += c * phase
        return m

    def to_sparse(self):
        """CSR matrix; cached. Practical up to ~12 qubits."""
        if "sparse" not in self._cache:
            from scipy.sparse import coo_matrix

            if self.n_qubits > 12:
                raise ValueError("sparse matrix limited to 12 qubits")
            dim = 1 << self.n_qubits
            idx = np.arange(dim, dtype=np.uint64)
            rows = np.empty(len(self.terms) * dim, dtype=np.int64)
            cols = np.empty_like(rows)
            vals = np.empty(len(self.terms) * dim, dtype=complex)
            for t, (c, ps) in enumerate(self.terms):
                phase, r = _action_vector(ps, idx)
                rows[t * dim:(t + 1) * dim] = r.astype(np.int64)
                cols[t * dim:(t + 1) * dim] = idx.astype(np.int64)
                vals[t * dim:(t + 1) * dim] = c * phase
            m = coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
            if np.abs(m.data.imag).max(initial=0.0) < 1e-12:
                m = m.real
            self._cache["sparse"] = m
        return self._cache["sparse"]

    def to_text(self) -> str:
        lines = [f"qubits {self.n_qubits}"]
        for c, ps in self.terms:
            c = complex(c)
            lines.append(f"{c.real!r} {c.imag!r} {ps.to_label()}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QubitHamiltonian":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("qubits "):
            raise ValueError("missing 'qubits N' header")
        n = int(lines[0].split()[1])
        terms = []
        for ln in lines[1:]:
            re_, im, label = ln.split()
            coeff = float(re_) + 1j * float(im)
            if coeff.imag == 0.0:
                coeff = coeff.real
            terms.append((coeff, PauliString.from_label(label)))
        return cls(n, terms)

    def __repr__(self):
        return f"QubitHamiltonian(n_qubits={self.n_qubits}, terms={len(self)})"


def _action_vector(ps: PauliString, idx: np.ndarray):
    """Vectorized P|idx>: returns (phase array, flipped index array)."""
    z = np.uint64(ps.z_mask)
    x = np.uint64(ps.x_mask)
    sign = 1.0 - 2.0 * (np.bitwise_count(idx & z) % np.uint64(2)).astype(float)
    phase = sign * 1j ** ((ps.x_mask & ps.z_mask).bit_count() % 4)
    return phase, idx ^ x


def _ladder(n_qubits: int, b: int, dagger: bool):
    """JW image of a_b / a^dag_b as two Pauli terms with Z string below b."""
    zstr = (1 << b) - 1
    x = PauliString(n_qubits, 1 << b, zstr)
    y = PauliString(n_qubits, 1 << b, zstr | (1 << b))
    s = -0.5j if dagger else 0.5j
    return [(0.5, x), (s, y)]


def jordan_wigner(mol) -> QubitHamiltonian:
    """Map MolecularIntegrals to sum_j c_j P_j under the interleaved layout
    (qubit 2p alpha, 2p+1 beta). The number operator maps to (I - Z_b)/2."""
    n = mol.n_orbitals
    nq = 2 * n
    acc: dict[tuple[int, int], complex] = {(0, 0): complex(mol.core_energy)}

    def add_product(coeff, ops):
        # expand a product of ladder operators into Pauli terms
        expanded = [(coeff, PauliString(nq))]
        for term_list in ops:
            nxt = []
            for c0, p0 in expanded:
                for c1, p1 in term_list:
                    phase, ps = pauli_product(p0, p1)
                    nxt.append((c0 * c1 * phase, ps))
            expanded = nxt
        for c, ps in expanded:
            key = (ps.x_mask, ps.z_mask)
            acc[key] = acc.get(key, 0.0) + c

    h = mol.one_body
    g = mol.two_body
    for p in range(n):
        for q in range(n):
            if h[p, q] == 0.0:
                continue
            for s in (0, 1):
                add_product(h[p, q], [_ladder(nq, 2 * p + s, True),
                                      _ladder(nq, 2 * q + s, False)])
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for s_ in range(n):
                    val = g[p, q, r, s_]
                    if val == 0.0:
                        continue
                    for sig in (0, 1):
                        for tau in (0, 1):
                            add_product(0.5 * val, [
                                _ladder(nq, 2 * p + sig, True),
                                _ladder(nq, 2 * r + tau, True),
                                _ladder(nq, 2 * s_ + tau, False),
                                _ladder(nq, 2 * q + sig, False)])

    ham = QubitHamiltonian(nq, [(c, PauliString(nq, x, z))
                                for (x, z), c in acc.items()])
    worst = max((abs(complex(c).imag) for c, _ in ham.terms), default=0.0)
    if worst > 1e-9:
        raise ValueError(f"non-Hermitian mapping residue {worst:.2e}")
    ham = QubitHamiltonian(nq, [(complex(c).real, ps) for c, ps in ham.terms])
    return ham


def number_operator(n_orbitals: int) -> QubitHamiltonian:
    nq = 2 * n_orbitals
    terms = [(0.5 * nq, PauliString(nq))]
    terms += [(-0.5, PauliString(nq, 0, 1 << b)) for b in range(nq)]
    return QubitHamiltonian(nq, terms)


def sz_operator(n_orbitals: int) -> QubitHamiltonian:
    """S_z in units of hbar: (N_alpha - N_beta)/2."""
    nq = 2 * n_orbitals
    terms = []
    for p in range(n_orbitals):
        terms.append((-0.25, PauliString(nq, 0, 1 << (2 * p))))
        terms.append((0.25, PauliString(nq, 0, 1 << (2 * p + 1))))
    return QubitHamiltonian(nq, terms)


def symmetry_operators(n_orbitals: int):
    """(S_z operator, N_e operator) as diagonal Pauli-Z combinations."""
    return sz_operator(n_orbitals), number_operator(n_orbitals)
