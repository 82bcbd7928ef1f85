"""Second-quantized molecular Hamiltonians: FCIDUMP I/O, active-space
reduction, and the dense exact-diagonalization (CASCI) oracle.

Conventions
-----------
Integrals are real, in Hartree. ``one_body[p, q]`` is h_pq over spatial
orbitals, ``two_body[p, q, r, s]`` is (pq|rs) in chemists' notation with the
full 8-fold permutation symmetry. File indices are 1-based, internal indices
0-based. MS2 is read as N_alpha - N_beta. ORBSYM/ISYM entries are accepted
and ignored.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

SYMMETRY_TOL = 1e-12
DENSE_CASCI_CAP = 20_000


class FcidumpError(ValueError):
    """Malformed FCIDUMP content. Carries the offending 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class MolecularIntegrals:
    n_orbitals: int
    n_electrons: int
    ms2: int
    core_energy: float
    one_body: np.ndarray = field(repr=False)
    two_body: np.ndarray = field(repr=False)

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_orbitals

    def validate(self):
        n = self.n_orbitals
        if n < 1:
            raise ValueError("n_orbitals must be >= 1")
        if not 0 <= self.n_electrons <= 2 * n:
            raise ValueError(f"n_electrons {self.n_electrons} outside [0, {2*n}]")
        if (self.n_electrons - self.ms2) % 2 != 0:
            raise ValueError(f"ms2 {self.ms2} has wrong parity for "
                             f"{self.n_electrons} electrons")
        if self.one_body.shape != (n, n):
            raise ValueError("one_body shape mismatch")
        if self.two_body.shape != (n, n, n, n):
            raise ValueError("two_body shape mismatch")
        if np.max(np.abs(self.one_body - self.one_body.T)) > SYMMETRY_TOL:
            raise ValueError("one_body is not symmetric")
        g = self.two_body
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if np.max(np.abs(g - g.transpose(perm))) > SYMMETRY_TOL:
                raise ValueError("two_body violates 8-fold permutation symmetry")
        return self

    def close_to(self, other: "MolecularIntegrals", tol: float = 1e-12) -> bool:
        return (self.n_orbitals == other.n_orbitals
                and self.n_electrons == other.n_electrons
                and self.ms2 == other.ms2
                and abs(self.core_energy - other.core_energy) <= tol
                and np.max(np.abs(self.one_body - other.one_body)) <= tol
                and np.max(np.abs(self.two_body - other.two_body)) <= tol)

    def to_json(self) -> str:
        """Diagnostics echo of the parsed integrals."""
        return json.dumps({
            "n_orbitals": self.n_orbitals,
            "n_electrons": self.n_electrons,
            "ms2": self.ms2,
            "core_energy": self.core_energy,
            "one_body": self.one_body.tolist(),
            "two_body": self.two_body.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "MolecularIntegrals":
        d = json.loads(text)
        return cls(d["n_orbitals"], d["n_electrons"], d["ms2"],
                   d["core_energy"], np.asarray(d["one_body"]),
                   np.asarray(d["two_body"])).validate()


_HEADER_FIELD = re.compile(r"([A-Za-z0-9_]+)\s*=\s*([^=,]+?)(?:,|$)")


def parse_fcidump(text: str) -> MolecularIntegrals:
    """Parse an FCIDUMP document (namelist header + value/index records)."""
    lines = text.splitlines()
    header_parts = []
    body_start = None
    for ln, raw in enumerate(lines, start=1):
        s = raw.strip()
        if ln == 1 and not s.upper().startswith("&FCI"):
            raise FcidumpError("expected &FCI namelist header", ln)
        header_parts.append(s)
        if s.upper().endswith("&END") or s.endswith("/"):
            body_start = ln
            break
    if body_start is None:
        raise FcidumpError("namelist header never terminated (&END or /)",
                           len(lines))

    header = " ".join(header_parts)
    header = re.sub(r"^\s*&FCI", "", header, flags=re.I)
    header = re.sub(r"(&END|/)\s*$", "", header, flags=re.I)
    fields = {}
    for key, val in _HEADER_FIELD.findall(header):
        fields[key.upper()] = val.strip()

    def int_field(name):
        if name not in fields:
            raise FcidumpError(f"header missing {name}", body_start)
        try:
            return int(fields[name])
        except ValueError:
            raise FcidumpError(f"header field {name} is not an integer",
                               body_start) from None

    n = int_field("NORB")
    n_elec = int_field("NELEC")
    ms2 = int_field("MS2")
    if n < 1:
        raise FcidumpError("NORB must be positive", body_start)

    core = 0.0
    one = np.zeros((n, n))
    two = np.zeros((n, n, n, n))
    for ln in range(body_start, len(lines)):
        tokens = lines[ln].split()
        if not tokens:
            continue
        if len(tokens) != 5:
            raise FcidumpError(f"expected 5 fields, got {len(tokens)}", ln + 1)
        try:
            val = float(tokens[0].replace("D", "E").replace("d", "e"))
        except ValueError:
            raise FcidumpError(f"non-numeric value field {tokens[0]!r}",
                               ln + 1) from None
        try:
            i, j, k, l = (int(t) for t in tokens[1:])
        except ValueError:
            raise FcidumpError("non-integer orbital index", ln + 1) from None
        for idx in (i, j, k, l):
            if idx < 0 or idx > n:
                raise FcidumpError(f"orbital index {idx} exceeds NORB={n}",
                                   ln + 1)
        if i == j == k == l == 0:
            core = val
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                raise FcidumpError("one-body record with a zero index", ln + 1)
            one[i - 1, j - 1] = one[j - 1, i - 1] = val
        elif i and j and k and l:
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for (a, b, c, d) in ((p, q, r, s), (q, p, r, s), (p, q, s, r),
                                 (q, p, s, r), (r, s, p, q), (s, r, p, q),
                                 (r, s, q, p), (s, r, q, p)):
                two[a, b, c, d] = val
        else:
            raise FcidumpError("record mixes zero and nonzero indices", ln + 1)

    return MolecularIntegrals(n, n_elec, ms2, core, one, two).validate()


def load_fcidump(path) -> MolecularIntegrals:
    with open(path) as f:
        return parse_fcidump(f.read())


def dump_fcidump(mol: MolecularIntegrals) -> str:
    """Serialize to FCIDUMP text. parse_fcidump(dump_fcidump(m)) reproduces m
    bit-exactly for values above the write threshold."""
    n = mol.n_orbitals
    lines = [f" &FCI NORB={n},NELEC={mol.n_electrons},MS2={mol.ms2},",
             "  ORBSYM=" + "1," * n,
             "  ISYM=1,",
             " &END"]
    seen = set()
    g = mol.two_body
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for s in range(n):
                    pq = (max(p, q), min(p, q))
                    rs = (max(r, s), min(r, s))
                    key = (max(pq, rs), min(pq, rs))
                    if key in seen:
                        continue
                    seen.add(key)
                    if abs(g[p, q, r, s]) > 1e-14:
                        lines.append(f" {g[p, q, r, s]:23.16E} {p+1:3d} "
                                     f"{q+1:3d} {r+1:3d} {s+1:3d}")
    for p in range(n):
        for q in range(p + 1):
            if abs(mol.one_body[p, q]) > 1e-14:
                lines.append(f" {mol.one_body[p, q]:23.16E} {p+1:3d} "
                             f"{q+1:3d}   0   0")
    lines.append(f" {mol.core_energy:23.16E}   0   0   0   0")
    return "\n".join(lines) + "\n"


def freeze_core(mol: MolecularIntegrals, frozen, active) -> MolecularIntegrals:
    """Fold doubly-occupied frozen orbitals into an effective Hamiltonian over
    the active orbitals. Orbitals in neither list are dropped as virtuals."""
    frozen = list(frozen)
    active = list(active)
    n = mol.n_orbitals
    for p in frozen + active:
        if not 0 <= p < n:
            raise ValueError(f"orbital index {p} out of range")
    if set(frozen) & set(active):
        raise ValueError("frozen and active orbitals overlap")
    if len(set(frozen)) != len(frozen) or len(set(active)) != len(active):
        raise ValueError("duplicate orbital index")
    n_active_elec = mol.n_electrons - 2 * len(frozen)
    if n_active_elec < 0:
        raise ValueError("freezing removes more electrons than present")
    if not active:
        raise ValueError("active space is empty")
    if n_active_elec > 2 * len(active):
        raise ValueError(f"{n_active_elec} electrons do not fit in "
                         f"{len(active)} active orbitals")

    h = mol.one_body
    g = mol.two_body
    core = mol.core_energy
    for i in frozen:
        core += 2.0 * h[i, i]
        for j in frozen:
            core += 2.0 * g[i, i, j, j] - g[i, j, j, i]

    act = np.asarray(active, dtype=int)
    h_eff = h[np.ix_(act, act)].copy()
    for i in frozen:
        h_eff += 2.0 * g[np.ix_(act, act, [i], [i])][:, :, 0, 0]
        h_eff -= g[np.ix_(act, [i], [i], act)][:, 0, 0, :]
    g_eff = g[np.ix_(act, act, act, act)].copy()

    return MolecularIntegrals(len(active), n_active_elec, mol.ms2, core,
                              h_eff, g_eff).validate()


def casci_dense(mol: MolecularIntegrals, n_e=None, s_z=None):
    """Dense diagonalization of the (n_e, s_z) sector. The brute-force oracle
    behind every variational check in the test suite.

    Returns (eigenvalues ascending, eigenvector columns, determinant list);
    eigenvectors are indexed by the returned determinant ordering.
    """
    from .determinants import enumerate_sector
    from .kernels import sc_matrix

    if n_e is None:
        n_e = mol.n_electrons
    two_sz = mol.ms2 if s_z is None else int(round(2 * s_z))
    dets = enumerate_sector(mol.n_orbitals, n_e, two_sz)
    if not dets:
        raise ValueError(f"empty sector (n_e={n_e}, 2s_z={two_sz})")
    if len(dets) > DENSE_CASCI_CAP:
        raise ValueError(f"sector dimension {len(dets)} exceeds dense cap "
                         f"{DENSE_CASCI_CAP}")
    m = sc_matrix(np.asarray(dets, dtype=np.uint64), mol.n_orbitals,
                  mol.one_body, mol.two_body, mol.core_energy)
    vals, vecs = np.linalg.eigh(m)
    return vals, vecs, dets
