"""Slater determinants as occupation bitmasks, plus the Slater-Condon rules.

A determinant is a plain int: bit b set means spin orbital b is occupied.
Spin orbital 2p is the alpha of spatial orbital p, 2p+1 the beta
(interleaved layout). When printed as a bitstring, qubit 0 is the rightmost
character. The reference sign of a determinant is the one obtained by
applying its creation operators in ascending spin-orbital index order.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

Determinant = int


def det_to_string(d: Determinant, n_qubits: int) -> str:
    return format(d, f"0{n_qubits}b")


def det_from_string(s: str) -> Determinant:
    if not s or set(s) - {"0", "1"}:
        raise ValueError(f"not a bitstring: {s!r}")
    return int(s, 2)


def occupied_orbitals(d: Determinant) -> list[int]:
    out = []
    b = 0
    while d:
        if d & 1:
            out.append(b)
        d >>= 1
        b += 1
    return out


def particle_number(d: Determinant) -> int:
    return int(d).bit_count()


def sz(d: Determinant) -> float:
    """z-projection of total spin, in units of hbar (half-integer)."""
    return two_sz(d) / 2.0


def two_sz(d: Determinant) -> int:
    n_alpha = n_beta = 0
    b = 0
    while d:
        if d & 1:
            if b % 2 == 0:
                n_alpha += 1
            else:
                n_beta += 1
        d >>= 1
        b += 1
    return n_alpha - n_beta


def hartree_fock_determinant(n_electrons: int, two_sz: int = 0) -> Determinant:
    """Aufbau filling: paired electrons in the lowest spatial orbitals,
    excess same-spin electrons in the next ones."""
    if (n_electrons - two_sz) % 2:
        raise ValueError("two_sz parity incompatible with n_electrons")
    n_alpha = (n_electrons + two_sz) // 2
    n_beta = (n_electrons - two_sz) // 2
    if min(n_alpha, n_beta) < 0:
        raise ValueError("two_sz exceeds n_electrons")
    d = 0
    for p in range(n_alpha):
        d |= 1 << (2 * p)
    for p in range(n_beta):
        d |= 1 << (2 * p + 1)
    return d


def enumerate_sector(n_orbitals: int, n_electrons: int, two_sz: int) -> list[Determinant]:
    """All determinants of the (N_e, S_z) sector, ascending as integers."""
    if (n_electrons - two_sz) % 2:
        return []
    n_alpha = (n_electrons + two_sz) // 2
    n_beta = (n_electrons - two_sz) // 2
    if not (0 <= n_alpha <= n_orbitals and 0 <= n_beta <= n_orbitals):
        return []
    dets = []
    for occ_a in combinations(range(n_orbitals), n_alpha):
        for occ_b in combinations(range(n_orbitals), n_beta):
            d = 0
            for p in occ_a:
                d |= 1 << (2 * p)
            for p in occ_b:
                d |= 1 << (2 * p + 1)
            dets.append(d)
    dets.sort()
    return dets


def excitation_degree(x: Determinant, y: Determinant) -> int:
    return (x ^ y).bit_count() // 2


def _phase(det: Determinant, b1: int, b2: int) -> int:
    """Sign from moving an electron between spin orbitals b1 and b2 of det:
    (-1)^(occupied strictly between them)."""
    lo, hi = (b1, b2) if b1 < b2 else (b2, b1)
    mask = ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)
    return -1 if (det & mask).bit_count() % 2 else 1


def slater_condon(x: Determinant, y: Determinant,
                  mol) -> float:
    """<x|H|y> by the Slater-Condon rules (chemists'-notation integrals).

    Exactly zero for excitation degree > 2; core_energy appears only on the
    diagonal. Raises on particle-number mismatch (across sectors the matrix
    element is zero by conservation; subspace assembly handles that case
    without calling this).
    """
    if x.bit_count() != y.bit_count():
        raise ValueError("determinants have different particle numbers")
    diff = x ^ y
    degree = diff.bit_count() // 2
    if degree > 2:
        return 0.0
    h = mol.one_body
    g = mol.two_body

    if degree == 0:
        occ = occupied_orbitals(x)
        e = mol.core_energy
        for b in occ:
            e += h[b >> 1, b >> 1]
        for i, b in enumerate(occ):
            p, sp = b >> 1, b & 1
            for c in occ[i + 1:]:
                q, sq = c >> 1, c & 1
                e += g[p, p, q, q]
                if sp == sq:
                    e -= g[p, q, q, p]
        return e

    if degree == 1:
        hole = (y & diff).bit_length() - 1
        part = (x & diff).bit_length() - 1
        if (hole & 1) != (part & 1):
            return 0.0  # spin flip: zero by spin orthogonality
        p, q = part >> 1, hole >> 1
        sp = hole & 1
        e = h[p, q]
        occ = y & ~(1 << hole)
        for b in occupied_orbitals(occ):
            r, sr = b >> 1, b & 1
            e += g[p, q, r, r]
            if sr == sp:
                e -= g[p, r, r, q]
        return _phase(y, hole, part) * e

    # degree == 2
    holes = occupied_orbitals(y & diff)
    parts = occupied_orbitals(x & diff)
    i, j = holes
    a, b = parts
    e = 0.0
    if (i & 1) == (a & 1) and (j & 1) == (b & 1):
        e += g[a >> 1, i >> 1, b >> 1, j >> 1]
    if (i & 1) == (b & 1) and (j & 1) == (a & 1):
        e -= g[b >> 1, i >> 1, a >> 1, j >> 1]
    if e == 0.0:
        return 0.0
    ph = _phase(y, i, a)
    y1 = y ^ (1 << i) ^ (1 << a)
    ph *= _phase(y1, j, b)
    return ph * e


def connected_determinants(d: Determinant, n_orbitals: int,
                           preserve_sz: bool = True) -> list[Determinant]:
    """Distinct single and double excitations of d within 2*n_orbitals spin
    orbitals, preserving N_e (and S_z when flagged). Deterministic order:
    ascending (hole, particle) index pairs, singles first."""
    n_so = 2 * n_orbitals
    occ = occupied_orbitals(d)
    virt = [b for b in range(n_so) if not (d >> b) & 1]
    out = []
    seen = set()

    for i in occ:
        for a in virt:
            if preserve_sz and (i & 1) != (a & 1):
                continue
            out.append(d ^ (1 << i) ^ (1 << a))
            seen.add(out[-1])

    for ii, i in enumerate(occ):
        for j in occ[ii + 1:]:
            for ai, a in enumerate(virt):
                for b in virt[ai + 1:]:
                    if preserve_sz and (i & 1) + (j & 1) != (a & 1) + (b & 1):
                        continue
                    x = d ^ (1 << i) ^ (1 << j) ^ (1 << a) ^ (1 << b)
                    if x not in seen:
                        seen.add(x)
                        out.append(x)
    return out


def statevector_dets(n_qubits: int):
    """All 2^n basis indices as uint64, for vectorized popcount filters."""
    return np.arange(1 << n_qubits, dtype=np.uint64)
