"""Pure-numpy kernel implementations. Same signatures as the compiled
extension; selected automatically when the extension is unavailable."""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _occupied(d):
    out = []
    b = 0
    while d:
        if d & 1:
            out.append(b)
        d >>= 1
        b += 1
    return out


def _phase(det, b1, b2):
    lo, hi = (b1, b2) if b1 < b2 else (b2, b1)
    mask = ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)
    return -1.0 if bin(det & mask).count("1") % 2 else 1.0


def _sc_pair(x, y, h, g, core):
    """Slater-Condon <x|H|y>; 0 across particle-number sectors."""
    if bin(x).count("1") != bin(y).count("1"):
        return 0.0
    diff = x ^ y
    nd = bin(diff).count("1")
    if nd > 4:
        return 0.0

    if nd == 0:
        occ = _occupied(x)
        e = core
        for b in occ:
            e += h[b >> 1, b >> 1]
        for i, b in enumerate(occ):
            p, sp = b >> 1, b & 1
            for c in occ[i + 1:]:
                q = c >> 1
                e += g[p, p, q, q]
                if sp == (c & 1):
                    e -= g[p, q, q, p]
        return e

    if nd == 2:
        hole = (y & diff).bit_length() - 1
        part = (x & diff).bit_length() - 1
        if (hole & 1) != (part & 1):
            return 0.0
        p, q = part >> 1, hole >> 1
        sp = hole & 1
        e = h[p, q]
        for b in _occupied(y & ~(1 << hole)):
            r = b >> 1
            e += g[p, q, r, r]
            if (b & 1) == sp:
                e -= g[p, r, r, q]
        return _phase(y, hole, part) * e

    holes = _occupied(y & diff)
    parts = _occupied(x & diff)
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
    return ph * _phase(y1, j, b) * e


def sc_matrix(dets, n_orb, h, g, core):
    """Dense symmetric subspace Hamiltonian over `dets` (uint64 array)."""
    dets = [int(d) for d in dets]
    r = len(dets)
    m = np.empty((r, r))
    for i in range(r):
        for j in range(i, r):
            m[i, j] = m[j, i] = _sc_pair(dets[i], dets[j], h, g, core)
    return m


def sc_block(bras, kets, n_orb, h, g, core):
    """Rectangular block of <bra|H|ket> values."""
    bras = [int(d) for d in bras]
    kets = [int(d) for d in kets]
    m = np.empty((len(bras), len(kets)))
    for i, x in enumerate(bras):
        for j, y in enumerate(kets):
            m[i, j] = _sc_pair(x, y, h, g, core)
    return m


def apply_1q(amps, n_qubits, qubit, m00, m01, m10, m11):
    """In-place 2x2 gate on `qubit` of a dense statevector."""
    block = 1 << qubit
    view = amps.reshape(-1, 2, block)
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = m00 * a0 + m01 * a1
    view[:, 1, :] = m10 * a0 + m11 * a1


def apply_cnot(amps, n_qubits, control, target):
    idx = np.arange(amps.size)
    sel = idx[((idx >> control) & 1 == 1) & ((idx >> target) & 1 == 0)]
    flip = sel | (1 << target)
    amps[sel], amps[flip] = amps[flip], amps[sel].copy()


def apply_cz(amps, n_qubits, q1, q2):
    idx = np.arange(amps.size)
    both = ((idx >> q1) & 1 == 1) & ((idx >> q2) & 1 == 1)
    amps[both] *= -1.0


def apply_givens(amps, n_qubits, q1, q2, theta):
    """Real rotation in the span of |..q1=1,q2=0..> and |..q1=0,q2=1..>;
    the |00> and |11> states are untouched (number-conserving)."""
    idx = np.arange(amps.size)
    s1 = idx[((idx >> q1) & 1 == 1) & ((idx >> q2) & 1 == 0)]
    s2 = s1 ^ ((1 << q1) | (1 << q2))
    c, s = np.cos(theta), np.sin(theta)
    a1 = amps[s1].copy()
    a2 = amps[s2]
    amps[s1] = c * a1 - s * a2
    amps[s2] = s * a1 + c * a2
