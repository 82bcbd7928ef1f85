# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: Slater-Condon subspace matrices and statevector gates."""

import numpy as np

BACKEND = "cython"

cdef extern from *:
    """
    static inline int popcount64(unsigned long long x)
    { return __builtin_popcountll(x); }
    """
    int popcount64(unsigned long long x) nogil

ctypedef unsigned long long u64


cdef inline double _phase(u64 det, int b1, int b2) nogil:
    cdef int lo = b1 if b1 < b2 else b2
    cdef int hi = b1 if b1 > b2 else b2
    cdef u64 mask = ((<u64>1 << hi) - 1) & ~((<u64>1 << (lo + 1)) - 1)
    return -1.0 if popcount64(det & mask) & 1 else 1.0


cdef inline int _occ_list(u64 d, int* out) nogil:
    cdef int n = 0, b = 0
    while d:
        if d & 1:
            out[n] = b
            n += 1
        d >>= 1
        b += 1
    return n


cdef double _sc_pair(u64 x, u64 y, double[:, ::1] h,
                     double[:, :, :, ::1] g, double core) nogil:
    cdef u64 diff, y1
    cdef int nd, i, j, a, b, p, q, r, sp, hole, part, nocc, ii, jj
    cdef int occ[64]
    cdef double e, ph

    if popcount64(x) != popcount64(y):
        return 0.0
    diff = x ^ y
    nd = popcount64(diff)
    if nd > 4:
        return 0.0

    if nd == 0:
        nocc = _occ_list(x, occ)
        e = core
        for ii in range(nocc):
            p = occ[ii] >> 1
            e += h[p, p]
        for ii in range(nocc):
            p = occ[ii] >> 1
            sp = occ[ii] & 1
            for jj in range(ii + 1, nocc):
                q = occ[jj] >> 1
                e += g[p, p, q, q]
                if sp == (occ[jj] & 1):
                    e -= g[p, q, q, p]
        return e

    if nd == 2:
        hole = 64 - 1
        while not (y & diff) >> hole & 1:
            hole -= 1
        part = 64 - 1
        while not (x & diff) >> part & 1:
            part -= 1
        if (hole & 1) != (part & 1):
            return 0.0
        p = part >> 1
        q = hole >> 1
        sp = hole & 1
        e = h[p, q]
        nocc = _occ_list(y & ~(<u64>1 << hole), occ)
        for ii in range(nocc):
            r = occ[ii] >> 1
            e += g[p, q, r, r]
            if (occ[ii] & 1) == sp:
                e -= g[p, r, r, q]
        return _phase(y, hole, part) * e

    nocc = _occ_list(y & diff, occ)
    i = occ[0]
    j = occ[1]
    nocc = _occ_list(x & diff, occ)
    a = occ[0]
    b = occ[1]
    e = 0.0
    if (i & 1) == (a & 1) and (j & 1) == (b & 1):
        e += g[a >> 1, i >> 1, b >> 1, j >> 1]
    if (i & 1) == (b & 1) and (j & 1) == (a & 1):
        e -= g[b >> 1, i >> 1, a >> 1, j >> 1]
    if e == 0.0:
        return 0.0
    ph = _phase(y, i, a)
    y1 = y ^ (<u64>1 << i) ^ (<u64>1 << a)
    return ph * _phase(y1, j, b) * e


def sc_matrix(u64[::1] dets, int n_orb, double[:, ::1] h,
              double[:, :, :, ::1] g, double core):
    """Dense symmetric subspace Hamiltonian over `dets`."""
    cdef Py_ssize_t r = dets.shape[0]
    m_arr = np.empty((r, r))
    cdef double[:, ::1] m = m_arr
    cdef Py_ssize_t i, j
    cdef double v
    with nogil:
        for i in range(r):
            for j in range(i, r):
                v = _sc_pair(dets[i], dets[j], h, g, core)
                m[i, j] = v
                m[j, i] = v
    return m_arr


def sc_block(u64[::1] bras, u64[::1] kets, int n_orb, double[:, ::1] h,
             double[:, :, :, ::1] g, double core):
    """Rectangular block of <bra|H|ket> values."""
    cdef Py_ssize_t nb = bras.shape[0], nk = kets.shape[0]
    m_arr = np.empty((nb, nk))
    cdef double[:, ::1] m = m_arr
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(nb):
            for j in range(nk):
                m[i, j] = _sc_pair(bras[i], kets[j], h, g, core)
    return m_arr


def apply_1q(double complex[::1] amps, int n_qubits, int qubit,
             double complex m00, double complex m01,
             double complex m10, double complex m11):
    cdef Py_ssize_t block = <Py_ssize_t>1 << qubit
    cdef Py_ssize_t step = block << 1
    cdef Py_ssize_t n = amps.shape[0], base, k
    cdef double complex a0, a1
    with nogil:
        base = 0
        while base < n:
            for k in range(block):
                a0 = amps[base + k]
                a1 = amps[base + block + k]
                amps[base + k] = m00 * a0 + m01 * a1
                amps[base + block + k] = m10 * a0 + m11 * a1
            base += step


def apply_cnot(double complex[::1] amps, int n_qubits, int control, int target):
    cdef Py_ssize_t n = amps.shape[0], idx, flip
    cdef double complex tmp
    with nogil:
        for idx in range(n):
            if (idx >> control) & 1 and not (idx >> target) & 1:
                flip = idx | (<Py_ssize_t>1 << target)
                tmp = amps[idx]
                amps[idx] = amps[flip]
                amps[flip] = tmp


def apply_cz(double complex[::1] amps, int n_qubits, int q1, int q2):
    cdef Py_ssize_t n = amps.shape[0], idx
    with nogil:
        for idx in range(n):
            if (idx >> q1) & 1 and (idx >> q2) & 1:
                amps[idx] = -amps[idx]


def apply_givens(double complex[::1] amps, int n_qubits, int q1, int q2,
                 double theta):
    cdef Py_ssize_t n = amps.shape[0], idx, partner
    cdef Py_ssize_t mask = (<Py_ssize_t>1 << q1) | (<Py_ssize_t>1 << q2)
    cdef double c = np.cos(theta), s = np.sin(theta)
    cdef double complex a1, a2
    with nogil:
        for idx in range(n):
            if (idx >> q1) & 1 and not (idx >> q2) & 1:
                partner = idx ^ mask
                a1 = amps[idx]
                a2 = amps[partner]
                amps[idx] = c * a1 - s * a2
                amps[partner] = s * a1 + c * a2
    return None
