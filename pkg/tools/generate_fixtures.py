#!/usr/bin/env python3
"""Generate the FCIDUMP fixtures and reference energies used by the test suite.

Self-contained STO-3G restricted Hartree-Fock plus a brute-force ladder-operator
full CI. Nothing here is imported by the package; the package's own matrix
element code is tested *against* the numbers this script produces, so this
script deliberately avoids Slater-Condon shortcuts (every matrix element comes
from explicit second-quantized operator application on bit masks).

Run from the repository root:

    python3 tools/generate_fixtures.py

Writes fixtures/*.fcidump and fixtures/oracle.json.
"""

import itertools
import json
import math
import os
import sys

import numpy as np
from scipy.special import hyp1f1

ANGSTROM_TO_BOHR = 1.0 / 0.529177210903

# STO-3G: universal three-Gaussian fits, scaled per element. Exponents below
# are the usual published values (fit exponent times zeta**2).
STO3G = {
    "H": {
        "Z": 1,
        "shells": [
            ("S", [3.42525091, 0.62391373, 0.16885540],
             {"S": [0.15432897, 0.53532814, 0.44463454]}),
        ],
    },
    "Li": {
        "Z": 3,
        "shells": [
            ("S", [16.1195750, 2.9362007, 0.7946505],
             {"S": [0.15432897, 0.53532814, 0.44463454]}),
            ("SP", [0.6362897, 0.1478601, 0.0480887],
             {"S": [-0.09996723, 0.39951283, 0.70011547],
              "P": [0.15591627, 0.60768372, 0.39195739]}),
        ],
    },
    "O": {
        "Z": 8,
        "shells": [
            ("S", [130.7093200, 23.8088610, 6.4436083],
             {"S": [0.15432897, 0.53532814, 0.44463454]}),
            ("SP", [5.0331513, 1.1695961, 0.3803890],
             {"S": [-0.09996723, 0.39951283, 0.70011547],
              "P": [0.15591627, 0.60768372, 0.39195739]}),
        ],
    },
}


def double_factorial(n):
    return 1 if n <= 1 else n * double_factorial(n - 2)


def primitive_norm(alpha, l, m, n):
    L = l + m + n
    num = (2.0 * alpha / math.pi) ** 0.75 * (4.0 * alpha) ** (L / 2.0)
    den = math.sqrt(double_factorial(2 * l - 1) * double_factorial(2 * m - 1)
                    * double_factorial(2 * n - 1))
    return num / den


class Basis:
    """Contracted Cartesian Gaussians for a molecule: lists of
    (center, (l,m,n), exponents, contraction coefficients)."""

    def __init__(self, geometry):
        # geometry: list of (symbol, xyz in bohr)
        self.functions = []
        self.charges = []
        self.centers = []
        for sym, xyz in geometry:
            el = STO3G[sym]
            self.charges.append(el["Z"])
            self.centers.append(np.asarray(xyz, dtype=float))
            for kind, exps, coeffs in el["shells"]:
                if "S" in coeffs:
                    self._add(xyz, (0, 0, 0), exps, coeffs["S"])
                if kind == "SP":
                    for lmn in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                        self._add(xyz, lmn, exps, coeffs["P"])

    def _add(self, xyz, lmn, exps, coeffs):
        exps = np.asarray(exps, dtype=float)
        coeffs = np.asarray(coeffs, dtype=float)
        norms = np.array([primitive_norm(a, *lmn) for a in exps])
        c = coeffs * norms
        # renormalize the contracted function
        s = 0.0
        for i in range(len(exps)):
            for j in range(len(exps)):
                s += c[i] * c[j] * overlap_prim(exps[i], lmn, xyz,
                                                exps[j], lmn, xyz)
        self.functions.append((np.asarray(xyz, dtype=float), lmn, exps,
                               c / math.sqrt(s)))

    def __len__(self):
        return len(self.functions)

    def nuclear_repulsion(self):
        e = 0.0
        for i in range(len(self.charges)):
            for j in range(i + 1, len(self.charges)):
                r = np.linalg.norm(self.centers[i] - self.centers[j])
                e += self.charges[i] * self.charges[j] / r
        return e


def hermite_expansion(i, j, t, Qx, a, b):
    """McMurchie-Davidson E_t^{ij} for a 1D Gaussian product."""
    p = a + b
    mu = a * b / p
    if t < 0 or t > i + j:
        return 0.0
    if i == j == t == 0:
        return math.exp(-mu * Qx * Qx)
    if j == 0:
        return (hermite_expansion(i - 1, j, t - 1, Qx, a, b) / (2 * p)
                - mu * Qx / a * hermite_expansion(i - 1, j, t, Qx, a, b)
                + (t + 1) * hermite_expansion(i - 1, j, t + 1, Qx, a, b))
    return (hermite_expansion(i, j - 1, t - 1, Qx, a, b) / (2 * p)
            + mu * Qx / b * hermite_expansion(i, j - 1, t, Qx, a, b)
            + (t + 1) * hermite_expansion(i, j - 1, t + 1, Qx, a, b))


def overlap_prim(a, lmn1, A, b, lmn2, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    p = a + b
    s = (math.pi / p) ** 1.5
    for k in range(3):
        s *= hermite_expansion(lmn1[k], lmn2[k], 0, A[k] - B[k], a, b)
    return s


def kinetic_prim(a, lmn1, A, b, lmn2, B):
    l2, m2, n2 = lmn2

    def term(dl, dm, dn, fac):
        lmn = (l2 + dl, m2 + dm, n2 + dn)
        if min(lmn) < 0:
            return 0.0
        return fac * overlap_prim(a, lmn1, A, b, lmn, B)

    t = b * (2 * (l2 + m2 + n2) + 3) * overlap_prim(a, lmn1, A, b, lmn2, B)
    t += -2.0 * b * b * (term(2, 0, 0, 1.0) + term(0, 2, 0, 1.0)
                         + term(0, 0, 2, 1.0))
    t += -0.5 * (l2 * (l2 - 1) * term(-2, 0, 0, 1.0)
                 + m2 * (m2 - 1) * term(0, -2, 0, 1.0)
                 + n2 * (n2 - 1) * term(0, 0, -2, 1.0))
    return t


def boys(m, T):
    return hyp1f1(m + 0.5, m + 1.5, -T) / (2.0 * m + 1.0)


def hermite_coulomb(t, u, v, n, p, PC):
    """R^n_{tuv} auxiliary integrals."""
    if t < 0 or u < 0 or v < 0:
        return 0.0
    if t == u == v == 0:
        T = p * float(np.dot(PC, PC))
        return (-2.0 * p) ** n * boys(n, T)
    if t > 0:
        return ((t - 1) * hermite_coulomb(t - 2, u, v, n + 1, p, PC)
                + PC[0] * hermite_coulomb(t - 1, u, v, n + 1, p, PC))
    if u > 0:
        return ((u - 1) * hermite_coulomb(t, u - 2, v, n + 1, p, PC)
                + PC[1] * hermite_coulomb(t, u - 1, v, n + 1, p, PC))
    return ((v - 1) * hermite_coulomb(t, u, v - 2, n + 1, p, PC)
            + PC[2] * hermite_coulomb(t, u, v - 1, n + 1, p, PC))


def nuclear_prim(a, lmn1, A, b, lmn2, B, C):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    p = a + b
    P = (a * A + b * B) / p
    val = 0.0
    for t in range(lmn1[0] + lmn2[0] + 1):
        for u in range(lmn1[1] + lmn2[1] + 1):
            for v in range(lmn1[2] + lmn2[2] + 1):
                e = (hermite_expansion(lmn1[0], lmn2[0], t, A[0] - B[0], a, b)
                     * hermite_expansion(lmn1[1], lmn2[1], u, A[1] - B[1], a, b)
                     * hermite_expansion(lmn1[2], lmn2[2], v, A[2] - B[2], a, b))
                if e != 0.0:
                    val += e * hermite_coulomb(t, u, v, 0, p, P - C)
    return 2.0 * math.pi / p * val


def eri_prim(a, lmn1, A, b, lmn2, B, c, lmn3, C, d, lmn4, D):
    A, B, C, D = (np.asarray(x, dtype=float) for x in (A, B, C, D))
    p = a + b
    q = c + d
    alpha = p * q / (p + q)
    P = (a * A + b * B) / p
    Q = (c * C + d * D) / q
    E1 = [[hermite_expansion(lmn1[k], lmn2[k], t, A[k] - B[k], a, b)
           for t in range(lmn1[k] + lmn2[k] + 1)] for k in range(3)]
    E2 = [[hermite_expansion(lmn3[k], lmn4[k], t, C[k] - D[k], c, d)
           for t in range(lmn3[k] + lmn4[k] + 1)] for k in range(3)]
    val = 0.0
    for t in range(len(E1[0])):
        for u in range(len(E1[1])):
            for v in range(len(E1[2])):
                e1 = E1[0][t] * E1[1][u] * E1[2][v]
                if e1 == 0.0:
                    continue
                for tt in range(len(E2[0])):
                    for uu in range(len(E2[1])):
                        for vv in range(len(E2[2])):
                            e2 = E2[0][tt] * E2[1][uu] * E2[2][vv]
                            if e2 == 0.0:
                                continue
                            val += (e1 * e2 * (-1.0) ** (tt + uu + vv)
                                    * hermite_coulomb(t + tt, u + uu, v + vv,
                                                      0, alpha, P - Q))
    return val * 2.0 * math.pi ** 2.5 / (p * q * math.sqrt(p + q))


def contracted(prim_func, *funcs):
    """Contract a primitive integral over 2 or 4 basis functions."""
    total = 0.0
    idx = [range(len(f[2])) for f in funcs]
    for combo in itertools.product(*idx):
        coeff = 1.0
        args = []
        for (center, lmn, exps, c), k in zip(funcs, combo):
            coeff *= c[k]
            args.extend([exps[k], lmn, center])
        total += coeff * prim_func(*args)
    return total


def ao_integrals(basis):
    n = len(basis)
    S = np.zeros((n, n))
    T = np.zeros((n, n))
    V = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            S[i, j] = S[j, i] = contracted(overlap_prim, basis.functions[i],
                                           basis.functions[j])
            T[i, j] = T[j, i] = contracted(kinetic_prim, basis.functions[i],
                                           basis.functions[j])
            v = 0.0
            for Z, C in zip(basis.charges, basis.centers):
                v -= Z * contracted(
                    lambda a, l1, A, b, l2, B: nuclear_prim(a, l1, A, b, l2, B, C),
                    basis.functions[i], basis.functions[j])
            V[i, j] = V[j, i] = v

    eri = np.zeros((n, n, n, n))
    done = set()
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    key = unique_eri_key(i, j, k, l)
                    if key in done:
                        continue
                    done.add(key)
                    val = contracted(eri_prim, basis.functions[i],
                                     basis.functions[j], basis.functions[k],
                                     basis.functions[l])
                    for (a, b, c, d) in eightfold(i, j, k, l):
                        eri[a, b, c, d] = val
    return S, T, V, eri


def eightfold(i, j, k, l):
    return {(i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
            (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i)}


def unique_eri_key(i, j, k, l):
    ij = (max(i, j), min(i, j))
    kl = (max(k, l), min(k, l))
    return (max(ij, kl), min(ij, kl))


def rhf(S, Hcore, eri, n_elec, e_nuc, max_iter=200, tol=1e-12):
    n = S.shape[0]
    n_occ = n_elec // 2
    w, U = np.linalg.eigh(S)
    X = U @ np.diag(1.0 / np.sqrt(w)) @ U.T
    D = np.zeros((n, n))
    F = Hcore.copy()
    e_old = 0.0
    diis_F, diis_err = [], []
    for it in range(max_iter):
        if diis_F:
            B = np.empty((len(diis_F) + 1, len(diis_F) + 1))
            B[-1, :] = B[:, -1] = -1.0
            B[-1, -1] = 0.0
            for a in range(len(diis_F)):
                for b in range(len(diis_F)):
                    B[a, b] = np.vdot(diis_err[a], diis_err[b])
            rhs = np.zeros(len(diis_F) + 1)
            rhs[-1] = -1.0
            try:
                c = np.linalg.solve(B, rhs)[:-1]
                F = sum(ci * Fi for ci, Fi in zip(c, diis_F))
            except np.linalg.LinAlgError:
                pass
        Fp = X.T @ F @ X
        eps, Cp = np.linalg.eigh(Fp)
        C = X @ Cp
        Cocc = C[:, :n_occ]
        D = 2.0 * Cocc @ Cocc.T
        J = np.einsum("pqrs,rs->pq", eri, D)
        K = np.einsum("prqs,rs->pq", eri, D)
        F = Hcore + J - 0.5 * K
        e = 0.5 * np.sum(D * (Hcore + F)) + e_nuc
        err = X.T @ (F @ D @ S - S @ D @ F) @ X
        diis_F.append(F.copy())
        diis_err.append(err.copy())
        if len(diis_F) > 8:
            diis_F.pop(0)
            diis_err.pop(0)
        if abs(e - e_old) < tol and np.max(np.abs(err)) < 1e-9:
            return e, C, eps
        e_old = e
    raise RuntimeError("SCF did not converge")


def fix_mo_signs(C):
    # deterministic phase: first AO coefficient within a factor 2 of the
    # column max is made positive. argmax alone is unstable for symmetric
    # molecules where coefficients of equal magnitude trade places under
    # small geometry changes.
    C = C.copy()
    for j in range(C.shape[1]):
        col = np.abs(C[:, j])
        i = int(np.argmax(col >= 0.5 * col.max()))
        if C[i, j] < 0:
            C[:, j] = -C[:, j]
    return C


def mo_transform(Hcore, eri, C):
    h = C.T @ Hcore @ C
    g = np.einsum("pqrs,pi,qj,rk,sl->ijkl", eri, C, C, C, C, optimize=True)
    return h, g


def write_fcidump(path, h, g, e_nuc, n_elec, ms2):
    n = h.shape[0]
    lines = [f" &FCI NORB={n},NELEC={n_elec},MS2={ms2},"]
    lines.append("  ORBSYM=" + "1," * n)
    lines.append("  ISYM=1,")
    lines.append(" &END")
    done = set()
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    key = unique_eri_key(i, j, k, l)
                    if key in done:
                        continue
                    done.add(key)
                    if abs(g[i, j, k, l]) > 1e-14:
                        lines.append(f" {g[i, j, k, l]:23.16E} {i + 1:3d} "
                                     f"{j + 1:3d} {k + 1:3d} {l + 1:3d}")
    for i in range(n):
        for j in range(i + 1):
            if abs(h[i, j]) > 1e-14:
                lines.append(f" {h[i, j]:23.16E} {i + 1:3d} {j + 1:3d}   0   0")
    lines.append(f" {e_nuc:23.16E}   0   0   0   0")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Brute-force CI by explicit ladder-operator application. Spin orbital 2p is
# the alpha of spatial orbital p, 2p+1 the beta. A determinant is an int whose
# bit b flags spin orbital b; strings of creation operators are ordered by
# ascending index.
# ---------------------------------------------------------------------------

def annihilate(det, b):
    if not (det >> b) & 1:
        return None, 0
    sign = -1 if bin(det & ((1 << b) - 1)).count("1") % 2 else 1
    return det & ~(1 << b), sign


def create(det, b):
    if (det >> b) & 1:
        return None, 0
    sign = -1 if bin(det & ((1 << b) - 1)).count("1") % 2 else 1
    return det | (1 << b), sign


def apply_h_to_det(det, h, g, n_orb):
    """Return {det': amplitude} for H |det>, H in chemists' notation."""
    out = {}

    def add(d, amp):
        if d is not None and amp != 0.0:
            out[d] = out.get(d, 0.0) + amp

    for p in range(n_orb):
        for q in range(n_orb):
            if h[p, q] == 0.0:
                continue
            for s in (0, 1):
                d1, s1 = annihilate(det, 2 * q + s)
                if d1 is None:
                    continue
                d2, s2 = create(d1, 2 * p + s)
                if d2 is None:
                    continue
                add(d2, s1 * s2 * h[p, q])
    for p in range(n_orb):
        for q in range(n_orb):
            for r in range(n_orb):
                for s_ in range(n_orb):
                    val = g[p, q, r, s_]
                    if val == 0.0:
                        continue
                    for sig in (0, 1):
                        d1, ph1 = annihilate(det, 2 * q + sig)
                        if d1 is None:
                            continue
                        for tau in (0, 1):
                            d2, ph2 = annihilate(d1, 2 * s_ + tau)
                            if d2 is None:
                                continue
                            d3, ph3 = create(d2, 2 * r + tau)
                            if d3 is None:
                                continue
                            d4, ph4 = create(d3, 2 * p + sig)
                            if d4 is None:
                                continue
                            add(d4, 0.5 * ph1 * ph2 * ph3 * ph4 * val)
    return out


def sector_determinants(n_orb, n_alpha, n_beta):
    dets = []
    for occ_a in itertools.combinations(range(n_orb), n_alpha):
        for occ_b in itertools.combinations(range(n_orb), n_beta):
            d = 0
            for p in occ_a:
                d |= 1 << (2 * p)
            for p in occ_b:
                d |= 1 << (2 * p + 1)
            dets.append(d)
    return sorted(dets)


def ci_matrix(dets, h, g, e_nuc, n_orb):
    index = {d: i for i, d in enumerate(dets)}
    H = np.zeros((len(dets), len(dets)))
    for j, d in enumerate(dets):
        for d2, amp in apply_h_to_det(d, h, g, n_orb).items():
            i = index.get(d2)
            if i is not None:
                H[i, j] += amp
    H += e_nuc * np.eye(len(dets))
    assert np.max(np.abs(H - H.T)) < 1e-10
    return H


def hf_det(n_alpha, n_beta):
    d = 0
    for p in range(n_alpha):
        d |= 1 << (2 * p)
    for p in range(n_beta):
        d |= 1 << (2 * p + 1)
    return d


def excitation_degree(a, b):
    return bin(a ^ b).count("1") // 2


def h_chain(n, spacing=1.0):
    return [("H", np.array([0.0, 0.0, i * spacing]) * ANGSTROM_TO_BOHR)
            for i in range(n)]


def run_molecule(name, geometry, n_elec, out_dir, cisd_reference=False,
                 active=None, n_states=6):
    print(f"--- {name}")
    basis = Basis(geometry)
    e_nuc = basis.nuclear_repulsion()
    S, T, V, eri = ao_integrals(basis)
    e_scf, C, eps = rhf(S, T + V, eri, n_elec, e_nuc)
    C = fix_mo_signs(C)
    h, g = mo_transform(T + V, eri, C)
    n_orb = h.shape[0]
    path = os.path.join(out_dir, f"{name}.fcidump")
    write_fcidump(path, h, g, e_nuc, n_elec, 0)
    print(f"    n_orb={n_orb}  E_SCF={e_scf:.10f}")

    na = nb = n_elec // 2
    dets = sector_determinants(n_orb, na, nb)
    H = ci_matrix(dets, h, g, e_nuc, n_orb)
    evals, evecs = np.linalg.eigh(H)
    hf = hf_det(na, nb)
    e_hf_diag = H[dets.index(hf), dets.index(hf)]
    assert abs(e_hf_diag - e_scf) < 1e-8, (e_hf_diag, e_scf)
    print(f"    sector dim={len(dets)}  E_FCI={evals[0]:.10f}  "
          f"corr={evals[0] - e_scf:.6f}")

    rec = {
        "fcidump": os.path.basename(path),
        "n_orbitals": n_orb,
        "n_electrons": n_elec,
        "ms2": 0,
        "scf_energy": e_scf,
        "hf_matrix_element": e_hf_diag,
        "sector_dimension": len(dets),
        "fci_energy": evals[0],
        "fci_spectrum": evals[:n_states].tolist(),
    }

    if cisd_reference:
        keep = [i for i, d in enumerate(dets) if excitation_degree(hf, d) <= 2]
        Hc = H[np.ix_(keep, keep)]
        ec = np.linalg.eigh(Hc)[0]
        rec["cisd_dimension"] = len(keep)
        rec["cisd_energy"] = float(ec[0])
        print(f"    CISD dim={len(keep)}  E_CISD={ec[0]:.10f}")

    if active is not None:
        frozen, act = active
        # CASCI with frozen doubly-occupied orbitals, evaluated as a
        # restriction of the full-space CI matrix (no effective integrals)
        mask = 0
        for p in frozen:
            mask |= 3 << (2 * p)
        keep = [i for i, d in enumerate(dets)
                if (d & mask) == mask
                and all(((d >> (2 * p)) & 3) == 0
                        for p in range(n_orb) if p not in frozen + act)]
        Hc = H[np.ix_(keep, keep)]
        ec = np.linalg.eigh(Hc)[0]
        rec["casci"] = {
            "frozen": frozen,
            "active": act,
            "dimension": len(keep),
            "energies": ec[:n_states].tolist(),
        }
        print(f"    CASCI({len(act)}o) dim={len(keep)}  E0={ec[0]:.10f}")

    data = {"h": h, "g": g, "e_nuc": e_nuc, "n_orb": n_orb, "dets": dets,
            "evals": evals, "evecs": evecs}
    return rec, data


def main():
    out_dir = os.path.join(os.path.dirname(__file__), "..", "fixtures")
    os.makedirs(out_dir, exist_ok=True)
    oracle = {}

    oracle["H2"], _ = run_molecule("H2", h_chain(2), 2, out_dir)
    oracle["H4"], h4 = run_molecule("H4", h_chain(4), 4, out_dir,
                                    cisd_reference=True)
    oracle["H4_s0.99"], h4m = run_molecule("H4_s0.99", h_chain(4, 0.99), 4,
                                           out_dir)
    oracle["H4_s1.01"], h4p = run_molecule("H4_s1.01", h_chain(4, 1.01), 4,
                                           out_dir)
    oracle["H6"], _ = run_molecule("H6", h_chain(6), 6, out_dir)
    oracle["LiH"], _ = run_molecule(
        "LiH",
        [("Li", np.zeros(3)),
         ("H", np.array([0.0, 0.0, 1.595]) * ANGSTROM_TO_BOHR)],
        4, out_dir)
    oracle["H2O"], _ = run_molecule(
        "H2O",
        [("O", np.zeros(3)),
         ("H", np.array([0.2774, 0.8929, 0.2544]) * ANGSTROM_TO_BOHR),
         ("H", np.array([0.6068, -0.2383, -0.7169]) * ANGSTROM_TO_BOHR)],
        10, out_dir,
        active=([0, 1], [2, 3, 4, 5, 6]))

    # Central-difference derivative of the H4 Hamiltonian with respect to the
    # chain spacing (per angstrom), exported as its own integrals file. MO
    # phases are sign-fixed above so the elementwise difference is smooth.
    delta = 0.01
    dh = (h4p["h"] - h4m["h"]) / (2 * delta)
    dg = (h4p["g"] - h4m["g"]) / (2 * delta)
    dnuc = (h4p["e_nuc"] - h4m["e_nuc"]) / (2 * delta)
    write_fcidump(os.path.join(out_dir, "H4_deriv.fcidump"), dh, dg, dnuc, 4, 0)
    dH = ci_matrix(h4["dets"], dh, dg, dnuc, h4["n_orb"])
    v0 = h4["evecs"][:, 0]
    oracle["H4_deriv"] = {
        "fcidump": "H4_deriv.fcidump",
        "n_orbitals": h4["n_orb"],
        "n_electrons": 4,
        "ms2": 0,
        "delta_angstrom": delta,
        "fci_ground_expectation": float(v0 @ dH @ v0),
        "fd_energy_derivative": float(
            (h4p["evals"][0] - h4m["evals"][0]) / (2 * delta)),
    }
    print("H4_deriv: <dH> =", oracle["H4_deriv"]["fci_ground_expectation"],
          " FD dE =", oracle["H4_deriv"]["fd_energy_derivative"])

    with open(os.path.join(out_dir, "oracle.json"), "w") as f:
        json.dump(oracle, f, indent=2)
    print("wrote", os.path.join(out_dir, "oracle.json"))


if __name__ == "__main__":
    sys.setrecursionlimit(10000)
    main()
