"""Generate the packaged H2 bond-length coefficient table.

Substitute data: minimal-basis (STO-3G) H2 with full CI in the two-electron
closed-shell space, embedded into a 4-term two-qubit Hamiltonian

    H = offset*II + c_xx*XX + c_zz*ZZ + c_iz*IZ + c_zi*ZI

by mapping the two closed-shell determinants |gg>, |uu> onto |00>, |11>.
The embedding places the open-shell block well above the ground state, so
exact diagonalization of the 4x4 matrix recovers the FCI ground energy.

Usage: python tools/gen_h2_table.py [out.csv]
"""

import csv
import math
import sys

import numpy as np

ANGSTROM_TO_BOHR = 1.8897259886

# STO-3G hydrogen 1s: exponents (zeta = 1.24 scaled) and contraction coeffs
ALPHA = np.array([3.42525091, 0.62391373, 0.16885540])
COEF = np.array([0.15432897, 0.53532814, 0.44463454])


def boys0(t):
    if t < 1e-12:
        return 1.0
    return 0.5 * math.sqrt(math.pi / t) * math.erf(math.sqrt(t))


def h2_ci_matrix(r_bohr):
    """Return (H11, H22, K): diagonal CI energies of |gg>, |uu> (including
    nuclear repulsion) and their coupling, in Hartree."""
    centers = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, r_bohr]])
    nprim = len(ALPHA)
    # contracted, normalized primitive lists per AO
    prims = []
    for c in centers:
        prims.append([(a, d * (2.0 * a / math.pi) ** 0.75, c) for a, d in zip(ALPHA, COEF)])

    def dist2(x, y):
        return float(np.sum((x - y) ** 2))

    s = np.zeros((2, 2))
    t = np.zeros((2, 2))
    v = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            for a, da, ra in prims[i]:
                for b, db, rb in prims[j]:
                    p = a + b
                    mu = a * b / p
                    rab2 = dist2(ra, rb)
                    ovl = (math.pi / p) ** 1.5 * math.exp(-mu * rab2)
                    s[i, j] += da * db * ovl
                    t[i, j] += da * db * mu * (3.0 - 2.0 * mu * rab2) * ovl
                    rp = (a * ra + b * rb) / p
                    for rc in centers:
                        v[i, j] += (
                            da * db
                            * (-2.0 * math.pi / p)
                            * math.exp(-mu * rab2)
                            * boys0(p * dist2(rp, rc))
                        )

    eri = np.zeros((2, 2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    tot = 0.0
                    for a, da, ra in prims[i]:
                        for b, db, rb in prims[j]:
                            for c, dc, rc in prims[k]:
                                for d, dd, rd in prims[l]:
                                    p, q = a + b, c + d
                                    rp = (a * ra + b * rb) / p
                                    rq = (c * rc + d * rd) / q
                                    pref = (
                                        2.0 * math.pi**2.5
                                        / (p * q * math.sqrt(p + q))
                                    )
                                    tot += (
                                        da * db * dc * dd
                                        * pref
                                        * math.exp(
                                            -a * b / p * dist2(ra, rb)
                                            - c * d / q * dist2(rc, rd)
                                        )
                                        * boys0(p * q / (p + q) * dist2(rp, rq))
                                    )
                    eri[i, j, k, l] = tot

    h_core = t + v
    # symmetry-adapted MOs of the homonuclear dimer
    cmat = np.array(
        [
            [1.0 / math.sqrt(2.0 * (1.0 + s[0, 1])), 1.0 / math.sqrt(2.0 * (1.0 - s[0, 1]))],
            [1.0 / math.sqrt(2.0 * (1.0 + s[0, 1])), -1.0 / math.sqrt(2.0 * (1.0 - s[0, 1]))],
        ]
    )
    h_mo = cmat.T @ h_core @ cmat
    eri_mo = np.einsum("pi,qj,rk,sl,pqrs->ijkl", cmat, cmat, cmat, cmat, eri)

    e_nuc = 1.0 / r_bohr
    h11 = 2.0 * h_mo[0, 0] + eri_mo[0, 0, 0, 0] + e_nuc
    h22 = 2.0 * h_mo[1, 1] + eri_mo[1, 1, 1, 1] + e_nuc
    k = eri_mo[0, 1, 0, 1]
    return h11, h22, k


def embed(h11, h22, k):
    # diag(|00>) = offset + c_zz + c_iz + c_zi = h11
    # diag(|11>) = offset + c_zz - c_iz - c_zi = h22
    # <11|H|00>  = c_xx = k
    # spectator levels (|01>, |10>) sit at (offset - c_zz) +- k; placing them
    # 0.25 Ha above the closed-shell mean keeps the ground state physical
    # (mean - sqrt(delta^2 + k^2) < mean + 0.25 - k always) while keeping the
    # coefficients small, so sampling noise is not amplified
    mid = (h11 + h22) / 2.0
    spectator = mid + 0.25
    offset = (mid + spectator) / 2.0
    c_zz = (mid - spectator) / 2.0
    c_iz = c_zi = (h11 - h22) / 4.0
    return dict(c_xx=k, c_zz=c_zz, c_iz=c_iz, c_zi=c_zi, offset=offset)


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "src/qemlab/data/h2_sto3g.csv"
    bonds = [0.3, 0.4, 0.5, 0.6, 0.735, 0.9, 1.1, 1.3, 1.5, 1.75, 2.0, 2.5]
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bond_length", "c_xx", "c_zz", "c_iz", "c_zi", "offset"])
        for r_ang in bonds:
            h11, h22, k = h2_ci_matrix(r_ang * ANGSTROM_TO_BOHR)
            row = embed(h11, h22, k)
            ground = (h11 + h22) / 2 - math.sqrt(((h11 - h22) / 2) ** 2 + k * k)
            w.writerow(
                [r_ang]
                + [repr(float(row[c])) for c in ("c_xx", "c_zz", "c_iz", "c_zi", "offset")]
            )
            print(f"R={r_ang:5.3f} A  E_scf={h11:+.6f}  E_fci={ground:+.6f}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
