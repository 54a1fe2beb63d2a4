#!/usr/bin/env python3
"""Reference g1/g2 tables from a dense Fock-space calculation.

Operators are built as Kronecker products (Jordan-Wigner strings for
fermions), independently of the Rust implementation. Output columns:

    stats state l re_g1 im_g1 g2

`state` is a bitmask (bit j = mode j occupied), the detector separation is
l * dx/2 with dk = 1, and `nan` marks undefined entries.

usage: fock_fixtures.py N [N ...] --out DIR
"""
import argparse
import os

import numpy as np

SIGMA_Z = np.diag([1.0, -1.0])
LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])
EYE = np.eye(2)


def annihilators(n, fermion):
    # Kronecker factor order is reversed so that state index bit j is mode j.
    ops = []
    for j in range(n):
        factors = []
        for m in range(n):
            if m < j:
                factors.append(-SIGMA_Z if fermion else EYE)
            elif m == j:
                factors.append(LOWER)
            else:
                factors.append(EYE)
        op = np.array([[1.0]])
        for f in reversed(factors):
            op = np.kron(op, f)
        ops.append(op.astype(complex))
    return ops


def detector(ops, x):
    n = len(ops)
    return sum(np.exp(1j * j * x) * a for j, a in enumerate(ops)) / np.sqrt(n)


def table(n, fermion):
    ops = annihilators(n, fermion)
    dx2 = np.pi / n
    rows = []
    for l in range(-n, n):
        s = l * dx2
        b1, b2 = detector(ops, -s / 2), detector(ops, s / 2)
        n1 = b1.conj().T @ b1
        n2 = b2.conj().T @ b2
        c1 = b1.conj().T @ b2
        c2 = b1.conj().T @ b2.conj().T @ b2 @ b1
        for m in range(1 << n):
            vec = np.zeros(1 << n, dtype=complex)
            vec[m] = 1.0
            d1 = np.vdot(vec, n1 @ vec).real
            d2 = np.vdot(vec, n2 @ vec).real
            atoms = bin(m).count("1")
            g1 = np.vdot(vec, c1 @ vec) / np.sqrt(d1 * d2) if atoms >= 1 else complex("nan")
            g2 = np.vdot(vec, c2 @ vec).real / (d1 * d2) if atoms >= 2 else float("nan")
            rows.append((m, l, g1.real, g1.imag, g2))
    return rows


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("sizes", type=int, nargs="+")
    parser.add_argument("--out", default=".")
    args = parser.parse_args()
    for n in args.sizes:
        path = os.path.join(args.out, f"fock_n{n}.txt")
        with open(path, "w") as fh:
            fh.write(f"# N = {n}, dk = 1, separation = l*pi/N\n")
            fh.write("# stats state l re_g1 im_g1 g2\n")
            for name, fermion in (("boson", False), ("fermion", True)):
                for m, l, re, im, g2 in table(n, fermion):
                    fh.write(f"{name} {m} {l} {re:.17e} {im:.17e} {g2:.17e}\n")
        print("wrote", path)


if __name__ == "__main__":
    main()
