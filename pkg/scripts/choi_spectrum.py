"""Spectra of the Choi matrix of the broadcasting map B(X) = (X (x) 1) SWAP.

B is not Hermiticity-preserving, so its Choi matrix J is not Hermitian. The
script prints the literal eigenvalues of J, the spectrum of its Hermitian
part (the positivity witness used by ``models.is_cp``), and the spectrum of
the Choi matrix of the symmetrized map ((X (x) 1) S + S (X (x) 1)) / 2.

Usage: python3 scripts/choi_spectrum.py [--dims 2 3 4]
"""
from __future__ import annotations

import argparse

import numpy as np

from frobayes.models import broadcasting_map, choi, is_cp


def swap_matrix(d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1
    return s


def fmt(vals) -> str:
    return " ".join(f"{v:+.3f}" for v in vals)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4])
    args = ap.parse_args()
    for d in args.dims:
        b = broadcasting_map(d)
        j = choi(b, d, d * d)
        rep = is_cp(b, d, d * d)
        lit = np.sort_complex(np.round(np.linalg.eigvals(j), 12))
        herm = np.linalg.eigvalsh((j + j.conj().T) / 2)
        s = swap_matrix(d)
        js = choi((b + np.kron(s, s) @ b) / 2, d, d * d)
        print(f"d={d}: Choi {j.shape[0]}x{j.shape[1]}, non-Hermitian by {rep.hermitian_residual:.2f}, CP: {rep.is_cp}")
        print(f"  literal eigenvalues (real parts): {fmt(lit.real)}")
        print(f"  Hermitian part:                   {fmt(herm)}")
        print(f"  symmetrized map:                  {fmt(np.linalg.eigvalsh(js))}")


if __name__ == "__main__":
    main()
