"""Conditional-independence residuals along a path of joints.

Classical part: p_t = (1 - t) * p_CI + t * p_dep, where p_CI = p(c)p(a|c)p(b|c)
and p_dep is a random joint; prints the residual of every CI variant for
each t. Quantum part: a state whose CI2 conditionals do not commute, with
CI2_L and CI2_R residuals reported separately.

Usage: python3 scripts/ci_landscape.py [--seed 0] [--steps 6]
"""
from __future__ import annotations

import argparse

import numpy as np

from frobayes import bayes as B
from frobayes.diagram import ObjectRef
from frobayes.models import CdoBackend, ClassicalBackend


def density(rng, n):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    r = x @ x.conj().T
    return r / np.trace(r).real


def main() -> None:
    ap = argparse.ArgumentParser(description="CI residual landscape")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--steps", type=int, default=6)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    objs = [ObjectRef(n, "classical", 2) for n in "ABC"]
    pc = rng.dirichlet(np.ones(2))
    p_ci = np.einsum("c,ca,cb->abc", pc, rng.dirichlet(np.ones(2), 2), rng.dirichlet(np.ones(2), 2)).ravel()
    p_dep = rng.dirichlet(np.ones(8))
    std = ClassicalBackend()
    print("t      " + "  ".join(f"{v:>8}" for v in B.CI_VARIANTS))
    for t in np.linspace(0, 1, args.steps):
        s = B.from_probabilities(std, objs, (1 - t) * p_ci + t * p_dep)
        rs = [B.ci_test(s, ["A"], ["B"], ["C"], v).residual for v in B.CI_VARIANTS]
        print(f"{t:.2f}   " + "  ".join(f"{r:8.1e}" for r in rs))

    cdo = CdoBackend()
    rac = density(rng, 4).reshape(2, 2, 2, 2)
    rcb = density(rng, 4).reshape(2, 2, 2, 2)
    rho = np.einsum("xyuv,zwst->xwyzutvs", rac, rcb).reshape(16, 16)
    q = [ObjectRef("A", "quantum", 2), ObjectRef("B", "quantum", 2), ObjectRef("C", "quantum", 4)]
    s = B.make_joint(cdo, q, rho)
    print("\nquantum state rho_(A C_L) (x) rho_(C_R B), C = C_L (x) C_R:")
    for v in B.CI_VARIANTS:
        r = B.ci_test(s, ["A"], ["B"], ["C"], v)
        print(f"  {v:>6}: residual {r.residual:.2e}  holds {r.holds}")


if __name__ == "__main__":
    main()
