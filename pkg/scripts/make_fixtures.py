"""Regenerate the model and term fixtures under fixtures/.

Usage: python3 scripts/make_fixtures.py [outdir]
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from frobayes.diagram import ObjectRef, Signature
from frobayes.dsl import HEADER, BoxSpec, dump_model


def objs(kind, **dims):
    return tuple(ObjectRef(n, kind, d) for n, d in dims.items())


def classical(out: Path) -> None:
    A, B = objs("classical", A=2, B=2)
    boxes = [BoxSpec("pA", "state", "joint", (A,)), BoxSpec("pB", "state", "joint", (B,)),
             BoxSpec("cAB", "conditional", "joint", (A,), (B,)), BoxSpec("PAgB", "process", "joint", (A,), (B,))]
    sig = Signature((A, B))
    (out / "joint2x2.fbm").write_text(dump_model(sig, {"joint": (("A", "B"), np.array([0.1, 0.2, 0.3, 0.4]))}, boxes))

    pa, pb, pc = np.array([0.25, 0.75]), np.array([0.5, 0.3, 0.2]), np.array([0.6, 0.4])
    A, B, C = objs("classical", A=2, B=3, C=2)
    p = np.einsum("a,b,c->abc", pa, pb, pc).ravel()
    (out / "product3.fbm").write_text(dump_model(Signature((A, B, C)), {"joint": (("A", "B", "C"), p)}))

    A, B, C = objs("classical", A=2, B=2, C=2)
    pc = np.array([0.4, 0.6])
    pa_c = np.array([[0.9, 0.1], [0.2, 0.8]])
    pb_c = np.array([[0.7, 0.3], [0.25, 0.75]])
    p = np.einsum("c,ca,cb->abc", pc, pa_c, pb_c).ravel()
    (out / "markov_chain.fbm").write_text(dump_model(Signature((A, B, C)), {"joint": (("A", "B", "C"), p)}))

    U, W, Y, X = objs("classical", U=2, W=2, Y=2, X=2)
    px = np.array([0.3, 0.7])
    pu_x = np.array([[0.6, 0.4], [0.1, 0.9]])
    pwy_x = np.array([[[0.1, 0.2], [0.3, 0.4]], [[0.25, 0.25], [0.05, 0.45]]])
    p = np.einsum("x,xu,xwy->uwyx", px, pu_x, pwy_x).ravel()
    (out / "graphoid4.fbm").write_text(dump_model(Signature((U, W, Y, X)), {"joint": (("U", "W", "Y", "X"), p)}))

    A, = objs("classical", A=2)
    (out / "unnormalized.fbm").write_text(dump_model(Signature((A,)), {"joint": (("A",), np.array([0.5, 0.6]))}))
    bad = dump_model(Signature((A,)), {"joint": (("A",), np.array([0.2, 0.3, 0.5]))})
    (out / "bad_shape.fbm").write_text(bad)


def quantum(out: Path) -> None:
    A, B = objs("quantum", A=2, B=2)
    rng = np.random.default_rng(7)
    x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = x @ x.conj().T
    rho = np.round(rho / np.trace(rho).real, 6)
    rho = (rho + rho.conj().T) / 2
    rho /= np.trace(rho).real
    boxes = [BoxSpec("rA", "state", "joint", (A,)), BoxSpec("cAB", "conditional", "joint", (A,), (B,))]
    (out / "qubit_pair.fbm").write_text(dump_model(Signature((A, B)), {"joint": (("A", "B"), rho)}, boxes))

    ra = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    rb = np.diag([0.5, 0.25, 0.25]).astype(complex)
    A, B = objs("quantum", A=2, B=3)
    (out / "quantum_product.fbm").write_text(dump_model(Signature((A, B)), {"joint": (("A", "B"), np.kron(ra, rb))}))

    A, = objs("quantum", A=2)
    (out / "nonpsd.fbm").write_text(dump_model(Signature((A,)), {"joint": (("A",), np.array([[0.5, 0.8], [0.8, 0.5]]))}))


TERMS = {
    "snake.fbg": "(cup[A] * id[A]) ; (id[A] * cap[A])",
    "chain_rule.fbg": "state(pB) ; spider[B](1,2) ; (process(PAgB) * id[B])",
    "network.fbg": "(spider[A](1,2) * spider[B](0,1)) ; (spider[A](2,1) * id[B]) ; (spider[A](1,2) * spider[B](1,1))",
}


def main(argv: list[str]) -> int:
    out = Path(argv[1]) if len(argv) > 1 else Path(__file__).resolve().parent.parent / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    classical(out)
    quantum(out)
    for name, src in TERMS.items():
        (out / name).write_text(f"{HEADER}\n{src}\n")
    (out / "bad_syntax.fbg").write_text(f"{HEADER}\nspider[A](1,2 ; cap[A]\n")
    print(f"fixtures written to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))
