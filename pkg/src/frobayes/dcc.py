"""The doubled category D(FdHilb).

A D-object A is carried by the pair of wires A (x) A*. A morphism A -> B is
an ordinary linear map A (x) A* -> B (x) B*. For a list of objects
``[A1, ..., Ak]`` the wire order is the primal wires left to right followed
by the dual wires in reverse::

    (a1, ..., ak, ak*, ..., a1*)

This "D-layout" is converted to the backend's object-paired layout
``(a1, a1*, ..., ak, ak*)`` by explicit permutations below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .errors import DomainError, ShapeError
from .models import CPReport, choi, is_cp


@dataclass(frozen=True)
class DObject:
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("D-object needs dimension >= 1")


@dataclass(frozen=True)
class DMorphism:
    dom: tuple
    cod: tuple
    tensor: np.ndarray = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "dom", tuple(self.dom))
        object.__setattr__(self, "cod", tuple(self.cod))
        want = (_width(self.cod), _width(self.dom))
        if self.tensor.shape != want:
            raise ShapeError(f"D-morphism tensor has shape {self.tensor.shape}, expected {want}")


def _dims(objs: Sequence[DObject]) -> list[int]:
    return [o.d for o in objs]


def _width(objs) -> int:
    return math.prod(o.d for o in objs) ** 2


def _layout_axes(k: int) -> list[int]:
    # position in D-layout of each axis of the operator layout (p1..pk, d1..dk)
    return list(range(k)) + list(range(2 * k - 1, k - 1, -1))


def _wire_dims(dims: Sequence[int]) -> list[int]:
    return list(dims) + list(dims)[::-1]


def objs(*dims: int) -> tuple:
    return tuple(DObject(d) for d in dims)


# --- category structure ----------------------------------------------------

def identity(obs: Sequence[DObject]) -> DMorphism:
    n = _width(obs)
    return DMorphism(obs, obs, np.eye(n, dtype=complex))


def compose(g: DMorphism, f: DMorphism) -> DMorphism:
    if f.cod != g.dom:
        raise ShapeError("D-composition type mismatch")
    return DMorphism(f.dom, g.cod, g.tensor @ f.tensor)


def _regroup(dims_f: list[int], dims_g: list[int]) -> list[int]:
    """Axes (P_f, rD_f, P_g, rD_g) -> (P_f, P_g, rD_g, rD_f) for one side."""
    kf, kg = len(dims_f), len(dims_g)
    pf = list(range(kf))
    df = list(range(kf, 2 * kf))
    pg = list(range(2 * kf, 2 * kf + kg))
    dg = list(range(2 * kf + kg, 2 * kf + 2 * kg))
    return pf + pg + dg + df


def d_tensor(f: DMorphism, g: DMorphism) -> DMorphism:
    """Monoidal product of D(C): ``(1 (x) s) (f (x) g) (1 (x) s)`` with s
    moving the dual wires of f past those of g."""
    cf, cg, df, dg = _dims(f.cod), _dims(g.cod), _dims(f.dom), _dims(g.dom)
    t = np.kron(f.tensor, g.tensor)
    shape = _wire_dims(cf) + _wire_dims(cg) + _wire_dims(df) + _wire_dims(dg)
    t = t.reshape(shape)
    nc = 2 * (len(cf) + len(cg))
    out_ax = _regroup(cf, cg)
    in_ax = [nc + a for a in _regroup(df, dg)]
    t = np.transpose(t, out_ax + in_ax)
    return DMorphism(f.dom + g.dom, f.cod + g.cod, t.reshape(_width(f.cod + g.cod), _width(f.dom + g.dom)))


def _reverse_factors(f: np.ndarray, dom_dims: list[int], cod_dims: list[int]) -> np.ndarray:
    kc, kd = len(cod_dims), len(dom_dims)
    t = f.reshape(list(cod_dims) + list(dom_dims))
    ax = list(range(kc - 1, -1, -1)) + [kc + i for i in range(kd - 1, -1, -1)]
    t = np.transpose(t, ax)
    return t.reshape(math.prod(cod_dims), math.prod(dom_dims))


def functor(f: np.ndarray, dom_dims: Sequence[int], cod_dims: Sequence[int]) -> DMorphism:
    """The embedding f -> f (x) conj(f), with the conjugate acting on the
    reversed dual wires."""
    f = np.asarray(f, dtype=complex)
    dom_dims, cod_dims = list(dom_dims), list(cod_dims)
    if f.shape != (math.prod(cod_dims), math.prod(dom_dims)):
        raise ShapeError("functor: matrix shape does not match the dims")
    fbar = _reverse_factors(f, dom_dims, cod_dims).conj()
    return DMorphism(objs(*dom_dims), objs(*cod_dims), np.kron(f, fbar))


def sigma(a: DObject, b: DObject) -> DMorphism:
    """Symmetry of D(C): image of the Hilbert-space swap."""
    s = np.zeros((b.d * a.d, a.d * b.d))
    for i in range(a.d):
        for j in range(b.d):
            s[j * a.d + i, i * b.d + j] = 1
    return functor(s, [a.d, b.d], [b.d, a.d])


# --- Frobenius structure ----------------------------------------------------

def f_mult(o: DObject) -> DMorphism:
    """F[(x, x*), (a1, a2, a2*, a1*)] = [x=a1][a1*=a2][a2*=x*]: the operator product."""
    d = o.d
    t = np.zeros((d, d, d, d, d, d), dtype=complex)
    for x in range(d):
        for k in range(d):
            for y in range(d):
                # a1=x, a2=k, a2*=y, a1*=k
                t[x, y, x, k, y, k] = 1.0
    return DMorphism((o, o), (o,), t.reshape(d * d, d**4))


def f_unit(o: DObject) -> DMorphism:
    return DMorphism((), (o,), np.eye(o.d, dtype=complex).reshape(o.d * o.d, 1))


def dagger(f: DMorphism) -> DMorphism:
    return DMorphism(f.cod, f.dom, f.tensor.conj().T)


def f_counit(o: DObject) -> DMorphism:
    return dagger(f_unit(o))


def f_comult(o: DObject) -> DMorphism:
    return dagger(f_mult(o))


def cup(o: DObject) -> DMorphism:
    return compose(f_comult(o), f_unit(o))


def frobenius_residuals(o: DObject) -> dict[str, float]:
    m, u, d, e = f_mult(o), f_unit(o), f_comult(o), f_counit(o)
    one = identity((o,))
    T, C = d_tensor, compose

    def r(a, b):
        return float(np.max(np.abs(a.tensor - b.tensor), initial=0.0))

    return {
        "associativity": r(C(m, T(m, one)), C(m, T(one, m))),
        "unit_left": r(C(m, T(u, one)), one),
        "unit_right": r(C(m, T(one, u)), one),
        "frobenius_left": r(C(T(one, m), T(d, one)), C(d, m)),
        "frobenius_right": r(C(T(m, one), T(one, d)), C(d, m)),
        "counit_left": r(C(T(e, one), d), one),
        "cup_symmetric": r(C(sigma(o, o), cup(o)), cup(o)),
        "commutativity": r(C(m, sigma(o, o)), m),
    }


# --- operators and points ---------------------------------------------------

def xi(rho, dims: Sequence[int] | None = None) -> DMorphism:
    """Operator on A1..Ak -> point I -> [A1..Ak], i.e. (rho (x) 1) after the cup."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ShapeError("xi needs a square matrix")
    dims = [rho.shape[0]] if dims is None else list(dims)
    if math.prod(dims) != rho.shape[0]:
        raise ShapeError("xi: dims do not match the operator")
    k = len(dims)
    t = rho.reshape(dims + dims)
    inv = np.argsort(_layout_axes(k))
    t = np.transpose(t, inv)
    return DMorphism((), objs(*dims), t.reshape(-1, 1))


def xi_inv(p: DMorphism) -> np.ndarray:
    if p.dom:
        raise ShapeError("xi_inv needs a point")
    dims = _dims(p.cod)
    k = len(dims)
    n = math.prod(dims)
    t = p.tensor.reshape(_wire_dims(dims))
    return np.transpose(t, _layout_axes(k)).reshape(n, n)


def d_partial_trace(p: DMorphism, traced: Sequence[int] | int) -> DMorphism:
    """Contract each traced primal wire with its dual partner."""
    traced = {traced} if isinstance(traced, int) else set(traced)
    dims = _dims(p.cod)
    k = len(dims)
    t = p.tensor.reshape(_wire_dims(dims))
    labels = list(range(2 * k))
    for i in traced:
        labels[2 * k - 1 - i] = labels[i]
    keep = [i for i in range(k) if i not in traced]
    out_labels = keep + [2 * k - 1 - i for i in reversed(keep)]
    out = np.einsum(t, labels, out_labels)
    kept = [dims[i] for i in keep]
    return DMorphism((), objs(*kept), out.reshape(-1, 1))


def to_superop(f: DMorphism) -> np.ndarray:
    """Matrix acting on row-major vec of operators (primal indices, then duals)."""
    dc, dd = _dims(f.cod), _dims(f.dom)
    kc, kd = len(dc), len(dd)
    t = f.tensor.reshape(_wire_dims(dc) + _wire_dims(dd))
    ax = _layout_axes(kc) + [2 * kc + a for a in _layout_axes(kd)]
    t = np.transpose(t, ax)
    return t.reshape(math.prod(dc) ** 2, math.prod(dd) ** 2)


def to_paired(f: DMorphism) -> np.ndarray:
    """Re-index to the object-paired layout used by the CDO backend."""
    dc, dd = _dims(f.cod), _dims(f.dom)
    kc, kd = len(dc), len(dd)

    def paired_axes(k):
        # D-layout axis for each paired position (a1, a1*, a2, a2*, ...)
        out = []
        for i in range(k):
            out += [i, 2 * k - 1 - i]
        return out

    t = f.tensor.reshape(_wire_dims(dc) + _wire_dims(dd))
    ax = paired_axes(kc) + [2 * kc + a for a in paired_axes(kd)]
    return np.transpose(t, ax).reshape(f.tensor.shape)


@dataclass(frozen=True)
class NormalizedCPReport:
    cp: CPReport
    normalization_residual: float
    normalized: bool

    @property
    def ok(self) -> bool:
        return self.cp.is_cp and self.normalized


def is_normalized_cp(f: DMorphism, tol: linalg.Tol = linalg.DEFAULT_TOL) -> NormalizedCPReport:
    s = to_superop(f)
    n_in = math.prod(_dims(f.dom))
    n_out = math.prod(_dims(f.cod))
    cp = is_cp(s, n_in, n_out, tol)
    tr_out = np.eye(n_out).reshape(1, -1)
    tr_in = np.eye(n_in).reshape(1, -1)
    res = float(np.max(np.abs(tr_out @ s - tr_in), initial=0.0))
    return NormalizedCPReport(cp, res, res <= tol.bound(1.0))


def choi_of(f: DMorphism) -> np.ndarray:
    return choi(to_superop(f), math.prod(_dims(f.dom)), math.prod(_dims(f.cod)))
