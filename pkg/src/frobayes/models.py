"""Concrete backends and the term evaluator.

Two families share one interface:

* ``ClassicalBackend(semiring)``: an object of dimension n is an n-dim
  semimodule; the Frobenius structure copies/compares basis elements.
* ``CdoBackend``: a quantum object of Hilbert dimension d is the space of
  d x d operators, vectorized row-major (primal index, then dual). The
  multiplication is the operator product, the comultiplication is the
  broadcasting map, unit = identity operator, counit = trace.

Multi-object wires are laid out object by object, so for two quantum objects
the vector index is (a, a*, b, b*) and the monoidal product is ``kron``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from . import linalg
from .diagram import (
    CLASSICAL,
    QUANTUM,
    Box,
    Cap,
    Cup,
    Empty,
    Gen,
    Identity,
    ObjectRef,
    Par,
    Seq,
    Spider,
    Swap,
    Term,
)
from .errors import DomainError, KindError, ShapeError

Tol = linalg.Tol


# --- semirings --------------------------------------------------------------

@dataclass(frozen=True)
class Semiring:
    """Scalars for the classical model, obtained from (R+, +, x) by a
    monotone bijection f: ``embed = f`` and ``extract = f^-1``."""

    name: str
    add: Callable
    mul: Callable
    zero: float
    one: float
    embed: Callable
    extract: Callable
    reduce: Callable  # reduce(x, axis): add-fold along an axis
    power: Callable  # power(x, r): f(f^-1(x) ** r)

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.name == "standard":
            return a @ b
        return self.reduce(self.mul(a[:, :, None], b[None, :, :]), 1)

    def kron(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.name == "standard":
            return np.kron(a, b)
        out = self.mul(a[:, None, :, None], b[None, :, None, :])
        return out.reshape(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])

    def in_support(self, x: np.ndarray, tol: Tol) -> np.ndarray:
        """Mask of entries whose probability exceeds the relative rank cutoff."""
        p_rel = self._log_rel(x)
        if tol.rank_eps == 0:
            return np.isfinite(p_rel) if self.name != "standard" else x > 0
        return p_rel > math.log(tol.rank_eps)

    def _log_rel(self, x: np.ndarray) -> np.ndarray:
        # log(p / max p), computed without leaving the semiring's range
        if self.name == "standard":
            top = np.max(np.abs(x), initial=0.0)
            with np.errstate(divide="ignore"):
                return np.log(np.abs(x) / top) if top > 0 else np.full(x.shape, -np.inf)
        s = np.asarray(x, dtype=float)
        smin = np.min(s, initial=np.inf)
        if not np.isfinite(smin):
            return np.full(s.shape, -np.inf)
        return -(s - smin)

    def residual(self, a, b) -> float:
        """Max deviation; in non-standard semirings measured in the
        semiring's own coordinates, with infinities required to match."""
        a = np.asarray(a)
        b = np.asarray(b)
        if a.shape != b.shape:
            raise ShapeError(f"cannot compare shapes {a.shape} and {b.shape}")
        if self.name == "standard":
            return float(np.max(np.abs(a - b), initial=0.0))
        fa, fb = np.isfinite(a), np.isfinite(b)
        if np.any(fa != fb) or np.any(a[~fa] != b[~fb]):
            return math.inf
        return float(np.max(np.abs(a[fa] - b[fb]), initial=0.0))

    def scale(self, a, b) -> float:
        fin = [np.abs(x[np.isfinite(x)]) for x in (np.asarray(a), np.asarray(b))]
        return max((float(np.max(f, initial=0.0)) for f in fin), default=0.0)


def _std_power(x, r):
    x = np.asarray(x)
    if r >= 0:
        return np.power(x, r)
    out = np.zeros(x.shape, dtype=x.dtype)
    nz = x != 0
    out[nz] = np.power(x[nz], r)
    return out


def standard_semiring() -> Semiring:
    return Semiring(
        name="standard",
        add=np.add,
        mul=np.multiply,
        zero=0.0,
        one=1.0,
        embed=lambda p: np.asarray(p, dtype=float),
        extract=lambda s: np.asarray(s, dtype=float),
        reduce=lambda x, axis: np.sum(x, axis=axis),
        power=_std_power,
    )


def _nl_add(s, t):
    return -np.logaddexp(-np.asarray(s, dtype=float), -np.asarray(t, dtype=float))


def _nl_reduce(x, axis):
    x = np.asarray(x, dtype=float)
    if x.shape[axis] == 0:
        return np.full(np.delete(np.array(x.shape), axis), np.inf)
    return -logsumexp(-x, axis=axis)


def _nl_embed(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        return -np.log(p)


def _nl_extract(s):
    return np.exp(-np.asarray(s, dtype=float))


def _nl_power(s, r):
    s = np.asarray(s, dtype=float)
    if r >= 0:
        with np.errstate(invalid="ignore"):
            out = r * s
        return np.where(np.isinf(s) & (r == 0), 0.0, out)
    return np.where(np.isinf(s), np.inf, r * s)


def neglog_semiring() -> Semiring:
    """s = -ln p: addition is a stable log-sum-exp, multiplication is +,
    zero is +inf and one is 0."""
    return Semiring(
        name="neglog",
        add=_nl_add,
        mul=lambda s, t: np.add(np.asarray(s, dtype=float), np.asarray(t, dtype=float)),
        zero=math.inf,
        one=0.0,
        embed=_nl_embed,
        extract=_nl_extract,
        reduce=_nl_reduce,
        power=_nl_power,
    )


STANDARD = standard_semiring()
NEGLOG = neglog_semiring()


# --- maps -------------------------------------------------------------------

@dataclass(frozen=True)
class Map:
    """Morphism ``dom -> cod`` stored as a (W(cod), W(dom)) array."""

    dom: tuple
    cod: tuple
    data: np.ndarray = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "dom", tuple(self.dom))
        object.__setattr__(self, "cod", tuple(self.cod))


def _wires(objs, backend) -> tuple[int, ...]:
    return tuple(backend.wire_dim(o) for o in objs)


class Backend:
    """Shared machinery; subclasses supply generators and point operations."""

    kind: str
    semiring: Semiring = STANDARD
    dtype = float

    def __init__(self, tol: Tol = linalg.DEFAULT_TOL):
        self.tol = tol
        self._gens: dict[ObjectRef, dict[str, np.ndarray]] = {}

    # objects
    def check(self, obj: ObjectRef) -> None:
        if obj.kind != self.kind:
            raise KindError(f"{self.name} backend cannot host {obj.kind} object {obj.name}")

    def wire_dim(self, obj: ObjectRef) -> int:
        self.check(obj)
        return obj.dim if self.kind == CLASSICAL else obj.dim * obj.dim

    def width(self, objs: Sequence[ObjectRef]) -> int:
        return math.prod(self.wire_dim(o) for o in objs)

    # basic algebra
    def identity(self, objs: Sequence[ObjectRef]) -> Map:
        n = self.width(objs)
        sr = self.semiring
        a = np.full((n, n), sr.zero, dtype=self.dtype)
        np.fill_diagonal(a, sr.one)
        return Map(objs, objs, a)

    def compose(self, g: Map, f: Map) -> Map:
        """g after f."""
        if f.cod != g.dom:
            raise ShapeError(f"cannot compose: cod {[o.name for o in f.cod]} vs dom {[o.name for o in g.dom]}")
        return Map(f.dom, g.cod, self.semiring.matmul(g.data, f.data))

    def then(self, *maps: Map) -> Map:
        out = maps[0]
        for m in maps[1:]:
            out = self.compose(m, out)
        return out

    def tensor(self, f: Map, g: Map) -> Map:
        return Map(f.dom + g.dom, f.cod + g.cod, self.semiring.kron(f.data, g.data))

    def tensor_all(self, maps: Sequence[Map]) -> Map:
        out = self.scalar_one()
        for m in maps:
            out = self.tensor(out, m)
        return out

    def scalar_one(self) -> Map:
        return Map((), (), np.full((1, 1), self.semiring.one, dtype=self.dtype))

    def dagger(self, f: Map) -> Map:
        d = f.data.T
        return Map(f.cod, f.dom, d.conj() if np.iscomplexobj(d) else d.copy())

    def permute(self, objs: Sequence[ObjectRef], perm: Sequence[int]) -> Map:
        """Wiring whose output j is input wire perm[j]."""
        objs = tuple(objs)
        w = _wires(objs, self)
        n = math.prod(w)
        src = np.arange(n).reshape(w).transpose(list(perm)).ravel() if objs else np.arange(1)
        sr = self.semiring
        a = np.full((n, n), sr.zero, dtype=self.dtype)
        a[np.arange(n), src] = sr.one
        return Map(objs, tuple(objs[p] for p in perm), a)

    def apply(self, f: Map, g: Map, positions: Sequence[int], at: int | None = None) -> Map:
        """Apply ``f`` to the codomain wires ``positions`` of ``g``.

        The outputs of ``f`` are inserted where the first consumed wire was
        (or at index ``at`` among the untouched wires)."""
        positions = list(positions)
        if tuple(g.cod[p] for p in positions) != f.dom:
            raise ShapeError("apply: wires do not match the map's domain")
        rest = [i for i in range(len(g.cod)) if i not in positions]
        wc = _wires(g.cod, self)
        wd = self.width(g.dom)
        t = g.data.reshape(wc + (wd,))
        t = np.moveaxis(t, positions, list(range(len(positions)))) if positions else t
        t = t.reshape(self.width(f.dom), -1)
        r = self.semiring.matmul(f.data, t)
        rest_objs = tuple(g.cod[i] for i in rest)
        if at is None:
            at = min(positions) if positions else len(rest)
            at = sum(1 for i in rest if i < at)
        fc = _wires(f.cod, self)
        r = r.reshape(fc + _wires(rest_objs, self) + (wd,))
        k = len(fc)
        order = list(range(k, k + at)) + list(range(k)) + list(range(k + at, k + len(rest))) + [k + len(rest)]
        r = np.transpose(r, order)
        new_cod = rest_objs[:at] + f.cod + rest_objs[at:]
        return Map(g.dom, new_cod, r.reshape(self.width(new_cod), wd))

    def apply_dom(self, g: Map, f: Map, positions: Sequence[int]) -> Map:
        """Precompose ``g`` with ``f`` acting on g's domain wires ``positions``."""
        return self.dagger(self.apply(self.dagger(f), self.dagger(g), positions))

    def reorder(self, g: Map, order: Sequence[int]) -> Map:
        """New codomain wire j is old wire order[j]."""
        order = list(order)
        wc = _wires(g.cod, self)
        wd = self.width(g.dom)
        t = g.data.reshape(wc + (wd,))
        t = np.transpose(t, order + [len(wc)])
        cod = tuple(g.cod[i] for i in order)
        return Map(g.dom, cod, t.reshape(self.width(cod), wd))

    def residual(self, a: Map, b: Map) -> float:
        if a.dom != b.dom or a.cod != b.cod:
            raise ShapeError("residual: maps have different types")
        return self.semiring.residual(a.data, b.data)

    def bound(self, a: Map, b: Map) -> float:
        return self.tol.bound(self.semiring.scale(a.data, b.data))

    def close(self, a: Map, b: Map) -> bool:
        return self.residual(a, b) <= self.bound(a, b)

    # Frobenius structure
    def gens(self, obj: ObjectRef) -> dict[str, Map]:
        self.check(obj)
        if obj not in self._gens:
            self._gens[obj] = self._make_gens(obj.dim)
        g = self._gens[obj]
        o1, o2 = (obj,), (obj, obj)
        return {
            "mult": Map(o2, o1, g["mult"]),
            "comult": Map(o1, o2, g["comult"]),
            "unit": Map((), o1, g["unit"]),
            "counit": Map(o1, (), g["counit"]),
            "cup": Map((), o2, g["cup"]),
            "cap": Map(o2, (), g["cap"]),
        }

    def _make_gens(self, d: int) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def spider(self, obj: ObjectRef, n: int, m: int) -> Map:
        g = self.gens(obj)
        one = self.identity((obj,))
        if n == 0:
            head = g["unit"]
        else:
            head = one
            for k in range(1, n):
                head = self.compose(g["mult"], self.tensor(head, one))
        if m == 0:
            return self.compose(g["counit"], head)
        tail = one
        for k in range(1, m):
            tail = self.compose(self.tensor(tail, one), g["comult"])
        return self.compose(tail, head)

    def unit(self, objs: Sequence[ObjectRef]) -> Map:
        return self.tensor_all([self.gens(o)["unit"] for o in objs])

    def counit(self, objs: Sequence[ObjectRef]) -> Map:
        return self.tensor_all([self.gens(o)["counit"] for o in objs])

    def mult(self, objs: Sequence[ObjectRef]) -> Map:
        """Frobenius multiplication of the composite object (A1..Ak)(A1..Ak) -> (A1..Ak)."""
        objs = tuple(objs)
        k = len(objs)
        par_m = self.tensor_all([self.gens(o)["mult"] for o in objs])
        doubled = objs + objs
        perm = [i for j in range(k) for i in (j, j + k)]
        return self.compose(par_m, self.permute(doubled, perm))

    def comult(self, objs: Sequence[ObjectRef]) -> Map:
        return self.dagger(self.mult(objs))

    def cup(self, objs: Sequence[ObjectRef]) -> Map:
        objs = tuple(objs)
        k = len(objs)
        x = self.tensor_all([self.gens(o)["cup"] for o in objs])
        return self.reorder(x, [2 * j for j in range(k)] + [2 * j + 1 for j in range(k)])

    def cap(self, objs: Sequence[ObjectRef]) -> Map:
        return self.dagger(self.cup(objs))

    # points
    def point(self, objs: Sequence[ObjectRef], data) -> Map:
        arr = np.asarray(data, dtype=self.dtype).reshape(-1, 1)
        if arr.shape[0] != self.width(objs):
            raise ShapeError(f"point has {arr.shape[0]} entries, objects need {self.width(objs)}")
        return Map((), tuple(objs), arr)

    def product(self, p: Map, q: Map) -> Map:
        """Frobenius product of two points on the same objects."""
        if p.cod != q.cod or p.dom or q.dom:
            raise ShapeError("product needs two points on the same objects")
        k = len(p.cod)
        x = self.tensor(p, q)
        for j, o in enumerate(p.cod):
            x = self.apply(self.gens(o)["mult"], x, [j, k])
        return x

    def total(self, p: Map):
        """Counit applied to a point: the total mass as a semiring scalar."""
        return self.compose(self.counit(p.cod), p).data[0, 0]

    def pdata(self, p: Map) -> np.ndarray:
        return p.data[:, 0]


class ClassicalBackend(Backend):
    kind = CLASSICAL
    dtype = float

    def __init__(self, semiring: Semiring = STANDARD, tol: Tol = linalg.DEFAULT_TOL):
        super().__init__(tol)
        self.semiring = semiring
        self.name = "standard" if semiring.name == "standard" else semiring.name

    def _make_gens(self, d: int) -> dict[str, np.ndarray]:
        z, o = self.semiring.zero, self.semiring.one
        mult = np.full((d, d * d), z)
        mult[np.arange(d), np.arange(d) * d + np.arange(d)] = o
        cup = np.full((d * d, 1), z)
        cup[np.arange(d) * d + np.arange(d), 0] = o
        return {
            "mult": mult,
            "comult": mult.T.copy(),
            "unit": np.full((d, 1), o),
            "counit": np.full((1, d), o),
            "cup": cup,
            "cap": cup.T.copy(),
        }

    def spider(self, obj: ObjectRef, n: int, m: int) -> Map:
        self.check(obj)
        d = obj.dim
        z, o = self.semiring.zero, self.semiring.one
        a = np.full((d**m, d**n), z)
        diag_out = sum(d**k for k in range(m)) if m else 0
        diag_in = sum(d**k for k in range(n)) if n else 0
        a[np.arange(d) * diag_out, np.arange(d) * diag_in] = o
        return Map((obj,) * n, (obj,) * m, a)

    # point-level operations, all diagonal
    def _diag(self, objs, vals) -> Map:
        n = len(vals)
        a = np.full((n, n), self.semiring.zero)
        a[np.arange(n), np.arange(n)] = vals
        return Map(objs, objs, a)

    def support_mask(self, p: Map) -> np.ndarray:
        return self.semiring.in_support(self.pdata(p), self.tol)

    def frob_inverse(self, p: Map) -> Map:
        v = self.pdata(p)
        mask = self.support_mask(p)
        out = np.full(v.shape, self.semiring.zero)
        out[mask] = self.semiring.power(v[mask], -1)
        return Map((), p.cod, out.reshape(-1, 1))

    def sqrt_point(self, p: Map) -> Map:
        v = self.pdata(p)
        mask = self.support_mask(p)
        out = np.full(v.shape, self.semiring.zero)
        out[mask] = self.semiring.power(v[mask], 0.5)
        return Map((), p.cod, out.reshape(-1, 1))

    def support_point(self, p: Map) -> Map:
        mask = self.support_mask(p)
        out = np.where(mask, self.semiring.one, self.semiring.zero)
        return Map((), p.cod, out.astype(float).reshape(-1, 1))

    def modifier(self, p: Map) -> Map:
        return self._diag(p.cod, self.pdata(p))

    def modifier_inverse(self, p: Map) -> Map:
        return self._diag(p.cod, self.pdata(self.frob_inverse(p)))

    def support(self, p: Map) -> Map:
        return self._diag(p.cod, self.pdata(self.support_point(p)))

    def modifier_power(self, p: Map, r: float) -> Map:
        v = self.pdata(p)
        mask = self.support_mask(p)
        out = np.full(v.shape, self.semiring.zero)
        out[mask] = self.semiring.power(v[mask], r)
        return self._diag(p.cod, out)

    def is_psd_point(self, p: Map) -> bool:
        v = self.semiring.extract(self.pdata(p))
        return bool(np.all(v >= -self.tol.abs_eps))


class CdoBackend(Backend):
    """Conditional density operator model on quantum objects."""

    kind = QUANTUM
    dtype = complex
    name = "cdo"

    def _make_gens(self, d: int) -> dict[str, np.ndarray]:
        mult = np.zeros((d * d, d**4), dtype=complex)
        for i in range(d):
            for j in range(d):
                for l in range(d):
                    mult[i * d + l, ((i * d + j) * d + j) * d + l] = 1.0
        unit = np.eye(d, dtype=complex).reshape(d * d, 1)
        comult = mult.T.copy()
        cup = comult @ unit
        return {
            "mult": mult,
            "comult": comult,
            "unit": unit,
            "counit": unit.T.copy(),
            "cup": cup,
            "cap": cup.T.copy(),
        }

    # layout conversion between object-paired vectors and operators
    @staticmethod
    def dims(objs: Sequence[ObjectRef]) -> list[int]:
        return [o.dim for o in objs]

    def to_operator(self, p: Map) -> np.ndarray:
        dims = self.dims(p.cod)
        return paired_to_operator(self.pdata(p), dims)

    def from_operator(self, objs: Sequence[ObjectRef], rho) -> Map:
        for o in objs:
            self.check(o)
        return Map((), tuple(objs), operator_to_paired(np.asarray(rho, dtype=complex), self.dims(objs)).reshape(-1, 1))

    def sandwich(self, objs: Sequence[ObjectRef], k: np.ndarray) -> Map:
        """Super-operator X -> K X K^dagger on the composite of ``objs``."""
        dims = self.dims(objs)
        s = np.kron(k, k.conj())
        return Map(objs, objs, superop_opvec_to_paired(s, dims, dims))

    def _op_point(self, p: Map, f) -> Map:
        return self.from_operator(p.cod, f(self.to_operator(p), self.tol))

    def frob_inverse(self, p: Map) -> Map:
        return self._op_point(p, linalg.support_pinv)

    def sqrt_point(self, p: Map) -> Map:
        return self._op_point(p, linalg.psd_sqrt)

    def support_point(self, p: Map) -> Map:
        return self._op_point(p, linalg.support_proj)

    def modifier(self, p: Map) -> Map:
        return self.sandwich(p.cod, linalg.psd_sqrt(self.to_operator(p), self.tol))

    def modifier_inverse(self, p: Map) -> Map:
        return self.sandwich(p.cod, linalg.psd_inv_sqrt(self.to_operator(p), self.tol))

    def support(self, p: Map) -> Map:
        return self.sandwich(p.cod, linalg.support_proj(self.to_operator(p), self.tol))

    def is_psd_point(self, p: Map) -> bool:
        return linalg.is_psd(self.to_operator(p), self.tol)


# --- CDO layout helpers ----------------------------------------------------

def _pair_axes(k: int) -> list[int]:
    # paired axes (a1,a1*,a2,a2*,...) listed in operator order (a1..ak, a1*..ak*)
    return [2 * i for i in range(k)] + [2 * i + 1 for i in range(k)]


def operator_to_paired(rho: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    k = len(dims)
    n = math.prod(dims)
    if rho.shape != (n, n):
        raise ShapeError(f"operator of shape {rho.shape} does not match dims {list(dims)}")
    if k == 0:
        return rho.reshape(1)
    t = rho.reshape(list(dims) + list(dims))
    inv = np.argsort(_pair_axes(k))
    return np.transpose(t, inv).ravel()


def paired_to_operator(v: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    k = len(dims)
    n = math.prod(dims)
    if k == 0:
        return np.asarray(v).reshape(1, 1)
    t = np.asarray(v).reshape([d for d in dims for _ in range(2)])
    return np.transpose(t, _pair_axes(k)).reshape(n, n)


def superop_opvec_to_paired(s: np.ndarray, dom_dims, cod_dims) -> np.ndarray:
    """Convert a matrix acting on row-major vec(operator) to the paired layout."""
    kd, kc = len(dom_dims), len(cod_dims)
    t = s.reshape(list(cod_dims) * 2 + list(dom_dims) * 2)
    inv_c = list(np.argsort(_pair_axes(kc))) if kc else []
    inv_d = [2 * kc + i for i in (np.argsort(_pair_axes(kd)) if kd else [])]
    t = np.transpose(t, inv_c + inv_d)
    return t.reshape(math.prod(cod_dims) ** 2, math.prod(dom_dims) ** 2)


def superop_paired_to_opvec(m: np.ndarray, dom_dims, cod_dims) -> np.ndarray:
    kd, kc = len(dom_dims), len(cod_dims)
    t = m.reshape([d for d in cod_dims for _ in range(2)] + [d for d in dom_dims for _ in range(2)])
    ax = (_pair_axes(kc) if kc else []) + [2 * kc + i for i in (_pair_axes(kd) if kd else [])]
    t = np.transpose(t, ax)
    return t.reshape(math.prod(cod_dims) ** 2, math.prod(dom_dims) ** 2)


def broadcasting_map(d: int) -> np.ndarray:
    """B(|i><j|) = sum_k |i><k| (x) |k><j|, from the closed formula (opvec layout)."""
    b = np.zeros((d**4, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d))
            e[i, j] = 1
            out = np.zeros((d * d, d * d), dtype=complex)
            for k in range(d):
                ik = np.zeros((d, d))
                ik[i, k] = 1
                kj = np.zeros((d, d))
                kj[k, j] = 1
                out += np.kron(ik, kj)
            b[:, i * d + j] = out.ravel()
    return b


# --- Choi and complete positivity ------------------------------------------

def choi(s: np.ndarray, in_dim: int, out_dim: int) -> np.ndarray:
    """Choi matrix sum_ij S(|i><j|) (x) |i><j| of a super-operator on row-major vec."""
    s = np.asarray(s)
    if s.shape != (out_dim * out_dim, in_dim * in_dim):
        raise ShapeError(f"super-operator shape {s.shape} does not match dims {in_dim}->{out_dim}")
    t = s.reshape(out_dim, out_dim, in_dim, in_dim)
    return t.transpose(0, 2, 1, 3).reshape(out_dim * in_dim, out_dim * in_dim)


@dataclass(frozen=True)
class CPReport:
    is_cp: bool
    hermitian_residual: float
    min_eigenvalue: float  # smallest eigenvalue of the Hermitian part of the Choi matrix
    eigenvalues: tuple


def is_cp(s: np.ndarray, in_dim: int, out_dim: int, tol: Tol = linalg.DEFAULT_TOL) -> CPReport:
    """Choi test. A PSD Choi matrix must be Hermitian and have a PSD Hermitian
    part, so the Hermitian-part spectrum gives a witness for non-Hermitian
    Choi matrices too: an eigenvalue ``l < 0`` means some v has Re<v|J|v> = l."""
    j = choi(s, in_dim, out_dim)
    herm = (j + j.conj().T) / 2
    hres = float(np.max(np.abs(j - j.conj().T), initial=0.0))
    w = np.linalg.eigvalsh(herm)
    scale = float(np.max(np.abs(w), initial=0.0))
    ok = hres <= tol.bound(scale) and w[0] >= -tol.bound(scale)
    return CPReport(bool(ok), hres, float(w[0]), tuple(float(x) for x in w))


# --- evaluation -------------------------------------------------------------

def _binding(backend: Backend, b: Box, bindings: Mapping) -> Map:
    if b.label not in bindings:
        raise DomainError(f"box {b.label} has no binding")
    v = bindings[b.label]
    if isinstance(v, Map):
        m = v
    else:
        dom, cod = (b.cod, b.dom) if b.dagger else (b.dom, b.cod)
        arr = np.asarray(v, dtype=backend.dtype)
        shape = (backend.width(cod), backend.width(dom))
        if arr.size != shape[0] * shape[1]:
            raise ShapeError(f"binding for {b.label} has {arr.size} entries, expected {shape[0] * shape[1]}")
        m = Map(dom, cod, arr.reshape(shape))
    if b.dagger:
        m = backend.dagger(m)
    if m.dom != b.dom or m.cod != b.cod:
        raise ShapeError(f"binding for {b.label} has the wrong type")
    return m


def eval_gen(backend: Backend, g, bindings: Mapping) -> Map:
    if isinstance(g, Spider):
        return backend.spider(g.obj, g.n_in, g.n_out)
    if isinstance(g, Cup):
        return backend.gens(g.obj)["cup"]
    if isinstance(g, Cap):
        return backend.gens(g.obj)["cap"]
    if isinstance(g, Identity):
        return backend.identity((g.obj,))
    if isinstance(g, Swap):
        return backend.permute((g.left, g.right), (1, 0))
    if isinstance(g, Box):
        return _binding(backend, g, bindings)
    raise TypeError(g)


def evaluate(t: Term, backend: Backend, bindings: Mapping | None = None) -> Map:
    """Denotation of a term: Seq is composition, Par is the monoidal product."""
    bindings = bindings or {}
    if isinstance(t, Empty):
        return backend.scalar_one()
    if isinstance(t, Gen):
        return eval_gen(backend, t.gen, bindings)
    if isinstance(t, Seq):
        return backend.compose(evaluate(t.second, backend, bindings), evaluate(t.first, backend, bindings))
    if isinstance(t, Par):
        return backend.tensor(evaluate(t.left, backend, bindings), evaluate(t.right, backend, bindings))
    raise TypeError(t)


# --- law verification -------------------------------------------------------

@dataclass
class LawReport:
    backend: str
    obj: ObjectRef
    residuals: dict
    expected_failures: dict
    tol: float

    @property
    def passed(self) -> bool:
        return all(r <= self.tol for r in self.residuals.values())

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


def verify_frobenius_laws(backend: Backend, obj: ObjectRef) -> LawReport:
    """Numerically check the dagger Frobenius axioms on one object.

    Commutativity and speciality are required for classical objects; on
    quantum objects they are reported under ``expected_failures``.
    """
    g = backend.gens(obj)
    m, d, u, e = g["mult"], g["comult"], g["unit"], g["counit"]
    one = backend.identity((obj,))
    T, C, R = backend.tensor, backend.compose, backend.residual
    res = {
        "associativity": R(C(m, T(m, one)), C(m, T(one, m))),
        "unit_left": R(C(m, T(u, one)), one),
        "unit_right": R(C(m, T(one, u)), one),
        "coassociativity": R(C(T(d, one), d), C(T(one, d), d)),
        "counit_left": R(C(T(e, one), d), one),
        "counit_right": R(C(T(one, e), d), one),
        "frobenius_left": R(C(T(one, m), T(d, one)), C(d, m)),
        "frobenius_right": R(C(T(m, one), T(one, d)), C(d, m)),
        "dagger": R(d, backend.dagger(m)),
        "snake_left": R(C(T(g["cap"], one), T(one, g["cup"])), one),
        "snake_right": R(C(T(one, g["cap"]), T(g["cup"], one)), one),
        "cup_symmetric": R(C(backend.permute((obj, obj), (1, 0)), g["cup"]), g["cup"]),
    }
    extra = {
        "commutativity": R(C(m, backend.permute((obj, obj), (1, 0))), m),
        "special": R(C(m, d), one),
    }
    expected = {}
    if obj.kind == CLASSICAL:
        res.update(extra)
    else:
        expected = extra
    scale = max(1.0, float(obj.dim))
    return LawReport(backend.name, obj, res, expected, backend.tol.bound(scale))


def backend_for(kind: str, semiring: str = "standard", tol: Tol = linalg.DEFAULT_TOL) -> Backend:
    if kind == QUANTUM:
        return CdoBackend(tol)
    if semiring == "neglog":
        return ClassicalBackend(NEGLOG, tol)
    return ClassicalBackend(STANDARD, tol)
