"""Typed term language for string diagrams.

A term is an immutable tree of generators under sequential (``Seq``) and
parallel (``Par``) composition. ``Seq(f, g)`` means "f, then g": read the
diagram bottom to top.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import DomainError, NameLookupError, TypeCheckError

CLASSICAL = "classical"
QUANTUM = "quantum"

FLAVORS = (
    "state",
    "modifier",
    "modifier_inverse",
    "sqrt_point",
    "conditional",
    "process",
    "support",
    "opaque",
)


@dataclass(frozen=True)
class ObjectRef:
    name: str
    kind: str = CLASSICAL
    dim: int = 2

    def __post_init__(self):
        if self.kind not in (CLASSICAL, QUANTUM):
            raise DomainError(f"unknown object kind {self.kind!r}")
        if int(self.dim) < 1:
            raise DomainError(f"object {self.name} needs dim >= 1")

    @property
    def commutative(self) -> bool:
        return self.kind == CLASSICAL

    def __repr__(self) -> str:
        return f"{self.name}:{self.kind[0]}{self.dim}"


Objs = tuple  # tuple[ObjectRef, ...]


# --- generators -------------------------------------------------------------

@dataclass(frozen=True)
class Spider:
    obj: ObjectRef
    n_in: int
    n_out: int

    def __post_init__(self):
        if self.n_in < 0 or self.n_out < 0:
            raise DomainError("spider legs must be nonnegative")
        if self.n_in == 0 and self.n_out == 0:
            raise DomainError("Spider(0,0) is not a generator; use the empty diagram")

    @property
    def dom(self) -> Objs:
        return (self.obj,) * self.n_in

    @property
    def cod(self) -> Objs:
        return (self.obj,) * self.n_out


@dataclass(frozen=True)
class Cup:
    obj: ObjectRef
    dom = ()

    @property
    def cod(self) -> Objs:
        return (self.obj, self.obj)


@dataclass(frozen=True)
class Cap:
    obj: ObjectRef
    cod = ()

    @property
    def dom(self) -> Objs:
        return (self.obj, self.obj)


@dataclass(frozen=True)
class Swap:
    left: ObjectRef
    right: ObjectRef

    @property
    def dom(self) -> Objs:
        return (self.left, self.right)

    @property
    def cod(self) -> Objs:
        return (self.right, self.left)


@dataclass(frozen=True)
class Identity:
    obj: ObjectRef

    @property
    def dom(self) -> Objs:
        return (self.obj,)

    @property
    def cod(self) -> Objs:
        return (self.obj,)


@dataclass(frozen=True)
class Box:
    """Named morphism. ``dom``/``cod`` are the drawn boundaries, so a daggered
    box has them swapped relative to its declaration."""

    label: str
    dom: Objs
    cod: Objs
    flavor: str = "opaque"
    dagger: bool = False

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise DomainError(f"unknown box flavor {self.flavor!r}")
        object.__setattr__(self, "dom", tuple(self.dom))
        object.__setattr__(self, "cod", tuple(self.cod))


Generator = Spider | Cup | Cap | Swap | Identity | Box


# --- terms ------------------------------------------------------------------

class Term:
    dom: Objs
    cod: Objs

    def then(self, other: "Term") -> "Term":
        return seq(self, other)

    def __matmul__(self, other: "Term") -> "Term":
        return par(self, other)

    def __rshift__(self, other: "Term") -> "Term":
        return seq(self, other)


@dataclass(frozen=True)
class Empty(Term):
    dom: Objs = ()
    cod: Objs = ()


@dataclass(frozen=True)
class Gen(Term):
    gen: Generator
    dom: Objs = field(init=False, compare=False, repr=False)
    cod: Objs = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dom", tuple(self.gen.dom))
        object.__setattr__(self, "cod", tuple(self.gen.cod))


@dataclass(frozen=True)
class Seq(Term):
    first: Term
    second: Term
    dom: Objs = field(init=False, compare=False, repr=False)
    cod: Objs = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dom", self.first.dom)
        object.__setattr__(self, "cod", self.second.cod)


@dataclass(frozen=True)
class Par(Term):
    left: Term
    right: Term
    dom: Objs = field(init=False, compare=False, repr=False)
    cod: Objs = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dom", self.left.dom + self.right.dom)
        object.__setattr__(self, "cod", self.left.cod + self.right.cod)


EMPTY = Empty()


def seq(*terms: Term) -> Term:
    out: Term = EMPTY
    for t in terms:
        if isinstance(t, Empty):
            continue
        out = t if isinstance(out, Empty) else Seq(out, t)
    return out


def par(*terms: Term) -> Term:
    out: Term = EMPTY
    for t in terms:
        if isinstance(t, Empty):
            continue
        out = t if isinstance(out, Empty) else Par(out, t)
    return out


def spider(obj: ObjectRef, n: int, m: int) -> Term:
    return Gen(Spider(obj, n, m))


def ident(obj: ObjectRef) -> Term:
    return Gen(Identity(obj))


def ids(objs: Iterable[ObjectRef]) -> Term:
    return par(*(ident(o) for o in objs))


def cup(obj: ObjectRef) -> Term:
    return Gen(Cup(obj))


def cap(obj: ObjectRef) -> Term:
    return Gen(Cap(obj))


def swap(a: ObjectRef, b: ObjectRef) -> Term:
    return Gen(Swap(a, b))


def box(label: str, dom: Sequence[ObjectRef], cod: Sequence[ObjectRef], flavor: str = "opaque") -> Term:
    return Gen(Box(label, tuple(dom), tuple(cod), flavor))


def permutation(objs: Sequence[ObjectRef], perm: Sequence[int]) -> Term:
    """Wiring term whose output ``j`` is input wire ``perm[j]``.

    Built from adjacent swaps by bubble sort, so the term length is the
    number of inversions.
    """
    objs = tuple(objs)
    perm = list(perm)
    if sorted(perm) != list(range(len(objs))):
        raise DomainError(f"{perm} is not a permutation of {len(objs)} wires")
    cur = list(range(len(objs)))  # cur[k] = input wire sitting at position k
    target = {w: j for j, w in enumerate(perm)}
    layers: list[Term] = []
    changed = True
    while changed:
        changed = False
        for k in range(len(cur) - 1):
            if target[cur[k]] > target[cur[k + 1]]:
                wires = [objs[w] for w in cur]
                layers.append(par(ids(wires[:k]), swap(wires[k], wires[k + 1]), ids(wires[k + 2:])))
                cur[k], cur[k + 1] = cur[k + 1], cur[k]
                changed = True
    if not layers:
        return ids(objs)
    return seq(*layers)


# --- signatures and typing -------------------------------------------------

@dataclass(frozen=True)
class BoxDecl:
    label: str
    dom: Objs
    cod: Objs
    flavor: str = "opaque"


@dataclass(frozen=True)
class Signature:
    objects: tuple = ()
    boxes: tuple = ()

    def __post_init__(self):
        names = [o.name for o in self.objects]
        if len(set(names)) != len(names):
            raise TypeCheckError(f"duplicate object names in {names}")
        labels = [b.label for b in self.boxes]
        if len(set(labels)) != len(labels):
            raise TypeCheckError(f"duplicate box labels in {labels}")

    def obj(self, name: str) -> ObjectRef:
        for o in self.objects:
            if o.name == name:
                return o
        raise NameLookupError(f"unknown object {name!r}")

    def box_decl(self, label: str) -> BoxDecl:
        for b in self.boxes:
            if b.label == label:
                return b
        raise NameLookupError(f"unknown box {label!r}")

    def with_boxes(self, decls: Iterable[BoxDecl]) -> "Signature":
        return Signature(self.objects, tuple(self.boxes) + tuple(decls))

    def make_box(self, label: str, dagger: bool = False) -> Box:
        d = self.box_decl(label)
        if dagger:
            return Box(label, d.cod, d.dom, d.flavor, True)
        return Box(label, d.dom, d.cod, d.flavor, False)


def _fmt(objs: Objs) -> str:
    return "[" + ", ".join(o.name for o in objs) + "]"


def generators(t: Term):
    if isinstance(t, Gen):
        yield t.gen
    elif isinstance(t, Seq):
        yield from generators(t.first)
        yield from generators(t.second)
    elif isinstance(t, Par):
        yield from generators(t.left)
        yield from generators(t.right)


def typecheck(t: Term, sig: Signature | None = None) -> tuple[Objs, Objs]:
    """Verify every composition junction and (optionally) all names."""
    if isinstance(t, Empty):
        return (), ()
    if isinstance(t, Gen):
        g = t.gen
        if sig is not None:
            for o in set(g.dom) | set(g.cod):
                if sig.obj(o.name) != o:
                    raise TypeCheckError(f"object {o.name} does not match its declaration")
            if isinstance(g, Box):
                decl = sig.box_decl(g.label)
                want = (decl.cod, decl.dom) if g.dagger else (decl.dom, decl.cod)
                if (g.dom, g.cod) != want or g.flavor != decl.flavor:
                    raise TypeCheckError(f"box {g.label} used with a signature different from its declaration")
        return t.dom, t.cod
    if isinstance(t, Seq):
        _, c1 = typecheck(t.first, sig)
        d2, _ = typecheck(t.second, sig)
        if c1 != d2:
            raise TypeCheckError(f"type mismatch at composition: cod {_fmt(c1)} != dom {_fmt(d2)}", junction=t)
        return t.dom, t.cod
    if isinstance(t, Par):
        typecheck(t.left, sig)
        typecheck(t.right, sig)
        return t.dom, t.cod
    raise TypeCheckError(f"not a term: {t!r}")


def objects_of(t: Term) -> set[ObjectRef]:
    out: set[ObjectRef] = set()
    for g in generators(t):
        out.update(g.dom)
        out.update(g.cod)
    return out


# --- dagger and transpose ---------------------------------------------------

def _gen_dagger(g: Generator) -> Generator:
    if isinstance(g, Spider):
        return Spider(g.obj, g.n_out, g.n_in)
    if isinstance(g, Cup):
        return Cap(g.obj)
    if isinstance(g, Cap):
        return Cup(g.obj)
    if isinstance(g, Swap):
        return Swap(g.right, g.left)
    if isinstance(g, Identity):
        return g
    if isinstance(g, Box):
        return Box(g.label, g.cod, g.dom, g.flavor, not g.dagger)
    raise TypeError(g)


def term_dagger(t: Term) -> Term:
    if isinstance(t, Empty):
        return t
    if isinstance(t, Gen):
        return Gen(_gen_dagger(t.gen))
    if isinstance(t, Seq):
        return Seq(term_dagger(t.second), term_dagger(t.first))
    if isinstance(t, Par):
        return Par(term_dagger(t.left), term_dagger(t.right))
    raise TypeError(t)


def composite_cup(objs: Sequence[ObjectRef]) -> Term:
    """Cup on a list of objects with both output copies in the same order."""
    objs = tuple(objs)
    k = len(objs)
    if k == 0:
        return EMPTY
    cups = par(*(cup(o) for o in objs))
    doubled = tuple(o for o in objs for _ in range(2))
    perm = [2 * i for i in range(k)] + [2 * i + 1 for i in range(k)]
    return seq(cups, permutation(doubled, perm))


def composite_cap(objs: Sequence[ObjectRef]) -> Term:
    return term_dagger(composite_cup(objs))


def frobenius_transpose(t: Term) -> Term:
    """Transpose f: A -> B into f^T: B -> A using the self-dual compact structure.

    f^T = (1_A (x) cap_B) . (1_A (x) f (x) 1_B) . (cup_A (x) 1_B)
    """
    a, b = t.dom, t.cod
    return seq(
        par(composite_cup(a), ids(b)),
        par(ids(a), t, ids(b)),
        par(ids(a), composite_cap(b)),
    )
