"""Graph normal forms for diagrams.

Terms are converted to open graphs whose nodes are spiders and boxes; swaps
and identities become plain wiring. Spider fusion then merges adjacent
spiders on the same object:

* commutative (classical) objects: any edge between two spiders fuses, and
  self-loops and parallel edges vanish (the structure is special);
* noncommutative (quantum) objects: two spiders sharing exactly one edge fuse
  when the merged cyclic order of legs is again "inputs, then outputs".
  A spider of a symmetric Frobenius algebra only depends on the cyclic order
  of its legs, so this is a local rule. Shared multi-edges are left alone
  because loops are not free (m . d = dim * id for operators).
"""
from __future__ import annotations

import copy
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .diagram import (
    EMPTY,
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
    ids,
    par,
    permutation,
    seq,
    typecheck,
)
from .errors import DomainError, UndecidableError
from .models import Backend, CdoBackend, ClassicalBackend, _binding

SPIDER, BOX, WIRE, SCALAR = "spider", "box", "wire", "scalar"


@dataclass
class Node:
    id: int
    kind: str
    n: int
    m: int
    obj: ObjectRef | None = None
    box: Box | None = None

    def in_obj(self, i: int) -> ObjectRef:
        return self.box.dom[i] if self.kind == BOX else self.obj

    def out_obj(self, j: int) -> ObjectRef:
        return self.box.cod[j] if self.kind == BOX else self.obj


@dataclass
class OpenGraph:
    """Nodes plus a perfect matching ``mate`` on ports.

    Ports are ``("in", node, i)``, ``("out", node, j)``, ``("dom", i)`` and
    ``("cod", j)``. Every edge joins a source (``out``/``dom``) to a target
    (``in``/``cod``).
    """

    dom: tuple
    cod: tuple
    nodes: dict = field(default_factory=dict)
    mate: dict = field(default_factory=dict)
    next_id: int = 0

    def add(self, kind: str, n: int, m: int, obj=None, box=None) -> Node:
        nd = Node(self.next_id, kind, n, m, obj, box)
        self.nodes[nd.id] = nd
        self.next_id += 1
        return nd

    def connect(self, src, tgt) -> None:
        self.mate[src] = tgt
        self.mate[tgt] = src

    def port_obj(self, p) -> ObjectRef:
        if p[0] == "dom":
            return self.dom[p[1]]
        if p[0] == "cod":
            return self.cod[p[1]]
        nd = self.nodes[p[1]]
        return nd.in_obj(p[2]) if p[0] == "in" else nd.out_obj(p[2])

    def ports(self, nid: int) -> list:
        nd = self.nodes[nid]
        return [("in", nid, i) for i in range(nd.n)] + [("out", nid, j) for j in range(nd.m)]

    def edges(self) -> list:
        """(source, target) pairs in a deterministic order."""
        out = []
        for p, q in self.mate.items():
            if p[0] in ("out", "dom"):
                out.append((p, q))
        return sorted(out, key=lambda e: _port_key(e[0]))

    def copy(self) -> "OpenGraph":
        return copy.deepcopy(self)

    def check(self) -> None:
        """Every port matched exactly once with matching objects."""
        expected = [("dom", i) for i in range(len(self.dom))] + [("cod", j) for j in range(len(self.cod))]
        for nid in self.nodes:
            expected += self.ports(nid)
        if set(expected) != set(self.mate) or len(expected) != len(self.mate):
            raise DomainError("open graph ports are not perfectly matched")
        for p, q in self.mate.items():
            if self.mate[q] != p:
                raise DomainError("mate relation is not symmetric")
            if self.port_obj(p) != self.port_obj(q):
                raise DomainError(f"edge {p}-{q} joins different objects")
            if (p[0] in ("out", "dom")) == (q[0] in ("out", "dom")):
                raise DomainError(f"edge {p}-{q} does not join a source to a target")


def _port_key(p):
    order = {"dom": 0, "out": 1, "in": 2, "cod": 3}
    if p[0] in ("dom", "cod"):
        return (order[p[0]], -1, p[1])
    return (order[p[0]], p[1], p[2])


# --- term <-> graph ---------------------------------------------------------

def to_graph(t: Term) -> OpenGraph:
    typecheck(t)
    g = OpenGraph(t.dom, t.cod)

    def build(t: Term):
        if isinstance(t, Empty):
            return [], []
        if isinstance(t, Gen):
            x = t.gen
            if isinstance(x, Spider):
                nd = g.add(SPIDER, x.n_in, x.n_out, obj=x.obj)
            elif isinstance(x, Cup):
                nd = g.add(SPIDER, 0, 2, obj=x.obj)
            elif isinstance(x, Cap):
                nd = g.add(SPIDER, 2, 0, obj=x.obj)
            elif isinstance(x, Identity):
                nd = g.add(WIRE, 1, 1, obj=x.obj)
            elif isinstance(x, Swap):
                w1 = g.add(WIRE, 1, 1, obj=x.left)
                w2 = g.add(WIRE, 1, 1, obj=x.right)
                return [("in", w1.id, 0), ("in", w2.id, 0)], [("out", w2.id, 0), ("out", w1.id, 0)]
            elif isinstance(x, Box):
                nd = g.add(BOX, len(x.dom), len(x.cod), box=x)
            else:
                raise TypeError(x)
            return [("in", nd.id, i) for i in range(nd.n)], [("out", nd.id, j) for j in range(nd.m)]
        if isinstance(t, Seq):
            i1, o1 = build(t.first)
            i2, o2 = build(t.second)
            for a, b in zip(o1, i2):
                g.connect(a, b)
            return i1, o2
        if isinstance(t, Par):
            i1, o1 = build(t.left)
            i2, o2 = build(t.right)
            return i1 + i2, o1 + o2
        raise TypeError(t)

    ins, outs = build(t)
    for i, p in enumerate(ins):
        g.connect(("dom", i), p)
    for j, p in enumerate(outs):
        g.connect(p, ("cod", j))
    for nid in [n for n, nd in g.nodes.items() if nd.kind == WIRE]:
        _splice(g, nid)
    return g


def _splice(g: OpenGraph, nid: int) -> None:
    """Remove a 1-in 1-out node, joining its neighbours."""
    src = g.mate.pop(("in", nid, 0))
    tgt = g.mate.pop(("out", nid, 0))
    del g.mate[src]
    del g.mate[tgt]
    if src == ("out", nid, 0):  # closed loop through this node only
        del g.nodes[nid]
        return
    g.connect(src, tgt)
    del g.nodes[nid]


def _node_gen(nd: Node) -> Term:
    if nd.kind == BOX:
        return Gen(nd.box)
    if nd.kind == SCALAR:
        return seq(Gen(Spider(nd.obj, 0, 1)), Gen(Spider(nd.obj, 1, 0)))
    return Gen(Spider(nd.obj, nd.n, nd.m))


def _order(g: OpenGraph) -> list[int]:
    """Topological order by creation index; cycles are broken at the
    smallest remaining node."""
    preds = {nid: set() for nid in g.nodes}
    for src, tgt in g.edges():
        if src[0] == "out" and tgt[0] == "in" and src[1] != tgt[1]:
            preds[tgt[1]].add(src[1])
    placed: list[int] = []
    left = set(g.nodes)
    while left:
        ready = sorted(n for n in left if not (preds[n] & left))
        nxt = ready[0] if ready else min(left)
        placed.append(nxt)
        left.remove(nxt)
    return placed


def from_graph(g: OpenGraph) -> Term:
    """Read a graph back as a term. Back edges become cup/cap snakes."""
    order = _order(g)
    pos = {nid: k for k, nid in enumerate(order)}
    back = []
    for src, tgt in g.edges():
        if src[0] == "out" and tgt[0] == "in" and pos[src[1]] >= pos[tgt[1]]:
            back.append(src)

    layers: list[Term] = []
    live: list[tuple] = [(("dom", i), o) for i, o in enumerate(g.dom)]

    def bring_to_end(keys: list) -> None:
        nonlocal live
        idx = [next(k for k, (key, _) in enumerate(live) if key == want) for want in keys]
        rest = [k for k in range(len(live)) if k not in idx]
        perm = rest + idx
        if perm != list(range(len(live))):
            layers.append(permutation([o for _, o in live], perm))
        live = [live[k] for k in perm]

    for src in back:
        o = g.port_obj(src)
        layers.append(par(ids([w for _, w in live]), Gen(Cup(o))))
        live += [(("pending", src), o), (src, o)]

    for nid in order:
        nd = g.nodes[nid]
        need = [g.mate[("in", nid, i)] for i in range(nd.n)]
        bring_to_end(need)
        keep = live[: len(live) - nd.n]
        layers.append(par(ids([o for _, o in keep]), _node_gen(nd)))
        outs = []
        for j in range(nd.m):
            p = ("out", nid, j)
            outs.append(((("closing", p) if p in back else p), nd.out_obj(j)))
        live = keep + outs
        for j in range(nd.m):
            p = ("out", nid, j)
            if p in back:
                bring_to_end([("pending", p), ("closing", p)])
                keep = live[:-2]
                layers.append(par(ids([o for _, o in keep]), Gen(Cap(g.port_obj(p)))))
                live = keep

    want = [g.mate[("cod", j)] for j in range(len(g.cod))]
    if sorted(map(_port_key, (k for k, _ in live))) != sorted(map(_port_key, want)):
        raise DomainError("graph boundary is inconsistent")
    bring_to_end(want)
    if not layers:
        return ids(g.dom)
    return seq(*layers)


# --- fusion -----------------------------------------------------------------

def _is_spider(g: OpenGraph, nid: int) -> bool:
    return g.nodes[nid].kind == SPIDER


def _word(nd: Node):
    return [("in", nd.id, i) for i in range(nd.n)] + [("out", nd.id, j) for j in range(nd.m - 1, -1, -1)]


def _merged_word(g: OpenGraph, u: Node, k: int, v: Node, j: int):
    """Cyclic leg order after joining out-port k of u to in-port j of v."""
    wu = _word(u)
    cut_u = wu.index(("out", u.id, k))
    wv = _word(v)
    cut_v = wv.index(("in", v.id, j))
    after_u = wu[cut_u + 1 :] + wu[:cut_u]
    after_v = wv[cut_v + 1 :] + wv[:cut_v]
    # walk u from out_k (exclusive), detour around v, return
    # u's cycle after out_k: out_{k-1}..out_0, ins, out_{m-1}..out_{k+1}
    # v is inserted between out_{k+1} and out_{k-1}, i.e. at the end of after_u
    return after_u + after_v


def _blocks(word) -> int:
    if not word:
        return 0
    kinds = [p[0] for p in word]
    changes = sum(1 for a, b in zip(kinds, kinds[1:] + kinds[:1]) if a != b)
    return max(changes, 1)


def _spider_from_word(word):
    """(inputs, outputs) for a cyclic word with at most two runs."""
    if not word:
        return [], []
    kinds = [p[0] for p in word]
    if all(k == "in" for k in kinds):
        return list(word), []
    if all(k == "out" for k in kinds):
        return [], list(reversed(word))
    n = len(word)
    start = next(i for i in range(n) if kinds[i] == "in" and kinds[i - 1] == "out")
    rot = word[start:] + word[:start]
    ins = [p for p in rot if p[0] == "in"]
    outs = [p for p in rot if p[0] == "out"]
    return ins, list(reversed(outs))


def _rebuild(g: OpenGraph, old_ids: list[int], ins: list, outs: list, obj: ObjectRef) -> None:
    """Replace ``old_ids`` by one spider whose legs are the given old ports."""
    new_id = min(old_ids)
    mates_in = [g.mate[p] for p in ins]
    mates_out = [g.mate[p] for p in outs]
    for nid in old_ids:
        for p in g.ports(nid):
            q = g.mate.pop(p, None)
            if q is not None and q in g.mate and g.mate[q] == p:
                del g.mate[q]
        del g.nodes[nid]
    if not ins and not outs:
        g.nodes[new_id] = Node(new_id, SCALAR, 0, 0, obj)
        return
    g.nodes[new_id] = Node(new_id, SPIDER, len(ins), len(outs), obj)
    for i, q in enumerate(mates_in):
        g.connect(q, ("in", new_id, i))
    for j, q in enumerate(mates_out):
        g.connect(("out", new_id, j), q)


def _candidates(g: OpenGraph):
    """Possible fusion steps: ("wire", nid), ("loop", src, tgt) or ("edge", src, tgt)."""
    out = []
    for nid in sorted(g.nodes):
        nd = g.nodes[nid]
        if nd.kind == SPIDER and nd.n == 1 and nd.m == 1 and g.mate[("in", nid, 0)] != ("out", nid, 0):
            out.append(("wire", nid))
    for src, tgt in g.edges():
        if src[0] != "out" or tgt[0] != "in":
            continue
        u, v = src[1], tgt[1]
        if not (_is_spider(g, u) and _is_spider(g, v)):
            continue
        nu, nv = g.nodes[u], g.nodes[v]
        if nu.obj != nv.obj:
            continue
        if nu.obj.commutative:
            out.append(("loop" if u == v else "edge", src, tgt))
            continue
        if u == v:
            continue
        shared = sum(1 for p in g.ports(u) if g.mate[p][0] in ("in", "out") and g.mate[p][1] == v)
        if shared != 1:
            continue
        if _blocks(_merged_word(g, nu, src[2], nv, tgt[2])) <= 2:
            out.append(("edge", src, tgt))
    return out


def _step(g: OpenGraph, cand) -> None:
    if cand[0] == "wire":
        _splice(g, cand[1])
        return
    _, src, tgt = cand
    u, v = g.nodes[src[1]], g.nodes[tgt[1]]
    if u.obj.commutative:
        group = {u.id, v.id}
        legs = [p for nid in sorted(group) for p in g.ports(nid)]
        ext = [p for p in legs if not (g.mate[p][0] in ("in", "out") and g.mate[p][1] in group)]
        ins = [p for p in ext if p[0] == "in"]
        outs = [p for p in ext if p[0] == "out"]
        _rebuild(g, sorted(group), ins, outs, u.obj)
        return
    word = _merged_word(g, u, src[2], v, tgt[2])
    ins, outs = _spider_from_word(word)
    _rebuild(g, [u.id, v.id], ins, outs, u.obj)


def _sort_legs(g: OpenGraph) -> None:
    """Leg order of a commutative spider is immaterial: line the legs up with
    the boundary so the read-back needs no permutations."""
    for nid, nd in g.nodes.items():
        if nd.kind != SPIDER or not nd.obj.commutative:
            continue
        ins = sorted((g.mate[("in", nid, i)] for i in range(nd.n)), key=_port_key)
        outs = sorted((g.mate[("out", nid, j)] for j in range(nd.m)), key=_port_key)
        for i, q in enumerate(ins):
            g.connect(q, ("in", nid, i))
        for j, q in enumerate(outs):
            g.connect(("out", nid, j), q)


def spider_fuse(g: OpenGraph, rng: random.Random | None = None, max_steps: int = 100000) -> OpenGraph:
    """Fuse to a fixpoint. With ``rng`` the next step is chosen at random."""
    g = g.copy()
    for _ in range(max_steps):
        cands = _candidates(g)
        if not cands:
            _sort_legs(g)
            return g
        _step(g, rng.choice(cands) if rng is not None else cands[0])
    raise DomainError("fusion did not terminate")


def normalize(t: Term) -> Term:
    return from_graph(spider_fuse(to_graph(t)))


# --- decision procedure -----------------------------------------------------

def normal_form_key(g: OpenGraph) -> tuple:
    """Canonical description of a fused pure commutative network: spiders as
    (object, set of boundary legs), scalars counted per object."""
    comps = []
    for nid, nd in g.nodes.items():
        if nd.kind == BOX or (nd.obj is not None and not nd.obj.commutative):
            raise UndecidableError("normal form key only covers pure commutative networks")
        if nd.kind == SCALAR:
            comps.append((nd.obj.name, "scalar", frozenset()))
            continue
        mates = [g.mate[p] for p in g.ports(nid)]
        if any(m[0] in ("in", "out") for m in mates):
            raise UndecidableError("network did not fuse to isolated spiders")
        comps.append((nd.obj.name, "spider", frozenset(mates)))
    for j in range(len(g.cod)):
        src = g.mate[("cod", j)]
        if src[0] == "dom":
            comps.append((g.cod[j].name, "spider", frozenset({src, ("cod", j)})))
    return tuple(sorted(Counter(comps).items(), key=repr))


def _pure_commutative(t: Term) -> bool:
    from .diagram import generators

    for x in generators(t):
        if isinstance(x, Box):
            return False
        for o in tuple(x.dom) + tuple(x.cod):
            if not o.commutative:
                return False
    return True


def frob_equal(t1: Term, t2: Term) -> bool:
    """Equality modulo the spider theorem for pure commutative networks."""
    for t in (t1, t2):
        typecheck(t)
        if not _pure_commutative(t):
            raise UndecidableError("frob_equal only decides pure Frobenius terms on commutative objects; compare numerically")
    if t1.dom != t2.dom or t1.cod != t2.cod:
        return False
    k1 = normal_form_key(spider_fuse(to_graph(t1)))
    k2 = normal_form_key(spider_fuse(to_graph(t2)))
    return k1 == k2


# --- numeric contraction of graphs -----------------------------------------

def _contract_pair(a, la, b, lb):
    labels = sorted(set(la) | set(lb))
    rel = {x: i for i, x in enumerate(labels)}
    shared = set(la) & set(lb)
    out = [x for x in la if x not in shared] + [x for x in lb if x not in shared]
    res = np.einsum(a, [rel[x] for x in la], b, [rel[x] for x in lb], [rel[x] for x in out])
    return res, out


def _self_trace(t, lab):
    counts = Counter(lab)
    if all(c == 1 for c in counts.values()):
        return t, lab
    labels = sorted(set(lab))
    rel = {x: i for i, x in enumerate(labels)}
    out = [x for x in lab if counts[x] == 1]
    return np.einsum(t, [rel[x] for x in lab], [rel[x] for x in out]), out


def eval_graph(g: OpenGraph, backend: Backend, bindings: Mapping | None = None) -> np.ndarray:
    """Contract the network directly; returns the (W(cod), W(dom)) matrix.

    Works for linear backends (standard classical and CDO)."""
    if isinstance(backend, ClassicalBackend) and backend.semiring.name != "standard":
        raise DomainError("graph contraction supports linear backends only")
    bindings = bindings or {}
    label = {}
    nxt = 0
    for src, tgt in g.edges():
        label[src] = label[tgt] = nxt
        nxt += 1
    wd = backend.wire_dim
    tensors = []
    for nid in sorted(g.nodes):
        nd = g.nodes[nid]
        if nd.kind == SCALAR:
            m = backend.compose(backend.gens(nd.obj)["counit"], backend.gens(nd.obj)["unit"])
        elif nd.kind == BOX:
            m = _binding(backend, nd.box, bindings)
        else:
            m = backend.spider(nd.obj, nd.n, nd.m)
        shape = [wd(nd.out_obj(j)) for j in range(nd.m)] + [wd(nd.in_obj(i)) for i in range(nd.n)]
        labs = [label[("out", nid, j)] for j in range(nd.m)] + [label[("in", nid, i)] for i in range(nd.n)]
        tensors.append(_self_trace(m.data.reshape(shape), labs))
    # boundary: give each boundary port a fresh label, joined by an identity
    out_labels = []
    for j in range(len(g.cod)):
        out_labels.append(label[("cod", j)])
    dom_labels = []
    for i in range(len(g.dom)):
        p = ("dom", i)
        q = g.mate[p]
        if q[0] == "cod":
            fresh = nxt
            nxt += 1
            d = wd(g.dom[i])
            tensors.append((np.eye(d, dtype=backend.dtype), [label[q], fresh]))
            dom_labels.append(fresh)
        else:
            dom_labels.append(label[p])
    while len(tensors) > 1:
        best = None
        for x in range(len(tensors)):
            for y in range(x + 1, len(tensors)):
                sx, sy = set(tensors[x][1]), set(tensors[y][1])
                if not (sx & sy):
                    continue
                size = np.prod([1] + [s for s, l in zip(tensors[x][0].shape, tensors[x][1]) if l not in sy]) * np.prod(
                    [1] + [s for s, l in zip(tensors[y][0].shape, tensors[y][1]) if l not in sx]
                )
                if best is None or size < best[0]:
                    best = (size, x, y)
        if best is None:
            x, y = 0, 1
        else:
            _, x, y = best
        (a, la), (b, lb) = tensors[x], tensors[y]
        res = _contract_pair(a, la, b, lb)
        tensors = [t for k, t in enumerate(tensors) if k not in (x, y)] + [res]
    if tensors:
        t, lab = tensors[0]
    else:
        t, lab = np.ones((), dtype=backend.dtype), []
    want = out_labels + dom_labels
    if sorted(lab) != sorted(want):
        raise DomainError("graph contraction left dangling labels")
    perm = [lab.index(x) for x in want]
    t = np.transpose(t, perm) if perm else t
    return np.asarray(t).reshape(backend.width(g.cod), backend.width(g.dom))


# --- random networks ---------------------------------------------------------

def random_network(rng: random.Random, obj: ObjectRef, max_nodes: int = 8, max_boundary: int = 8, extra_edges: int = 2) -> OpenGraph:
    """A random connected network of spiders on one object (for testing)."""
    k = rng.randint(1, max_nodes)
    need_in = [0] * k
    need_out = [0] * k
    tree = []
    for v in range(1, k):
        u = rng.randrange(v)
        if rng.random() < 0.5:
            tree.append((u, v))
            need_out[u] += 1
            need_in[v] += 1
        else:
            tree.append((v, u))
            need_out[v] += 1
            need_in[u] += 1
    n_in = [need_in[i] + rng.randint(0, 1) for i in range(k)]
    n_out = [need_out[i] + rng.randint(0, 1) for i in range(k)]
    for i in range(k):
        if n_in[i] + n_out[i] == 0:
            n_out[i] = 1
    g = OpenGraph((), ())
    nodes = [g.add(SPIDER, n_in[i], n_out[i], obj=obj) for i in range(k)]
    free_in = {i: list(range(n_in[i])) for i in range(k)}
    free_out = {i: list(range(n_out[i])) for i in range(k)}
    for i in range(k):
        rng.shuffle(free_in[i])
        rng.shuffle(free_out[i])
    for u, v in tree:
        g.connect(("out", nodes[u].id, free_out[u].pop()), ("in", nodes[v].id, free_in[v].pop()))
    for _ in range(extra_edges):
        us = [i for i in range(k) if free_out[i]]
        vs = [i for i in range(k) if free_in[i]]
        if not us or not vs or rng.random() < 0.3:
            break
        u, v = rng.choice(us), rng.choice(vs)
        g.connect(("out", nodes[u].id, free_out[u].pop()), ("in", nodes[v].id, free_in[v].pop()))
    ins = [("in", nodes[i].id, p) for i in range(k) for p in free_in[i]]
    outs = [("out", nodes[i].id, p) for i in range(k) for p in free_out[i]]
    while len(ins) + len(outs) > max_boundary:
        # close surplus legs pairwise where possible, else cap them with a counit/unit spider
        if ins and outs:
            a, b = ins.pop(), outs.pop()
            g.connect(b, a)
        elif outs:
            p = outs.pop()
            e = g.add(SPIDER, 1, 0, obj=obj)
            g.connect(p, ("in", e.id, 0))
        else:
            p = ins.pop()
            u = g.add(SPIDER, 0, 1, obj=obj)
            g.connect(("out", u.id, 0), p)
    rng.shuffle(ins)
    rng.shuffle(outs)
    g.dom = (obj,) * len(ins)
    g.cod = (obj,) * len(outs)
    for i, p in enumerate(ins):
        g.connect(("dom", i), p)
    for j, p in enumerate(outs):
        g.connect(p, ("cod", j))
    return g
