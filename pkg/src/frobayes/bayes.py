"""Bayesian operations on top of any backend.

Everything here is written against the ``Backend`` interface, so the same
code conditions probability vectors, negative-log vectors and density
operators. States are points ``I -> A1 ... Ak``; conditionals keep the
conditioned objects first and the conditioning objects last.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .diagram import CLASSICAL, QUANTUM, ObjectRef
from .errors import DomainError, KindError, ShapeError
from .models import NEGLOG, STANDARD, Backend, CdoBackend, ClassicalBackend, Map

Names = Sequence  # of str or ObjectRef


# --- data types ---------------------------------------------------------------

@dataclass(frozen=True)
class JointState:
    backend: Backend = field(compare=False)
    objects: tuple
    point: Map = field(compare=False)

    @property
    def data(self) -> np.ndarray:
        return self.point.data[:, 0]

    def operator(self) -> np.ndarray:
        if not isinstance(self.backend, CdoBackend):
            raise KindError("only quantum states have a density operator")
        return self.backend.to_operator(self.point)


MarginalState = JointState


@dataclass(frozen=True)
class Modifier:
    backend: Backend = field(compare=False)
    objects: tuple
    map: Map = field(compare=False)
    state: Map = field(compare=False)


@dataclass(frozen=True)
class ConditionalState:
    backend: Backend = field(compare=False)
    target: tuple
    given: tuple
    point: Map = field(compare=False)
    given_marginal: Map | None = field(default=None, compare=False)

    @property
    def objects(self) -> tuple:
        return self.target + self.given


@dataclass(frozen=True)
class ConditionalProcess:
    backend: Backend = field(compare=False)
    dom: tuple
    cod: tuple
    map: Map = field(compare=False)
    given_marginal: Map | None = field(default=None, compare=False)


# --- construction -------------------------------------------------------------

def make_joint(backend: Backend, objects: Sequence[ObjectRef], data) -> JointState:
    """Joint state from raw backend data (a semiring vector, or a density
    operator for quantum backends)."""
    objects = tuple(objects)
    if isinstance(backend, CdoBackend):
        rho = np.asarray(data, dtype=complex)
        if rho.ndim == 1 or rho.shape[1] == 1:
            n = math.prod(o.dim for o in objects)
            rho = rho.reshape(n, n)
        if not linalg.is_hermitian(rho, backend.tol) or not linalg.is_psd(rho, backend.tol):
            raise DomainError("quantum joint state must be Hermitian positive semidefinite")
        return JointState(backend, objects, backend.from_operator(objects, rho))
    p = backend.point(objects, data)
    return JointState(backend, objects, p)


def from_probabilities(backend: Backend, objects: Sequence[ObjectRef], p) -> JointState:
    """Classical joint from probabilities, embedded into the backend's semiring."""
    if not isinstance(backend, ClassicalBackend):
        raise KindError("from_probabilities needs a classical backend")
    p = np.asarray(p, dtype=float).ravel()
    if np.any(p < 0):
        raise DomainError("probabilities must be nonnegative")
    return make_joint(backend, objects, backend.semiring.embed(p))


def probabilities(s: JointState | ConditionalState) -> np.ndarray:
    b = s.backend
    if not isinstance(b, ClassicalBackend):
        raise KindError("probabilities are only defined for classical backends")
    return b.semiring.extract(s.point.data[:, 0])


def _resolve(objs: tuple, names) -> tuple:
    out = []
    for n in names:
        key = n.name if isinstance(n, ObjectRef) else n
        hit = [o for o in objs if o.name == key]
        if not hit:
            raise DomainError(f"unknown object {key!r}")
        out.append(hit[0])
    if len(set(out)) != len(out):
        raise DomainError("object listed twice")
    return tuple(out)


def _positions(objs: tuple, sub: tuple) -> list[int]:
    return [objs.index(o) for o in sub]


def is_normalized(s: JointState) -> bool:
    return normalization_residual(s) <= s.backend.tol.bound(1.0)


def normalization_residual(s: JointState) -> float:
    b = s.backend
    tot = b.total(s.point)
    if isinstance(b, ClassicalBackend):
        return abs(float(np.real(tot)) - b.semiring.one)
    return abs(complex(tot) - 1.0)


# --- marginals, modifiers, conditionals --------------------------------------

def marginalize(s: JointState, keep: Names) -> MarginalState:
    keep = _resolve(s.objects, keep)
    b = s.backend
    drop = [i for i, o in enumerate(s.objects) if o not in keep]
    p = s.point
    if drop:
        p = b.apply(b.counit([s.objects[i] for i in drop]), p, drop)
    p = b.reorder(p, _positions(p.cod, keep))
    return JointState(b, keep, p)


def modifier_of(s: MarginalState) -> Modifier:
    b = s.backend
    if not b.is_psd_point(s.point):
        raise DomainError("state is not positive")
    return Modifier(b, s.objects, b.modifier(s.point), s.point)


def modifier_inverse(m: Modifier) -> Modifier:
    b = m.backend
    return Modifier(b, m.objects, b.modifier_inverse(m.state), m.state)


def support_of(s: MarginalState) -> Map:
    return s.backend.support(s.point)


def conditional(s: JointState, target: Names, given: Names) -> ConditionalState:
    target = _resolve(s.objects, target)
    given = _resolve(s.objects, given)
    if set(target) & set(given):
        raise DomainError("target and given must be disjoint")
    if not target:
        raise DomainError("target must be nonempty")
    b = s.backend
    m = marginalize(s, target + given)
    pg = marginalize(s, given)
    k = len(target)
    pt = b.apply(b.modifier_inverse(pg.point), m.point, list(range(k, k + len(given))))
    return ConditionalState(b, target, given, pt, pg.point)


def conditional_residual(c: ConditionalState) -> float:
    """Discarding the target must leave the unit on the given support."""
    b = c.backend
    lhs = b.apply(b.counit(c.target), c.point, list(range(len(c.target))))
    if c.given_marginal is not None:
        rhs = b.support_point(c.given_marginal)
    else:
        rhs = b.unit(c.given)
    return b.residual(lhs, rhs)


def chain(c: ConditionalState, prior: MarginalState) -> JointState:
    """Re-attach the prior of the given objects: the inverse of conditioning."""
    b = c.backend
    if prior.objects != c.given:
        raise DomainError("prior does not live on the conditioning objects")
    k = len(c.target)
    p = b.apply(b.modifier(prior.point), c.point, list(range(k, k + len(c.given))))
    return JointState(b, c.objects, p)


def bayes_invert(c: ConditionalState, prior_target: MarginalState, prior_given: MarginalState) -> ConditionalState:
    """Swap the roles in c = P(T|G).

    ``prior_target`` is the prior of the new target (the objects c is
    conditioned on) and ``prior_given`` the prior of the new given objects.
    Classically this is p(G|T) = p(T|G) p(G) / p(T)."""
    b = c.backend
    if prior_target.objects != c.given or prior_given.objects != c.target:
        raise DomainError("priors are incompatible with the conditional's objects")
    joint = chain(c, prior_target)
    k, n = len(c.target), len(c.objects)
    order = list(range(k, n)) + list(range(k))
    jp = b.reorder(joint.point, order)
    nk = len(c.given)
    out = b.apply(b.modifier_inverse(prior_given.point), jp, list(range(nk, n)))
    return ConditionalState(b, c.given, c.target, out, prior_given.point)


# --- processes and transposition --------------------------------------------

def to_process(c: ConditionalState) -> ConditionalProcess:
    """P = (id_T (x) cap_G) . (c (x) id_G)."""
    b = c.backend
    k, n = len(c.target), len(c.objects)
    x = b.tensor(c.point, b.identity(c.given))
    m = b.apply(b.cap(c.given), x, list(range(k, n + len(c.given))))
    return ConditionalProcess(b, c.given, c.target, m, c.given_marginal)


def to_state(p: ConditionalProcess) -> ConditionalState:
    """c = (P (x) id_G) . cup_G."""
    b = p.backend
    x = b.apply(p.map, b.cup(p.dom), list(range(len(p.dom))))
    return ConditionalState(b, p.cod, p.dom, x, p.given_marginal)


def modified_cup(s: MarginalState) -> Map:
    b = s.backend
    k = len(s.objects)
    return b.apply(b.modifier(s.point), b.cup(s.objects), list(range(k, 2 * k)))


def modified_cap(s: MarginalState) -> Map:
    b = s.backend
    k = len(s.objects)
    return b.apply_dom(b.cap(s.objects), b.modifier_inverse(s.point), list(range(k, 2 * k)))


def modified_snake(s: MarginalState) -> Map:
    """(id (x) modified cap) . (modified cup (x) id); equals the support projector."""
    b = s.backend
    k = len(s.objects)
    x = b.tensor(modified_cup(s), b.identity(s.objects))
    return b.apply(modified_cap(s), x, list(range(k, 3 * k)))


def modified_transpose(p: ConditionalProcess, joint: JointState, new_givens: Names, new_conclusions: Names) -> ConditionalProcess:
    """Turn P(T|G) into P(T'|G') by bending every given up with the modified
    cup and every new given down with the modified cap."""
    b = p.backend
    objs = p.cod + p.dom
    ng = _resolve(objs, new_givens)
    nc = _resolve(objs, new_conclusions)
    if set(ng) & set(nc) or set(ng) | set(nc) != set(objs):
        raise DomainError("new givens and conclusions must partition the objects")
    pg = marginalize(joint, p.dom)
    j = b.apply(p.map, modified_cup(pg), list(range(len(p.dom))))  # on (T, G)
    j = b.reorder(j, _positions(j.cod, nc + ng))
    pg2 = marginalize(joint, ng)
    k = len(nc)
    x = b.tensor(j, b.identity(ng))
    out = b.apply(modified_cap(pg2), x, list(range(k, k + 2 * len(ng))))
    return ConditionalProcess(b, ng, nc, out, pg2.point)


def process(s: JointState, target: Names, given: Names) -> ConditionalProcess:
    return to_process(conditional(s, target, given))


# --- conditional independence -------------------------------------------------

CI_VARIANTS = ("CI1_L", "CI1_R", "CI2_L", "CI2_R", "F_L", "F_R")


@dataclass(frozen=True)
class CIResult:
    variant: str
    holds: bool
    residual: float
    bound: float


def _restrict(b: Backend, m: Map, marg: JointState) -> Map:
    return b.compose(m, b.support(marg.point))


def _compare(b: Backend, lhs: Map, rhs: Map, marg: JointState, name: str) -> CIResult:
    lhs, rhs = _restrict(b, lhs, marg), _restrict(b, rhs, marg)
    r = b.residual(lhs, rhs)
    bound = b.bound(lhs, rhs)
    return CIResult(name, bool(r <= bound), float(r), float(bound))


def _ci_parts(s: JointState, A, B, C):
    A, B, C = (_resolve(s.objects, x) for x in (A, B, C))
    if set(A) & set(B) or set(A) & set(C) or set(B) & set(C):
        raise DomainError("A, B and C must be disjoint")
    if not A or not B:
        raise DomainError("A and B must be nonempty")
    return A, B, C


def _pooled_product(s, A, B, C, left: bool) -> Map:
    """(P(A|C) (x) P(B|C)) . comult_C, or its mirror (B first, then swapped)."""
    b = s.backend
    pa, pb = process(s, A, C).map, process(s, B, C).map
    if left:
        return b.compose(b.tensor(pa, pb), b.comult(C))
    m = b.compose(b.tensor(pb, pa), b.comult(C))
    return b.reorder(m, list(range(len(B), len(B) + len(A))) + list(range(len(B))))


def _hypothetical(s, A, B, C, left: bool) -> Map:
    """Treat P(A|C) (x) discard_B as P(A|BC), re-joint it with p(BC), then
    condition on C. Output C -> (A, B)."""
    b = s.backend
    X, Y = (A, B) if left else (B, A)
    hyp = b.compose(process(s, X, C).map, b.tensor(b.counit(Y), b.identity(C)))
    c = to_state(ConditionalProcess(b, Y + C, X, hyp))  # on (X, Y, C)
    pyc = marginalize(s, Y + C)
    kx = len(X)
    j = b.apply(b.modifier(pyc.point), c.point, list(range(kx, len(c.objects))))
    pc = marginalize(s, C)
    n = len(j.cod)
    cond = b.apply(b.modifier_inverse(pc.point), j, list(range(n - len(C), n)))
    cond = b.reorder(cond, _positions(cond.cod, A + B + C))
    return to_process(ConditionalState(b, A + B, C, cond)).map


def ci_test(s: JointState, A: Names, B: Names, C: Names, variant: str = "CI1_L") -> CIResult:
    """Evaluate both sides of one conditional-independence identity, restricted
    to the support of the conditioning marginal."""
    if variant not in CI_VARIANTS:
        raise DomainError(f"unknown variant {variant!r}")
    A, B, C = _ci_parts(s, A, B, C)
    b = s.backend
    if variant in ("CI1_L", "CI1_R"):
        X, Y = (A, B) if variant == "CI1_L" else (B, A)
        lhs = process(s, X, Y + C).map
        rhs = b.compose(process(s, X, C).map, b.tensor(b.counit(Y), b.identity(C)))
        return _compare(b, lhs, rhs, marginalize(s, Y + C), variant)
    pc = marginalize(s, C)
    left = variant.endswith("_L")
    q = _pooled_product(s, A, B, C, left)
    if variant.startswith("CI2"):
        return _compare(b, process(s, A + B, C).map, q, pc, variant)
    return _compare(b, _hypothetical(s, A, B, C, left), q, pc, variant)


def ci1_prime(s: JointState, A: Names, B: Names, C: Names, side: str = "L") -> CIResult:
    """P(AB|C) against the re-jointed hypothetical conditional."""
    A, B, C = _ci_parts(s, A, B, C)
    b = s.backend
    lhs = process(s, A + B, C).map
    rhs = _hypothetical(s, A, B, C, side == "L")
    return _compare(b, lhs, rhs, marginalize(s, C), f"CI1_{side}'")


@dataclass(frozen=True)
class ImplicationReport:
    side: str
    results: tuple
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def ci_two_imply_third(s: JointState, A: Names, B: Names, C: Names, side: str = "L") -> ImplicationReport:
    """Whenever two of F, CI1', CI2 hold, the third must hold within 10x the bound."""
    rs = (
        ci_test(s, A, B, C, f"F_{side}"),
        ci1_prime(s, A, B, C, side),
        ci_test(s, A, B, C, f"CI2_{side}"),
    )
    bad = []
    for k in range(3):
        others = [rs[j] for j in range(3) if j != k]
        if all(o.holds for o in others) and rs[k].residual > 10 * rs[k].bound:
            bad.append(rs[k].variant)
    return ImplicationReport(side, rs, tuple(bad))


# --- pooling -----------------------------------------------------------------

@dataclass(frozen=True)
class PoolPriors:
    A: MarginalState
    B: MarginalState
    AB: MarginalState
    C: MarginalState

    @staticmethod
    def from_joint(s: JointState, A: Names, B: Names, C: Names) -> "PoolPriors":
        return PoolPriors(marginalize(s, A), marginalize(s, B), marginalize(s, tuple(A) + tuple(B)), marginalize(s, C))


def _lift(b: Backend, p: Map, full: tuple) -> Map:
    others = [o for o in full if o not in p.cod]
    x = b.tensor(p, b.unit(others))
    return b.reorder(x, _positions(x.cod, full))


def pool(c_given_A: ConditionalState, c_given_B: ConditionalState, priors: PoolPriors, variant: str = "L") -> ConditionalState:
    """P(C|AB) from P(C|A), P(C|B) and the priors.

    Built from Frobenius products of points on (C, A, B):
    (AB)^-1/2 A^1/2 B^1/2 P(C|B) C^-1 P(C|A) B^1/2 A^1/2 (AB)^-1/2 for the
    left variant; the right variant exchanges P(C|A) and P(C|B). Classically
    every factor commutes and this is p(A)p(B)/p(AB) * p(C|A)p(C|B)/p(C).
    """
    b = c_given_A.backend
    C = c_given_A.target
    A, B = c_given_A.given, c_given_B.given
    if c_given_B.target != C:
        raise DomainError("both conditionals must have the same target")
    if priors.A.objects != A or priors.B.objects != B or priors.C.objects != C or priors.AB.objects != A + B:
        raise DomainError("priors are incompatible with the conditionals")
    full = C + A + B
    L = lambda p: _lift(b, p, full)  # noqa: E731
    sq_a = L(b.sqrt_point(priors.A.point))
    sq_b = L(b.sqrt_point(priors.B.point))
    isq_ab = L(b.sqrt_point(b.frob_inverse(priors.AB.point)))
    inv_c = L(b.frob_inverse(priors.C.point))
    ca, cb = L(c_given_A.point), L(c_given_B.point)
    first, second = (cb, ca) if variant == "L" else (ca, cb)
    factors = [isq_ab, sq_a, sq_b, first, inv_c, second, sq_b, sq_a, isq_ab]
    out = factors[0]
    for f in factors[1:]:
        out = b.product(out, f)
    return ConditionalState(b, C, A + B, out, priors.AB.point)


# --- graphoid axioms ----------------------------------------------------------

GRAPHOID_AXIOMS = ("symmetry", "decomposition", "weak_union", "contraction")


@dataclass(frozen=True)
class GraphoidReport:
    axiom: str
    antecedents: tuple
    consequent: CIResult
    experimental: bool

    @property
    def applicable(self) -> bool:
        return all(a.holds for a in self.antecedents)

    @property
    def passed(self) -> bool:
        return (not self.applicable) or self.consequent.holds


def graphoid_check(s: JointState, axiom: str, U: Names, W: Names, Y: Names = (), X: Names = (), variant: str = "CI1_L") -> GraphoidReport:
    """Instantiate one semi-graphoid axiom with I(P, Q | R) read as ``variant``."""
    U, W, Y, X = (tuple(_resolve(s.objects, v)) for v in (U, W, Y, X))
    I = lambda p, q, r: ci_test(s, p, q, r, variant)  # noqa: E731
    if axiom == "symmetry":
        ante, cons = (I(U, W, X),), I(W, U, X)
    elif axiom == "decomposition":
        ante, cons = (I(U, W + Y, X),), I(U, W, X)
    elif axiom == "weak_union":
        ante, cons = (I(U, W + Y, X),), I(U, W, X + Y)
    elif axiom == "contraction":
        ante, cons = (I(U, W, X), I(U, Y, X + W)), I(U, W + Y, X)
    else:
        raise DomainError(f"unknown axiom {axiom!r}")
    return GraphoidReport(axiom, ante, cons, isinstance(s.backend, CdoBackend))


# --- entropy -----------------------------------------------------------------

def _plogs(p: np.ndarray, s: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * s[mask]))


def entropy(s: JointState, kind: str = "joint", target: Names = (), given: Names = ()) -> float:
    """Shannon entropy (nats) as the pairing of p with its negative-log form."""
    if not isinstance(s.backend, ClassicalBackend):
        raise KindError("entropy is only defined for classical states")
    p = probabilities(s)
    nl = from_probabilities(ClassicalBackend(NEGLOG, s.backend.tol), s.objects, p)
    std = from_probabilities(ClassicalBackend(STANDARD, s.backend.tol), s.objects, p)
    if kind == "joint":
        return _plogs(probabilities(std), nl.data)
    if kind == "marginal":
        m_nl = marginalize(nl, target)
        m_p = marginalize(std, target)
        return _plogs(m_p.data, m_nl.data)
    if kind == "conditional":
        c_nl = conditional(nl, target, given)
        p_tg = marginalize(std, tuple(c_nl.target) + tuple(c_nl.given))
        return _plogs(p_tg.data, c_nl.point.data[:, 0])
    raise DomainError(f"unknown entropy kind {kind!r}")


# --- box bindings derived from a joint ------------------------------------------

def box_value(s: JointState, flavor: str, target: Names, given: Names = ()) -> Map:
    b = s.backend
    if flavor == "conditional":
        return conditional(s, target, given).point
    if flavor == "process":
        return process(s, target, given).map
    m = marginalize(s, target)
    if flavor == "state":
        return m.point
    if flavor == "sqrt_point":
        return b.sqrt_point(m.point)
    if flavor == "modifier":
        return b.modifier(m.point)
    if flavor == "modifier_inverse":
        return b.modifier_inverse(m.point)
    if flavor == "support":
        return b.support(m.point)
    raise DomainError(f"flavor {flavor!r} has no derived value")
