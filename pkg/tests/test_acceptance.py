"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (printed with ``-s`` and repeated in the
terminal summary) and then asserts at the stated tolerance.
"""
import random
import time

import numpy as np

from acceptance_log import record
from cli_cases import CASES
from conftest import cobj, qobj, random_density, random_probs
from frobayes import bayes as B
from frobayes import cli, dcc, linalg
from frobayes.diagram import ident, spider
from frobayes.models import (NEGLOG, CdoBackend, ClassicalBackend, broadcasting_map, choi, is_cp,
                             verify_frobenius_laws)
from frobayes.rewrite import SCALAR, SPIDER, eval_graph, from_graph, normal_form_key, random_network, spider_fuse

STD = ClassicalBackend()
NL = ClassicalBackend(NEGLOG)
CDO = CdoBackend()


def _rng(n: int) -> np.random.Generator:
    return np.random.default_rng(1000 + n)


def test_criterion_01_frobenius_laws():
    t0 = time.perf_counter()
    cases = [(STD, cobj("A", n)) for n in (2, 3, 4, 5)]
    cases += [(NL, cobj("A", n)) for n in (2, 3, 4)]
    cases += [(CDO, qobj("A", d)) for d in (2, 3)]
    worst = 0.0
    for backend, obj in cases:
        rep = verify_frobenius_laws(backend, obj)
        for law in ("associativity", "unit_left", "unit_right", "frobenius_left", "frobenius_right"):
            worst = max(worst, rep.residuals[law])
        worst = max(worst, rep.max_residual)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 10
    record(1, ok, f"max law residual {worst:.1e} over {len(cases)} objects in {elapsed:.2f} s")
    assert ok


def test_criterion_02_spider_theorem():
    r = random.Random(2)
    worst, unfused, mismatched, order_dependent = 0.0, 0, 0, 0
    nets = []
    for _ in range(500):
        obj = cobj("A", r.randint(1, 4))
        g = random_network(r, obj, max_nodes=8)
        nets.append(g)
        f = spider_fuse(g)
        n, m = len(g.dom), len(g.cod)
        kinds = sorted(nd.kind for nd in f.nodes.values())
        # Spider(0,0) is kept as a scalar node and Spider(1,1) as a bare wire
        if (n, m) == (0, 0):
            unfused += kinds != [SCALAR]
        elif (n, m) == (1, 1):
            unfused += from_graph(f) not in (ident(obj), spider(obj, 1, 1))
        elif kinds != [SPIDER]:
            unfused += 1
        elif from_graph(f) != spider(obj, n, m):
            mismatched += 1
        worst = max(worst, float(np.max(np.abs(eval_graph(f, STD) - eval_graph(g, STD)), initial=0.0)))
    for k, g in enumerate(nets[:100]):
        keys = {normal_form_key(spider_fuse(g, random.Random(7919 * k + j))) for j in range(3)}
        order_dependent += len(keys) != 1
    ok = worst <= 1e-9 and unfused == 0 and mismatched == 0 and order_dependent == 0
    record(2, ok, f"500 networks: unfused {unfused}, not Spider(n,m) {mismatched}, max eval diff {worst:.1e}; "
                  f"order-dependent replays {order_dependent}/100")
    assert ok


def test_criterion_03_classical_bayes_round_trip():
    rng = _rng(3)
    worst, deficient = 0.0, 0
    for k in range(200):
        da, db = (int(v) for v in rng.integers(2, 6, size=2))
        p = random_probs(rng, da * db).reshape(da, db)
        if k % 3 == 0:
            p[:, rng.integers(db)] = 0
            deficient += 1
        if k % 5 == 0:
            p[rng.integers(da), :] = 0
        p /= p.sum()
        s = B.from_probabilities(STD, [cobj("A", da), cobj("B", db)], p.ravel())
        inv = B.bayes_invert(B.conditional(s, ["B"], ["A"]), B.marginalize(s, ["A"]), B.marginalize(s, ["B"]))
        direct = B.conditional(s, ["A"], ["B"])
        worst = max(worst, float(np.max(np.abs(inv.point.data - direct.point.data))))
    ok = worst <= 1e-10
    record(3, ok, f"200 joints ({deficient} with zero columns): max deviation {worst:.1e}")
    assert ok


def test_criterion_04_quantum_bayes_rule():
    rng = _rng(4)
    worst_full, worst_def = 0.0, 0.0
    for k in range(200):
        da, db = (int(v) for v in rng.choice([2, 3], size=2))
        objs = [qobj("A", da), qobj("B", db)]
        for rank, bucket in ((None, "full"), (int(rng.integers(1, min(da, db) + 1)), "def")):
            s = B.make_joint(CDO, objs, random_density(rng, da * db, rank=rank))
            pa, pb = B.marginalize(s, ["A"]), B.marginalize(s, ["B"])
            inv = B.bayes_invert(B.conditional(s, ["B"], ["A"]), pa, pb)
            direct = B.conditional(s, ["A"], ["B"])
            sup = CDO.support(pb.point)
            lhs = CDO.apply(sup, inv.point, [1])
            rhs = CDO.apply(sup, direct.point, [1])
            r = float(np.max(np.abs(CDO.to_operator(lhs) - CDO.to_operator(rhs))))
            if bucket == "full":
                worst_full = max(worst_full, r)
            else:
                worst_def = max(worst_def, r)
    ok = worst_full <= 1e-8 and worst_def <= 1e-7
    record(4, ok, f"200 full-rank: max {worst_full:.1e} (tol 1e-8); 200 rank-deficient on supports: "
                  f"max {worst_def:.1e} (tol 1e-7)")
    assert ok


def test_criterion_05_broadcasting():
    worst = 0.0
    for d in (1, 2, 3, 4):
        b = broadcasting_map(d)
        for x in np.eye(d * d):
            out = (b @ x).reshape(d, d, d, d)
            worst = max(worst, np.abs(np.einsum("ijkj->ik", out).ravel() - x).max())
            worst = max(worst, np.abs(np.einsum("ijil->jl", out).ravel() - x).max())
    rep = is_cp(broadcasting_map(2), 2, 4)
    # corroboration: X -> ((X(x)1)S + S(X(x)1))/2 preserves Hermiticity, so its Choi matrix is Hermitian
    swap = np.eye(4)[[0, 2, 1, 3]]
    b = broadcasting_map(2)
    bs = (b + np.kron(swap, swap) @ b) / 2
    js = choi(bs, 2, 4)
    sym_min = float(np.linalg.eigvalsh(js).min())
    ok = (worst <= 1e-12 and rep.min_eigenvalue < -0.1 and sym_min < -0.1
          and np.abs(js - js.conj().T).max() < 1e-14)
    record(5, ok, f"marginal residual {worst:.1e} (d<=4); Choi witness {rep.min_eigenvalue:.3f} "
                  f"(Hermitian part, Choi non-Hermitian by {rep.hermitian_residual:.2f}); "
                  f"symmetrized map min eigenvalue {sym_min:.3f}")
    assert ok


def test_criterion_06_representation_independence():
    rng = _rng(6)
    worst, worst_ent = 0.0, 0.0
    for _ in range(100):
        dims = tuple(int(v) for v in rng.integers(2, 4, size=3))
        objs = [cobj(n, d) for n, d in zip("ABC", dims)]
        p = random_probs(rng, int(np.prod(dims)))
        std, nl = B.from_probabilities(STD, objs, p), B.from_probabilities(NL, objs, p)
        pairs = [(B.marginalize(std, k), B.marginalize(nl, k)) for k in (["A"], ["B", "C"], ["C", "A"])]
        pairs += [(B.conditional(std, t, g), B.conditional(nl, t, g))
                  for t, g in ((["A"], ["B"]), (["A", "B"], ["C"]), (["C"], ["A", "B"]))]
        inv = lambda s: B.bayes_invert(B.conditional(s, ["B"], ["A"]), B.marginalize(s, ["A"]),  # noqa: E731
                                       B.marginalize(s, ["B"]))
        pairs.append((inv(std), inv(nl)))
        for a, b in pairs:
            x, y = B.probabilities(a), B.probabilities(b)
            worst = max(worst, float(np.max(np.abs(x - y) / np.maximum(np.abs(x), 1e-300), where=x > 0, initial=0.0)))
        s_ab = B.entropy(std, "conditional", ["A"], ["B"])
        s_ba = B.entropy(std, "conditional", ["B"], ["A"])
        e = abs(s_ab - (s_ba + B.entropy(std, "marginal", ["A"]) - B.entropy(std, "marginal", ["B"])))
        worst_ent = max(worst_ent, e)
    ok = worst <= 1e-8 and worst_ent <= 1e-10
    record(6, ok, f"100 joints: max relative neg-log vs standard deviation {worst:.1e}; "
                  f"entropic Bayes residual {worst_ent:.1e}")
    assert ok


def _markov(rng, da, db, dc):
    pc = random_probs(rng, dc)
    pa = rng.dirichlet(np.ones(da), dc)
    pb = rng.dirichlet(np.ones(db), dc)
    return np.einsum("c,ca,cb->abc", pc, pa, pb)


def test_criterion_07_conditional_independence():
    rng = _rng(7)
    worst, disagree = 0.0, 0
    for _ in range(30):
        dims = tuple(int(v) for v in rng.integers(2, 4, size=3))
        s = B.from_probabilities(STD, [cobj(n, d) for n, d in zip("ABC", dims)], _markov(rng, *dims).ravel())
        rs = [B.ci_test(s, ["A"], ["B"], ["C"], v) for v in B.CI_VARIANTS]
        worst = max(worst, max(r.residual for r in rs))
        disagree += len({r.holds for r in rs[:4]}) != 1
    violations = 0
    for k in range(50):
        p = _markov(rng, 2, 2, 2)
        p = p * (1 + 10.0 ** -rng.integers(2, 12) * rng.normal(size=p.shape))
        p = np.clip(p, 0, None)
        s = B.from_probabilities(STD, [cobj(n, 2) for n in "ABC"], (p / p.sum()).ravel())
        for side in "LR":
            violations += len(B.ci_two_imply_third(s, ["A"], ["B"], ["C"], side).violations)
    ok = worst <= 1e-9 and disagree == 0 and violations == 0
    record(7, ok, f"30 CI joints: max residual {worst:.1e}, disagreements {disagree}; "
                  f"two-imply-third violations {violations} on 50 perturbed instances")
    assert ok


def _noncommuting_ci2(rng):
    rac = random_density(rng, 4).reshape(2, 2, 2, 2)
    rcb = random_density(rng, 4).reshape(2, 2, 2, 2)
    rho = np.einsum("xyuv,zwst->xwyzutvs", rac, rcb).reshape(16, 16)
    return B.make_joint(CDO, [qobj("A", 2), qobj("B", 2), qobj("C", 4)], rho)


def _pool(s, variant="L"):
    return B.pool(B.conditional(s, ["C"], ["A"]), B.conditional(s, ["C"], ["B"]),
                  B.PoolPriors.from_joint(s, ["A"], ["B"], ["C"]), variant)


def _pool_error(s, variant="L"):
    direct = B.conditional(s, ["C"], ["A", "B"]).point
    return s.backend.residual(_pool(s, variant).point, direct)


def test_criterion_08_pooling():
    rng = _rng(8)
    worst_c, worst_q = 0.0, 0.0
    for _ in range(20):
        dims = tuple(int(v) for v in rng.integers(2, 4, size=3))
        p = _markov(rng, *dims).ravel()
        objs = [(n, d) for n, d in zip("ABC", dims)]
        s = B.from_probabilities(STD, [cobj(n, d) for n, d in objs], p)
        worst_c = max(worst_c, _pool_error(s, "L"), _pool_error(s, "R"))
        q = B.make_joint(CDO, [qobj(n, d) for n, d in objs], np.diag(p.astype(complex)))
        worst_q = max(worst_q, _pool_error(q, "L"))
    s = _noncommuting_ci2(rng)
    ca = CDO.to_operator(B._lift(CDO, B.conditional(s, ["C"], ["A"]).point, s.objects[2:] + s.objects[:2]))
    cb = CDO.to_operator(B._lift(CDO, B.conditional(s, ["C"], ["B"]).point, s.objects[2:] + s.objects[:2]))
    commutator = float(np.abs(ca @ cb - cb @ ca).max())
    ci2 = B.ci_test(s, ["A"], ["B"], ["C"], "CI2_L")
    worst_nc = _pool_error(s, "L")
    ok = worst_c <= 1e-9 and worst_q <= 1e-7 and worst_nc <= 1e-7 and ci2.holds and commutator > 1e-3
    record(8, ok, f"classical max {worst_c:.1e}; commuting quantum max {worst_q:.1e}; noncommuting CI2_L "
                  f"instance {worst_nc:.1e} (commutator {commutator:.2f})")
    assert ok


def test_criterion_09_semi_graphoid():
    rng = _rng(9)
    worst, failed, inapplicable = 0.0, 0, 0
    for _ in range(20):
        px = random_probs(rng, 2)
        pu, pw, py = (rng.dirichlet(np.ones(2), 2) for _ in range(3))
        if rng.random() < 0.5:
            p = np.einsum("x,xu,xw,xy->uwyx", px, pu, pw, py)
        else:
            pwy = rng.dirichlet(np.ones(4), 2).reshape(2, 2, 2)
            p = np.einsum("x,xu,xwy->uwyx", px, pu, pwy)
        s = B.from_probabilities(STD, [cobj(n, 2) for n in "UWYX"], p.ravel())
        for axiom in B.GRAPHOID_AXIOMS:
            rep = B.graphoid_check(s, axiom, ["U"], ["W"], ["Y"], ["X"])
            inapplicable += not rep.applicable
            failed += not rep.passed
            worst = max(worst, rep.consequent.residual, *(a.residual for a in rep.antecedents))
    ok = failed == 0 and inapplicable == 0 and worst <= 1e-8
    record(9, ok, f"20 joints x 4 axioms: failures {failed}, inapplicable {inapplicable}, max residual {worst:.1e}")
    assert ok


def test_criterion_10_dcc_coherence():
    rng = _rng(10)
    cm = lambda m, n: rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))  # noqa: E731
    rt = 0.0
    for d in (1, 2, 3, 4):
        for _ in range(10):
            rho = cm(d, d)
            rt = max(rt, float(np.abs(dcc.xi_inv(dcc.xi(rho)) - rho).max()))
    sq = 0.0
    for d in (1, 2, 3):
        r, s = cm(d, d), cm(d, d)
        prod = dcc.compose(dcc.f_mult(dcc.DObject(d)), dcc.d_tensor(dcc.xi(r), dcc.xi(s)))
        sq = max(sq, float(np.abs(dcc.xi_inv(prod) - r @ s).max()))
        for e in (1, 2, 3):
            rho = cm(d * e, d * e)
            p = dcc.xi(rho, [d, e])
            for t in (0, 1):
                want = linalg.partial_trace(rho, [d, e], [t])
                sq = max(sq, float(np.abs(dcc.xi_inv(dcc.d_partial_trace(p, t)) - want).max()))
    fun = 0.0
    for _ in range(100):
        a, b, c = (int(v) for v in rng.integers(1, 4, size=3))
        f, g = cm(b, a), cm(c, b)
        lhs = dcc.compose(dcc.functor(g, [b], [c]), dcc.functor(f, [a], [b]))
        fun = max(fun, float(np.abs(lhs.tensor - dcc.functor(g @ f, [a], [c]).tensor).max()))
        lhs = dcc.d_tensor(dcc.functor(f, [a], [b]), dcc.functor(g, [b], [c]))
        fun = max(fun, float(np.abs(lhs.tensor - dcc.functor(np.kron(f, g), [a, b], [b, c]).tensor).max()))
    ok = rt <= 1e-13 and sq <= 1e-10 and fun <= 1e-10
    record(10, ok, f"xi round trip {rt:.1e}; commuting squares {sq:.1e}; functor on 100 pairs {fun:.1e}")
    assert ok


def test_criterion_11_cli_determinism():
    differing = [argv for argv, _ in CASES if cli.run(argv) != cli.run(argv)]
    wrong_code = [argv for argv, code in CASES if cli.run(argv)[0] != code]
    ok = not differing and not wrong_code
    record(11, ok, f"{len(CASES)} fixture invocations byte-identical across runs (differing {len(differing)}, "
                   f"unexpected exit codes {len(wrong_code)}); suite runtime reported below")
    assert ok
