"""Command-line entry point: ``frobayes <command> [options]``.

Exit codes: 0 success, 1 domain error, 2 parse or shape error, 3 failed
verification. Reports go to stdout as JSON (sorted keys, so repeated runs
are byte-identical); diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bayes, linalg, rewrite
from .diagram import CLASSICAL, QUANTUM, ObjectRef, Signature
from .dsl import ModelFile, parse_model, parse_term, parse_term_file, serialize
from .errors import DomainError, FrobayesError, ParseError, VerificationError
from .models import CdoBackend, ClassicalBackend, Map, backend_for, evaluate, verify_frobenius_laws

COMMANDS = ("eval", "normalize", "condition", "invert", "pool", "ci", "graphoid", "entropy", "verify")


@dataclass
class Report:
    command: str
    result: object = None
    residual: float | None = None
    tol: float | None = None
    warnings: tuple = ()
    failed: bool = False

    def to_json(self) -> str:
        doc = {
            "command": self.command,
            "residual": _num(self.residual),
            "tol": _num(self.tol),
            "result": self.result,
            "warnings": list(self.warnings),
        }
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)

    def to_text(self) -> str:
        lines = [f"command: {self.command}"]
        if self.residual is not None:
            lines.append(f"residual: {self.residual:.3e} (tol {self.tol:.3e})")
        lines.append("result: " + json.dumps(self.result, sort_keys=True, allow_nan=False))
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines)


# --- encoding ---------------------------------------------------------------

def _num(x):
    if x is None:
        return None
    if isinstance(x, (complex, np.complexfloating)):
        return [_num(x.real), _num(x.imag)]
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def _flat(arr: np.ndarray) -> list:
    arr = np.asarray(arr).ravel()
    if np.iscomplexobj(arr):
        if np.max(np.abs(arr.imag), initial=0.0) == 0.0:
            return [_num(v) for v in arr.real]
        return [[_num(v.real), _num(v.imag)] for v in arr]
    return [_num(v) for v in arr]


def encode_map(backend, m: Map) -> dict:
    out = {
        "dom": [o.name for o in m.dom],
        "cod": [o.name for o in m.cod],
        "dims": {o.name: o.dim for o in m.dom + m.cod},
    }
    if isinstance(backend, CdoBackend) and not m.dom:
        out["layout"] = "operator"
        out["data"] = _flat(backend.to_operator(m))
    else:
        out["layout"] = "paired" if isinstance(backend, CdoBackend) else "vector"
        out["data"] = _flat(m.data)
    out["semiring"] = getattr(getattr(backend, "semiring", None), "name", "cdo")
    return out


# --- tolerance --------------------------------------------------------------

def env_tol(base: linalg.Tol = linalg.DEFAULT_TOL) -> linalg.Tol:
    """FROBAYES_TOL is either one number (abs_eps and rel_eps) or
    comma-separated ``key=value`` pairs."""
    raw = os.environ.get("FROBAYES_TOL", "").strip()
    if not raw:
        return base
    try:
        if "=" not in raw:
            v = float(raw)
            return base.with_overrides(abs_eps=v, rel_eps=v)
        kw = {}
        for part in raw.split(","):
            k, _, v = part.partition("=")
            k = k.strip()
            if k not in ("abs_eps", "rel_eps", "rank_eps"):
                raise ValueError(f"unknown tolerance key {k!r}")
            kw[k] = float(v)
        return base.with_overrides(**kw)
    except ValueError as e:
        raise ParseError(f"bad FROBAYES_TOL: {e}") from None


# --- model loading ----------------------------------------------------------

def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from None
    except UnicodeDecodeError:
        raise ParseError(f"{path} is not valid UTF-8") from None


def load_model(path: str) -> ModelFile:
    return parse_model(_read(path))


def _model_tol(m: ModelFile) -> linalg.Tol:
    # environment overrides the defaults; explicit model options win
    base = env_tol()
    kw = {k: getattr(m.tol, k) for k in ("abs_eps", "rel_eps", "rank_eps")
          if getattr(m.tol, k) != getattr(linalg.DEFAULT_TOL, k)}
    return base.with_overrides(**kw)


def _backend(m: ModelFile, semiring: str):
    if m.kind == QUANTUM and semiring != "standard":
        raise DomainError("quantum models only support the standard (cdo) backend")
    return backend_for(m.kind, semiring, _model_tol(m))


def _joint(m: ModelFile, backend, tensor: str | None) -> bayes.JointState:
    t = m.tensor(tensor)
    if isinstance(backend, ClassicalBackend):
        return bayes.from_probabilities(backend, t.objects, t.data)
    return bayes.make_joint(backend, t.objects, t.data)


def _normalized_joint(args, warnings: list) -> tuple[bayes.JointState, ModelFile]:
    m = load_model(args.model)
    b = _backend(m, args.semiring)
    s = _joint(m, b, args.tensor)
    r = bayes.normalization_residual(s)
    if r > b.tol.bound(1.0):
        raise DomainError(f"joint state is not normalized (residual {r:.3e})")
    return s, m


def _names(x: str | None) -> list[str]:
    if not x:
        return []
    return [n.strip() for n in x.split(",") if n.strip()]


def bindings_for(m: ModelFile, backend) -> dict:
    out = {}
    for bx in m.boxes:
        s = _joint(m, backend, bx.of)
        out[bx.label] = bayes.box_value(s, bx.flavor, bx.target, bx.given)
    return out


def _load_term(args, sig: Signature):
    if args.expr is not None:
        return parse_term(args.expr, sig)
    if args.term is None:
        raise ParseError("give a term with --term FILE or --expr TEXT")
    return parse_term_file(_read(args.term), sig)


# --- commands ---------------------------------------------------------------

def cmd_eval(args) -> Report:
    m = load_model(args.model)
    b = _backend(m, args.semiring)
    t = _load_term(args, m.signature)
    binds = bindings_for(m, b)
    if isinstance(b, ClassicalBackend) and b.semiring.name != "standard":
        val = evaluate(t, b, binds)
    else:
        val = Map(t.dom, t.cod, rewrite.eval_graph(rewrite.to_graph(t), b, binds))
    return Report("eval", encode_map(b, val))


def cmd_normalize(args) -> Report:
    m = load_model(args.model)
    t = _load_term(args, m.signature)
    n = rewrite.normalize(t)
    return Report("normalize", {"term": serialize(n), "input": serialize(t)})


def cmd_condition(args) -> Report:
    w: list[str] = []
    s, _ = _normalized_joint(args, w)
    c = bayes.conditional(s, _names(args.target), _names(args.given))
    res = bayes.conditional_residual(c)
    return Report("condition", encode_map(s.backend, c.point), res, s.backend.tol.bound(1.0), tuple(w))


def cmd_invert(args) -> Report:
    """Compute P(target|given) by inverting P(given|target)."""
    w: list[str] = []
    s, _ = _normalized_joint(args, w)
    T, G = _names(args.target), _names(args.given)
    forward = bayes.conditional(s, G, T)
    inv = bayes.bayes_invert(forward, bayes.marginalize(s, T), bayes.marginalize(s, G))
    direct = bayes.conditional(s, T, G)
    b = s.backend
    return Report("invert", encode_map(b, inv.point), b.residual(inv.point, direct.point), b.bound(inv.point, direct.point), tuple(w))


def cmd_pool(args) -> Report:
    w: list[str] = []
    s, _ = _normalized_joint(args, w)
    A, B, C = _names(args.A), _names(args.B), _names(args.C)
    ca, cb = bayes.conditional(s, C, A), bayes.conditional(s, C, B)
    pooled = bayes.pool(ca, cb, bayes.PoolPriors.from_joint(s, A, B, C), args.variant)
    direct = bayes.conditional(s, C, A + B)
    b = s.backend
    ci = bayes.ci_test(s, A, B, C, f"CI2_{args.variant}")
    if not ci.holds:
        w.append(f"joint does not satisfy CI2_{args.variant}; pooled value need not equal the direct conditional")
    return Report("pool", encode_map(b, pooled.point), b.residual(pooled.point, direct.point), b.bound(pooled.point, direct.point), tuple(w))


def cmd_ci(args) -> Report:
    w: list[str] = []
    s, _ = _normalized_joint(args, w)
    r = bayes.ci_test(s, _names(args.A), _names(args.B), _names(args.C), args.variant)
    return Report("ci", {"holds": r.holds, "variant": r.variant}, r.residual, r.bound, tuple(w))


def cmd_graphoid(args) -> Report:
    w: list[str] = []
    s, _ = _normalized_joint(args, w)
    rep = bayes.graphoid_check(s, args.axiom, _names(args.U), _names(args.W), _names(args.Y), _names(args.X), args.variant)
    if rep.experimental:
        w.append("graphoid checks on quantum states are experimental")
    enc = lambda r: {"variant": r.variant, "holds": r.holds, "residual": _num(r.residual), "tol": _num(r.bound)}  # noqa: E731
    result = {
        "axiom": rep.axiom,
        "applicable": rep.applicable,
        "passed": rep.passed,
        "antecedents": [enc(a) for a in rep.antecedents],
        "consequent": enc(rep.consequent),
    }
    return Report("graphoid", result, rep.consequent.residual, rep.consequent.bound, tuple(w), failed=not rep.passed)


def cmd_entropy(args) -> Report:
    w: list[str] = []
    s, _ = _normalized_joint(args, w)
    if s.backend.kind != CLASSICAL:
        raise DomainError("entropy is only defined for classical models")
    v = bayes.entropy(s, args.kind, _names(args.target), _names(args.given))
    return Report("entropy", {"kind": args.kind, "nats": _num(v)})


def _verify_backend(args, kind: str):
    tol = env_tol()
    if args.backend == "cdo":
        if kind != QUANTUM:
            raise DomainError("cdo backend needs a quantum object")
        return CdoBackend(tol)
    return backend_for(CLASSICAL, args.backend, tol)


def cmd_verify(args) -> Report:
    kind = QUANTUM if args.backend == "cdo" else CLASSICAL
    if args.dim < 1:
        raise DomainError("--dim must be positive")
    obj = ObjectRef("A", kind, args.dim)
    if args.laws == "joint":
        if not args.model:
            raise ParseError("verify --laws joint needs --model")
        m = load_model(args.model)
        b = _backend(m, "standard")
        s = _joint(m, b, args.tensor)
        r = bayes.normalization_residual(s)
        tol = b.tol.bound(1.0)
        return Report("verify", {"laws": "joint", "normalized": r <= tol}, r, tol, failed=r > tol)
    b = _verify_backend(args, kind)
    if args.laws == "frobenius":
        rep = verify_frobenius_laws(b, obj)
        table = {k: _num(v) for k, v in rep.residuals.items()}
        w = tuple(f"{k} fails as expected for quantum objects (residual {v:.3e})" for k, v in sorted(rep.expected_failures.items()))
        return Report("verify", {"laws": "frobenius", "backend": b.name, "dim": args.dim, "residuals": table,
                                 "passed": rep.passed}, rep.max_residual, rep.tol, w, failed=not rep.passed)
    if args.laws == "commutative":
        g = b.gens(obj)
        lhs = b.compose(g["mult"], b.permute((obj, obj), (1, 0)))
        r = b.residual(lhs, g["mult"])
        tol = b.bound(lhs, g["mult"])
        return Report("verify", {"laws": "commutative", "backend": b.name, "dim": args.dim, "passed": r <= tol},
                      r, tol, failed=r > tol)
    if args.laws == "spider":
        if kind != CLASSICAL or b.semiring.name != "standard":
            raise DomainError("spider verification runs on the standard classical backend")
        rng = random.Random(args.seed)
        worst = 0.0
        bad = 0
        for _ in range(args.count):
            g = rewrite.random_network(rng, obj)
            before = rewrite.eval_graph(g, b)
            fused = rewrite.spider_fuse(g.copy())
            after = rewrite.eval_graph(fused, b)
            r = float(np.max(np.abs(before - after), initial=0.0))
            worst = max(worst, r)
            spiders = [n for n in fused.nodes.values() if n.kind == "spider"]
            if len(spiders) > 1:
                bad += 1
        tol = b.tol.bound(1.0)
        ok = bad == 0 and worst <= tol
        return Report("verify", {"laws": "spider", "backend": b.name, "dim": args.dim, "count": args.count,
                                 "seed": args.seed, "unfused": bad, "passed": ok}, worst, tol, failed=not ok)
    raise ParseError(f"unknown law family {args.laws!r}")


HANDLERS = {
    "eval": cmd_eval, "normalize": cmd_normalize, "condition": cmd_condition, "invert": cmd_invert,
    "pool": cmd_pool, "ci": cmd_ci, "graphoid": cmd_graphoid, "entropy": cmd_entropy, "verify": cmd_verify,
}


# --- argument parsing -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(f"usage: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="frobayes", description="Bayesian inference with Frobenius string diagrams.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model_required=True):
        sp.add_argument("--model", required=model_required, help="path to a .fbm model file")
        sp.add_argument("--tensor", help="tensor name in the model (default: first)")
        sp.add_argument("--semiring", choices=("standard", "neglog"), default="standard")
        sp.add_argument("--format", choices=("json", "text"), default="json")

    for name in ("eval", "normalize"):
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--term", help="path to a .fbg term file")
        sp.add_argument("--expr", help="inline term text")

    sp = sub.add_parser("condition")
    common(sp)
    sp.add_argument("--target", required=True)
    sp.add_argument("--given", default="")

    sp = sub.add_parser("invert")
    common(sp)
    sp.add_argument("--target", required=True)
    sp.add_argument("--given", required=True)

    sp = sub.add_parser("pool")
    common(sp)
    for k in ("--A", "--B", "--C"):
        sp.add_argument(k, required=True)
    sp.add_argument("--variant", choices=("L", "R"), default="L")

    sp = sub.add_parser("ci")
    common(sp)
    for k in ("--A", "--B"):
        sp.add_argument(k, required=True)
    sp.add_argument("--C", default="")
    sp.add_argument("--variant", choices=bayes.CI_VARIANTS, default="CI1_L")

    sp = sub.add_parser("graphoid")
    common(sp)
    sp.add_argument("--axiom", choices=bayes.GRAPHOID_AXIOMS, required=True)
    for k in ("--U", "--W"):
        sp.add_argument(k, required=True)
    sp.add_argument("--Y", default="")
    sp.add_argument("--X", default="")
    sp.add_argument("--variant", choices=bayes.CI_VARIANTS, default="CI1_L")

    sp = sub.add_parser("entropy")
    common(sp)
    sp.add_argument("--kind", choices=("joint", "marginal", "conditional"), default="joint")
    sp.add_argument("--target", default="")
    sp.add_argument("--given", default="")

    sp = sub.add_parser("verify")
    common(sp, model_required=False)
    sp.add_argument("--laws", choices=("frobenius", "commutative", "spider", "joint"), default="frobenius")
    sp.add_argument("--backend", choices=("standard", "neglog", "cdo"), default="standard")
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=50)
    return p


def run(argv: list[str]) -> tuple[int, str, str]:
    """Run one invocation; returns (exit code, stdout, stderr)."""
    fmt = "json"
    try:
        args = build_parser().parse_args(argv)
        fmt = args.format
        rep = HANDLERS[args.command](args)
    except FrobayesError as e:
        return e.exit_code, "", f"error: {e}\n"
    except RecursionError:
        return 2, "", "error: input nested too deeply\n"
    out = rep.to_json() if fmt == "json" else rep.to_text()
    code = VerificationError.exit_code if rep.failed else 0
    return code, out + "\n", ""


def main(argv: list[str] | None = None) -> int:
    code, out, err = run(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
