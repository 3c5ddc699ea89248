"""Text front end: the term grammar and the model-file format.

Term grammar::

    term := par (";" par)*
    par  := atom ("*" atom)*
    atom := "spider" "[" obj "]" "(" int "," int ")"
          | ("cup" | "cap" | "id") "[" obj "]"
          | "swap" "[" obj "," obj "]"
          | flavor "(" label ["," "dag"] ")"
          | "(" [term] ")"

``;`` composes left-then-right (bottom to top), ``*`` is the monoidal
product and binds tighter. ``()`` and the empty string denote the empty
diagram. Files carry a first line ``frobayes-v1``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import linalg
from .diagram import (
    CLASSICAL,
    EMPTY,
    FLAVORS,
    QUANTUM,
    Box,
    BoxDecl,
    Cap,
    Cup,
    Empty,
    Gen,
    Identity,
    ObjectRef,
    Par,
    Seq,
    Signature,
    Spider,
    Swap,
    Term,
    typecheck,
)
from .errors import FrobayesError, ParseError, ShapeError, SourceSpan

HEADER = "frobayes-v1"
MAX_DEPTH = 200
MAX_LEGS = 64

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<int>[0-9]+)|(?P<punct>[;*()\[\],])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int
    end: int


def _span(src: str, start: int, end: int) -> SourceSpan:
    line = src.count("\n", 0, start) + 1
    col = start - (src.rfind("\n", 0, start) + 1) + 1
    return SourceSpan(line, col, start, end)


def tokenize(src: str) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", _span(src, pos, pos + 1))
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), m.start(), m.end()))
        pos = m.end()
    out.append(Token("eof", "", len(src), len(src)))
    return out


class _Parser:
    def __init__(self, src: str, sig: Signature):
        self.src = src
        self.sig = sig
        self.toks = tokenize(src)
        self.i = 0
        self.depth = 0

    def peek(self) -> Token:
        return self.toks[self.i]

    def fail(self, msg: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(msg, _span(self.src, tok.start, max(tok.end, tok.start)))

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text or tok.kind == "eof":
            self.fail(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            self.fail(f"expected identifier, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def integer(self) -> int:
        tok = self.peek()
        if tok.kind != "int":
            self.fail(f"expected integer, found {tok.text or 'end of input'!r}")
        self.i += 1
        val = int(tok.text)
        if val > MAX_LEGS:
            self.fail(f"spider arity {val} exceeds {MAX_LEGS}", tok)
        return val

    def obj(self) -> ObjectRef:
        tok = self.ident()
        try:
            return self.sig.obj(tok.text)
        except FrobayesError as e:
            self.fail(str(e), tok)

    def term(self) -> Term:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.fail("nesting too deep")
        t = self.par()
        while self.peek().text == ";":
            self.i += 1
            t = Seq(t, self.par())
        self.depth -= 1
        return t

    def par(self) -> Term:
        t = self.atom()
        while self.peek().text == "*":
            self.i += 1
            t = Par(t, self.atom())
        return t

    def atom(self) -> Term:
        tok = self.peek()
        if tok.text == "(" and tok.kind == "punct":
            self.i += 1
            if self.peek().text == ")":
                self.i += 1
                return EMPTY
            t = self.term()
            self.expect(")")
            return t
        if tok.kind != "ident":
            self.fail(f"expected a generator, found {tok.text or 'end of input'!r}")
        self.i += 1
        name = tok.text
        if name == "spider":
            self.expect("[")
            o = self.obj()
            self.expect("]")
            self.expect("(")
            n = self.integer()
            self.expect(",")
            m = self.integer()
            self.expect(")")
            if n == 0 and m == 0:
                self.fail("spider[..](0,0) is not allowed; use ()", tok)
            return Gen(Spider(o, n, m))
        if name in ("cup", "cap", "id"):
            self.expect("[")
            o = self.obj()
            self.expect("]")
            g = {"cup": Cup, "cap": Cap, "id": Identity}[name](o)
            return Gen(g)
        if name == "swap":
            self.expect("[")
            a = self.obj()
            self.expect(",")
            b = self.obj()
            self.expect("]")
            return Gen(Swap(a, b))
        if name in FLAVORS:
            self.expect("(")
            lab = self.ident()
            dag = False
            if self.peek().text == ",":
                self.i += 1
                d = self.ident()
                if d.text != "dag":
                    self.fail("expected 'dag'", d)
                dag = True
            self.expect(")")
            try:
                b = self.sig.make_box(lab.text, dag)
            except FrobayesError as e:
                self.fail(str(e), lab)
            if b.flavor != name:
                self.fail(f"box {lab.text} is declared with flavor {b.flavor}, not {name}", tok)
            return Gen(b)
        self.fail(f"unknown generator {name!r}", tok)


def parse_term(src: str, sig: Signature) -> Term:
    """Parse and typecheck a term. Raises ParseError or TypeCheckError."""
    if not isinstance(src, str):
        try:
            src = bytes(src).decode("utf-8")
        except (UnicodeDecodeError, TypeError) as e:
            raise ParseError(f"input is not UTF-8 text: {e}") from None
    p = _Parser(src, sig)
    if p.peek().kind == "eof":
        return EMPTY
    try:
        t = p.term()
        if p.peek().kind != "eof":
            p.fail(f"unexpected {p.peek().text!r}")
        typecheck(t, sig)
    except RecursionError:
        raise ParseError("term too large to process") from None
    return t


def _atom_text(t: Term) -> str:
    g = t.gen
    if isinstance(g, Spider):
        return f"spider[{g.obj.name}]({g.n_in},{g.n_out})"
    if isinstance(g, Cup):
        return f"cup[{g.obj.name}]"
    if isinstance(g, Cap):
        return f"cap[{g.obj.name}]"
    if isinstance(g, Identity):
        return f"id[{g.obj.name}]"
    if isinstance(g, Swap):
        return f"swap[{g.left.name},{g.right.name}]"
    if isinstance(g, Box):
        return f"{g.flavor}({g.label}, dag)" if g.dagger else f"{g.flavor}({g.label})"
    raise TypeError(g)


def _ser(t: Term, top: bool) -> str:
    if isinstance(t, Empty):
        return "" if top else "()"
    if isinstance(t, Gen):
        return _atom_text(t)
    if isinstance(t, Seq):
        left = _ser(t.first, False)
        right = _ser(t.second, False)
        if isinstance(t.second, Seq):
            right = f"({right})"
        return f"{left} ; {right}"
    if isinstance(t, Par):
        left = _ser(t.left, False)
        right = _ser(t.right, False)
        if isinstance(t.left, Seq):
            left = f"({left})"
        if isinstance(t.right, (Seq, Par)):
            right = f"({right})"
        return f"{left} * {right}"
    raise TypeError(t)


def serialize(t: Term) -> str:
    return _ser(t, True)


def strip_header(src: str, what: str) -> tuple[str, int]:
    """Remove the version header; return body and its byte offset."""
    first, nl, rest = src.partition("\n")
    if first.strip() != HEADER:
        raise ParseError(f"{what} must start with the header line {HEADER!r}", SourceSpan(1, 1, 0, len(first)))
    return rest, len(first) + len(nl)


def parse_term_file(src: str, sig: Signature) -> Term:
    body, offset = strip_header(src, "term file")
    # blank out the header so spans refer to positions in the whole file
    return parse_term(" " * (offset - 1) + "\n" + body, sig)


def write_term_file(t: Term) -> str:
    return f"{HEADER}\n{serialize(t)}\n"


# --- model files ------------------------------------------------------------

@dataclass(frozen=True)
class TensorSpec:
    name: str
    objects: tuple
    data: np.ndarray = field(compare=False)


@dataclass(frozen=True)
class BoxSpec:
    """A box whose value is derived from a named joint tensor."""

    label: str
    flavor: str
    of: str
    target: tuple
    given: tuple = ()


@dataclass(frozen=True)
class ModelFile:
    signature: Signature
    tensors: dict
    boxes: tuple = ()
    tol: linalg.Tol = linalg.DEFAULT_TOL

    @property
    def kind(self) -> str:
        kinds = {o.kind for o in self.signature.objects}
        return kinds.pop() if len(kinds) == 1 else "mixed"

    def tensor(self, name: str | None = None) -> TensorSpec:
        if name is None:
            if not self.tensors:
                raise ShapeError("model declares no tensors")
            name = next(iter(self.tensors))
        if name not in self.tensors:
            raise ShapeError(f"model has no tensor named {name!r}")
        return self.tensors[name]


def box_interface(flavor: str, target: tuple, given: tuple) -> tuple[tuple, tuple]:
    """Drawn (dom, cod) for a derived box."""
    if flavor in ("state", "sqrt_point"):
        return (), target
    if flavor in ("modifier", "modifier_inverse", "support"):
        return target, target
    if flavor == "conditional":
        return (), target + given
    if flavor == "process":
        return given, target
    raise ParseError(f"flavor {flavor!r} cannot be derived from a joint")


class _ModelError(ParseError):
    pass


def _schema(cond: bool, msg: str, span: SourceSpan | None):
    if not cond:
        raise _ModelError(msg, span)


def _key_span(body: str, offset: int, key: str, occurrence: int = 0) -> SourceSpan | None:
    """Span of the ``occurrence``-th quoted ``key`` in the JSON body (line 1 is the header)."""
    pos = -1
    for _ in range(occurrence + 1):
        pos = body.find(f'"{key}"', pos + 1)
        if pos < 0:
            return None
    line = body.count("\n", 0, pos) + 2
    col = pos - (body.rfind("\n", 0, pos) + 1) + 1
    return SourceSpan(line, col, offset + pos, offset + pos + len(key) + 2)


def _decode_entries(raw: Any, span) -> np.ndarray:
    _schema(isinstance(raw, list), "tensor data must be a list", span)
    vals = []
    cplx = False
    for x in raw:
        if isinstance(x, bool):
            raise _ModelError("tensor entries must be numbers", span)
        if isinstance(x, (int, float)):
            vals.append(complex(float(x), 0.0))
        elif isinstance(x, list) and len(x) == 2 and all(isinstance(y, (int, float)) and not isinstance(y, bool) for y in x):
            vals.append(complex(float(x[0]), float(x[1])))
            cplx = True
        else:
            raise _ModelError("tensor entries must be numbers or [re, im] pairs", span)
    arr = np.array(vals, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise _ModelError("tensor entries must be finite", span)
    return arr if cplx else arr.real.copy()


def parse_model(src: str) -> ModelFile:
    body, offset = strip_header(src, "model file")
    try:
        doc = json.loads(body)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed model JSON: {e.msg}", SourceSpan(e.lineno + 1, e.colno, offset + e.pos, offset + e.pos + 1)) from None
    except RecursionError:
        raise ParseError("model JSON nested too deeply") from None
    where = lambda key: _key_span(body, offset, key)  # noqa: E731
    _schema(isinstance(doc, dict), "model must be a JSON object", SourceSpan(2, 1, offset, offset))
    _schema(isinstance(doc.get("objects"), list) and doc["objects"], "model needs a nonempty 'objects' list", where("objects"))
    objs = []
    for o in doc["objects"]:
        _schema(isinstance(o, dict), "object entries must be JSON objects", where("objects"))
        name, kind, dim = o.get("name"), o.get("kind", CLASSICAL), o.get("dim")
        _schema(isinstance(name, str) and re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name or "") is not None,
                f"bad object name {name!r}", where("objects"))
        _schema(kind in (CLASSICAL, QUANTUM), f"object {name}: kind must be classical or quantum", where("kind"))
        _schema(isinstance(dim, int) and not isinstance(dim, bool) and 1 <= dim <= 4096,
                f"object {name}: dim must be a positive integer", where("dim"))
        objs.append(ObjectRef(name, kind, dim))
    try:
        sig = Signature(tuple(objs))
    except FrobayesError as e:
        raise _ModelError(str(e), where("objects")) from None
    _schema(len({o.kind for o in objs}) == 1, "all objects of a model must share one kind", where("kind"))

    opts = doc.get("options", {})
    _schema(isinstance(opts, dict), "'options' must be a JSON object", where("options"))
    tol = linalg.DEFAULT_TOL
    tol_kw = {k: opts[k] for k in ("abs_eps", "rel_eps", "rank_eps") if k in opts}
    for k, v in tol_kw.items():
        _schema(isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0 and math.isfinite(v),
                f"option {k} must be a nonnegative number", where(k))
    tol = tol.with_overrides(**tol_kw)

    raw_tensors = doc.get("tensors", [])
    _schema(isinstance(raw_tensors, list), "'tensors' must be a list", where("tensors"))
    tensors: dict[str, TensorSpec] = {}
    for k, t in enumerate(raw_tensors):
        span = _key_span(body, offset, "data", k)
        _schema(isinstance(t, dict), "tensor entries must be JSON objects", where("tensors"))
        name = t.get("name")
        _schema(isinstance(name, str) and name not in tensors, f"tensor name {name!r} missing or duplicated", span)
        names = t.get("objects")
        _schema(isinstance(names, list) and all(isinstance(n, str) for n in names), f"tensor {name}: 'objects' must list names", span)
        try:
            tobjs = tuple(sig.obj(n) for n in names)
        except FrobayesError as e:
            raise _ModelError(f"tensor {name}: {e}", span) from None
        _schema(len(set(names)) == len(names), f"tensor {name}: repeated object", span)
        data = _decode_entries(t.get("data"), span)
        n = math.prod(o.dim for o in tobjs)
        if objs[0].kind == CLASSICAL:
            if data.size != n:
                raise ShapeError(f"tensor {name}: {data.size} entries, objects {names} need {n} (at {span})")
            if np.iscomplexobj(data):
                raise _ModelError(f"tensor {name}: classical entries must be real", span)
            if np.any(data < 0):
                raise _ModelError(f"tensor {name}: classical entries must be nonnegative", span)
            arr = data.reshape(n, 1)
        else:
            if data.size != n * n:
                raise ShapeError(f"tensor {name}: {data.size} entries, a {n}x{n} operator is needed (at {span})")
            arr = data.astype(complex).reshape(n, n)
            if not linalg.is_hermitian(arr, tol):
                raise _ModelError(f"tensor {name}: quantum state is not Hermitian", span)
            if not linalg.is_psd(arr, tol):
                raise _ModelError(f"tensor {name}: quantum state is not positive semidefinite", span)
        tensors[name] = TensorSpec(name, tobjs, arr)

    raw_boxes = doc.get("boxes", [])
    _schema(isinstance(raw_boxes, list), "'boxes' must be a list", where("boxes"))
    boxes = []
    decls = []
    for b in raw_boxes:
        span = where("boxes")
        _schema(isinstance(b, dict), "box entries must be JSON objects", span)
        label, flavor, of = b.get("label"), b.get("flavor"), b.get("of")
        _schema(isinstance(label, str) and re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", label or "") is not None,
                f"bad box label {label!r}", span)
        _schema(flavor in FLAVORS and flavor != "opaque", f"box {label}: unsupported flavor {flavor!r}", span)
        _schema(of in tensors, f"box {label}: unknown tensor {of!r}", span)
        tgt, giv = b.get("target", []), b.get("given", [])
        _schema(isinstance(tgt, list) and isinstance(giv, list), f"box {label}: target/given must be lists", span)
        avail = {o.name for o in tensors[of].objects}
        _schema(set(tgt) <= avail and set(giv) <= avail and not set(tgt) & set(giv) and len(set(tgt)) == len(tgt)
                and len(set(giv)) == len(giv), f"box {label}: target/given must be disjoint objects of {of}", span)
        _schema(bool(tgt), f"box {label}: target must be nonempty", span)
        tgt_o = tuple(sig.obj(x) for x in tgt)
        giv_o = tuple(sig.obj(x) for x in giv)
        dom, cod = box_interface(flavor, tgt_o, giv_o)
        boxes.append(BoxSpec(label, flavor, of, tgt_o, giv_o))
        decls.append(BoxDecl(label, dom, cod, flavor))
    try:
        sig = sig.with_boxes(decls)
    except FrobayesError as e:
        raise _ModelError(str(e), where("boxes")) from None
    return ModelFile(sig, tensors, tuple(boxes), tol)


def dump_model(sig: Signature, tensors: dict[str, tuple[tuple, np.ndarray]], boxes=(), options=None) -> str:
    """Serialize a model; ``tensors`` maps names to (object names, array)."""

    def enc(x):
        if np.iscomplexobj(x) and np.any(np.imag(x) != 0):
            return [[float(v.real), float(v.imag)] for v in np.ravel(x)]
        return [float(v) for v in np.real(np.ravel(x))]

    doc: dict[str, Any] = {
        "objects": [{"name": o.name, "kind": o.kind, "dim": o.dim} for o in sig.objects],
        "tensors": [{"name": k, "objects": list(v[0]), "data": enc(v[1])} for k, v in tensors.items()],
    }
    if boxes:
        doc["boxes"] = [
            {"label": b.label, "flavor": b.flavor, "of": b.of, "target": [o.name for o in b.target], "given": [o.name for o in b.given]}
            for b in boxes
        ]
    if options:
        doc["options"] = options
    return HEADER + "\n" + json.dumps(doc, indent=1) + "\n"
