import json
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from frobayes.diagram import EMPTY, Signature, Spider, ident, par, seq, spider, typecheck
from frobayes.dsl import (HEADER, BoxSpec, dump_model, parse_model, parse_term, parse_term_file, serialize,
                          write_term_file)
from frobayes.errors import FrobayesError, ParseError, ShapeError, TypeCheckError
from strategies import A2, B3, CLASSICAL_SIG, QA, QB, random_term

SIG = Signature((A2, B3))


def test_parse_spider():
    t = parse_term("spider[A](1,2)", SIG)
    assert t.gen == Spider(A2, 1, 2)


def test_parse_composite():
    t = parse_term("cup[A] ; (id[A] * spider[A](1,1))", SIG)
    assert t.dom == () and t.cod == (A2, A2)


def test_composition_reads_bottom_to_top():
    t = parse_term("spider[A](1,2) ; spider[A](2,1)", SIG)
    assert t.first.gen == Spider(A2, 1, 2) and t.second.gen == Spider(A2, 2, 1)


def test_parse_boxes_and_daggers():
    t = parse_term("state(pA) ; opaque(f) ; opaque(f, dag)", CLASSICAL_SIG)
    assert t.dom == () and t.cod == (A2,)
    with pytest.raises(ParseError):
        parse_term("modifier(pA)", CLASSICAL_SIG)


def test_serialize_examples():
    assert serialize(ident(A2)) == "id[A]"
    assert serialize(EMPTY) == ""
    assert parse_term("", SIG) is EMPTY
    assert parse_term("()", SIG) is EMPTY


def test_conditional_state_round_trip():
    src = "state(pA) * id[A] ; spider[A](1,2) * id[A] ; id[A] * (opaque(f) * id[A] ; opaque(g))"
    t = parse_term(src, CLASSICAL_SIG)
    assert parse_term(serialize(t), CLASSICAL_SIG) == t


def test_syntax_error_has_span():
    with pytest.raises(ParseError) as e:
        parse_term("spider[A](1,2) ;\n cap[A", SIG)
    assert e.value.span.line == 2


def test_type_error_is_forwarded():
    with pytest.raises(TypeCheckError):
        parse_term("spider[A](1,2) ; id[A]", SIG)


def test_term_file_header():
    t = parse_term("cup[A]", SIG)
    assert parse_term_file(write_term_file(t), SIG) == t
    with pytest.raises(ParseError):
        parse_term_file("cup[A]\n", SIG)


def test_term_file_spans_count_header_line():
    with pytest.raises(ParseError) as e:
        parse_term_file(f"{HEADER}\nspider[A](1,2 ; cap[A]\n", SIG)
    assert e.value.span.line == 2 and e.value.span.column == 15


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_parse_serialize_round_trip(seed, depth):
    t = random_term(random.Random(seed), depth=depth, sig=CLASSICAL_SIG)
    text = serialize(t)
    back = parse_term(text, CLASSICAL_SIG)
    assert back == t
    assert serialize(back) == text


@given(st.binary(max_size=200))
def test_parser_never_panics_on_bytes(data):
    try:
        parse_term(data, CLASSICAL_SIG)
    except FrobayesError:
        pass


ALPHABET = list("[](),;* \n") + ["spider", "cup", "cap", "id", "swap", "A", "B", "1", "2", "0", "state", "pA", "dag"]


@given(st.lists(st.sampled_from(ALPHABET), max_size=40))
def test_parser_never_panics_on_token_soup(parts):
    try:
        parse_term("".join(parts), CLASSICAL_SIG)
    except FrobayesError:
        pass


def test_deep_nesting_is_a_parse_error():
    with pytest.raises(ParseError):
        parse_term("(" * 5000 + "id[A]" + ")" * 5000, SIG)


# --- model files ------------------------------------------------------------

def _model(objs, data, kind="classical", **extra):
    doc = {"objects": [{"name": n, "kind": kind, "dim": d} for n, d in objs],
           "tensors": [{"name": "joint", "objects": [n for n, _ in objs], "data": data}]}
    doc.update(extra)
    return HEADER + "\n" + json.dumps(doc)


def test_parse_classical_model():
    m = parse_model(_model([("A", 2), ("B", 2)], [0.1, 0.2, 0.3, 0.4]))
    assert m.kind == "classical"
    np.testing.assert_allclose(m.tensor().data.ravel(), [0.1, 0.2, 0.3, 0.4])


def test_model_rejects_non_hermitian():
    with pytest.raises(ParseError):
        parse_model(_model([("A", 2)], [[1, 0], [0.5, 0], [0, 0], [0, 0]], kind="quantum"))


def test_model_shape_error():
    with pytest.raises(ShapeError):
        parse_model(_model([("A", 2)], [0.2, 0.3, 0.5]))


def test_model_rejects_negative_and_non_psd():
    with pytest.raises(ParseError):
        parse_model(_model([("A", 2)], [-0.1, 1.1]))
    with pytest.raises(ParseError):
        parse_model(_model([("A", 2)], [0.5, 0.8, 0.8, 0.5], kind="quantum"))


def test_model_normalization_not_enforced():
    m = parse_model(_model([("A", 2)], [0.5, 0.6]))
    assert m.tensor().data.sum() == pytest.approx(1.1)


def test_model_tolerance_options():
    m = parse_model(_model([("A", 2)], [0.5, 0.5], options={"abs_eps": 1e-6}))
    assert m.tol.abs_eps == 1e-6


def test_model_error_span_points_at_data():
    src = _model([("A", 2)], [-1, 2])
    with pytest.raises(ParseError) as e:
        parse_model(src)
    assert src[e.value.span.start:].startswith('"data"')


def test_model_round_trip_with_boxes():
    sig = Signature((QA, QB))
    rho = np.kron(np.array([[0.6, 0.1j], [-0.1j, 0.4]]), np.eye(2) / 2)
    boxes = [BoxSpec("rA", "state", "joint", (QA,)), BoxSpec("c", "conditional", "joint", (QA,), (QB,))]
    m = parse_model(dump_model(sig, {"joint": (("A", "B"), rho)}, boxes))
    assert m.kind == "quantum"
    np.testing.assert_allclose(m.tensor("joint").data, rho)
    t = parse_term("conditional(c) ; state(rA, dag) * id[B]", m.signature)
    typecheck(t, m.signature)
    assert t.cod == (QB,)


@given(st.text(max_size=300))
def test_model_parser_never_panics(text):
    try:
        parse_model(HEADER + "\n" + text)
    except FrobayesError:
        pass
