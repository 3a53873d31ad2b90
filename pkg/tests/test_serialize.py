import json

import numpy as np
import pytest

from graphsom import (
    GridTopology,
    InputFormatError,
    SomConfig,
    diffusion_kernel,
    eig_sym,
    laplacian,
    train,
)
from graphsom.dotio import DotGraph, parse
from graphsom.serialize import (
    SCHEMA_VERSION,
    graph_hash,
    model_from_json,
    model_to_json,
)
from oracles import graph_from_edges, random_connected_graph


def trained_model():
    g = random_connected_graph(np.random.default_rng(1), 10, 0.3, weighted=True)
    ker = diffusion_kernel(eig_sym(laplacian(g, "weighted").matrix), 0.05)
    model = train(
        ker,
        SomConfig(grid=GridTopology(2, 2), init="random", seed=3),
        vertex_labels=g.vertices,
        beta=0.05,
    )
    return g, model


def test_graph_hash_order_independent():
    a = graph_from_edges([("x", "y"), ("y", "z")])
    b = graph_from_edges([("z", "y"), ("y", "x")])
    assert graph_hash(a) == graph_hash(b)
    c = graph_from_edges([("x", "y")])
    assert graph_hash(a) != graph_hash(c)


def test_model_roundtrip_bit_identical():
    g, model = trained_model()
    text = model_to_json(model, graph_hash(g))
    back, ghash = model_from_json(text)
    assert ghash == graph_hash(g)
    assert np.array_equal(back.gamma, model.gamma)  # 17 digits: exact
    assert np.array_equal(back.assignment, model.assignment)
    assert back.vertex_labels == model.vertex_labels
    assert back.config == model.config
    assert back.iteration_log == model.iteration_log
    assert back.beta == model.beta
    # serializing again reproduces the same bytes
    assert model_to_json(back, ghash) == text


def test_model_json_schema_fields():
    g, model = trained_model()
    doc = json.loads(model_to_json(model, graph_hash(g)))
    assert doc["schema_version"] == SCHEMA_VERSION
    assert doc["config"]["rows"] == 2
    assert len(doc["gamma"]) == 4
    assert all(len(row) == 10 for row in doc["gamma"])


def test_model_json_errors():
    with pytest.raises(InputFormatError, match="unreadable"):
        model_from_json("{not json")
    with pytest.raises(InputFormatError, match="missing or malformed"):
        model_from_json(json.dumps({"schema_version": "1"}))


# -- DOT ---------------------------------------------------------------------

def test_dot_roundtrip_basic():
    dg = DotGraph(name="summary")
    dg.add_node("community_0", shape="circle", label="5 members", fillcolor="#c0c0c0")
    dg.add_node("weird id", shape="box")
    dg.add_edge("community_0", "weird id", weight="3.5")
    text = dg.to_text()
    back = parse(text)
    assert back.name == "summary"
    assert back.nodes == dg.nodes
    assert back.edges == dg.edges
    assert parse(back.to_text()).to_text() == text


def test_dot_quoting_escapes():
    dg = DotGraph()
    tricky = 'he said "hi" \\ bye'
    dg.add_node(tricky, label=tricky)
    back = parse(dg.to_text())
    assert back.nodes == [(tricky, {"label": tricky})]


def test_dot_parse_errors():
    with pytest.raises(InputFormatError):
        parse("digraph G { a -> b; }")
    with pytest.raises(InputFormatError, match="end of input"):
        parse("graph G { a -- ")
    with pytest.raises(InputFormatError, match="unexpected input"):
        parse("graph G { a ## b; }")
