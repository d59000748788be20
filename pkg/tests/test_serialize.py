import json

import numpy as np
import pytest
import torch

from graphfsa import (
    AvgThresholdScheme,
    CountingScheme,
    GrabSpec,
    Graph,
    PositionalScheme,
    SoftTransitionModel,
    TrainConfig,
    TreeDist,
    ca_rule_fsa,
    gol_fsa,
    make_grab_dataset,
    sample_graph,
    wireworld_fsa,
)
from graphfsa import serialize
from graphfsa.datasets import GridDist, child_rng, path_graph
from graphfsa.serialize import FormatError


@pytest.mark.parametrize(
    "scheme",
    [CountingScheme(3), PositionalScheme(4, fill=2), AvgThresholdScheme(0.25)],
)
def test_scheme_round_trip(scheme):
    doc = serialize.scheme_to_dict(scheme)
    assert serialize.scheme_from_dict(doc) == scheme
    flag = serialize.scheme_flag(scheme)
    assert serialize.parse_scheme_flag(flag) == scheme


def test_scheme_flag_examples():
    assert serialize.parse_scheme_flag("counting:b=1") == CountingScheme(1)
    assert serialize.parse_scheme_flag("positional:d=2,fill=0") == PositionalScheme(2, 0)
    assert serialize.parse_scheme_flag("avg_threshold:tau=0.5") == AvgThresholdScheme(0.5)
    with pytest.raises(FormatError):
        serialize.parse_scheme_flag("counting:b")
    with pytest.raises(FormatError):
        serialize.parse_scheme_flag("votes:k=1")


@pytest.mark.parametrize("fsa", [ca_rule_fsa(30), gol_fsa(), wireworld_fsa()])
def test_fsa_round_trip(fsa):
    doc = serialize.fsa_to_dict(fsa)
    back = serialize.fsa_from_dict(json.loads(json.dumps(doc)))
    assert back == fsa


def test_fsa_table_flat_index_convention():
    fsa = ca_rule_fsa(30)
    doc = serialize.fsa_to_dict(fsa)
    for state in range(2):
        for agg in range(4):
            assert doc["table"][state * 4 + agg] == fsa.entry(state, agg)


def test_fsa_rejects_wrong_table_length():
    doc = serialize.fsa_to_dict(ca_rule_fsa(30))
    doc["table"] = doc["table"][:-1]
    with pytest.raises(FormatError, match="entries"):
        serialize.fsa_from_dict(doc)


def test_graph_round_trip_with_ports_and_shape():
    g = sample_graph(GridDist(3, 4, moore=True), child_rng(0))
    back = serialize.graph_from_dict(serialize.graph_to_dict(g))
    assert back == g
    plain = Graph(3, ((0, 1), (1, 2)))
    assert serialize.graph_from_dict(serialize.graph_to_dict(plain)) == plain


def test_graph_ports_json_shape():
    g = path_graph(3)
    doc = serialize.graph_to_dict(g)
    assert doc["ports"] == [[0, 1, 1, 0], [1, 2, 1, 0]]
    with pytest.raises(FormatError, match="slot_u"):
        serialize.graph_from_dict({"num_nodes": 2, "edges": [[0, 1]], "ports": [[0, 1, 0]]})


def test_dataset_ndjson_round_trip(tmp_path):
    spec = GrabSpec(
        4, 2, 2, CountingScheme(1), TreeDist(2),
        train_sizes=(4, 5), extra_sizes=(6,), examples_per_size=3, seed=2,
    )
    result = make_grab_dataset(spec)
    path = tmp_path / "data.ndjson"
    serialize.write_dataset(path, result.train)
    back = serialize.read_dataset(path)
    assert len(back) == len(result.train)
    for a, b in zip(result.train, back):
        assert a.graph == b.graph
        assert (a.inputs == b.inputs).all()
        assert (a.targets == b.targets).all()
        assert a.steps == b.steps


def test_dataset_error_carries_line_number(tmp_path):
    path = tmp_path / "broken.ndjson"
    good = serialize.dumps(
        {"graph": {"num_nodes": 1, "edges": []}, "inputs": [0], "targets": [0], "steps": 0}
    )
    path.write_text(good + "\n{not json}\n", encoding="utf-8")
    with pytest.raises(FormatError, match="line 2"):
        serialize.read_dataset(path)


def test_trace_round_trip(tmp_path):
    from graphfsa import run

    g = path_graph(4)
    fsa = ca_rule_fsa(110)
    _, trace = run(fsa, g, np.array([1, 0, 0, 1]), 3, record_trace=True)
    path = tmp_path / "traces.ndjson"
    serialize.write_traces(path, [trace, trace])
    back = serialize.read_traces(path)
    assert len(back) == 2
    assert (back[0].records == trace.records).all()


def test_checkpoint_round_trip():
    scheme = CountingScheme(1)
    rng = np.random.default_rng(0)
    logits = torch.from_numpy(rng.normal(size=(3, 8, 3)))
    model = SoftTransitionModel(logits, 3, scheme, frozenset({1, 2}), frozenset({0}))
    config = TrainConfig(seed=5, epochs=42, stop_loss=1e-4)
    doc = serialize.checkpoint_to_dict(model, config, [1.0, 0.5])
    back_model, back_config, back_history = serialize.checkpoint_from_dict(
        json.loads(json.dumps(doc))
    )
    assert torch.equal(back_model.logits, model.logits)
    assert back_model.starting_states == model.starting_states
    assert back_model.final_states == model.final_states
    assert back_config == config
    assert back_history == [1.0, 0.5]


def test_checkpoint_logits_flat_order():
    scheme = CountingScheme(1)
    logits = torch.arange(2 * 4 * 2, dtype=torch.float64).reshape(2, 4, 2)
    model = SoftTransitionModel(logits, 2, scheme, frozenset({0}), frozenset())
    doc = serialize.checkpoint_to_dict(model, TrainConfig(), [])
    m, a, m2 = 1, 2, 1
    assert doc["logits"][m * 4 * 2 + a * 2 + m2] == float(logits[m, a, m2])


def test_grab_spec_round_trip():
    spec = GrabSpec(
        5, 2, 1, CountingScheme(2), TreeDist(2),
        train_sizes=(4, 5), extra_sizes=(10, 20), examples_per_size=7, seed=13,
    )
    back = serialize.grab_spec_from_dict(serialize.grab_spec_to_dict(spec))
    assert back == spec


def test_dist_round_trip():
    for dist in (TreeDist(3), GridDist(2, 3, moore=True, toroidal=False)):
        assert serialize.dist_from_dict(serialize.dist_to_dict(dist)) == dist
    with pytest.raises(FormatError, match="unknown distribution"):
        serialize.dist_from_dict({"kind": "hypercube"})


def test_load_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"a": 1,\n broken\n}', encoding="utf-8")
    with pytest.raises(FormatError, match="line 2"):
        serialize.load_json(path)


def test_dumps_is_canonical():
    assert serialize.dumps({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'
