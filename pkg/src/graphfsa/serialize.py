"""JSON documents and NDJSON datasets.

Formats (all UTF-8, canonical key order):

* scheme:   {"kind":"counting","b":1} | {"kind":"positional","d":2,"fill":0}
            | {"kind":"avg_threshold","tau":0.5}
* automaton: {"version":1,"num_states":M,"starting":[..],"final":[..],
             "scheme":{..},"table":[..]} with table flat at index
             state*|Z| + aggregation_index
* graph:    {"num_nodes":n,"edges":[[u,v],..]} plus optional
            "ports":[[u,v,slot_u,slot_v],..], "grid_shape":[r,c], "layout"
* dataset:  NDJSON, one example per line:
            {"graph":{..},"inputs":[..],"targets":[..],"steps":t}
* checkpoint: {"version":1,"config":{..},"scheme":{..},"num_states":M,
            "starting":[..],"final":[..],"logits":[..],"history":[..]}
            with logits flat at state*|Z|*M + aggregation*M + next_state
* trace:    {"version":1,"records":[[[state,agg,next],..per node]..per step]}
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

import numpy as np
import torch

from .aggregation import (
    AggregationScheme,
    AvgThresholdScheme,
    CountingScheme,
    PositionalScheme,
    domain_size,
)
from .automaton import GraphFSA, Trace
from .datasets import (
    CompleteDist,
    Dataset,
    ErdosRenyiDist,
    Example,
    GrabSpec,
    GraphDistribution,
    GridDist,
    HexGridDist,
    PathDist,
    RegularDist,
    TreeDist,
)
from .graph import Graph
from .training import SoftTransitionModel, TrainConfig


class FormatError(ValueError):
    """Malformed document or file."""


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _require(doc: dict, key: str, kind: type | tuple) -> Any:
    if key not in doc:
        raise FormatError(f"missing key {key!r}")
    value = doc[key]
    if not isinstance(value, kind):
        raise FormatError(f"key {key!r} has type {type(value).__name__}")
    return value


# ---------------------------------------------------------------------------
# schemes

def scheme_to_dict(scheme: AggregationScheme) -> dict:
    if isinstance(scheme, CountingScheme):
        return {"kind": "counting", "b": scheme.b}
    if isinstance(scheme, PositionalScheme):
        return {"kind": "positional", "d": scheme.d, "fill": scheme.fill}
    if isinstance(scheme, AvgThresholdScheme):
        return {"kind": "avg_threshold", "tau": scheme.tau}
    raise TypeError(f"unknown scheme {scheme!r}")


def scheme_from_dict(doc: dict) -> AggregationScheme:
    kind = _require(doc, "kind", str)
    try:
        if kind == "counting":
            return CountingScheme(b=int(doc["b"]))
        if kind == "positional":
            return PositionalScheme(d=int(doc["d"]), fill=int(doc.get("fill", 0)))
        if kind == "avg_threshold":
            return AvgThresholdScheme(tau=float(doc["tau"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad {kind} scheme: {exc}") from exc
    raise FormatError(f"unknown scheme kind {kind!r}")


def parse_scheme_flag(text: str) -> AggregationScheme:
    """Compact flag grammar ``kind:key=val,...``, e.g. ``counting:b=1``."""
    kind, _, rest = text.partition(":")
    params: Dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise FormatError(f"bad scheme parameter {item!r}")
            params[key.strip()] = val.strip()
    doc: Dict[str, Any] = {"kind": kind.strip()}
    doc.update(params)
    return scheme_from_dict(doc)


def scheme_flag(scheme: AggregationScheme) -> str:
    doc = scheme_to_dict(scheme)
    kind = doc.pop("kind")
    rest = ",".join(f"{k}={doc[k]}" for k in sorted(doc))
    return f"{kind}:{rest}" if rest else kind


# ---------------------------------------------------------------------------
# automata

def fsa_to_dict(fsa: GraphFSA) -> dict:
    return {
        "version": 1,
        "num_states": fsa.num_states,
        "starting": sorted(fsa.starting_states),
        "final": sorted(fsa.final_states),
        "scheme": scheme_to_dict(fsa.scheme),
        "table": [int(x) for x in fsa.table],
    }


def fsa_from_dict(doc: dict) -> GraphFSA:
    num_states = _require(doc, "num_states", int)
    scheme = scheme_from_dict(_require(doc, "scheme", dict))
    table = np.asarray(_require(doc, "table", list), dtype=np.int64)
    expected = num_states * domain_size(scheme, num_states)
    if table.shape != (expected,):
        raise FormatError(f"table has {table.shape[0]} entries, expected {expected}")
    return GraphFSA(
        num_states,
        frozenset(_require(doc, "starting", list)),
        frozenset(_require(doc, "final", list)),
        scheme,
        table,
    )


# ---------------------------------------------------------------------------
# graphs

def graph_to_dict(graph: Graph) -> dict:
    doc: Dict[str, Any] = {
        "num_nodes": graph.num_nodes,
        "edges": [[u, v] for u, v in graph.edges],
    }
    if graph.ports is not None:
        pm = graph.port_map
        doc["ports"] = [[u, v, pm[(u, v)], pm[(v, u)]] for u, v in graph.edges]
    if graph.grid_shape is not None:
        doc["grid_shape"] = list(graph.grid_shape)
    if graph.layout is not None:
        doc["layout"] = graph.layout
    return doc


def graph_from_dict(doc: dict) -> Graph:
    num_nodes = _require(doc, "num_nodes", int)
    edges = tuple((int(u), int(v)) for u, v in _require(doc, "edges", list))
    ports = None
    if doc.get("ports") is not None:
        triples = []
        for entry in doc["ports"]:
            if len(entry) != 4:
                raise FormatError(f"port entry {entry!r} needs [u,v,slot_u,slot_v]")
            u, v, su, sv = (int(x) for x in entry)
            triples.append((u, v, su))
            triples.append((v, u, sv))
        ports = tuple(triples)
    shape = tuple(doc["grid_shape"]) if doc.get("grid_shape") is not None else None
    try:
        return Graph(num_nodes, edges, ports, shape, doc.get("layout"))
    except ValueError as exc:
        raise FormatError(f"bad graph: {exc}") from exc


# ---------------------------------------------------------------------------
# datasets

def example_to_dict(ex: Example) -> dict:
    return {
        "graph": graph_to_dict(ex.graph),
        "inputs": [int(x) for x in ex.inputs],
        "targets": [int(x) for x in ex.targets],
        "steps": ex.steps,
    }


def example_from_dict(doc: dict) -> Example:
    try:
        return Example(
            graph_from_dict(_require(doc, "graph", dict)),
            np.asarray(_require(doc, "inputs", list), dtype=np.int64),
            np.asarray(_require(doc, "targets", list), dtype=np.int64),
            _require(doc, "steps", int),
        )
    except ValueError as exc:
        raise FormatError(f"bad example: {exc}") from exc


def write_dataset(path: Union[str, Path], dataset: Dataset) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in dataset:
            fh.write(dumps(example_to_dict(ex)))
            fh.write("\n")


def read_dataset(path: Union[str, Path]) -> Dataset:
    out: Dataset = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(example_from_dict(json.loads(line)))
            except (json.JSONDecodeError, FormatError) as exc:
                raise FormatError(f"{path}: line {ln}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# traces

def trace_to_dict(trace: Trace) -> dict:
    return {"version": 1, "records": trace.records.tolist()}


def trace_from_dict(doc: dict) -> Trace:
    records = np.asarray(_require(doc, "records", list), dtype=np.int64)
    if records.ndim != 3 or records.shape[2] != 3:
        raise FormatError("trace records must have shape (steps, nodes, 3)")
    return Trace(records)


def write_traces(path: Union[str, Path], traces: Iterable[Trace]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for trace in traces:
            fh.write(dumps(trace_to_dict(trace)))
            fh.write("\n")


def read_traces(path: Union[str, Path]) -> List[Trace]:
    out: List[Trace] = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(trace_from_dict(json.loads(line)))
            except (json.JSONDecodeError, FormatError) as exc:
                raise FormatError(f"{path}: line {ln}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# checkpoints

def checkpoint_to_dict(model: SoftTransitionModel, config: TrainConfig, history: List[float]) -> dict:
    return {
        "version": 1,
        "config": dataclasses.asdict(config),
        "scheme": scheme_to_dict(model.scheme),
        "num_states": model.num_states,
        "starting": sorted(model.starting_states),
        "final": sorted(model.final_states),
        "logits": [float(x) for x in model.logits.reshape(-1).tolist()],
        "history": [float(x) for x in history],
    }


def checkpoint_from_dict(doc: dict) -> tuple[SoftTransitionModel, TrainConfig, List[float]]:
    scheme = scheme_from_dict(_require(doc, "scheme", dict))
    num_states = _require(doc, "num_states", int)
    z = domain_size(scheme, num_states)
    logits = np.asarray(_require(doc, "logits", list), dtype=np.float64)
    if logits.shape != (num_states * z * num_states,):
        raise FormatError(f"logits have {logits.shape[0]} entries, expected {num_states * z * num_states}")
    model = SoftTransitionModel(
        torch.from_numpy(logits.reshape(num_states, z, num_states)),
        num_states,
        scheme,
        frozenset(_require(doc, "starting", list)),
        frozenset(_require(doc, "final", list)),
    )
    try:
        config = TrainConfig(**_require(doc, "config", dict))
    except TypeError as exc:
        raise FormatError(f"bad config: {exc}") from exc
    return model, config, [float(x) for x in doc.get("history", [])]


# ---------------------------------------------------------------------------
# graph distributions (manifest bookkeeping)

_DIST_TYPES = {
    "path": PathDist,
    "tree": TreeDist,
    "grid": GridDist,
    "hexgrid": HexGridDist,
    "erdos_renyi": ErdosRenyiDist,
    "regular": RegularDist,
    "complete": CompleteDist,
}


def dist_to_dict(dist: GraphDistribution) -> dict:
    doc = {"kind": dist.kind}
    doc.update(dataclasses.asdict(dist))
    return doc


def dist_from_dict(doc: dict) -> GraphDistribution:
    kind = _require(doc, "kind", str)
    if kind not in _DIST_TYPES:
        raise FormatError(f"unknown distribution kind {kind!r}")
    params = {k: v for k, v in doc.items() if k != "kind"}
    try:
        return _DIST_TYPES[kind](**params)
    except TypeError as exc:
        raise FormatError(f"bad {kind} distribution: {exc}") from exc


def grab_spec_to_dict(spec: GrabSpec) -> dict:
    return {
        "num_states": spec.num_states,
        "num_start": spec.num_start,
        "num_final": spec.num_final,
        "scheme": scheme_to_dict(spec.scheme),
        "distribution": dist_to_dict(spec.distribution),
        "train_sizes": list(spec.train_sizes),
        "extra_sizes": list(spec.extra_sizes),
        "examples_per_size": spec.examples_per_size,
        "seed": spec.seed,
    }


def grab_spec_from_dict(doc: dict) -> GrabSpec:
    try:
        return GrabSpec(
            num_states=_require(doc, "num_states", int),
            num_start=_require(doc, "num_start", int),
            num_final=_require(doc, "num_final", int),
            scheme=scheme_from_dict(_require(doc, "scheme", dict)),
            distribution=dist_from_dict(_require(doc, "distribution", dict)),
            train_sizes=tuple(_require(doc, "train_sizes", list)),
            extra_sizes=tuple(_require(doc, "extra_sizes", list)),
            examples_per_size=_require(doc, "examples_per_size", int),
            seed=_require(doc, "seed", int),
        )
    except ValueError as exc:
        raise FormatError(f"bad benchmark spec: {exc}") from exc


# ---------------------------------------------------------------------------
# files

def load_json(path: Union[str, Path]) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return doc


def save_json(path: Union[str, Path], doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(doc))
        fh.write("\n")


def file_digest(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
