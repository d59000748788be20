"""Command line surface: generate / train / eval / simulate / export-dot / wl-demo.

Exit codes: 0 success, 1 domain or validation failure, 2 I/O or format
error. Commands that write files also write a manifest recording the
full configuration, seeds, input/output digests, tool version and
duration, so any run can be reproduced and checked by digest equality.
The GRAPHFSA_WORKERS environment variable caps generation parallelism.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__, serialize
from .automaton import run, validate
from .datasets import (
    ALGORITHM_TASKS,
    CompleteDist,
    ErdosRenyiDist,
    GrabSpec,
    GraphDistribution,
    GridDist,
    HexGridDist,
    PathDist,
    RegularDist,
    TreeDist,
    algorithm_dataset,
    ca_dataset,
    make_grab_dataset,
)
from .evaluation import (
    EvalReport,
    bounded_refinement,
    evaluate,
    iteration_stability_sweep,
    partition_refines,
    two_hub_example,
    wl_refinement,
)
from .serialize import FormatError
from .training import TrainConfig, TrainingError, extract, train
from .viz import export_complete_dot, export_partial_dot, render_grid_trace


def _workers() -> int:
    raw = os.environ.get("GRAPHFSA_WORKERS", "1")
    try:
        value = int(raw)
    except ValueError as exc:
        raise FormatError(f"GRAPHFSA_WORKERS={raw!r} is not an integer") from exc
    return max(1, value)


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise FormatError(f"expected a comma list of integers, got {text!r}") from exc


def _parse_dist(text: str) -> GraphDistribution:
    """Distribution flag ``kind[:key=val,...]``; sizes come from the size lists."""
    kind, _, rest = text.partition(":")
    params: Dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise FormatError(f"bad distribution parameter {item!r}")
            params[key.strip()] = val.strip()
    kind = kind.strip()
    try:
        if kind == "tree":
            return TreeDist(n=2)
        if kind == "path":
            return PathDist(n=2)
        if kind == "complete":
            return CompleteDist(n=2)
        if kind in ("er", "erdos_renyi"):
            return ErdosRenyiDist(n=2, p=float(params.get("p", 0.3)))
        if kind == "regular":
            return RegularDist(n=4, d=int(params.get("d", 2)))
        if kind == "grid":
            return GridDist(
                rows=2,
                cols=2,
                moore=params.get("moore", "0") in ("1", "true"),
                toroidal=params.get("toroidal", "0") in ("1", "true"),
            )
        if kind == "hexgrid":
            return HexGridDist(rows=2, cols=2)
    except ValueError as exc:
        raise FormatError(f"bad {kind} distribution: {exc}") from exc
    raise FormatError(f"unknown distribution kind {kind!r}")


class _Manifest:
    """Collects inputs/outputs of one command and writes the record."""

    def __init__(self, command: str, argv: Sequence[str], config: dict, seed: Optional[int]):
        self.started = time.monotonic()
        self.doc: dict = {
            "version": 1,
            "tool": f"graphfsa {__version__}",
            "command": command,
            "argv": list(argv),
            "config": config,
            "seed": seed,
            "inputs": {},
            "outputs": {},
        }

    def add_input(self, path: Path) -> None:
        self.doc["inputs"][str(path)] = serialize.file_digest(path)

    def add_output(self, path: Path) -> None:
        self.doc["outputs"][str(path)] = serialize.file_digest(path)

    def write(self, path: Path) -> None:
        self.doc["duration_s"] = round(time.monotonic() - self.started, 6)
        serialize.save_json(path, self.doc)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# generate

def _generate_grab(args, out: Path, manifest: _Manifest) -> None:
    spec = GrabSpec(
        num_states=args.states,
        num_start=args.start,
        num_final=args.final,
        scheme=serialize.parse_scheme_flag(args.scheme),
        distribution=_parse_dist(args.dist),
        train_sizes=tuple(_int_list(args.train_n)),
        extra_sizes=tuple(_int_list(args.extra_n)) if args.extra_n else (),
        examples_per_size=args.count,
        seed=args.seed,
    )
    result = make_grab_dataset(spec, workers=_workers())
    serialize.save_json(out / "fsa.json", serialize.fsa_to_dict(result.fsa))
    serialize.write_dataset(out / "train.ndjson", result.train)
    manifest.add_output(out / "fsa.json")
    manifest.add_output(out / "train.ndjson")
    for size, data in result.extra.items():
        path = out / f"extra_{size}.ndjson"
        serialize.write_dataset(path, data)
        manifest.add_output(path)
    manifest.doc["config"]["grab_spec"] = serialize.grab_spec_to_dict(spec)
    manifest.doc["config"]["model_hint"] = {
        "num_states": spec.num_states,
        "starting": sorted(spec.starting_states),
        "final": sorted(spec.final_states),
        "scheme": serialize.scheme_to_dict(spec.scheme),
    }


def _generate_ca(args, out: Path, manifest: _Manifest) -> None:
    name = args.task
    size = args.length if name.startswith("ca1d:") else args.grid
    if size is None:
        raise FormatError("--len (1D) or --grid (2D) is required for automaton tasks")
    fsa, data = ca_dataset(
        name, size, args.steps, args.count, args.seed, args.toroidal, workers=_workers()
    )
    serialize.save_json(out / "fsa.json", serialize.fsa_to_dict(fsa))
    serialize.write_dataset(out / "train.ndjson", data)
    manifest.add_output(out / "fsa.json")
    manifest.add_output(out / "train.ndjson")
    manifest.doc["config"]["toroidal"] = args.toroidal
    manifest.doc["config"]["model_hint"] = {
        "num_states": fsa.num_states,
        "starting": sorted(fsa.starting_states),
        "final": sorted(fsa.final_states),
        "scheme": serialize.scheme_to_dict(fsa.scheme),
    }


def _generate_algorithm(args, out: Path, manifest: _Manifest) -> None:
    info = ALGORITHM_TASKS[args.task]
    train_sizes = _int_list(args.train_n) if args.train_n else []
    extra_sizes = _int_list(args.extra_n) if args.extra_n else []
    if not train_sizes and not extra_sizes:
        raise FormatError("pass --train-n and/or --extra-n size lists")
    if train_sizes:
        data = algorithm_dataset(
            args.task, train_sizes, args.count, args.seed,
            include_self=not args.prefix_exclusive, workers=_workers(),
        )
        merged = [ex for size in train_sizes for ex in data[size]]
        serialize.write_dataset(out / "train.ndjson", merged)
        manifest.add_output(out / "train.ndjson")
    for size in extra_sizes:
        data = algorithm_dataset(
            args.task, [size], args.count, args.seed + 1,
            include_self=not args.prefix_exclusive, workers=_workers(),
        )
        path = out / f"extra_{size}.ndjson"
        serialize.write_dataset(path, data[size])
        manifest.add_output(path)
    manifest.doc["config"]["model_hint"] = {
        "num_states": info.num_states,
        "starting": list(info.starting),
        "final": list(info.final),
        "scheme": {"kind": "counting", "b": 1},
    }


def cmd_generate(args) -> int:
    manifest = _Manifest("generate", sys.argv[1:], vars(args).copy(), args.seed)
    manifest.doc["config"].pop("func", None)
    out = _out_dir(args)
    if args.task == "grab":
        _generate_grab(args, out, manifest)
    elif args.task in ("gol", "gol-hex", "wireworld") or args.task.startswith("ca1d:"):
        _generate_ca(args, out, manifest)
    elif args.task in ALGORITHM_TASKS:
        _generate_algorithm(args, out, manifest)
    else:
        raise FormatError(f"unknown task {args.task!r}")
    manifest.write(out / "manifest.json")
    print(f"wrote {len(manifest.doc['outputs'])} files to {out}")
    return 0


# ---------------------------------------------------------------------------
# train

def _model_hint(data_path: Path) -> Optional[dict]:
    manifest_path = data_path.parent / "manifest.json"
    if not manifest_path.exists():
        return None
    doc = serialize.load_json(manifest_path)
    return doc.get("config", {}).get("model_hint")


def cmd_train(args) -> int:
    data_path = Path(args.data)
    if not data_path.exists():
        raise FileNotFoundError(f"dataset {data_path} does not exist")
    dataset = serialize.read_dataset(data_path)
    hint = _model_hint(data_path) or {}
    num_states = args.states if args.states is not None else hint.get("num_states")
    if num_states is None:
        raise FormatError("pass --states or keep the generator manifest next to the data")
    if args.scheme is not None:
        scheme = serialize.parse_scheme_flag(args.scheme)
    elif hint.get("scheme"):
        scheme = serialize.scheme_from_dict(hint["scheme"])
    else:
        raise FormatError("pass --scheme or keep the generator manifest next to the data")
    if args.start_states is not None:
        starting = _int_list(args.start_states)
    else:
        starting = [s for s in hint.get("starting", range(num_states)) if s < num_states]
    if args.final_states is not None:
        final = _int_list(args.final_states)
    else:
        final = [f for f in hint.get("final", []) if f < num_states]
    config = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        iteration_offset_max=args.offset_max,
        final_state_penalty=args.penalty,
        seed=args.seed,
        optimizer=args.optimizer,
        logit_init_scale=args.init_scale,
        stop_loss=args.stop_loss,
        data_loss=args.data_loss,
    )
    manifest = _Manifest("train", sys.argv[1:], vars(args).copy(), args.seed)
    manifest.doc["config"].pop("func", None)
    manifest.add_input(data_path)
    model, history = train(dataset, config, num_states, scheme, starting, final)
    fsa = extract(model)
    out = _out_dir(args)
    serialize.save_json(out / "checkpoint.json", serialize.checkpoint_to_dict(model, config, history))
    serialize.save_json(out / "fsa.json", serialize.fsa_to_dict(fsa))
    with open(out / "history.csv", "w", encoding="utf-8") as fh:
        fh.write("epoch,loss\n")
        for i, value in enumerate(history):
            fh.write(f"{i},{value:.10g}\n")
    for name in ("checkpoint.json", "fsa.json", "history.csv"):
        manifest.add_output(out / name)
    manifest.write(out / "manifest.json")
    print(f"final loss {history[-1]:.6g} after {len(history)} epochs; outputs in {out}")
    return 0


# ---------------------------------------------------------------------------
# eval

def cmd_eval(args) -> int:
    fsa_path = Path(args.fsa)
    fsa = serialize.fsa_from_dict(serialize.load_json(fsa_path))
    problems = validate(fsa)
    if problems:
        raise ValueError("invalid automaton: " + "; ".join(problems))
    manifest = _Manifest("eval", sys.argv[1:], vars(args).copy(), args.seed)
    manifest.doc["config"].pop("func", None)
    manifest.add_input(fsa_path)
    if args.data:
        rows = []
        for spec in args.data.split(","):
            path = Path(spec)
            if not path.exists():
                raise FileNotFoundError(f"dataset {path} does not exist")
            manifest.add_input(path)
            dataset = serialize.read_dataset(path)
            override = args.steps_override
            rows.append(evaluate(fsa, dataset, override, key=path.stem).single)
        report = EvalReport(tuple(rows))
    elif args.task:
        steps = _int_list(args.steps) if args.steps else [1]
        report = iteration_stability_sweep(
            fsa, args.task, args.grid, steps, count=args.count, seed=args.seed,
            toroidal=args.toroidal,
        )
    else:
        raise FormatError("pass --data files or --task family")
    print(report.format_table())
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        manifest.add_output(out)
        manifest.write(out.with_suffix(out.suffix + ".manifest.json"))
    return 0


# ---------------------------------------------------------------------------
# simulate

_DEFAULT_PALETTE = {0: ".", 1: "#", 2: "o", 3: "+", 4: "x", 5: "*"}


def _parse_palette(text: Optional[str]) -> Dict[int, str]:
    if not text:
        return dict(_DEFAULT_PALETTE)
    palette = {}
    for item in text.split(","):
        key, eq, val = item.partition("=")
        if not eq or len(val) != 1:
            raise FormatError(f"bad palette entry {item!r}; use state=char")
        palette[int(key)] = val
    return palette


def cmd_simulate(args) -> int:
    fsa = serialize.fsa_from_dict(serialize.load_json(Path(args.fsa)))
    problems = validate(fsa)
    if problems:
        raise ValueError("invalid automaton: " + "; ".join(problems))
    traces = []
    if args.graph:
        graph = serialize.graph_from_dict(serialize.load_json(Path(args.graph)))
        if args.inputs is None:
            raise FormatError("pass --inputs with --graph")
        inputs = np.asarray(_int_list(args.inputs), dtype=np.int64)
        if args.steps is None:
            raise FormatError("pass --steps with --graph")
        jobs = [(graph, inputs, args.steps)]
    elif args.data:
        dataset = serialize.read_dataset(Path(args.data))
        jobs = [(ex.graph, ex.inputs, ex.steps if args.steps is None else args.steps) for ex in dataset]
    else:
        raise FormatError("pass --graph or --data")
    want_trace = args.trace is not None
    for graph, inputs, steps in jobs:
        if args.render:
            palette = _parse_palette(args.palette)
            states = inputs
            frames = [states]
            for _ in range(steps):
                states, _unused = run(fsa, graph, states, 1)
                frames.append(states)
            print(render_grid_trace(graph, frames, palette))
            if want_trace:
                _final, trace = run(fsa, graph, inputs, steps, record_trace=True)
                traces.append(trace)
        else:
            final, trace = run(fsa, graph, inputs, steps, record_trace=want_trace)
            print(serialize.dumps([int(x) for x in final]))
            if want_trace:
                traces.append(trace)
    if want_trace:
        serialize.write_traces(Path(args.trace), traces)
    return 0


# ---------------------------------------------------------------------------
# export-dot

def cmd_export_dot(args) -> int:
    fsa = serialize.fsa_from_dict(serialize.load_json(Path(args.fsa)))
    if args.mode == "complete":
        text = export_complete_dot(fsa)
    else:
        if not args.trace:
            raise FormatError("partial export needs --trace")
        traces = serialize.read_traces(Path(args.trace))
        text = export_partial_dot(fsa, traces)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# wl-demo

def cmd_wl_demo(args) -> int:
    if args.builtin == "two-hub":
        graph = two_hub_example()
    elif args.graph:
        graph = serialize.graph_from_dict(serialize.load_json(Path(args.graph)))
    else:
        raise FormatError("pass --graph or --builtin two-hub")
    scheme = serialize.parse_scheme_flag(args.scheme)
    wl = wl_refinement(graph, args.rounds)
    bounded = bounded_refinement(graph, scheme, args.rounds)
    print("wl classes:      ", wl.tolist())
    print("bounded classes: ", bounded.tolist())
    refines = partition_refines(wl, bounded)
    print(f"wl refines bounded: {refines}")
    return 0


# ---------------------------------------------------------------------------
# parser / entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphfsa",
        description="Graph automata: dataset generation, training, evaluation, export.",
    )
    parser.add_argument("--version", action="version", version=f"graphfsa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write benchmark datasets")
    g.add_argument("--task", required=True,
                   help="grab | gol | gol-hex | wireworld | ca1d:<rule> | "
                        "distance | rootvalue | pathfinding | prefixsum")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=20, help="examples per size / dataset")
    g.add_argument("--states", type=int, default=4)
    g.add_argument("--start", type=int, default=2)
    g.add_argument("--final", type=int, default=2)
    g.add_argument("--scheme", default="counting:b=1")
    g.add_argument("--dist", default="tree", help="graph family, e.g. tree, er:p=0.3")
    g.add_argument("--train-n", default="", help="comma list of training sizes")
    g.add_argument("--extra-n", default="", help="comma list of extrapolation sizes")
    g.add_argument("--len", dest="length", type=int, default=None, help="path length (1D rules)")
    g.add_argument("--grid", type=int, default=None, help="board side (2D rules)")
    g.add_argument("--steps", type=int, default=1, help="rule applications (CA tasks)")
    g.add_argument("--toroidal", action="store_true")
    g.add_argument("--prefix-exclusive", action="store_true",
                   help="suffix parity excludes the node's own bit")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="fit a transition table to a dataset")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--states", type=int, default=None)
    t.add_argument("--scheme", default=None)
    t.add_argument("--start-states", default=None, help="comma list of starting states")
    t.add_argument("--final-states", default=None, help="comma list of final states")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--epochs", type=int, default=2000)
    t.add_argument("--batch-size", type=int, default=32)
    t.add_argument("--offset-max", type=int, default=3)
    t.add_argument("--penalty", type=float, default=0.1)
    t.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    t.add_argument("--init-scale", type=float, default=0.1)
    t.add_argument("--stop-loss", type=float, default=None)
    t.add_argument("--data-loss", choices=("full", "final"), default="full",
                   help="score the whole state distribution or only final-state coordinates")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score an automaton on datasets or a CA family")
    e.add_argument("--fsa", required=True)
    e.add_argument("--data", default=None, help="comma list of NDJSON datasets")
    e.add_argument("--task", default=None, help="gol | gol-hex | wireworld | ca1d:<rule>")
    e.add_argument("--grid", type=int, default=10)
    e.add_argument("--steps", default=None, help="comma list of step counts (task mode)")
    e.add_argument("--steps-override", type=int, default=None, help="fixed steps (data mode)")
    e.add_argument("--count", type=int, default=100)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--toroidal", action="store_true")
    e.add_argument("--out", default=None, help="CSV report path")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("simulate", help="run an automaton on a graph or dataset")
    s.add_argument("--fsa", required=True)
    s.add_argument("--graph", default=None)
    s.add_argument("--data", default=None)
    s.add_argument("--inputs", default=None, help="comma list of node states")
    s.add_argument("--steps", type=int, default=None)
    s.add_argument("--render", action="store_true", help="print grid frames")
    s.add_argument("--palette", default=None, help="state=char, comma separated")
    s.add_argument("--trace", default=None, help="write transition traces (NDJSON)")
    s.set_defaults(func=cmd_simulate, seed=None)

    x = sub.add_parser("export-dot", help="emit a DOT diagram of an automaton")
    x.add_argument("--fsa", required=True)
    x.add_argument("--mode", choices=("complete", "partial"), default="complete")
    x.add_argument("--trace", default=None, help="trace NDJSON (partial mode)")
    x.add_argument("--out", default=None)
    x.set_defaults(func=cmd_export_dot, seed=None)

    w = sub.add_parser("wl-demo", help="compare refinement partitions on a graph")
    w.add_argument("--graph", default=None)
    w.add_argument("--builtin", choices=("two-hub",), default=None)
    w.add_argument("--scheme", default="counting:b=2")
    w.add_argument("--rounds", type=int, default=5)
    w.set_defaults(func=cmd_wl_demo, seed=None)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TrainingError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
