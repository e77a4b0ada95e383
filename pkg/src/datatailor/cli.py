"""Command-line surface: select | score | synth | evaluate.

All commands are deterministic for fixed inputs, config and seed, and no
failure path leaves a partial output file (outputs are written to a temp
file and renamed into place). Exit codes: 0 success, 2 bad input file,
3 bad config, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from .dataset import _atomic_write_bytes, load_container, write_container
from .errors import (
    ConfigError,
    ContainerError,
    DataQualityError,
    DataTailorError,
    InvalidDatasetError,
    UnknownSampleError,
)
from .selection import (
    SelectionConfig,
    SelectionResult,
    cluster_dataset,
    evaluate_subset,
    select,
)
from .synth import SynthSpec, generate

_INPUT_ERRORS = (
    ContainerError,
    InvalidDatasetError,
    DataQualityError,
    UnknownSampleError,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
)


def _fmt(value: float) -> str:
    return format(value, ".9g")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="datatailor",
        description="Coreset selection for instruction-tuning feature containers.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    def add_common(p):
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--k", type=float, default=None, help="global selection proportion")
        p.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="dendrogram cut threshold")
        p.add_argument("--threads", default=None, help="worker threads or 'auto'")
        p.add_argument("--ward-variant", choices=["classical", "paper_literal"], default=None)
        p.add_argument("--uniqueness-aggregation", choices=["mean", "sum"], default=None)

    p_select = sub.add_parser("select", help="select a subset and write selection.json + scores.csv")
    p_select.add_argument("container")
    p_select.add_argument("--out", required=True, help="output directory")
    add_common(p_select)

    p_score = sub.add_parser("score", help="write per-sample scores.csv only")
    p_score.add_argument("container")
    p_score.add_argument("--out", required=True, help="output CSV path")
    add_common(p_score)

    p_synth = sub.add_parser("synth", help="generate a synthetic container from a spec")
    p_synth.add_argument("spec")
    p_synth.add_argument("--out", required=True, help="output container path")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--manifest", default=None, help="optional sample-role manifest JSON")

    p_eval = sub.add_parser("evaluate", help="principle metrics for a subset id list")
    p_eval.add_argument("container")
    p_eval.add_argument("subset", help="file with one sample id per line")
    p_eval.add_argument("--out", required=True, help="output metrics JSON path")
    add_common(p_eval)
    return parser


def _load_config(args) -> SelectionConfig:
    data: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    overrides = {
        "k": getattr(args, "k", None),
        "lambda": getattr(args, "lam", None),
        "threads": getattr(args, "threads", None),
        "ward_variant": getattr(args, "ward_variant", None),
        "uniqueness_aggregation": getattr(args, "uniqueness_aggregation", None),
        "seed": getattr(args, "seed", None),
    }
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    if "threads" in data and isinstance(data["threads"], str) and data["threads"] != "auto":
        try:
            data["threads"] = int(data["threads"])
        except ValueError as exc:
            raise ConfigError(f"threads must be an integer or 'auto': {data['threads']!r}") from exc
    return SelectionConfig.from_dict(data)


def _scores_csv(result: SelectionResult, tasks: list[str], with_selected: bool) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["sample_id", "task", "rounds", "cluster_id",
              "v_inf_raw", "v_inf", "v_uni", "v_rep", "v_synergy"]
    if with_selected:
        header.append("selected")
    writer.writerow(header)
    for s in result.scored:
        row = [s.id, tasks[s.task_id], s.rounds, s.cluster_id,
               _fmt(s.v_inf_raw), _fmt(s.v_inf), _fmt(s.v_uni),
               _fmt(s.v_rep), _fmt(s.v_synergy)]
        if with_selected:
            row.append(int(s.selected))
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")


def _selection_json(result: SelectionResult, tasks: list[str]) -> bytes:
    payload = {
        "config": result.config.as_dict(),
        "plan": [
            {
                "task": tasks[b.task_id],
                "x_p": b.difficulty,
                "size": b.size,
                "k_p": b.k_p,
                "count": b.count,
            }
            for b in result.plan
        ],
        "selected": result.selected,
        "metrics": result.metrics.as_dict() if result.metrics else None,
    }
    return (json.dumps(payload, indent=2) + "\n").encode("utf-8")


def cmd_select(args) -> int:
    config = _load_config(args)
    dataset = load_container(args.container)
    result = select(dataset, config)
    os.makedirs(args.out, exist_ok=True)
    _atomic_write_bytes(os.path.join(args.out, "selection.json"),
                        _selection_json(result, dataset.tasks))
    _atomic_write_bytes(os.path.join(args.out, "scores.csv"),
                        _scores_csv(result, dataset.tasks, with_selected=True))
    return 0


def cmd_score(args) -> int:
    config = _load_config(args)
    dataset = load_container(args.container)
    result = select(dataset, config)
    _atomic_write_bytes(args.out, _scores_csv(result, dataset.tasks, with_selected=False))
    return 0


def cmd_synth(args) -> int:
    try:
        with open(args.spec, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ContainerError(f"synth spec is not valid JSON: {exc}") from exc
    spec = SynthSpec.from_dict(raw)
    seed = int(args.seed)
    if not (0 <= seed < 2**64):
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
    dataset, manifests = generate(spec, seed)
    write_container(dataset, args.out)
    if args.manifest:
        payload = {"seed": seed, "tasks": [m.as_dict() for m in manifests]}
        _atomic_write_bytes(args.manifest, (json.dumps(payload, indent=2) + "\n").encode("utf-8"))
    return 0


def _read_subset(path) -> list[int]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh]
    ids = []
    for line in lines:
        if not line:
            continue
        try:
            ids.append(int(line))
        except ValueError as exc:
            raise InvalidDatasetError(f"subset file has a non-integer id: {line!r}") from exc
    if not ids:
        raise InvalidDatasetError("subset file has no ids")
    return ids


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    dataset = load_container(args.container)
    subset = _read_subset(args.subset)
    cluster_sets = cluster_dataset(dataset, config)
    metrics = evaluate_subset(dataset, subset, cluster_sets)
    payload = metrics.as_dict()
    payload["subset_size"] = len(set(subset))
    _atomic_write_bytes(args.out, (json.dumps(payload, indent=2) + "\n").encode("utf-8"))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "select": cmd_select,
        "score": cmd_score,
        "synth": cmd_synth,
        "evaluate": cmd_evaluate,
    }
    try:
        return handlers[args.cmd](args)
    except ConfigError as exc:
        print(f"datatailor: config error: {exc}", file=sys.stderr)
        return 3
    except _INPUT_ERRORS as exc:
        print(f"datatailor: input error: {exc}", file=sys.stderr)
        return 2
    except DataTailorError as exc:
        print(f"datatailor: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"datatailor: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
