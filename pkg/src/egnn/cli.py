"""Command line interface: train, inspect, data, gradcheck.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 numerical failure (training divergence or a failed gradient check).
"""

import argparse
import os
import sys
from pathlib import Path

from .arch import parse_architecture
from .data import load_tu_dataset
from .exceptions import (
    ArchitectureError,
    DatasetFormatError,
    DimensionError,
    DivergenceError,
    FixedSizeError,
    MaskError,
    OracleError,
)
from .gradcheck import LAYER_TYPES, run_suite
from .model import GraphModel
from .training import TrainConfig, cross_validate

_INT_KEYS = {"epochs", "batch_size", "seed", "folds", "limit"}
_FLOAT_KEYS = {"learning_rate", "adam_beta1", "adam_beta2", "adam_eps",
               "early_stop_accuracy"}
_BOOL_KEYS = {"edge_conv_bias", "existing_edges_only", "normalize_edges"}
_STR_KEYS = {"arch", "dataset", "dataset_dir", "optimizer", "out"}
_ALIASES = {"lr": "learning_rate", "architecture": "arch"}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this project reserves 2 for data and
    validation errors, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_config_file(path: Path) -> dict:
    if not path.is_file():
        raise DatasetFormatError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DatasetFormatError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key in _INT_KEYS:
            values[key] = int(value)
        elif key in _FLOAT_KEYS:
            values[key] = float(value)
        elif key in _BOOL_KEYS:
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise DatasetFormatError(f"{path}:{lineno}: bad boolean {value!r}")
            values[key] = value.lower() in ("true", "1", "yes")
        elif key in _STR_KEYS:
            values[key] = value
        else:
            raise DatasetFormatError(f"{path}:{lineno}: unknown config key {key!r}")
    return values


def _resolve_train_config(args) -> tuple:
    values = {}
    if args.config:
        values.update(_parse_config_file(Path(args.config)))
    for key in sorted(_INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | _STR_KEYS - {"out"}):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    out = values.pop("out", None)
    if args.out is not None:
        out = args.out
    if "dataset_dir" not in values or values["dataset_dir"] is None:
        env = os.environ.get("EGNN_DATA_DIR")
        if env:
            values["dataset_dir"] = env
    cfg = TrainConfig(**values)
    return cfg, out or "egnn_report"


def _cmd_train(args) -> int:
    cfg, out_prefix = _resolve_train_config(args)
    if cfg.dataset != "synthetic":
        if not cfg.dataset_dir:
            raise DatasetFormatError(
                "a TU dataset needs --dataset-dir (or EGNN_DATA_DIR)"
            )
        if not Path(cfg.dataset_dir).is_dir():
            raise DatasetFormatError(f"dataset directory not found: {cfg.dataset_dir}")
    report = cross_validate(cfg)
    json_path = Path(f"{out_prefix}.json")
    csv_path = Path(f"{out_prefix}.csv")
    report.write_json(json_path)
    report.write_csv(csv_path)
    for fold, acc in enumerate(report.fold_accuracies):
        print(f"fold {fold}: test accuracy {acc:.4f}")
    print(
        f"mean accuracy {report.mean_accuracy:.4f} "
        f"+/- {report.std_accuracy:.4f} over {len(report.fold_accuracies)} folds"
    )
    print(f"parameters: {report.parameter_count}")
    print(f"wall clock: {report.wall_clock_sec:.2f} s")
    print(f"report written to {json_path} and {csv_path}")
    return 0


def _stage_text(stage) -> str:
    if stage.is_flat:
        return f"width={stage.width}"
    n = stage.n if stage.n is not None else "var"
    return f"N={n} F={stage.f} L={stage.l}"


def _cmd_inspect(args) -> int:
    arch = parse_architecture(args.arch)
    model = GraphModel(
        arch,
        num_vertex_features=args.f,
        num_edge_channels=args.l,
        num_classes=args.classes,
        seed=0,
        fixed_n=args.n,
    )
    stages = model.stages
    print(f"architecture: {arch.canonical()}")
    print(f"input: {_stage_text(stages[0])}")
    print(f"{'pos':>3}  {'token':<16} {'output':<22} {'params':>8}")
    for pos, (spec, stage) in enumerate(zip(arch.layers, stages[1:])):
        start, end = model.token_slices[pos]
        count = sum(model.layers[i].param_count() for i in range(start, end))
        print(f"{pos:>3}  {spec.token():<16} {_stage_text(stage):<22} {count:>8}")
    head_start, head_end = model.head_slice
    head_count = sum(model.layers[i].param_count() for i in range(head_start, head_end))
    print(f"{'':>3}  {'<class head>':<16} {'width=' + str(args.classes):<22} {head_count:>8}")
    width = arch.implied_efc_width(args.f, args.l, args.n)
    if width is not None:
        print(f"edge-aware FC input width: {width}")
    print(f"total parameters: {model.count_parameters()}")
    return 0


def _cmd_data(args) -> int:
    directory = Path(args.dataset_dir)
    if not directory.is_dir():
        raise DatasetFormatError(f"dataset directory not found: {directory}")
    name = args.dataset or directory.name
    ds = load_tu_dataset(directory, name)
    sizes = sorted(g.n for g in ds.graphs)
    labels = ds.labels
    print(f"dataset: {ds.name}")
    print(f"graphs: {len(ds)}")
    print(f"classes: {ds.num_classes}")
    print(f"vertex features (F): {ds.num_vertex_features}"
          f"{' (one-hot labels)' if ds.node_labels_onehot else ''}")
    print(f"edge channels (L): {ds.num_edge_channels}"
          f"{' (one-hot labels)' if ds.edge_labels_onehot else ''}")
    print(f"vertices per graph: min {sizes[0]}, median {sizes[len(sizes) // 2]}, "
          f"max {sizes[-1]}")
    for c in range(ds.num_classes):
        share = float((labels == c).mean())
        print(f"class {c}: {int((labels == c).sum())} graphs ({share:.1%})")
    return 0


def _cmd_gradcheck(args) -> int:
    kinds = tuple(args.layers) if args.layers else LAYER_TYPES
    results = run_suite(seed=args.seed, n_configs=args.configs, kinds=kinds)
    failed = []
    for result in results:
        status = "ok" if result.passed else "FAIL"
        print(
            f"{result.kind:<16} max rel err {result.max_rel_error:.3e}  "
            f"(tol {result.tolerance:.0e}, {result.n_configs} configs)  {status}"
        )
        if not result.passed:
            failed.append(result.kind)
    if failed:
        print(f"gradient check FAILED for: {', '.join(failed)}", file=sys.stderr)
        return 3
    print("all gradient checks passed")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="egnn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="cross-validated training run")
    train.add_argument("--config", help="flat key=value config file")
    train.add_argument("--dataset-dir", dest="dataset_dir",
                       help="TU dataset directory (default: $EGNN_DATA_DIR)")
    train.add_argument("--dataset", help="dataset name, or 'synthetic'")
    train.add_argument("--arch", help="architecture string")
    train.add_argument("--folds", type=int)
    train.add_argument("--seed", type=int)
    train.add_argument("--epochs", type=int)
    train.add_argument("--batch-size", dest="batch_size", type=int)
    train.add_argument("--lr", dest="learning_rate", type=float)
    train.add_argument("--optimizer", choices=["sgd", "adam"])
    train.add_argument("--limit", type=int,
                       help="stratified subsample size for desk-scale runs")
    train.add_argument("--edge-conv-bias", dest="edge_conv_bias",
                       action="store_true", default=None)
    train.add_argument("--existing-edges-only", dest="existing_edges_only",
                       action="store_true", default=None)
    train.add_argument("--normalize-edges", dest="normalize_edges",
                       action="store_true", default=None)
    train.add_argument("--early-stop-accuracy", dest="early_stop_accuracy",
                       type=float, help="stop a fold once train accuracy "
                                        "reaches this (off by default)")
    train.add_argument("--out", help="report path prefix (writes .json and .csv)")
    train.set_defaults(func=_cmd_train)

    inspect = sub.add_parser("inspect", help="parse an architecture and show "
                                             "shape flow and parameter counts")
    inspect.add_argument("--arch", required=True)
    inspect.add_argument("--f", type=int, default=1, help="input vertex features")
    inspect.add_argument("--l", type=int, default=1, help="input edge channels")
    inspect.add_argument("--n", type=int, default=None,
                         help="fixed input graph size, when known")
    inspect.add_argument("--classes", type=int, default=2)
    inspect.set_defaults(func=_cmd_inspect)

    data = sub.add_parser("data", help="dataset statistics")
    data.add_argument("--dataset-dir", dest="dataset_dir", required=True)
    data.add_argument("--dataset", help="dataset name (default: directory name)")
    data.set_defaults(func=_cmd_data)

    gradcheck = sub.add_parser(
        "gradcheck", help="verify analytic gradients against finite differences"
    )
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--configs", type=int, default=20,
                           help="random configurations per layer type")
    gradcheck.add_argument("--layers", nargs="*", choices=list(LAYER_TYPES),
                           help=argparse.SUPPRESS)
    gradcheck.set_defaults(func=_cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (
        ArchitectureError,
        DatasetFormatError,
        DimensionError,
        FixedSizeError,
        MaskError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"egnn: error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, OracleError) as exc:
        print(f"egnn: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
