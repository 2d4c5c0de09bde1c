"""Command-line entry point: ``mtsparse <command> [options]``.

Commands: featurize, coupling, train, predict, evaluate, synth.

Every command also accepts ``--config FILE``: a flat ``key = value`` file whose
keys are the command's flag names (``lambda-sparse = 2`` or ``lambda_sparse = 2``).
Flags given on the command line win over the file.

Exit codes: 0 success (a solve that hits max_iter still counts), 1 usage error,
2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .admm import solve, write_trace
from .baselines import predict_dataset
from .core import (
    CouplingGraph,
    DataError,
    HyperParams,
    NumericalError,
    read_dataset,
    read_edges,
    read_model,
    validate_dataset,
    write_dataset,
    write_edges,
    write_model,
)
from .evaluation import DEFAULT_GRID, TaskReport, compare_models, format_table, score, write_report_csv
from .featurizer import (
    TimeBucketing,
    build_dataset,
    cosine_coupling,
    keyword_filter,
    parse_duration,
    parse_timestamp,
    read_documents,
    read_keywords,
    read_labels,
    read_lexicon,
)
from .plots import plot_report, plot_trace
from .synthgen import SynthConfig, generate_split, generate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

PREDICTION_COLUMNS = ("task", "row_index", "score", "label")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_hyperparams(p: argparse.ArgumentParser) -> None:
    d = HyperParams()
    g = p.add_argument_group("solver")
    g.add_argument("--lambda-sparse", type=float, default=d.lambda_sparse, help="row-sparsity weight")
    g.add_argument("--rho", type=float, default=d.rho, help="augmented Lagrangian penalty")
    g.add_argument("--eps-primal", type=float, default=d.eps_primal, help="primal residual tolerance")
    g.add_argument("--eps-dual", type=float, default=d.eps_dual, help="dual residual tolerance")
    g.add_argument("--max-iter", type=int, default=d.max_iter, help="outer ADMM iterations")
    g.add_argument("--inner-max-iter", type=int, default=d.inner_max_iter, help="gradient steps per column")
    g.add_argument("--inner-grad-tol", type=float, default=d.inner_grad_tol, help="column gradient tolerance")
    g.add_argument("--fit-intercept", action="store_true", help="learn an unpenalized bias per task")


def _add_coupling_source(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("task coupling")
    g.add_argument("--edges", help="edge-list CSV (task_a,task_b,weight); overrides --cosine-threshold")
    g.add_argument("--cosine-threshold", type=float, default=None,
                   help="couple tasks whose keyword vectors exceed this cosine")
    g.add_argument("--cosine-weight", type=float, default=1.0, help="weight of cosine-derived edges")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="mtsparse", description=__doc__.split("\n\n")[0], formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    def command(name, help_):
        p = sub.add_parser(name, help=help_, description=help_, formatter_class=fmt)
        p.add_argument("--config", help="key = value file with defaults for this command's flags")
        return p

    p = command("featurize", "turn time-stamped documents into a dataset directory")
    p.add_argument("--docs", required=True, help="JSON-lines documents (text, timestamp, task)")
    p.add_argument("--lexicon", required=True, help="CSV term,feature_name")
    p.add_argument("--labels", required=True, help="CSV task,bucket_index,label")
    p.add_argument("--keywords", help="keep only documents containing one of these keywords (one per line)")
    p.add_argument("--origin", required=True, help="bucket origin, RFC 3339 timestamp")
    p.add_argument("--width", required=True, help="bucket width, e.g. 1d, 12h, 3600s")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_featurize)

    p = command("coupling", "build a task graph from keyword cosine similarity")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--threshold", type=float, default=0.5, help="cosine threshold (strict)")
    p.add_argument("--weight", type=float, default=1.0, help="weight given to every edge")
    p.add_argument("--out", required=True, help="output edge-list CSV")
    p.set_defaults(func=cmd_coupling)

    p = command("train", "fit the multi-task model with ADMM")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="output directory for model.json, trace.csv, trace.png")
    _add_coupling_source(p)
    _add_hyperparams(p)
    p.set_defaults(func=cmd_train)

    p = command("predict", "score a dataset with a trained model")
    p.add_argument("--model", required=True, help="model.json")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="output predictions CSV")
    p.set_defaults(func=cmd_predict)

    p = command("evaluate", "precision/F1 report for models, prediction files, or a full comparison")
    p.add_argument("--dataset", required=True, help="dataset directory holding the true labels")
    p.add_argument("--model", action="append", default=[], help="model.json to score (repeatable)")
    p.add_argument("--predictions", action="append", default=[],
                   help="prediction CSV task,row_index,score,label (repeatable)")
    p.add_argument("--train", help="training dataset; runs the multi-task model and the baselines")
    p.add_argument("--ridge-grid", type=_floats, default=list(DEFAULT_GRID["ridge"]), help="ridge lambdas")
    p.add_argument("--lasso-grid", type=_floats, default=list(DEFAULT_GRID["lasso"]), help="lasso lambdas")
    p.add_argument("--selection", choices=("test", "validation"), default="test",
                   help="where baseline lambdas are chosen")
    p.add_argument("--out", required=True, help="output directory for report.csv, report.txt, report.png")
    _add_coupling_source(p)
    _add_hyperparams(p)
    p.set_defaults(func=cmd_evaluate)

    p = command("synth", "write a synthetic dataset with planted weights")
    c = SynthConfig()
    p.add_argument("--seed", type=int, default=c.seed, help="PCG64 seed")
    p.add_argument("--d", type=int, default=c.d, help="features")
    p.add_argument("--c", type=int, default=c.c, help="tasks")
    p.add_argument("--m-per-task", type=int, default=c.m_per_task, help="training rows per task")
    p.add_argument("--support-size", type=int, default=c.support_size, help="active feature rows")
    p.add_argument("--coupling-noise", type=float, default=c.coupling_noise,
                   help="per-task perturbation scale of the shared weights")
    p.add_argument("--label-noise", type=float, default=c.label_noise, help="label flip probability")
    p.add_argument("--features", choices=("gaussian", "poisson"), default=c.features, help="feature distribution")
    p.add_argument("--m-test", type=int, default=0, help="extra held-out rows per task, written to OUT/test")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_synth)
    return parser


# --- config files -------------------------------------------------------------


def _read_config(path: Path) -> dict[str, str]:
    if not path.is_file():
        raise UsageError(f"config file {path} not found")
    values = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.lstrip("-").replace("_", "-")] = value
    return values


def _truthy(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    """Install config-file values as defaults on the chosen subcommand parser."""
    if "--config" not in argv and not any(a.startswith("--config=") for a in argv):
        return
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    name = next((a for a in argv if a in sub_action.choices), None)
    if name is None:
        return
    sub = sub_action.choices[name]
    cfg_path = None
    for k, a in enumerate(argv):
        if a == "--config" and k + 1 < len(argv):
            cfg_path = argv[k + 1]
        elif a.startswith("--config="):
            cfg_path = a.split("=", 1)[1]
    if cfg_path is None:
        return
    by_flag = {opt[2:]: act for act in sub._actions for opt in act.option_strings if opt.startswith("--")}
    defaults = {}
    for key, value in _read_config(Path(cfg_path)).items():
        act = by_flag.get(key)
        if act is None or key in ("help", "config"):
            raise UsageError(f"{cfg_path}: unknown key {key!r} for command {name}")
        if isinstance(act, argparse._StoreTrueAction):
            defaults[act.dest] = _truthy(value)
        elif isinstance(act, argparse._AppendAction):
            defaults[act.dest] = [v.strip() for v in value.split(",") if v.strip()]
        else:
            if act.choices is not None and value not in act.choices:
                raise UsageError(f"{cfg_path}: {key} must be one of {sorted(act.choices)}")
            try:
                defaults[act.dest] = act.type(value) if act.type else value
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"{cfg_path}: bad value for {key}: {exc}") from None
        act.required = False
    sub.set_defaults(**defaults)


# --- commands -----------------------------------------------------------------


def _hyperparams(args) -> HyperParams:
    return HyperParams(
        lambda_sparse=args.lambda_sparse,
        rho=args.rho,
        eps_primal=args.eps_primal,
        eps_dual=args.eps_dual,
        max_iter=args.max_iter,
        inner_max_iter=args.inner_max_iter,
        inner_grad_tol=args.inner_grad_tol,
        fit_intercept=args.fit_intercept,
    )


def _load_dataset(path: str):
    if not Path(path).is_dir():
        raise FileNotFoundError(f"dataset directory {path} not found")
    ds = read_dataset(path)
    problems = validate_dataset(ds)
    if problems:
        raise DataError(f"dataset {path} is invalid: " + "; ".join(problems))
    return ds


def _coupling(args, ds) -> CouplingGraph:
    if args.edges:
        return read_edges(args.edges, ds.task_names)
    if args.cosine_threshold is not None:
        return cosine_coupling(ds, args.cosine_threshold, args.cosine_weight)
    return CouplingGraph()


def _require_file(path: str | None, what: str) -> None:
    if path is not None and not Path(path).is_file():
        raise FileNotFoundError(f"{what} file {path} not found")


def cmd_featurize(args) -> int:
    for path, what in ((args.docs, "documents"), (args.lexicon, "lexicon"), (args.labels, "labels"),
                       (args.keywords, "keyword")):
        _require_file(path, what)
    docs = read_documents(args.docs)
    if not docs:
        raise DataError(f"{args.docs}: no documents")
    if args.keywords:
        docs = keyword_filter(docs, read_keywords(args.keywords))
        if not docs:
            raise DataError("no documents left after the keyword filter")
    try:
        bucketing = TimeBucketing(parse_timestamp(args.origin), parse_duration(args.width))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds = build_dataset(docs, read_lexicon(args.lexicon), bucketing, read_labels(args.labels))
    write_dataset(ds, args.out)
    print(f"kept {len(docs)} documents; wrote {args.out}")
    for name, task in zip(ds.task_names, ds.tasks):
        print(f"  {name}: {task.m} rows x {task.d} features")
    return EXIT_OK


def cmd_coupling(args) -> int:
    ds = _load_dataset(args.dataset)
    try:
        graph = cosine_coupling(ds, args.threshold, args.weight)
    except ValueError as exc:
        if isinstance(exc, DataError):
            raise
        raise UsageError(str(exc)) from None
    write_edges(graph, ds.task_names, args.out)
    print(f"{len(graph.edges)} edges written to {args.out}")
    for e in graph.edges:
        print(f"  {ds.task_names[e.i]} - {ds.task_names[e.j]}  weight {e.weight:g}")
    return EXIT_OK


def cmd_train(args) -> int:
    ds = _load_dataset(args.dataset)
    _require_file(args.edges, "edge list")
    try:
        hp = _hyperparams(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    graph = _coupling(args, ds)
    model, report = solve(ds, graph, hp)

    out = Path(args.out)
    write_model(model, out / "model.json")
    write_trace(report, out / "trace.csv")
    plot_trace(
        [o.total for o in report.objective_trace],
        report.state.primal_residuals,
        report.state.dual_residuals,
        out / "trace.png",
        hp.eps_primal,
        hp.eps_dual,
    )
    final = report.objective_trace[-1]
    print(f"converged: {str(report.converged).lower()}")
    print(f"iterations: {report.iterations}")
    print(f"objective: total={final.total:.6g} loss={final.loss:.6g} "
          f"coupling={final.coupling:.6g} sparsity={final.sparsity:.6g}")
    print(f"wrote {out / 'model.json'}, {out / 'trace.csv'}, {out / 'trace.png'}")
    if not report.converged:
        print(f"warning: stopped at max_iter={hp.max_iter} before the residual tolerances were met",
              file=sys.stderr)
    return EXIT_OK


def write_predictions(model, ds, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTION_COLUMNS)
        for name, (labels, scores) in zip(ds.task_names, predict_dataset(model, ds)):
            for row, (label, s) in enumerate(zip(labels, scores)):
                writer.writerow([name, row, repr(float(s)), int(label)])
    return path


def read_predictions(path: str | Path, ds) -> dict[str, list[int]]:
    """Predicted labels per task, ordered by row index; every dataset row must be present."""
    path = Path(path)
    _require_file(str(path), "predictions")
    found: dict[str, dict[int, int]] = {name: {} for name in ds.task_names}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(PREDICTION_COLUMNS) <= set(reader.fieldnames):
            raise DataError(f"{path}: expected header {','.join(PREDICTION_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if row["task"] not in found:
                raise DataError(f"{path}:{lineno}: unknown task {row['task']!r}")
            try:
                label = int(row["label"])
                found[row["task"]][int(row["row_index"])] = label
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if label not in (-1, 1):
                raise DataError(f"{path}:{lineno}: label must be -1 or 1")
    out = {}
    for name, task in zip(ds.task_names, ds.tasks):
        rows = found[name]
        if sorted(rows) != list(range(task.m)):
            raise DataError(f"{path}: task {name!r} needs row_index 0..{task.m - 1}")
        out[name] = [rows[k] for k in range(task.m)]
    return out


def cmd_predict(args) -> int:
    ds = _load_dataset(args.dataset)
    model = read_model(args.model)
    write_predictions(model, ds, args.out)
    print(f"wrote {args.out} ({ds.n_samples} rows)")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    ds = _load_dataset(args.dataset)
    if not (args.model or args.predictions or args.train):
        raise UsageError("give at least one of --model, --predictions or --train")
    reports: list[TaskReport] = []

    for k, path in enumerate(args.model):
        model = read_model(path)
        name = f"model:{Path(path).parent.name or Path(path).stem}"
        if len(args.model) > 1:
            name += f"#{k + 1}"
        for tname, task, (labels, _) in zip(ds.task_names, ds.tasks, predict_dataset(model, ds)):
            reports.append(score(name, tname, task.y, labels))

    for path in args.predictions:
        preds = read_predictions(path, ds)
        for tname, task in zip(ds.task_names, ds.tasks):
            reports.append(score(Path(path).stem, tname, task.y, preds[tname]))

    if args.train:
        train = _load_dataset(args.train)
        _require_file(args.edges, "edge list")
        try:
            hp = _hyperparams(args)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        grid = {"ridge": args.ridge_grid, "lasso": args.lasso_grid}
        reports.extend(compare_models(train, ds, _coupling(args, train), hp, grid, selection=args.selection))

    out = Path(args.out)
    write_report_csv(reports, out / "report.csv")
    table = format_table(reports)
    (out / "report.txt").write_text(table + "\n", encoding="utf-8")
    plot_report(reports, out / "report.png")
    print(table)
    print(f"wrote {out / 'report.csv'}, {out / 'report.txt'}, {out / 'report.png'}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        seed=args.seed,
        d=args.d,
        c=args.c,
        m_per_task=args.m_per_task,
        support_size=args.support_size,
        coupling_noise=args.coupling_noise,
        label_noise=args.label_noise,
        features=args.features,
    )
    try:
        cfg.validate()
        if args.m_test < 0:
            raise ValueError("m-test must be >= 0")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    if args.m_test:
        train, test, planted, graph = generate_split(cfg, args.m_test)
        write_dataset(test, out / "test")
    else:
        train, planted, graph = generate(cfg)
    write_dataset(train, out)
    write_model(planted, out / "planted.json")
    write_edges(graph, train.task_names, out / "edges.csv")
    print(f"wrote {out}: {cfg.c} tasks x {cfg.m_per_task} rows x {cfg.d} features"
          + (f", plus {args.m_test} test rows per task in {out / 'test'}" if args.m_test else ""))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"mtsparse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"mtsparse: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, FileNotFoundError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"mtsparse: error: {msg}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
