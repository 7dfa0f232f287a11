"""Command-line interface.

Subcommands: gen-data, ratios, train, predict, evaluate. Exit codes are 0 on
success, 1 on usage errors and 2 on data/validation errors. Diagnostics go to
stderr; data is only ever written to the paths named in flags.

A flat key=value config file may be passed as ``bankpred --config FILE <cmd>``;
explicit flags override file values. Every run logs its fully resolved
configuration (including the seed) to stderr so any artifact can be
reproduced from the log line.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .data import generate_synthetic, parse_csv, write_csv
from .errors import BankpredError
from .ga import GaConfig
from .pipeline import GA_SEED_OFFSET, HybridPipeline, load_model, save_model
from .ratios import feature_set, project, write_ratio_csv

logger = logging.getLogger("bankpred")

# flag, type, required, default, help
_OPTIONS: dict[str, list[tuple[str, type, bool, object, str]]] = {
    "gen-data": [
        ("firms", int, True, None, "number of firms to generate (>= 4)"),
        ("bankrupt-frac", float, True, None, "fraction of bankrupt firms, in (0, 1)"),
        ("separation", float, True, None, "class separation in ratio standard deviations"),
        ("seed", int, True, None, "generator seed"),
        ("out", str, True, None, "output CSV path"),
    ],
    "ratios": [
        ("data", str, True, None, "input statements CSV"),
        ("set", str, True, None, "feature set letter (A|B|C|D|E)"),
        ("out", str, True, None, "output ratios CSV path"),
    ],
    "train": [
        ("data", str, True, None, "training statements CSV"),
        ("features", str, True, None, "feature set (A|B|C|D|E) or 'ga'"),
        ("clusters", int, False, 3, "number of fuzzy clusters (default 3)"),
        ("seed", int, False, 0, "master seed (default 0)"),
        ("out", str, True, None, "output model JSON path"),
        ("ga-history", str, False, None,
         "optional CSV of per-generation GA fitness (features=ga only)"),
        ("cluster-csv", str, False, None,
         "optional CSV of standardized training points with hard cluster labels"),
    ],
    "predict": [
        ("model", str, True, None, "model JSON path"),
        ("data", str, True, None, "statements CSV to score"),
        ("out", str, True, None, "output predictions CSV path"),
    ],
    "evaluate": [
        ("model", str, True, None, "model JSON path"),
        ("data", str, True, None, "labeled statements CSV"),
        ("report", str, True, None, "output report JSON path"),
    ],
}

_CHOICES = {
    ("ratios", "set"): ["A", "B", "C", "D", "E"],
    ("train", "features"): ["A", "B", "C", "D", "E", "ga"],
}


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bankpred", description=__doc__)
    parser.add_argument("--config", default=None,
                        help="flat key=value file; flags override file values")
    subparsers = parser.add_subparsers(dest="command", parser_class=_Parser)
    for command, options in _OPTIONS.items():
        sub = subparsers.add_parser(command)
        for flag, flag_type, _required, _default, help_text in options:
            kwargs: dict = {"type": flag_type, "default": None, "help": help_text}
            choices = _CHOICES.get((command, flag))
            if choices:
                kwargs["choices"] = choices
                kwargs.pop("type")
            sub.add_argument(f"--{flag}", dest=flag.replace("-", "_"), **kwargs)
    return parser


def _read_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise BankpredError(f"config line {line_no}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(parser: _Parser, args: argparse.Namespace) -> dict:
    """Merge flags over config-file values over defaults; check requireds."""
    file_values = _read_config(args.config) if args.config else {}
    resolved: dict = {}
    for flag, flag_type, required, default, _help in _OPTIONS[args.command]:
        dest = flag.replace("-", "_")
        value = getattr(args, dest)
        if value is None and dest in file_values:
            raw = file_values[dest]
            choices = _CHOICES.get((args.command, flag))
            if choices is not None:
                if raw not in choices:
                    parser.error(f"--{flag}: invalid choice {raw!r} (from config file)")
                value = raw
            else:
                try:
                    value = flag_type(raw)
                except ValueError:
                    parser.error(f"--{flag}: invalid {flag_type.__name__} value "
                                 f"{raw!r} (from config file)")
        if value is None:
            if required:
                parser.error(f"the following flag is required: --{flag}")
            value = default
        resolved[dest] = value
    return resolved


def _write_predictions(predictions, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("firm_id,score,prediction\n")
        for p in predictions:
            if p.error:
                fh.write(f"{p.firm_id},,\n")
            else:
                fh.write(f"{p.firm_id},{p.score!r},{p.prediction.value}\n")


def _write_ga_history(result, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("generation,best_fitness,mean_fitness\n")
        for generation, best, mean in result.history_rows():
            fh.write(f"{generation},{best!r},{mean!r}\n")


def _write_cluster_csv(dataset, model, path) -> None:
    matrix = project(dataset, model.feature_set)
    standardized = model.partition.standardize(matrix.x)
    memberships = model.partition.membership_of(matrix.x)
    hard = memberships.argmax(axis=1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("firm_id," + ",".join(r.value for r in model.feature_set.members)
                 + ",cluster\n")
        for firm_id, row, cluster in zip(matrix.firm_ids, standardized, hard):
            fh.write(firm_id + "," + ",".join(repr(float(v)) for v in row)
                     + f",{int(cluster)}\n")


def _cmd_gen_data(options: dict) -> int:
    dataset = generate_synthetic(
        n_firms=options["firms"],
        bankrupt_fraction=options["bankrupt_frac"],
        separation=options["separation"],
        seed=options["seed"],
    )
    write_csv(dataset, options["out"])
    logger.info("wrote %d statements to %s", len(dataset), options["out"])
    return 0


def _cmd_ratios(options: dict) -> int:
    dataset = parse_csv(options["data"])
    write_ratio_csv(dataset, feature_set(options["set"]), options["out"])
    logger.info("wrote ratio table for %d firms to %s", len(dataset), options["out"])
    return 0


def _cmd_train(options: dict) -> int:
    dataset = parse_csv(options["data"])
    pipe = HybridPipeline(
        features=options["features"],
        n_clusters=options["clusters"],
        random_state=options["seed"],
        ga_config=GaConfig(seed=options["seed"] + GA_SEED_OFFSET)
        if options["features"] == "ga" else None,
    )
    pipe.fit(dataset)
    save_model(pipe.model_, options["out"])
    self_report = pipe.evaluate(dataset)
    logger.info("training_accuracy=%r type_i=%r type_ii=%r",
                self_report.accuracy, self_report.type_i_error,
                self_report.type_ii_error)
    if options["ga_history"]:
        if getattr(pipe, "ga_result_", None) is None:
            logger.warning("--ga-history ignored: features was not 'ga'")
        else:
            _write_ga_history(pipe.ga_result_, options["ga_history"])
    if options["cluster_csv"]:
        _write_cluster_csv(dataset, pipe.model_, options["cluster_csv"])
    logger.info("wrote model to %s", options["out"])
    return 0


def _cmd_predict(options: dict) -> int:
    model = load_model(options["model"])
    dataset = parse_csv(options["data"])
    predictions = model.predict_dataset(dataset)
    for p in predictions:
        if p.error:
            logger.warning("firm %s not scored: %s", p.firm_id, p.error)
    _write_predictions(predictions, options["out"])
    scored = sum(1 for p in predictions if not p.error)
    logger.info("wrote %d/%d predictions to %s", scored, len(predictions), options["out"])
    return 0


def _cmd_evaluate(options: dict) -> int:
    model = load_model(options["model"])
    dataset = parse_csv(options["data"])
    report = model.evaluate(dataset)
    Path(options["report"]).write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    logger.info("accuracy=%r type_i=%r type_ii=%r",
                report.accuracy, report.type_i_error, report.type_ii_error)
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "ratios": _cmd_ratios,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
}


def main(argv=None) -> int:
    if not logging.getLogger().handlers:
        logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.error("a subcommand is required "
                         "(gen-data, ratios, train, predict, evaluate)")
        options = _resolve(parser, args)
    except SystemExit as exc:
        return int(exc.code or 0)

    logger.info("run-config: %s", json.dumps({"command": args.command, **options},
                                             sort_keys=True))
    try:
        return _COMMANDS[args.command](options)
    except (BankpredError, ValueError) as exc:
        print(f"bankpred {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"bankpred {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
