"""Command line entry point: ``empdist {train,predict,ensemble,score,submit,run,synth}``.

Exit codes: 0 success, 2 config error, 3 data error, 4 missing artifact,
5 metric error, 1 anything else raised by the package.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .config import load_config
from .errors import (
    ConfigInvalid,
    DataError,
    EmpDistError,
    EncoderLoadFailure,
    MetricError,
    MissingArtifact,
    UnknownEncoder,
)

log = logging.getLogger("empdist")

EXIT_CODES = (
    (ConfigInvalid, 2),
    (UnknownEncoder, 2),
    (DataError, 3),
    (MissingArtifact, 4),
    (EncoderLoadFailure, 4),
    (MetricError, 5),
)


def exit_code_for(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1


def _config(args):
    return load_config(args.config).with_overrides(seed=args.seed, run_dir=args.run_dir)


def cmd_train(args):
    for path in pipeline.run_train(_config(args)):
        print(path)


def cmd_predict(args):
    for path in pipeline.run_predict(_config(args), args.split):
        print(path)


def cmd_ensemble(args):
    results = pipeline.run_ensemble(_config(args))
    for name, res in results.items():
        print(f"{name:24s} dev  {res.dev_report.format()}")
        if res.report is not None:
            print(f"{'':24s} test {res.report.format()}")


def cmd_score(args):
    config = _config(args) if args.config else None
    pred_emp, pred_dis, gold = args.pred_emp, args.pred_dis, args.gold
    if config is not None:
        mean_dir = pipeline.ensemble_dir(config, "mean")
        pred_emp = pred_emp or mean_dir / "test.empathy.tsv"
        pred_dis = pred_dis or mean_dir / "test.distress.tsv"
        gold = gold or config.data.test
    if not (pred_emp and pred_dis and gold):
        raise ConfigInvalid("score needs --pred-emp, --pred-dis and --gold (or a --config to default them)")
    pipeline.run_score(pred_emp, pred_dis, gold, config=config, log_path=args.log)


def cmd_submit(args):
    print(pipeline.run_submit(_config(args), args.combiner, args.out))


def cmd_run(args):
    config = _config(args)
    pipeline.run_all(config, args.combiner)
    print(config.run_dir / "submission.tsv")


def cmd_synth(args):
    from .synthetic import write_corpus

    paths = write_corpus(args.out, tuple(args.sizes), seed=args.seed or 0)
    for p in paths.values():
        print(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="empdist", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, config_required=True):
        p = sub.add_parser(name)
        p.add_argument("--config", required=config_required)
        p.add_argument("--seed", type=int)
        p.add_argument("--run-dir")
        p.set_defaults(func=func)
        return p

    add("train", cmd_train)
    add("predict", cmd_predict).add_argument("--split", choices=("train", "dev", "test"), default="test")
    add("ensemble", cmd_ensemble)
    p = add("score", cmd_score, config_required=False)
    p.add_argument("--pred-emp")
    p.add_argument("--pred-dis")
    p.add_argument("--gold")
    p.add_argument("--log", help="results log to append to (default: <run_dir>/results.log)")
    p = add("submit", cmd_submit)
    p.add_argument("--combiner", default="mean")
    p.add_argument("--out")
    add("run", cmd_run).add_argument("--combiner", default="mean")
    p = add("synth", cmd_synth, config_required=False)
    p.add_argument("--out", required=True)
    p.add_argument("--sizes", type=int, nargs=3, default=(200, 50, 50))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except EmpDistError as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
