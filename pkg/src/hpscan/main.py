import argparse
import json
import logging
import sys
import traceback
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from . import __version__
from .chain.client import EtherscanClient
from .chain.dataset import load_dataset, store_dataset
from .chain.labels import load_seed_labels, propagate_labels
from .core.config import Config, PipelineConfig, config
from .core.errors import HpscanError, InputError
from .evaluation.protocols import (
    FeatureSet,
    cross_validate,
    leave_one_technique_out,
    leave_one_technique_out_all,
    triage_rank,
)
from .evaluation.reports import (
    class_summary,
    compiler_counts,
    write_cv_report,
    write_loto_report,
    write_triage,
)
from .features.matrix import FAMILIES, family_of, featurize_bundles, read_matrix, write_matrix
from .features.preprocess import filter_usable, preprocess, save_preprocess
from .features.source import EncodingDictionary
from .fundflow.cases import catalog_lines
from .fundflow.events import case_counts, frequency_vectors, query_cases, top_cases, write_frequency_csv
from .gbdt.model import feature_importance, load_model, save_model, train
from .synth.archetypes import synth_config
from .synth.generator import generate, technique_counts
from .utils.logger import log
from .utils.utils import create_app_directory_structure, is_stream, metadata_line, open_text, write_csv

FEATURE_SET_NAMES = ["all", "transactions", "source", "fundflow"]

# Query flag -> fund-flow variable
QUERY_FLAGS = {
    "sender": "sender",
    "creation": "creation",
    "error": "error",
    "balance_creator": "balanceCreator",
    "balance_contract": "balanceContract",
    "balance_sender": "balanceSender",
    "balance_other_positive": "balanceOtherPositive",
    "balance_other_negative": "balanceOtherNegative",
}


def _read_lines(path: str) -> List[str]:
    with open_text(path, "r") as f:
        return [line.strip() for line in f if line.strip() and not line.startswith("#")]


def _require(path: Optional[str], what: str) -> str:
    if not path:
        raise InputError(f"No {what} given")
    if not is_stream(path) and not Path(path).is_file():
        raise InputError(f"{what.capitalize()} not found: {path}")
    return path


def _output_path(settings: PipelineConfig, name: str) -> str:
    directory = Path(settings.paths.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    return str(directory / name)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Config values set on the command line; these win over the config file."""
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.debug:
        overrides["system"] = {"debug_mode": True}

    train_flags = {
        "n_rounds": getattr(args, "rounds", None),
        "max_depth": getattr(args, "max_depth", None),
        "learning_rate": getattr(args, "learning_rate", None),
        "scale_pos_weight": getattr(args, "scale_pos_weight", None),
    }
    train_section = {k: v for k, v in train_flags.items() if v is not None}
    if train_section:
        overrides["train"] = train_section

    evaluation = {k: getattr(args, k, None) for k in ("k", "threshold")}
    evaluation = {k: v for k, v in evaluation.items() if v is not None}
    if evaluation:
        overrides["evaluation"] = evaluation

    if getattr(args, "fixtures", None):
        overrides["client"] = {"fixtures": args.fixtures}
    return overrides


def _train_config(settings: PipelineConfig):
    # One --seed drives folds, synthesis and the recorded training seed.
    return settings.train.model_copy(update={"seed": settings.seed})


def cmd_ingest(args, settings: PipelineConfig) -> None:
    addresses = list(args.addresses)
    if args.address_file:
        addresses += _read_lines(_require(args.address_file, "address file"))
    if not addresses:
        raise InputError("Give at least one address or --address-file")

    client = EtherscanClient.from_settings(settings.client, args.api_key)
    log.fetch(f"Fetching {len(addresses)} contracts")
    bundles = client.fetch_many(addresses)

    if args.seeds:
        seeds = load_seed_labels(_require(args.seeds, "seed label file"))
        known = [b for b in bundles if b.found]
        labels = propagate_labels([b.contract for b in known], seeds)
        bundles = [b.with_label(labels[b.address]) if b.found else b for b in bundles]

    output = args.output
    if output is None:
        create_app_directory_structure()
        output = settings.paths.dataset
    count = store_dataset(bundles, output, append=args.append)
    missing = sum(1 for b in bundles if not b.found)
    log.save(f"Stored {count} contracts ({missing} not found) in {output}")


def cmd_synth(args, settings: PipelineConfig) -> None:
    noise = {}
    if args.failed_honeypot is not None:
        noise["failed_honeypot"] = args.failed_honeypot
    synth = synth_config(
        n_honeypots=args.honeypots,
        n_non_honeypots=args.non_honeypots,
        seed=settings.seed,
        path=args.archetypes,
        **noise,
    )
    bundles = generate(synth)
    store_dataset(bundles, args.output)
    log.debug(f"Techniques: {technique_counts(bundles)}")
    log.save(f"Synthetic corpus written to {'stdout' if is_stream(args.output) else args.output}")


def cmd_cases(args, settings: PipelineConfig) -> None:
    lines = catalog_lines()
    if args.table:
        log.table("Fund-flow cases", ["id", "description"], (line.split("\t", 1) for line in lines))
        return
    with open_text(args.output, "w") as f:
        for line in lines:
            f.write(line + "\n")


def cmd_featurize(args, settings: PipelineConfig) -> None:
    bundles = load_dataset(_require(args.dataset, "dataset"))
    if args.dictionary:
        dictionary = EncodingDictionary.load(_require(args.dictionary, "dictionary"))
    else:
        dictionary = EncodingDictionary.fit(b.source for b in bundles if b.found and b.scoped_normals())
    matrix = featurize_bundles(bundles, dictionary=dictionary, jobs=settings.jobs)
    log.info(
        f"Featurized {len(matrix)} of {len(bundles)} contracts "
        f"({int(matrix.y.sum())} honeypots, {len(matrix.feature_names)} columns)"
    )

    if args.save_dictionary:
        dictionary.save(args.save_dictionary)
        log.save(f"Encoding dictionary saved to {args.save_dictionary}")
    if args.preprocess:
        _, scaler, report = preprocess(matrix, near_zero_variance=settings.features.near_zero_variance)
        save_preprocess(scaler, report, args.preprocess)
        log.save(f"Preprocessing parameters saved to {args.preprocess}")
    if args.frequencies:
        vectors = frequency_vectors(bundles)
        write_frequency_csv(
            vectors, args.frequencies, metadata=metadata_line(__version__, settings.seed, report="frequencies")
        )
        log.save(f"Fund-flow frequencies of {len(vectors)} contracts saved to {args.frequencies}")

    write_matrix(matrix, args.output, metadata=metadata_line(__version__, settings.seed, report="matrix"))


def _feature_sets(args, settings: PipelineConfig) -> List[FeatureSet]:
    names = args.features or [settings.features.set]
    if "every" in names:
        names = FEATURE_SET_NAMES
    return [FeatureSet.parse(name) for name in names]


def cmd_train(args, settings: PipelineConfig) -> None:
    matrix = read_matrix(_require(args.matrix, "matrix"))
    feature_set = _feature_sets(args, settings)[0]
    processed, _, _ = preprocess(
        filter_usable(matrix).select_families(feature_set.families),
        near_zero_variance=settings.features.near_zero_variance,
    )
    train_config = _train_config(settings)
    log.train(f"Training {train_config.n_rounds} rounds on {len(processed)} contracts ({feature_set.value})")
    model = train(processed.X, processed.y, train_config, feature_names=processed.feature_names)
    output = args.output or _output_path(settings, "model.json")
    save_model(model, output)
    log.save(f"Model with {len(model.trees)} trees saved to {output}")


def cmd_cv(args, settings: PipelineConfig) -> None:
    matrix = read_matrix(_require(args.matrix, "matrix"))
    k = settings.evaluation.k
    reports = [
        cross_validate(
            matrix,
            feature_set,
            _train_config(settings),
            k=k,
            seed=settings.seed,
            jobs=settings.jobs,
            near_zero_variance=settings.features.near_zero_variance,
        )
        for feature_set in _feature_sets(args, settings)
    ]
    log.table(
        "Cross-validation AUROC",
        ["features", "train", "test"],
        [
            (r.feature_set.value, f"{r.train_mean:.3f} ± {r.train_std:.3f}", f"{r.test_mean:.3f} ± {r.test_std:.3f}")
            for r in reports
        ],
    )
    write_cv_report(reports, args.output, settings.seed, k)


def cmd_loto(args, settings: PipelineConfig) -> None:
    matrix = read_matrix(_require(args.matrix, "matrix"))
    threshold = settings.evaluation.threshold
    nzv = settings.features.near_zero_variance
    if args.technique:
        results = [
            leave_one_technique_out(matrix, t, _train_config(settings), threshold, nzv)
            for t in args.technique
        ]
    else:
        results = leave_one_technique_out_all(matrix, _train_config(settings), threshold, settings.jobs, nzv)
    log.table(
        "Leave-one-technique-out",
        ["technique", "FN", "TP", "recall"],
        [(r.technique.long_name, r.fn, r.tp, f"{r.recall:.3f}") for r in results],
    )
    write_loto_report(results, args.output, settings.seed, threshold)


def cmd_rank(args, settings: PipelineConfig) -> None:
    matrix = read_matrix(_require(args.matrix, "matrix"))
    pool = read_matrix(_require(args.pool, "pool matrix")) if args.pool else None
    ranking = triage_rank(
        matrix,
        _train_config(settings),
        k=settings.evaluation.k,
        seed=settings.seed,
        pool=pool,
        jobs=settings.jobs,
        near_zero_variance=settings.features.near_zero_variance,
    )
    ranking = ranking.filter(unlabeled_only=args.unlabeled_only, top=args.top, max_std=args.max_std)
    if args.unlabeled_only and pool is None:
        log.warning("--unlabeled-only without --pool leaves nothing to rank")
    write_triage(ranking, args.output)
    log.done(f"Ranked {len(ranking)} contracts")


def query_predicate(args: argparse.Namespace) -> Dict[str, str]:
    return {name: getattr(args, flag) for flag, name in QUERY_FLAGS.items() if getattr(args, flag) is not None}


def cmd_query(args, settings: PipelineConfig) -> None:
    predicate = query_predicate(args)
    if not predicate:
        raise InputError("Give at least one fund-flow variable to query")
    vectors = frequency_vectors(load_dataset(_require(args.dataset, "dataset")))
    shares = query_cases(predicate, vectors)
    frame = pd.DataFrame({"address": list(shares), "share": list(shares.values())})
    matched = int((frame["share"] > 0).sum())
    log.info(f"{matched} of {len(frame)} contracts have events matching {predicate}")
    query_text = ",".join(f"{k}={v}" for k, v in predicate.items())
    write_csv(frame, args.output, metadata=metadata_line(__version__, settings.seed, query=query_text))


def cmd_report(args, settings: PipelineConfig) -> None:
    if not args.dataset and not args.model:
        raise InputError("report needs --dataset, --model or both")

    if args.dataset:
        bundles = load_dataset(_require(args.dataset, "dataset"))
        found = [b for b in bundles if b.found]
        honeypots = sum(1 for b in found if b.label.is_honeypot)
        log.header("Dataset")
        log.table(
            "Contracts",
            ["total", "not found", "honeypots", "non-honeypots"],
            [(len(bundles), len(bundles) - len(found), honeypots, len(found) - honeypots)],
        )
        summary = class_summary(found)
        log.table(
            "Per class (median / mean)",
            ["class", "contracts", "source lines", "transactions", "value (ether)"],
            [
                (
                    row["class"],
                    row["contracts"],
                    f"{row['medianSourceLines']:.0f} / {row['meanSourceLines']:.1f}",
                    f"{row['medianTransactions']:.0f} / {row['meanTransactions']:.1f}",
                    f"{row['medianValueEther']:.3f} / {row['meanValueEther']:.3f}",
                )
                for _, row in summary.iterrows()
            ],
        )
        compilers = compiler_counts(found)
        log.table(
            "Contracts per technique and compiler",
            list(compilers.columns),
            compilers.itertuples(index=False),
        )
        counts = case_counts(found)
        descriptions = dict(line.split("\t", 1) for line in catalog_lines())
        for column, title in (("honeypots", "Honeypots"), ("nonHoneypots", "Non-honeypots")):
            log.table(
                f"Most frequent fund-flow cases: {title}",
                ["case", "transactions", "description"],
                [(c, n, descriptions[str(c)]) for c, n in top_cases(counts, column, n=args.top)],
            )
        if args.output:
            write_csv(counts, args.output, metadata=metadata_line(__version__, settings.seed, report="cases"))

    if args.model:
        model = load_model(_require(args.model, "model"))
        importance = feature_importance(model)
        log.header("Feature importance")
        for family in FAMILIES:
            top = importance.top(3, columns=lambda c, family=family: family_of(c) == family)
            log.table(family, ["feature", "importance"], [(name, f"{value:.4f}") for name, value in top])


COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "cases": cmd_cases,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "cv": cmd_cv,
    "loto": cmd_loto,
    "rank": cmd_rank,
    "query": cmd_query,
    "report": cmd_report,
}


class _Parser(argparse.ArgumentParser):
    """Usage errors raise InputError so they end with the JSON error line."""

    def error(self, message: str):
        raise InputError(f"{self.prog}: {message}")


def _add_train_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("Boosting")
    group.add_argument("--rounds", type=int, help="Number of boosting rounds")
    group.add_argument("--max-depth", type=int, help="Maximum tree depth (0 to 14)")
    group.add_argument("--learning-rate", type=float, help="Shrinkage applied to every leaf")
    group.add_argument("--scale-pos-weight", type=float, help="Positive-class weight (default: negatives/positives)")


def _add_feature_flag(parser: argparse.ArgumentParser, multiple: bool = True):
    parser.add_argument(
        "--features",
        nargs="+" if multiple else 1,
        choices=FEATURE_SET_NAMES + (["every"] if multiple else []),
        help="Feature families to use (default: features.set from the config)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hpscan",
        description="hpscan - Ethereum honeypot detection from source, transaction and fund-flow features",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Build a synthetic corpus and cross-validate every feature set
  hpscan --seed 7 synth | hpscan featurize | hpscan cv --features every

  # Fetch contracts from the explorer (needs ETHERSCAN_API_KEY)
  hpscan ingest --address-file addresses.txt --seeds confirmed.csv -o dataset.jsonl

  # Which contracts let a non-creator take money out?
  hpscan query --dataset dataset.jsonl --sender other --balance-sender up
""",
    )
    parser.add_argument("--version", action="version", version=f"hpscan {__version__}")

    general = parser.add_argument_group("General")
    general.add_argument("--config", help="YAML config file merged over the defaults")
    general.add_argument("--seed", type=int, help="Seed for every random choice (default: config seed)")
    general.add_argument("--jobs", type=int, help="Worker processes for featurizing and training")
    general.add_argument("--debug", action="store_true", help="Enable debug logging and tracebacks")

    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("ingest", help="Fetch contracts from the explorer into a dataset")
    p.add_argument("addresses", nargs="*", help="Contract addresses")
    p.add_argument("--address-file", help="File with one address per line")
    p.add_argument("--seeds", help="CSV of confirmed honeypots (address,technique) to propagate")
    p.add_argument("--fixtures", help="Read explorer responses from this directory instead of the network")
    p.add_argument("--append", action="store_true", help="Append to an existing dataset")
    p.add_argument("-o", "--output", help="Dataset path (default: paths.dataset)")

    p = sub.add_parser("synth", help="Generate a labeled synthetic dataset")
    p.add_argument("--honeypots", type=int, default=300)
    p.add_argument("--non-honeypots", type=int, default=5000)
    p.add_argument("--archetypes", help="Archetype YAML (default: bundled archetypes)")
    p.add_argument("--failed-honeypot", type=float, help="Share of honeypots a non-creator drains")
    p.add_argument("-o", "--output", default="-", help="Dataset path, - for stdout")

    p = sub.add_parser("cases", help="Print the fund-flow case catalog")
    p.add_argument("--table", action="store_true", help="Render a table instead of tab-separated lines")
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("featurize", help="Turn a dataset into a feature matrix")
    p.add_argument("--dataset", default="-", help="Dataset path, - for stdin")
    p.add_argument("--dictionary", help="Reuse a saved encoding dictionary")
    p.add_argument("--save-dictionary", help="Save the encoding dictionary used")
    p.add_argument("--preprocess", help="Fit preprocessing on all rows and save it as JSON")
    p.add_argument("--frequencies", help="Also write per-contract fund-flow case frequencies as CSV")
    p.add_argument("-o", "--output", default="-", help="Matrix CSV, - for stdout")

    p = sub.add_parser("train", help="Fit one model on the whole matrix")
    p.add_argument("--matrix", default="-")
    _add_feature_flag(p, multiple=False)
    _add_train_flags(p)
    p.add_argument("-o", "--output", help="Model JSON path (default: model.json in paths.output_dir)")

    p = sub.add_parser("cv", help="Stratified k-fold cross-validation")
    p.add_argument("--matrix", default="-")
    p.add_argument("-k", type=int, help="Number of folds")
    _add_feature_flag(p)
    _add_train_flags(p)
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("loto", help="Leave-one-technique-out recall")
    p.add_argument("--matrix", default="-")
    p.add_argument("--technique", nargs="+", help="Techniques to hold out (default: every one present)")
    p.add_argument("--threshold", type=float, help="Probability above which a contract is flagged")
    _add_train_flags(p)
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("rank", help="Rank contracts by fold-ensemble honeypot probability")
    p.add_argument("--matrix", default="-")
    p.add_argument("--pool", help="Extra matrix of contracts to score only")
    p.add_argument("-k", type=int, help="Number of fold models")
    p.add_argument("--unlabeled-only", action="store_true", help="Keep only pool contracts absent from the matrix")
    p.add_argument("--max-std", type=float, help="Drop rows whose fold models disagree by more than this std")
    p.add_argument("--top", type=int, help="Keep only the first N rows")
    _add_train_flags(p)
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("query", help="Share of events matching a partial fund-flow assignment")
    p.add_argument("--dataset", default="-")
    for flag in QUERY_FLAGS:
        p.add_argument(f"--{flag.replace('_', '-')}", dest=flag)
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("report", help="Summarize a dataset and a trained model")
    p.add_argument("--dataset")
    p.add_argument("--model")
    p.add_argument("--top", type=int, default=5, help="Fund-flow cases listed per label")
    p.add_argument("-o", "--output", help="Also write per-case counts as CSV")

    return parser


def _fail(error: BaseException, exit_code: int, debug: bool) -> int:
    log.error(str(error))
    if debug:
        log.debug(traceback.format_exc())
    print(
        json.dumps({"error": type(error).__name__, "message": str(error), "exit": exit_code}),
        file=sys.stderr,
    )
    return exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the application."""
    debug = False
    try:
        args = build_parser().parse_args(argv)
        debug = bool(args.debug)
        log.debug_mode = debug
        cfg = config
        if args.config:
            if not Path(args.config).is_file():
                raise InputError(f"Config file not found: {args.config}")
            cfg = Config(path=Path(args.config))
        settings = cfg.validated(_overrides(args))
        args.api_key = cfg.get_api_key("etherscan")

        # Initialize logging
        log.debug_mode = debug or settings.system.debug_mode
        logging.basicConfig(level=logging.DEBUG if log.debug_mode else logging.INFO)

        COMMANDS[args.command](args, settings)
        return 0
    except KeyboardInterrupt:
        log.warning("Interrupted")
        return 2
    except (InputError, ValidationError, FileNotFoundError) as e:
        return _fail(e, 1, debug)
    except HpscanError as e:
        return _fail(e, e.exit_code, debug)
    except Exception as e:
        return _fail(e, 2, debug)


if __name__ == "__main__":
    sys.exit(main())
