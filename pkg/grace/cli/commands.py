"""
Command-line interface: generate, train, evaluate, propagate-diag and project
"""
import argparse
import csv
import logging
import os
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from grace.clustering.assignment import hard_assign
from grace.config import RunConfig, load_config
from grace.data.datasets import Dataset, load_dataset, read_clusters, write_assignments
from grace.data.sbm import SbmParams, write_sbm
from grace.errors import ConfigError, GraceError, InputError, ParameterError
from grace.graph.adjacency import Graph
from grace.metrics.projection import pca_2d
from grace.metrics.scores import f1_sets, jc_sets, score_labels
from grace.models.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from grace.models.grace_model import GraceModel
from grace.propagation.operator import (
    PropagationOperator,
    build_operator,
    exact_stationary,
    inf_norm_gap,
    neumann_truncated,
    power_matrix,
)
from grace.training.trainer import GraceTrainer, raw_feature_baseline

# Configure logging
logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

CHECKPOINT_FILE = "checkpoint.grace"
TRAIN_LOG_FILE = "train_log.csv"
PREDICTIONS_FILE = "predictions.tsv"
SCORES_FILE = "scores.csv"
EVALUATION_FILE = "evaluation.csv"
GAP_FILE = "propagation_gap.csv"
PROJECTION_SPACES = ("contents", "embedding", "propagated")


def _write_rows(path: str, header: Sequence[str], rows: List[Sequence]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _require_config(args: argparse.Namespace) -> str:
    if not args.config:
        raise ConfigError(f"The {args.command} command needs --config")
    return args.config


def _run_config(args: argparse.Namespace) -> RunConfig:
    return load_config(
        _require_config(args),
        RunConfig,
        overrides={"seed": args.seed, "out_dir": args.out},
    )


def _load_run_dataset(config: RunConfig) -> Dataset:
    return load_dataset(
        config.features,
        config.edges,
        config.labels,
        kind=config.kind,
        feature_dim=config.feature_dim,
        name=config.name,
    )


def _operator(config: RunConfig, graph: Graph) -> PropagationOperator:
    return build_operator(
        graph.T,
        config.propagation.value,
        config.alpha,
        order=config.neumann_order,
        steps=config.power_steps,
        dense_node_limit=config.dense_node_limit,
    )


def cmd_generate(args: argparse.Namespace) -> int:
    """Write an attributed SBM dataset from a params file"""
    overrides = {"seed": args.seed}
    params = load_config(_require_config(args), SbmParams, overrides=overrides)
    out_dir = args.out or os.path.join("data", f"sbm-{params.seed}")
    paths = write_sbm(params, out_dir)
    for role, path in paths.items():
        logger.info(f"Wrote {role}: {path}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    """Pre-train, initialize centers, co-train and write the run outputs"""
    config = _run_config(args)
    dataset = _load_run_dataset(config)
    graph = dataset.graph()
    prop = _operator(config, graph)
    out_dir = config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    checkpoint_path = os.path.join(out_dir, CHECKPOINT_FILE)

    model = GraceModel.build(dataset.kappa, config, prop, dataset.content_kind)
    trainer = GraceTrainer(config, checkpoint_path=checkpoint_path)
    result = trainer.fit(model, dataset.A)

    save_checkpoint(
        checkpoint_path,
        Checkpoint.from_model(model, config.echo(), extra={"macro_step": len(result.macro_steps)}),
    )
    result.log.write_csv(os.path.join(out_dir, TRAIN_LOG_FILE))
    write_assignments(os.path.join(out_dir, PREDICTIONS_FILE), result.labels)

    if dataset.truth is not None:
        grace_scores = score_labels(dataset.truth, result.labels)
        baseline = raw_feature_baseline(dataset.A, config.n_clusters, config.seed)
        baseline_scores = score_labels(dataset.truth, baseline)
        rows = [
            ["grace", repr(grace_scores["F1"]), repr(grace_scores["JC"])],
            ["kmeans_raw", repr(baseline_scores["F1"]), repr(baseline_scores["JC"])],
        ]
        _write_rows(os.path.join(out_dir, SCORES_FILE), ["method", "F1", "JC"], rows)
        logger.info(
            f"F1={grace_scores['F1']:.4f} JC={grace_scores['JC']:.4f} "
            f"(raw k-means F1={baseline_scores['F1']:.4f} JC={baseline_scores['JC']:.4f})"
        )
    logger.info(f"Run outputs written to {out_dir}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    """Score one or more prediction/label file pairs"""
    pairs = list(args.pair or [])
    if args.predictions or args.labels:
        if not (args.predictions and args.labels):
            raise InputError("--predictions and --labels must be given together")
        pairs.insert(0, [args.predictions, args.labels])
    if not pairs:
        raise InputError("Nothing to evaluate: give --predictions/--labels or --pair")

    rows = []
    for predictions_path, labels_path in pairs:
        for path in (predictions_path, labels_path):
            if not os.path.isfile(path):
                raise InputError(f"File not found: {path}")
        truth = read_clusters(labels_path)
        detected = read_clusters(predictions_path)
        F1, JC = f1_sets(truth, detected), jc_sets(truth, detected)
        rows.append([predictions_path, labels_path, repr(F1), repr(JC)])
        print(f"{predictions_path}\tF1={F1:.4f}\tJC={JC:.4f}")
    if len(rows) > 1:
        mean_f1 = float(np.mean([float(row[2]) for row in rows]))
        mean_jc = float(np.mean([float(row[3]) for row in rows]))
        rows.append(["mean", "", repr(mean_f1), repr(mean_jc)])
        print(f"mean\tF1={mean_f1:.4f}\tJC={mean_jc:.4f}")

    out_path = os.path.join(args.out or ".", EVALUATION_FILE)
    _write_rows(out_path, ["predictions", "labels", "F1", "JC"], rows)
    logger.info(f"Evaluation written to {out_path}")
    return 0


def cmd_propagate_diag(args: argparse.Namespace) -> int:
    """Infinity-norm gap of truncated Neumann series and plain powers to the stationary operator"""
    config = _run_config(args)
    dataset = _load_run_dataset(config)
    if dataset.n > config.dense_node_limit:
        raise ParameterError(
            f"propagate-diag materializes n x n matrices; {dataset.n} nodes exceed dense_node_limit"
        )
    graph = dataset.graph()
    R = exact_stationary(graph.T, config.alpha).R
    rows = []
    for B in range(args.max_order + 1):
        truncated = neumann_truncated(graph.T, config.alpha, B)
        rows.append([
            B,
            repr(inf_norm_gap(R, truncated.R)),
            repr(truncated.error_bound),
            repr(inf_norm_gap(R, power_matrix(graph.T, B))),
        ])
    out_path = os.path.join(config.out_dir, GAP_FILE)
    _write_rows(out_path, ["B", "measured_inf_norm_gap", "bound_alpha_pow", "power_inf_norm_gap"], rows)
    logger.info(f"Propagation gaps for B=0..{args.max_order} written to {out_path}")
    return 0


def cmd_project(args: argparse.Namespace) -> int:
    """PCA projections of contents, embedding and propagated embedding"""
    config = _run_config(args)
    dataset = _load_run_dataset(config)
    checkpoint_path = args.checkpoint or os.path.join(config.out_dir, CHECKPOINT_FILE)
    model = load_checkpoint(checkpoint_path).to_model(_operator(config, dataset.graph()))
    if model.kappa != dataset.kappa:
        raise InputError(f"Checkpoint expects {model.kappa} content columns, dataset has {dataset.kappa}")

    if model.centers is not None:
        predicted = hard_assign(model.forward(dataset.A, training=False).Q)
    else:
        predicted = np.full(dataset.n, -1, dtype=np.int64)
    true_cluster = dataset.truth.membership(dataset.n) if dataset.truth is not None else np.full(dataset.n, -1)

    spaces = PROJECTION_SPACES if args.space == "all" else (args.space,)
    sources: Dict[str, np.ndarray] = {}
    for space in spaces:
        if space == "contents":
            sources[space] = dataset.A
        elif space == "embedding":
            sources[space] = model.embed(dataset.A)
        else:
            sources[space] = model.propagated_embedding(dataset.A)

    for space, data in sources.items():
        coordinates = pca_2d(data)
        rows = [
            [i, repr(float(coordinates[i, 0])), repr(float(coordinates[i, 1])), int(predicted[i]), int(true_cluster[i])]
            for i in range(dataset.n)
        ]
        out_path = os.path.join(config.out_dir, f"projection_{space}.csv")
        _write_rows(out_path, ["node_id", "pc1", "pc2", "predicted_cluster", "true_cluster"], rows)
        logger.info(f"Projection of {space} written to {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grace", description="Graph clustering with embedding propagation")
    parser.add_argument("--config", help="TOML config file (run config, or SBM params for generate)")
    parser.add_argument("--seed", type=int, default=None, help="Override the config seed")
    parser.add_argument("--out", default=None, help="Override the output directory")
    parser.add_argument("--log-level", default=None, help="Logging level (default from config, else INFO)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    generate = subparsers.add_parser("generate", help="Write a seeded attributed SBM dataset")
    generate.set_defaults(handler=cmd_generate)

    train = subparsers.add_parser("train", help="Train a model and write checkpoint, log and predictions")
    train.set_defaults(handler=cmd_train)

    evaluate = subparsers.add_parser("evaluate", help="F1 and Jaccard of predictions against labels")
    evaluate.add_argument("--predictions", help="node<TAB>cluster predictions")
    evaluate.add_argument("--labels", help="node<TAB>cluster ground truth")
    evaluate.add_argument(
        "--pair", nargs=2, action="append", metavar=("PREDICTIONS", "LABELS"),
        help="Additional prediction/label pair; repeat for several networks",
    )
    evaluate.set_defaults(handler=cmd_evaluate)

    diag = subparsers.add_parser(
        "propagate-diag",
        help="Approximation gap of truncated propagation (the alpha^(B+1) bound is attained, "
        "so the measured gap may exceed it by float round-off)",
    )
    diag.add_argument("--max-order", type=int, default=40, help="Largest truncation order B")
    diag.set_defaults(handler=cmd_propagate_diag)

    project = subparsers.add_parser("project", help="Two-dimensional PCA projections")
    project.add_argument("--checkpoint", default=None, help="Checkpoint (default <out_dir>/checkpoint.grace)")
    project.add_argument("--space", choices=PROJECTION_SPACES + ("all",), default="all")
    project.set_defaults(handler=cmd_project)
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = args.log_level
    if level is None and args.config and os.path.isfile(args.config) and args.command != "generate":
        try:
            level = load_config(args.config, RunConfig).log_level
        except GraceError:
            level = None
    level = (level or "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command

    Args:
        argv: Arguments without the program name (default sys.argv[1:])

    Returns:
        int: 0 on success, 2 for input or config errors, 3 for numerical failures
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command == "propagate-diag" and args.max_order < 0:
        parser.print_usage(sys.stderr)
        return 2
    _configure_logging(args)

    try:
        return args.handler(args)
    except GraceError as e:
        logger.error(f"{args.command} failed: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"{args.command} failed: {e}")
        return 2
