# -*- coding: utf-8 -*-
"""Command-line entry point.

::

    pyltm gen     --config desk.ini --out stream.ltmt
    pyltm train   --config desk.ini --trace stream.ltmt --out model.ltmm
    pyltm recall  --model model.ltmm --query query.ltmt --k 3 --out recall.ltmt
    pyltm predict --model model.ltmm --query query.ltmt --mode average
    pyltm grow    --config desk.ini --trace stream.ltmt
    pyltm stats   --model model.ltmm --trace stream.ltmt
"""
# License: BSD 2 clause

import argparse
import logging
import os
import sys
from collections import Counter
from typing import Dict, List, Optional, Sequence

import numpy as np

from pyltm import __version__
from pyltm.config import ExperimentConfig, load_config
from pyltm.data.generators import compose, default_domains, default_script
from pyltm.data.trace import labels_path, load_labels, load_trace, save_labels, save_trace
from pyltm.memory.records import PayloadKind
from pyltm.models.bank import UsageMatrix
from pyltm.models.keyclass import KeyClassifier
from pyltm.models.lifelong import LifelongLearner, load_model, save_model
from pyltm.models.segmentation import segment_fixed
from pyltm.utils.converter import as_frames, stack_windows
from pyltm.utils.errors import EmptyMemoryError
from pyltm.utils.tools import set_seed

logger = logging.getLogger(__name__)

KEY_CLASSIFIER_TAG = b"KCLS"


def _windows(frames: np.ndarray, length: int) -> np.ndarray:
    """Consecutive windows of `length` frames; a shorter stream is one window."""
    if len(frames) < length:
        return frames[None]
    return stack_windows(frames, segment_fixed(0, len(frames) // length * length, length).spans)


def _window_labels(labels: Sequence[str], length: int, count: int) -> List[str]:
    """Majority label of each window, ties to the label seen first."""
    return [Counter(labels[i * length:(i + 1) * length]).most_common(1)[0][0] for i in range(count)]


def _trace_path(config: ExperimentConfig) -> str:
    if not config.paths.trace:
        raise ValueError("no trace given: set [paths] trace or pass --trace")
    return config.paths.trace


def _usage(learner: LifelongLearner, frames: np.ndarray, trace: str) -> Optional[UsageMatrix]:
    """Usage matrix over the windows of a trace with a labels sidecar."""
    sidecar = labels_path(trace)
    if not os.path.exists(sidecar):
        return None
    labels = load_labels(sidecar)
    if len(labels) != len(frames):
        raise ValueError(f"{sidecar} has {len(labels)} labels for {len(frames)} frames")
    windows = _windows(frames, learner.window)
    return learner.bank.usage_matrix(windows, _window_labels(labels, learner.window, len(windows)))


def _extra_sections(learner: LifelongLearner) -> Dict[bytes, bytes]:
    return {tag: payload for tag, payload in learner.sections_.items() if tag not in (b"META", b"BANK", b"VMEM")}


# -- commands ------------------------------------------------------------------------


def cmd_gen(config: ExperimentConfig, out: Optional[str] = None) -> str:
    """Write the synthetic stream of `config` and its labels sidecar."""
    d, data = config.dimensions, config.data
    script = default_script(default_domains(d.n_bits, d.n_actions), data.domain_names,
                            data.episode_length, data.repeats, config.seed)
    stream = compose(script)
    path = out or config.paths.trace or "stream.ltmt"
    save_trace(stream.frames, path, n_actions=d.n_actions)
    save_labels(stream.label_names(), labels_path(path))
    logger.info("wrote %d frames to %s", len(stream), path)
    return path


def cmd_train(config: ExperimentConfig, out: Optional[str] = None, verbose: bool = False) -> str:
    """Run the lifelong loop over the configured trace.

    Writes the model file, the metrics CSV and, when the trace has a
    labels sidecar, ``<metrics>.usage.csv``.
    """
    trace = _trace_path(config)
    frames = as_frames(load_trace(trace), config.dimensions.width)
    learner = LifelongLearner.from_config(config)
    learner.verbose = learner.bank.verbose = verbose
    learner.fit(frames)

    k = config.keyclass
    classifier = KeyClassifier(config.dimensions.n_bits, config.dimensions.n_actions, hidden=k.hidden,
                               learning_rate=k.learning_rate, key_learning_rate=k.key_learning_rate,
                               epochs=k.epochs, batch_size=config.training.batch_size,
                               stable_delta=k.stable_delta, seed=config.seed, verbose=verbose)
    classifier.fit(_windows(frames, learner.window), bank=learner.bank, phase="auto")
    KeyClassifier.write_program_keys(learner.bank, learner.memory)

    with open(config.paths.metrics_out, "w", encoding="utf-8", newline="") as file:
        learner.write_metrics(file)
    usage = _usage(learner, frames, trace)
    if usage is not None:
        with open(config.paths.metrics_out + ".usage.csv", "w", encoding="utf-8", newline="") as file:
            usage.write_csv(file)
        logger.info("modal mass per domain: %s (bijection: %s)", usage.modal_mass, usage.is_bijection)
    path = out or config.paths.model_out
    save_model(path, learner, {KEY_CLASSIFIER_TAG: classifier.to_bytes()})
    return path


def _load(config: ExperimentConfig, model: Optional[str]) -> LifelongLearner:
    return load_model(model or config.paths.model_out)


def cmd_recall(config: ExperimentConfig, query: str, k: int = 1, model: Optional[str] = None,
               out: Optional[str] = None) -> str:
    """Reconstruct the `k` nearest memories of every query window."""
    learner = _load(config, model)
    windows = _windows(as_frames(load_trace(query), learner.bank.width), learner.window)
    results = []
    for window in windows:
        recalled = learner.recall(window, k)
        if not recalled:
            raise EmptyMemoryError("empty memory: the model holds no episodic records")
        results.extend(recalled)
    path = out or "recall.ltmt"
    save_trace(np.concatenate(results), path, n_actions=learner.bank.n_actions)
    return path


def cmd_predict(config: ExperimentConfig, query: str, k: int = 1, mode: str = "average",
                model: Optional[str] = None, out: Optional[str] = None) -> str:
    """Predict the window after every query window."""
    learner = _load(config, model)
    windows = _windows(as_frames(load_trace(query), learner.bank.width), learner.window)
    results = []
    for window in windows:
        prediction = learner.predict_next(window, k, mode)
        results.extend(prediction if mode == "multi" else [prediction])
    path = out or "predict.ltmt"
    save_trace(np.concatenate(results), path, n_actions=learner.bank.n_actions)
    return path


def cmd_grow(config: ExperimentConfig, model: Optional[str] = None, out: Optional[str] = None,
             verbose: bool = False) -> str:
    """Grow the bank of a model (or of a fresh one) on the configured trace."""
    path = model or config.paths.model_out
    if os.path.exists(path):
        learner = load_model(path)
    else:
        learner = LifelongLearner.from_config(config)
        learner.bank.initialize()
    learner.bank.verbose = verbose
    frames = as_frames(load_trace(_trace_path(config)), learner.bank.width)
    report = learner.grow(_windows(frames, learner.window), config.growth)
    print(f"accepted programs: {report.accepted or 'none'}; mean min-loss {report.losses[0]:.5f} "
          f"-> {report.losses[-1]:.5f}; programs now {len(learner.bank.programs_)}")
    target = out or config.paths.model_out
    save_model(target, learner, _extra_sections(learner))
    return target


def cmd_stats(config: ExperimentConfig, model: Optional[str] = None, out: Optional[str] = None) -> str:
    """Summary of a model file; the usage matrix needs a labeled trace."""
    learner = _load(config, model)
    counts = learner.memory.stats()
    lines = [f"programs: {len(learner.bank.programs_)}",
             f"training steps: {learner.bank.step_}",
             f"records: {counts['total']}"]
    lines += [f"  {kind.name.lower()}: {counts[kind.name.lower()]}" for kind in PayloadKind]
    if KEY_CLASSIFIER_TAG in learner.sections_:
        lines.append("key classifier: yes")
    if config.paths.trace:
        frames = as_frames(load_trace(config.paths.trace), learner.bank.width)
        usage = _usage(learner, frames, config.paths.trace)
        if usage is not None:
            lines.append("usage (domain, program, count):")
            lines += [f"  {domain}, {program}, {count}" for domain, program, count in usage.rows()]
            lines += [f"modal mass {domain}: {mass:.3f}" for domain, mass in usage.modal_mass.items()]
            if out:
                with open(out, "w", encoding="utf-8", newline="") as file:
                    usage.write_csv(file)
    text = "\n".join(lines)
    print(text)
    return text


# -- parsing -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pyltm", description="Lifelong sequence memory experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment configuration (INI)")
    common.add_argument("--seed", type=int, help="overrides the configured seed")
    common.add_argument("--out", metavar="PATH", help="output file")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")

    commands = parser.add_subparsers(dest="command", required=True)
    gen = commands.add_parser("gen", parents=[common], help="write a synthetic trace")
    train = commands.add_parser("train", parents=[common], help="run the lifelong loop over a trace")
    recall = commands.add_parser("recall", parents=[common], help="reconstruct memories near query windows")
    predict = commands.add_parser("predict", parents=[common], help="predict the windows after query windows")
    grow = commands.add_parser("grow", parents=[common], help="add program vectors while they pay off")
    stats = commands.add_parser("stats", parents=[common], help="summarize a model file")

    for sub in (train, grow, stats):
        sub.add_argument("--trace", metavar="PATH", help="overrides [paths] trace")
    for sub in (recall, predict, grow, stats):
        sub.add_argument("--model", metavar="PATH", help="model file (default: [paths] model_out)")
    for sub in (recall, predict):
        sub.add_argument("--query", metavar="PATH", required=True, help="query trace")
        sub.add_argument("--k", type=int, default=1, help="memories consulted per window")
    predict.add_argument("--mode", choices=("average", "multi"), default="average")
    gen.set_defaults(trace=None)
    return parser


def _configure(args: argparse.Namespace) -> ExperimentConfig:
    overrides: Dict[str, Dict[str, str]] = {}
    if args.seed is not None:
        overrides["experiment"] = {"seed": str(args.seed)}
    if getattr(args, "trace", None):
        overrides["paths"] = {"trace": args.trace}
    return load_config(args.config, overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")
    verbose = args.verbose > 0
    try:
        config = _configure(args)
        set_seed(config.seed)
        if args.command == "gen":
            cmd_gen(config, args.out)
        elif args.command == "train":
            cmd_train(config, args.out, verbose)
        elif args.command == "recall":
            cmd_recall(config, args.query, args.k, args.model, args.out)
        elif args.command == "predict":
            cmd_predict(config, args.query, args.k, args.mode, args.model, args.out)
        elif args.command == "grow":
            cmd_grow(config, args.model, args.out, verbose)
        else:
            cmd_stats(config, args.model, args.out)
    except (ValueError, LookupError, RuntimeError, FloatingPointError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
