"""
Command-line entry point

    eieseg energy      per-class EIE energies and self/interaction split
    eieseg gradcheck   finite-difference check of the analytic gradients
    eieseg evolve      gradient-flow simulation of a prediction mask
    eieseg train-toy   CE vs CE+EIE training on synthetic scenes
    eieseg eval        segmentation and lane metrics on files
    eieseg demo        pinned scenarios and seeds in one run

Every run prints its resolved configuration as JSON on stdout before doing
any work. Logs go to stderr. Exit codes: 0 success, 1 numerical failure,
2 usage or file-format error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from ..common.config import AppConfig, get_config
from ..common.errors import DimensionError, DivergenceError, FormatError
from ..common.models import EieConfig, EvolveParams, Field2D, LogitStack, ProbStack
from ..evolve.scenarios import DEMO_MANIFEST, get_scenario
from ..evolve.simulator import run_evolution, save_trajectory
from ..losses.energy import eie_energy, energy_decompose
from ..losses.gradcheck import gradcheck_report
from ..losses.softmax import check_pair, softmax
from ..metrics import default_registry
from ..metrics.implementations import LaneF1Metric, PixelF1Metric, TuSimpleMetric
from ..storage.reports import format_number, write_csv, write_metric_csv, write_train_reports
from ..storage.tensor_files import read_labels, read_logits, read_pgm, read_tensor
from ..toytrain.scenes import dump_scene
from ..toytrain.trainer import (
    CE_EIE,
    CE_ONLY,
    compare,
    config_from_settings,
    make_scenes,
    thin_iou_gain,
    train,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

GRADCHECK_TOLERANCE = 1e-5
DEMO_SEEDS = (1, 2, 3)


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    pass


def print_config(command: str, resolved: Dict[str, Any]):
    """Resolved configuration as sorted JSON on stdout"""
    print(json.dumps({"command": command, **resolved}, indent=2, sort_keys=True, default=str))


# === energy ===

def cmd_energy(args: argparse.Namespace) -> int:
    print_config("energy", {"pred": args.pred, "gt": args.gt, "alpha": args.alpha,
                            "logits": args.logits, "csv": args.csv})
    labels = read_labels(args.gt)
    if args.logits:
        logits = read_logits(args.pred)
        check_pair(logits, labels)
        probs = softmax(logits)
    else:
        scores = read_tensor(args.pred)
        try:
            probs = ProbStack(values=scores)
        except ValidationError as e:
            raise FormatError(f"prediction is not a probability stack (use --logits?): {e}",
                              path=args.pred) from e
        check_pair(LogitStack(values=scores), labels)

    rows = []
    for i in range(labels.classes):
        pred = Field2D(values=args.alpha * probs.values[i])
        gt = labels.layer(i)
        parts = energy_decompose(pred, gt)
        energy = eie_energy(Field2D(values=pred.values - gt.values))
        rows.append((i, energy, parts.self_pred, parts.self_gt, parts.interaction))
        print(f"class {i}: energy={format_number(energy)} self_pred={format_number(parts.self_pred)} "
              f"self_gt={format_number(parts.self_gt)} interaction={format_number(parts.interaction)}")

    total = sum(r[1] for r in rows)
    interaction = sum(r[4] for r in rows)
    print(f"total: energy={format_number(total)} interaction={format_number(interaction)}")
    if args.csv:
        write_csv(args.csv, ["class", "energy", "self_pred", "self_gt", "interaction"], rows)
    return EXIT_OK


# === gradcheck ===

def cmd_gradcheck(args: argparse.Namespace) -> int:
    print_config("gradcheck", {"h": args.h, "w": args.w, "classes": args.classes,
                               "seed": args.seed, "eps": args.eps, "tol": args.tol})
    report = gradcheck_report(args.h, args.w, args.classes, args.seed, args.eps)
    for result in report.results:
        where = f"pixel {result.pixel}"
        if result.class_index is not None:
            where = f"class {result.class_index} {where}"
        print(f"{result.check}: max relative error {result.max_error:.3e} at {where}")
    print(f"max relative error: {report.max_error:.3e}")

    if report.max_error > args.tol:
        worst = report.worst
        print(
            f"gradient check failed: {worst.check} error {worst.max_error:.3e} > {args.tol:g} "
            f"at class {worst.class_index} pixel {worst.pixel}",
            file=sys.stderr
        )
        return EXIT_FAILURE
    return EXIT_OK


# === evolve ===

def _evolve_inputs(args: argparse.Namespace, parser: argparse.ArgumentParser):
    if args.scenario:
        scenario = get_scenario(args.scenario)
        gt, init = scenario.build()
        defaults = scenario
    else:
        if not (args.gt and args.init):
            parser.error("evolve needs --gt and --init, or --scenario")
        gt, init = read_pgm(args.gt), read_pgm(args.init)
        defaults = None

    def pick(value, attr, fallback):
        if value is not None:
            return value
        return getattr(defaults, attr) if defaults is not None else fallback

    config = get_config()
    params = EvolveParams(
        eta=pick(args.eta, "eta", 1.0),
        steps=pick(args.steps, "steps", 500),
        alpha=pick(args.alpha, "alpha", config.loss.alpha),
        snapshot_every=pick(args.snapshot_every, "snapshot_every", config.evolve.snapshot_every),
        threshold=config.evolve.threshold
    )
    return gt, init, params


def cmd_evolve(args: argparse.Namespace) -> int:
    gt, init, params = _evolve_inputs(args, args.parser)
    print_config("evolve", {"gt": args.gt, "init": args.init, "scenario": args.scenario,
                            "out_dir": args.out_dir, "params": params.model_dump()})
    trajectory = run_evolution(gt, init, params, out_dir=args.out_dir)
    print(f"initial energy: {format_number(trajectory.energies[0])}")
    print(f"final energy: {format_number(trajectory.energies[-1])}")
    print(f"initial components: {trajectory.components[0]}")
    print(f"final components: {trajectory.final_components}")
    if trajectory.unstable:
        print("warning: energy increased over consecutive steps; consider a smaller --eta")
    return EXIT_OK


# === train-toy ===

def _train_config(args: argparse.Namespace):
    eie = EieConfig.from_settings(
        get_config().loss, alpha=args.alpha, lambda1=args.lambda1, lambda2=args.lambda2
    )
    return config_from_settings(
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        scene_kind=args.scene,
        train_count=args.train_count,
        val_count=args.val_count,
        size=args.size,
        eie=eie
    )


def _paired_paths(report: Path):
    return (
        report.with_name(f"{report.stem}_ce.csv"),
        report.with_name(f"{report.stem}_eie.csv"),
    )


def _summarize(report) -> str:
    iou = " ".join(format_number(v) for v in report.final.val_iou)
    return (f"{report.arm}: epochs={len(report.epochs)} total={format_number(report.final.total)} "
            f"val_miou={format_number(report.final.val_miou)} val_iou=[{iou}]")


def cmd_train_toy(args: argparse.Namespace) -> int:
    config = _train_config(args)
    print_config("train-toy", {"compare": args.compare, "report": args.report,
                               "dump_scenes": args.dump_scenes, "config": config.model_dump()})
    if args.dump_scenes:
        train_scenes, val_scenes = make_scenes(config)
        for i, scene in enumerate(train_scenes):
            dump_scene(scene, args.dump_scenes, f"train_{i}")
        for i, scene in enumerate(val_scenes):
            dump_scene(scene, args.dump_scenes, f"val_{i}")

    try:
        if args.compare:
            reports = compare(config)
            for report in reports.values():
                print(_summarize(report))
            print(f"thin-class IoU gain: {format_number(thin_iou_gain(reports))}")
            if args.report:
                ce_path, eie_path = _paired_paths(Path(args.report))
                write_train_reports(ce_path, reports[CE_ONLY])
                write_train_reports(eie_path, reports[CE_EIE])
        else:
            report = train(config)
            print(_summarize(report))
            if args.report:
                write_train_reports(args.report, report)
    except DivergenceError as e:
        print(f"training diverged in arm {e.arm} at epoch {e.epoch}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


# === eval ===

def _metric(args: argparse.Namespace):
    if args.metric == "tusimple":
        return TuSimpleMetric(tol_px=args.tol, mask_threshold=args.mask_threshold)
    if args.metric == "lane-f1":
        return LaneF1Metric(iou_threshold=args.iou_threshold, mask_threshold=args.mask_threshold)
    if args.metric == "pixf1":
        return PixelF1Metric(mask_threshold=args.mask_threshold)
    return default_registry().get(args.metric)


def cmd_eval(args: argparse.Namespace) -> int:
    print_config("eval", {"pred": args.pred, "gt": args.gt, "metric": args.metric, "tol": args.tol,
                          "iou_threshold": args.iou_threshold,
                          "mask_threshold": args.mask_threshold, "csv": args.csv})
    result = _metric(args).evaluate(args.pred, args.gt)
    print(f"{result.name}: {format_number(result.value)}")
    for key, value in sorted(result.metadata.items()):
        if isinstance(value, list):
            value = "[" + " ".join("nan" if v is None else format_number(v) for v in value) + "]"
        elif isinstance(value, float):
            value = format_number(value)
        print(f"  {key}: {value}")
    if args.csv:
        write_metric_csv(args.csv, [result])
    return EXIT_OK


# === demo ===

def cmd_demo(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    seeds: List[int] = list(args.seeds)
    config = config_from_settings(epochs=args.epochs)
    manifest = {
        "scenarios": {name: s.model_dump() for name, s in DEMO_MANIFEST.items()},
        "seeds": seeds,
        "train": config.model_dump(),
        "note": "scenarios are constructed analogues of curve attraction and merging",
    }
    print_config("demo", {"out_dir": str(out_dir), "manifest": manifest})
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    for name, scenario in DEMO_MANIFEST.items():
        gt, init = scenario.build()
        trajectory = run_evolution(gt, init, scenario.params())
        save_trajectory(out_dir / "evolve" / name, trajectory)
        print(f"{name}: energy {format_number(trajectory.energies[0])} -> "
              f"{format_number(trajectory.energies[-1])}, components "
              f"{trajectory.components[0]} -> {trajectory.final_components}")

    if args.skip_train:
        return EXIT_OK
    try:
        for seed in seeds:
            reports = compare(config.model_copy(update={"seed": seed}))
            ce_path, eie_path = _paired_paths(out_dir / "train" / f"seed{seed}.csv")
            write_train_reports(ce_path, reports[CE_ONLY])
            write_train_reports(eie_path, reports[CE_EIE])
            print(f"seed {seed}: thin-class IoU gain {format_number(thin_iou_gain(reports))}")
    except DivergenceError as e:
        print(f"training diverged in arm {e.arm} at epoch {e.epoch}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


# === parser ===

def build_parser(config: Optional[AppConfig] = None) -> argparse.ArgumentParser:
    """Top-level parser; defaults come from the environment-driven settings"""
    config = config or get_config()
    parser = argparse.ArgumentParser(
        prog="eieseg",
        description="Elastic interaction energy loss toolkit",
        formatter_class=_HelpFormatter
    )
    parser.add_argument("--log-level", metavar="LEVEL", default=config.log_level,
                        help="Logging level for stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("energy", help="per-class EIE energy and decomposition",
                       formatter_class=_HelpFormatter,
                       description="pred/gt: FLD stacks (N×H×W); gt one-hot, all-zero pixels ignored")
    p.add_argument("--pred", metavar="FLD", required=True, help="Probabilities (or logits with --logits)")
    p.add_argument("--gt", metavar="FLD", required=True, help="One-hot ground truth")
    p.add_argument("--alpha", metavar="FLOAT", type=float, default=config.loss.alpha,
                   help="Prediction weight in the combined field")
    p.add_argument("--logits", action="store_true", help="Apply softmax to --pred first")
    p.add_argument("--csv", metavar="PATH", default=None, help="Also write a per-class CSV")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check",
                       formatter_class=_HelpFormatter)
    p.add_argument("--h", metavar="INT", type=int, default=8, help="Grid height")
    p.add_argument("--w", metavar="INT", type=int, default=8, help="Grid width")
    p.add_argument("--classes", metavar="INT", type=int, default=3, help="Class count")
    p.add_argument("--seed", metavar="INT", type=int, default=42, help="Instance seed")
    p.add_argument("--eps", metavar="FLOAT", type=float, default=1e-6, help="Finite-difference step")
    p.add_argument("--tol", metavar="FLOAT", type=float, default=GRADCHECK_TOLERANCE,
                   help="Maximum accepted relative error")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("evolve", help="gradient-flow simulation", formatter_class=_HelpFormatter,
                       description="gt/init: PGM masks (P2/P5, maxval 255, >127 is foreground). "
                                   f"Scenarios: {', '.join(DEMO_MANIFEST)}")
    p.add_argument("--gt", metavar="PGM", default=None, help="Ground-truth mask")
    p.add_argument("--init", metavar="PGM", default=None, help="Initial prediction mask")
    p.add_argument("--scenario", metavar="NAME", choices=sorted(DEMO_MANIFEST), default=None,
                   help="Bundled scenario instead of --gt/--init")
    p.add_argument("--steps", metavar="INT", type=int, default=None,
                   help="Step count (scenario value or 500)")
    p.add_argument("--eta", metavar="FLOAT", type=float, default=None,
                   help="Step size (scenario value or 1.0)")
    p.add_argument("--alpha", metavar="FLOAT", type=float, default=None,
                   help=f"Prediction weight (scenario value or {config.loss.alpha})")
    p.add_argument("--snapshot-every", metavar="INT", type=int, default=None,
                   help=f"Snapshot cadence (scenario value or {config.evolve.snapshot_every})")
    p.add_argument("--out-dir", metavar="DIR", default=None,
                   help="Write trajectory.csv and PGM snapshots here")
    p.set_defaults(func=cmd_evolve, parser=p)

    p = sub.add_parser("train-toy", help="CE vs CE+EIE toy training", formatter_class=_HelpFormatter)
    p.add_argument("--scene", metavar="KIND", choices=["lanes", "blobs", "mixed"],
                   default=config.train.scene_kind, help="Scene kind")
    p.add_argument("--epochs", metavar="INT", type=int, default=config.train.epochs, help="Epochs")
    p.add_argument("--lambda1", metavar="FLOAT", type=float, default=config.loss.lambda1,
                   help="EIE weight")
    p.add_argument("--lambda2", metavar="FLOAT", type=float, default=config.loss.lambda2,
                   help="Cross-entropy weight")
    p.add_argument("--alpha", metavar="FLOAT", type=float, default=config.loss.alpha,
                   help="Prediction weight in the combined field")
    p.add_argument("--lr", metavar="FLOAT", type=float, default=config.train.learning_rate,
                   help="Learning rate")
    p.add_argument("--seed", metavar="INT", type=int, default=0, help="Run seed")
    p.add_argument("--train-count", metavar="INT", type=int, default=config.train.train_count,
                   help="Training scenes")
    p.add_argument("--val-count", metavar="INT", type=int, default=config.train.val_count,
                   help="Validation scenes")
    p.add_argument("--size", metavar="INT", type=int, default=config.train.size,
                   help="Scene height and width")
    p.add_argument("--report", metavar="CSV", default=None,
                   help="Report path, plus a <stem>_curves.csv of validation curves "
                        "(with --compare: <stem>_ce.csv and <stem>_eie.csv)")
    p.add_argument("--compare", action="store_true", help="Run the ce-only and ce+eie arms")
    p.add_argument("--dump-scenes", metavar="DIR", default=None,
                   help="Write the scenes as PGM/FLD files")
    p.set_defaults(func=cmd_train_toy)

    registry = default_registry()
    formats = "\n".join(
        f"  {name}: {registry.get(name).file_formats}" for name in registry.list_metrics()
    )
    p = sub.add_parser("eval", help="segmentation and lane metrics", formatter_class=_HelpFormatter,
                       description=f"file formats per metric:\n{formats}")
    p.add_argument("--pred", metavar="PATH", required=True, help="Prediction file")
    p.add_argument("--gt", metavar="PATH", required=True, help="Ground-truth file")
    p.add_argument("--metric", metavar="NAME", choices=registry.list_metrics(), default="miou",
                   help=f"One of {', '.join(registry.list_metrics())}")
    p.add_argument("--tol", metavar="INT", type=int, default=config.metrics.tusimple_tol_px,
                   help="TuSimple column tolerance in pixels")
    p.add_argument("--iou-threshold", metavar="FLOAT", type=float,
                   default=config.metrics.lane_iou_threshold, help="Lane F1 IoU threshold")
    p.add_argument("--mask-threshold", metavar="FLOAT", type=float,
                   default=config.metrics.mask_threshold, help="Probability threshold for masks")
    p.add_argument("--csv", metavar="PATH", default=None, help="Also write metric,key,value CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("demo", help="pinned scenarios and training comparison",
                       formatter_class=_HelpFormatter)
    p.add_argument("--out-dir", metavar="DIR", default="demo_out", help="Output directory")
    p.add_argument("--seeds", metavar="INT", type=int, nargs="+", default=list(DEMO_SEEDS),
                   help="Training seeds")
    p.add_argument("--epochs", metavar="INT", type=int, default=config.train.epochs,
                   help="Epochs per training arm")
    p.add_argument("--skip-train", action="store_true", help="Only run the evolution scenarios")
    p.set_defaults(func=cmd_demo)
    return parser


def _validate(args: argparse.Namespace, parser: argparse.ArgumentParser):
    if args.command == "gradcheck":
        if args.classes < 2:
            parser.error("--classes must be at least 2")
        if args.eps <= 0:
            parser.error("--eps must be positive")
        if args.h < 2 or args.w < 2:
            parser.error("--h and --w must be at least 2")
    if args.command in ("train-toy", "demo") and args.epochs < 1:
        parser.error("--epochs must be at least 1")
    if args.command == "evolve" and args.steps is not None and args.steps < 1:
        parser.error("--steps must be at least 1")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(args, parser)

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except (DimensionError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except ValidationError as e:
        print(f"error: invalid configuration: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
