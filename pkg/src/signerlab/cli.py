"""Command-line entry point: one subcommand per pipeline stage.

All randomness derives from ``--seed`` via per-stage labels (see
``signerlab.seeding``), outputs are written atomically, and a fixed
seed yields byte-identical files. A ``--config`` file holds flat
``key = value`` lines; explicit flags override it.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import clustering, detector, experiment, features, io, partitioning, report
from .errors import ConfigError, ToolkitError
from .seeding import derive_seed
from .types import EXCLUDE, TRAIN_ONLY, SynthConfig


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage errors, per contract
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _ratios(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must be three comma-separated numbers")
    return (parts[0], parts[1], parts[2])


def _eps_grid(text: str) -> list[float]:
    if ":" in text:
        lo, hi, step = (float(p) for p in text.split(":"))
        grid = list(np.arange(lo, hi + 0.5 * step, step).round(12))
    else:
        grid = [float(p) for p in text.split(",")]
    return grid


def _load_config_args(argv: list[str]) -> list[str]:
    """Expand ``--config FILE`` into flags ahead of the explicit ones."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        return argv
    config_path = argv[at + 1]
    injected: list[str] = []
    with open(config_path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{config_path}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            injected.extend([f"--{key.replace('_', '-')}", value])
    head, tail = argv[: at + 2], argv[at + 2 :]
    # Config-derived flags go first so explicit flags win.
    return [argv[0]] + injected + head[1:] + tail


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="signerlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", type=str, default=None, help="flat key = value file")
        p.add_argument("--threads", type=int, default=1)
        return p

    p = add("synth-embeddings", "generate a synthetic gallery embedding table")
    p.add_argument("--signers", type=int, default=25)
    p.add_argument("--videos-per-signer", type=int, default=2)
    p.add_argument("--rows-per-video", type=int, default=20)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--center-min-dist", type=float, default=0.8)
    p.add_argument("--out", required=True, help="embedding file")
    p.add_argument("--manifest-out", required=True, help="companion labeled manifest")

    p = add("synth-poses", "generate synthetic pose sequences with signing bouts")
    p.add_argument("--signers", type=int, default=20)
    p.add_argument("--videos-per-signer", type=int, default=3)
    p.add_argument("--frames", type=int, default=120)
    p.add_argument("--fps", type=float, default=25.0)
    p.add_argument("--signing-rate", type=float, default=0.5)
    p.add_argument("--style", type=float, default=1.0, help="signer style offset magnitude")
    p.add_argument("--out", required=True, help="pose file")
    p.add_argument("--manifest-out", required=True)

    p = add("cluster", "DBSCAN over an embedding table, majority vote per video")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--manifest", default=None, help="labeled manifest for accuracy")
    p.add_argument("--epsilon", type=float, default=0.36)
    p.add_argument("--min-pts", type=int, default=3)
    p.add_argument("--out", required=True, help="assignment file")

    p = add("sweep", "clustering pipeline across an epsilon grid")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--eps-grid", type=_eps_grid, default="0.2:1.2:0.05")
    p.add_argument("--min-pts", type=int, default=3)
    p.add_argument("--out", required=True, help="sweep record file")

    p = add("audit", "signer-overlap audit of a split")
    p.add_argument("--split", required=True)
    p.add_argument("--assignment", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="overlap report record file")

    p = add("split", "generate a train/dev/test split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--assignment", default=None, help="required for signer method")
    p.add_argument("--method", choices=["signer", "video"], default="signer")
    p.add_argument("--ratios", type=_ratios, default=(0.6, 0.2, 0.2))
    p.add_argument("--garbage-policy", choices=[TRAIN_ONLY, EXCLUDE], default=TRAIN_ONLY)
    p.add_argument("--out", required=True, help="split file")

    p = add("split-test-by-overlap", "divide test videos by train-signer overlap")
    p.add_argument("--split", required=True)
    p.add_argument("--assignment", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)

    p = add("features", "shoulder-normalize poses and emit labeled landmark flow")
    p.add_argument("--poses", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="frame feature file")

    p = add("segments", "window frame features into fixed-length segments")
    p.add_argument("--features", required=True)
    p.add_argument("--length", type=int, default=20)
    p.add_argument("--stride", type=int, default=20)
    p.add_argument("--out", required=True, help="segment file")

    p = add("train", "train the detector on one split")
    p.add_argument("--features", required=True, help="frame feature or segment file")
    p.add_argument("--split", required=True)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--out", required=True, help="model checkpoint")
    p.add_argument("--history-out", default=None, help="per-epoch dev accuracy records")

    p = add("eval", "evaluate a checkpoint on one partition")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--partition", choices=["train", "dev", "test"], default="test")
    p.add_argument("--out", required=True, help="eval record file")

    p = add("experiment", "paired overlap vs signer-disjoint training runs")
    p.add_argument("--synth", choices=["default"], default="default")
    p.add_argument("--seeds", type=int, default=5, help="number of paired runs")
    p.add_argument("--signers", type=int, default=20)
    p.add_argument("--videos-per-signer", type=int, default=3)
    p.add_argument("--frames", type=int, default=150)
    p.add_argument("--style", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=3e-3)
    p.add_argument("--out", required=True, help="experiment record file")

    p = add("report", "render a record file to a text table and a figure")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output base path (.txt and .png)")

    return parser


def _load_sequences(path: str) -> tuple[str, list]:
    """Feature file dispatch: returns (mode, items)."""
    first = io.read_records(path)[:1]
    kind = first[0].get("kind") if first else None
    if kind == "frame_features":
        _, items = features.load_frame_features(path)
        return detector.FRAME, items
    if kind == "segments":
        _, _, segs = features.load_segments(path)
        return detector.SEGMENT, segs
    raise ConfigError(f"{path}: not a frame feature or segment file")


def _partition_items(items: list, split, partition: str) -> list:
    wanted = set(split.partitions.get(partition, []))
    return [it for it in items if it.video_id in wanted]


def _cmd_synth_embeddings(args) -> int:
    cfg = SynthConfig(
        n_signers=args.signers,
        videos_per_signer=args.videos_per_signer,
        rows_per_video=args.rows_per_video,
        gallery_noise_sigma=args.sigma,
        center_min_dist=args.center_min_dist,
        seed=args.seed,
    )
    from .synth import gallery_manifest, synth_embeddings

    table, truth = synth_embeddings(cfg)
    io.save_embeddings(table, args.out)
    io.save_manifest(gallery_manifest(cfg, truth), args.manifest_out)
    print(f"wrote {len(table)} embedding rows for {cfg.n_signers} signers -> {args.out}")
    return 0


def _cmd_synth_poses(args) -> int:
    cfg = SynthConfig(
        n_signers=args.signers,
        videos_per_signer=args.videos_per_signer,
        n_frames=args.frames,
        fps=args.fps,
        signing_rate=args.signing_rate,
        style_offset_mag=args.style,
        seed=args.seed,
    )
    from .synth import synth_pose_dataset

    manifest, poses = synth_pose_dataset(cfg)
    io.save_poses(poses, args.out)
    io.save_manifest(manifest, args.manifest_out)
    print(f"wrote {len(poses)} pose sequences -> {args.out}")
    return 0


def _cmd_cluster(args) -> int:
    table = io.load_embeddings(args.embeddings)
    labeling = clustering.dbscan(
        table,
        clustering.DbscanParams(epsilon=args.epsilon, min_pts=args.min_pts),
        threads=args.threads,
    )
    assignment = clustering.assign_videos(labeling, table)
    io.save_assignment(assignment, args.out)
    n_garbage = len(assignment.garbage_videos())
    print(
        f"epsilon {args.epsilon}: {assignment.n_clusters()} signers, "
        f"{n_garbage} garbage videos, {labeling.noise_count()} noise rows"
    )
    if args.manifest:
        manifest = io.load_manifest(args.manifest)
        try:
            acc = clustering.clustering_accuracy(assignment, manifest)
            print(f"clustering accuracy on labeled signers: {100 * acc:.1f}%")
        except ToolkitError:
            pass
    return 0


def _cmd_sweep(args) -> int:
    table = io.load_embeddings(args.embeddings)
    manifest = io.load_manifest(args.manifest)
    grid = args.eps_grid if isinstance(args.eps_grid, list) else _eps_grid(args.eps_grid)
    rows = clustering.epsilon_sweep(
        table, manifest, grid, min_pts=args.min_pts, seed=args.seed, threads=args.threads
    )
    report.save_report(report.sweep_records(rows), args.out)
    print(report.format_sweep_table(rows))
    best = clustering.best_sweep_row(rows)
    print(f"best epsilon {best.epsilon:.4f} at accuracy {100 * best.accuracy:.1f}%")
    return 0


def _cmd_audit(args) -> int:
    split = io.load_split(args.split)
    assignment = io.load_assignment(args.assignment)
    manifest = io.load_manifest(args.manifest)
    result = partitioning.audit_signer_overlap(split, assignment, manifest)
    report.save_report(report.overlap_records(result), args.out)
    print(report.format_overlap_text(result))
    return 0


def _cmd_split(args) -> int:
    manifest = io.load_manifest(args.manifest)
    if args.method == "signer":
        if not args.assignment:
            raise ConfigError("--assignment is required for the signer method")
        assignment = io.load_assignment(args.assignment)
        split = partitioning.signer_disjoint_split(
            manifest,
            assignment,
            partitioning.SplitRequest(
                ratios=args.ratios, seed=args.seed, garbage_policy=args.garbage_policy
            ),
        )
        stats = partitioning.split_stats(split, manifest, assignment)
        for name, s in stats.items():
            print(
                f"{name:<5} {s['hours']:.2f} h, {int(s['n_signers'])} signers, "
                f"{int(s['n_videos'])} videos"
            )
    else:
        split = partitioning.video_disjoint_split(
            manifest.video_ids(), args.ratios, seed=args.seed
        )
        for name in ("train", "dev", "test"):
            print(f"{name:<5} {len(split.partitions[name])} videos")
    io.save_split(split, args.out)
    return 0


def _cmd_split_test_by_overlap(args) -> int:
    split = io.load_split(args.split)
    assignment = io.load_assignment(args.assignment)
    manifest = io.load_manifest(args.manifest)
    sub = partitioning.split_test_by_overlap(split, assignment, manifest)
    io.write_records(args.out, report.subdivision_records(sub))
    for part in ("with_overlap", "no_overlap"):
        s = sub.stats[part]
        print(
            f"{part:<13} {int(s['n_videos'])} videos, {int(s['n_signers'])} signers, "
            f"{s['hours']:.2f} h"
        )
    return 0


def _cmd_features(args) -> int:
    manifest = io.load_manifest(args.manifest)
    poses = io.load_poses(args.poses)
    items = experiment.pose_features(manifest, poses)
    features.save_frame_features(items, args.out)
    print(f"wrote flow features for {len(items)} videos -> {args.out}")
    return 0


def _cmd_segments(args) -> int:
    dim, items = features.load_frame_features(args.features)
    segments: list[features.Segment] = []
    for it in items:
        if it.labels is None:
            raise ConfigError(f"{it.video_id}: segment windowing requires labels")
        segments.extend(
            features.make_segments(
                it.video_id, it.features, it.labels, args.length, args.stride
            )
        )
    features.save_segments(segments, args.out, length=args.length)
    print(f"wrote {len(segments)} segments (dim {dim}) -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    mode, items = _load_sequences(args.features)
    split = io.load_split(args.split)
    train_items = _partition_items(items, split, "train")
    dev_items = _partition_items(items, split, "dev")
    input_dim = int(items[0].features.shape[-1]) if items else features.FLOW_DIM
    cfg = detector.DetectorConfig(
        input_dim=input_dim,
        hidden_size=args.hidden,
        dropout_p=args.dropout,
        mode=mode,
        seed=derive_seed(args.seed, "detector-init"),
    )
    tcfg = detector.TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=derive_seed(args.seed, "detector-train"),
    )
    model = detector.init_model(cfg)
    fitted, history = detector.train(model, train_items, dev_items, tcfg)
    detector.save_checkpoint(fitted, args.out)
    if args.history_out:
        report.save_report(report.history_records(history), args.history_out)
    best = max(history) if history else float("nan")
    print(
        f"trained {fitted.n_parameters()} parameters for {args.epochs} epochs; "
        f"best dev accuracy {100 * best:.2f}%"
    )
    return 0


def _cmd_eval(args) -> int:
    model = detector.load_checkpoint(args.model)
    mode, items = _load_sequences(args.features)
    if mode != model.config.mode:
        raise ConfigError(
            f"feature file is {mode} but checkpoint expects {model.config.mode}"
        )
    split = io.load_split(args.split)
    eval_items = _partition_items(items, split, args.partition)
    result = detector.evaluate(model, eval_items)
    report.save_report(report.eval_records(result, args.partition), args.out)
    print(report.format_eval_text([(args.partition, result)]))
    return 0


def _cmd_experiment(args) -> int:
    cfg = SynthConfig(
        n_signers=args.signers,
        videos_per_signer=args.videos_per_signer,
        n_frames=args.frames,
        style_offset_mag=args.style,
    )
    tcfg = detector.TrainConfig(learning_rate=args.lr, epochs=args.epochs)
    summary = experiment.run_overlap_experiments(
        cfg,
        n_seeds=args.seeds,
        master_seed=args.seed,
        train_cfg=tcfg,
    )
    report.save_report(report.experiment_records(summary), args.out)
    print(report.format_experiment_text(summary))
    return 0


def _cmd_report(args) -> int:
    text, figure = report.render_report(args.input, args.out)
    print(text)
    print(f"figure -> {figure}")
    return 0


_COMMANDS = {
    "synth-embeddings": _cmd_synth_embeddings,
    "synth-poses": _cmd_synth_poses,
    "cluster": _cmd_cluster,
    "sweep": _cmd_sweep,
    "audit": _cmd_audit,
    "split": _cmd_split,
    "split-test-by-overlap": _cmd_split_test_by_overlap,
    "features": _cmd_features,
    "segments": _cmd_segments,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "experiment": _cmd_experiment,
    "report": _cmd_report,
}


def run(argv: list[str]) -> int:
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 1
    argv = _load_config_args(argv)
    args = parser.parse_args(argv)
    if args.command not in _COMMANDS:
        parser.print_usage(sys.stderr)
        print(f"error: unknown subcommand {args.command!r}", file=sys.stderr)
        return 1
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return _COMMANDS[args.command](args)


def main() -> None:
    try:
        raise SystemExit(run(sys.argv[1:]))
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1) from exc
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        raise SystemExit(2) from exc


if __name__ == "__main__":
    main()
