"""Overlap-effect experiments.

From one dataset, build two splits with the same target ratios: a
video-random split (signers bleed across partitions) and a signer-disjoint
split. Train one detector per split with identical hyperparameters,
evaluate each on its own test partition, and report the accuracy gap.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from statistics import median
from typing import Sequence

from .detector import (
    FRAME,
    DetectorConfig,
    TrainConfig,
    evaluate,
    init_model,
    relative_decrease,
    train,
)
from .errors import ConfigError
from .features import FLOW_DIM, LabeledFeatures, label_frames, landmark_flow, normalize_pose
from .partitioning import SplitRequest, signer_disjoint_split, video_disjoint_split
from .seeding import derive_seed
from .synth import synth_pose_dataset
from .types import (
    ClusterAssignment,
    DatasetManifest,
    PoseSequence,
    SplitDefinition,
    SynthConfig,
    assignment_from_labels,
)


@dataclass(frozen=True)
class ExperimentResult:
    """Accuracies are fractions; the gap is in absolute percentage points."""

    seed: int
    acc_with_overlap: float
    acc_no_overlap: float
    absolute_gap: float
    relative_decrease: float


@dataclass(frozen=True)
class ExperimentSummary:
    results: tuple[ExperimentResult, ...]
    median_gap: float
    median_relative_decrease: float


def pose_features(
    manifest: DatasetManifest, poses: Sequence[PoseSequence]
) -> list[LabeledFeatures]:
    """Normalize, take landmark flow, and attach per-frame signing labels."""
    by_id = manifest.by_id()
    items = []
    for seq in poses:
        flow = landmark_flow(normalize_pose(seq))
        items.append(
            LabeledFeatures(
                video_id=seq.video_id,
                fps=seq.fps,
                features=flow.features,
                labels=label_frames(by_id[seq.video_id]),
            )
        )
    return sorted(items, key=lambda it: it.video_id)


def _subset(
    items: Sequence[LabeledFeatures], split: SplitDefinition, partition: str
) -> list[LabeledFeatures]:
    wanted = set(split.partitions.get(partition, []))
    return [it for it in items if it.video_id in wanted]


def _train_and_test(
    items: Sequence[LabeledFeatures],
    split: SplitDefinition,
    detector_cfg: DetectorConfig,
    train_cfg: TrainConfig,
) -> float:
    model = init_model(detector_cfg)
    fitted, _ = train(
        model,
        _subset(items, split, "train"),
        _subset(items, split, "dev"),
        train_cfg,
    )
    return evaluate(fitted, _subset(items, split, "test")).accuracy


def overlap_experiment(
    manifest: DatasetManifest,
    poses: Sequence[PoseSequence],
    assignment: ClusterAssignment,
    seed: int,
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    detector_cfg: DetectorConfig | None = None,
    train_cfg: TrainConfig | None = None,
) -> ExperimentResult:
    """One paired run: video-random split vs signer-disjoint split."""
    items = pose_features(manifest, poses)
    if detector_cfg is None:
        detector_cfg = DetectorConfig(
            input_dim=FLOW_DIM, mode=FRAME, seed=derive_seed(seed, "detector-init")
        )
    if train_cfg is None:
        train_cfg = TrainConfig(
            learning_rate=3e-3,
            epochs=10,
            batch_size=8,
            seed=derive_seed(seed, "detector-train"),
        )

    overlap_split = video_disjoint_split(
        manifest.video_ids(), ratios, seed=derive_seed(seed, "overlap-split")
    )
    disjoint_split = signer_disjoint_split(
        manifest,
        assignment,
        SplitRequest(ratios=ratios, seed=derive_seed(seed, "disjoint-split")),
    )

    acc_overlap = _train_and_test(items, overlap_split, detector_cfg, train_cfg)
    acc_disjoint = _train_and_test(items, disjoint_split, detector_cfg, train_cfg)
    return ExperimentResult(
        seed=seed,
        acc_with_overlap=acc_overlap,
        acc_no_overlap=acc_disjoint,
        absolute_gap=100.0 * (acc_overlap - acc_disjoint),
        relative_decrease=relative_decrease(acc_overlap, acc_disjoint)
        if acc_overlap > 0
        else 0.0,
    )


def run_overlap_experiments(
    cfg: SynthConfig,
    n_seeds: int,
    master_seed: int = 0,
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    detector_cfg: DetectorConfig | None = None,
    train_cfg: TrainConfig | None = None,
) -> ExperimentSummary:
    """Repeat the paired experiment on fresh synthetic data per seed."""
    if n_seeds < 1:
        raise ConfigError("n_seeds must be >= 1")
    results = []
    for k in range(n_seeds):
        run_seed = derive_seed(master_seed, f"experiment:{k}")
        manifest, poses = synth_pose_dataset(replace(cfg, seed=run_seed))
        assignment = assignment_from_labels(manifest)
        results.append(
            overlap_experiment(
                manifest,
                poses,
                assignment,
                seed=run_seed,
                ratios=ratios,
                detector_cfg=detector_cfg,
                train_cfg=train_cfg,
            )
        )
    return ExperimentSummary(
        results=tuple(results),
        median_gap=median(r.absolute_gap for r in results),
        median_relative_decrease=median(r.relative_decrease for r in results),
    )
