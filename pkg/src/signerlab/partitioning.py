"""Overlap audits and leakage-free split generation.

Signer-disjoint splits place every signer's videos wholly inside one
partition, targeting the requested hour ratios with a seeded greedy
largest-deficit placement. Video-disjoint splits shuffle once and cut at
ratio boundaries by video count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    EmptyManifestError,
    TooFewSignersError,
    TooFewVideosError,
    UnassignedVideoError,
    UnknownSegmentError,
    UnknownVideoError,
)
from .io import assignment_digest
from .seeding import rng_for
from .types import (
    EXCLUDE,
    GARBAGE,
    PARTITION_NAMES,
    TRAIN_ONLY,
    ClusterAssignment,
    ClusterId,
    DatasetManifest,
    Provenance,
    SplitDefinition,
)


@dataclass(frozen=True)
class SplitRequest:
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0
    garbage_policy: str = TRAIN_ONLY

    def validate(self) -> None:
        if len(self.ratios) != 3 or any(r < 0 for r in self.ratios):
            raise ConfigError("ratios must be three non-negative numbers")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ConfigError(f"ratios must sum to 1, got {sum(self.ratios)!r}")
        if self.garbage_policy not in (TRAIN_ONLY, EXCLUDE):
            raise ConfigError(f"unknown garbage policy {self.garbage_policy!r}")


@dataclass
class OverlapReport:
    """Signer-set algebra of a three-way split."""

    signer_sets: dict[str, set[int]]
    pairwise: dict[tuple[str, str], int]  # full intersection cardinalities
    triple: int
    exclusive: dict[str, int]
    hours: dict[str, float]
    n_videos: dict[str, int]
    n_signers: dict[str, int]
    garbage_videos: dict[str, int]

    def validate(self) -> None:
        # Inclusion-exclusion: |A| = excl_A + sum over pairs with A - triple.
        for name in PARTITION_NAMES:
            pair_sum = sum(
                count
                for (a, b), count in self.pairwise.items()
                if name in (a, b)
            )
            expected = self.exclusive[name] + pair_sum - self.triple
            if expected != self.n_signers[name]:
                raise ConfigError(
                    f"overlap report inconsistent for {name}: "
                    f"{expected} != {self.n_signers[name]}"
                )

    def is_disjoint(self) -> bool:
        return all(count == 0 for count in self.pairwise.values())


@dataclass
class VideoOverlapReport:
    """Video-level overlap of a segment split (segment corpora)."""

    videos_per_partition: dict[str, int]
    pairwise: dict[tuple[str, str], int]
    triple: int


@dataclass
class TestSubdivision:
    with_overlap: list[str]
    no_overlap: list[str]
    stats: dict[str, dict[str, float]] = field(default_factory=dict)


def _require_assignment(
    video_id: str, assignment: ClusterAssignment
) -> ClusterId:
    if video_id not in assignment.entries:
        raise UnassignedVideoError(f"video {video_id!r} has no cluster assignment")
    return assignment.entries[video_id]


def audit_signer_overlap(
    split: SplitDefinition,
    assignment: ClusterAssignment,
    manifest: DatasetManifest,
) -> OverlapReport:
    """Signer sets and their intersections, one partition at a time.

    Garbage videos are tallied separately and never enter the signer sets.
    """
    by_id = manifest.by_id()
    signer_sets: dict[str, set[int]] = {}
    hours: dict[str, float] = {}
    n_videos: dict[str, int] = {}
    garbage: dict[str, int] = {}
    for name in PARTITION_NAMES:
        vids = split.partitions.get(name, [])
        signers: set[int] = set()
        garbage_count = 0
        part_hours = 0.0
        for vid in vids:
            cid = _require_assignment(vid, assignment)
            if vid not in by_id:
                raise UnknownVideoError(f"split video {vid!r} missing from manifest")
            part_hours += by_id[vid].duration_s / 3600.0
            if cid == GARBAGE:
                garbage_count += 1
            else:
                signers.add(int(cid))
        signer_sets[name] = signers
        hours[name] = part_hours
        n_videos[name] = len(vids)
        garbage[name] = garbage_count

    pairwise = {
        (a, b): len(signer_sets[a] & signer_sets[b])
        for a, b in combinations(PARTITION_NAMES, 2)
    }
    triple = len(
        signer_sets["train"] & signer_sets["dev"] & signer_sets["test"]
    )
    exclusive = {}
    for name in PARTITION_NAMES:
        others = [signer_sets[o] for o in PARTITION_NAMES if o != name]
        exclusive[name] = len(signer_sets[name] - others[0] - others[1])

    report = OverlapReport(
        signer_sets=signer_sets,
        pairwise=pairwise,
        triple=triple,
        exclusive=exclusive,
        hours=hours,
        n_videos=n_videos,
        n_signers={name: len(signer_sets[name]) for name in PARTITION_NAMES},
        garbage_videos=garbage,
    )
    report.validate()
    return report


def audit_video_overlap(
    segment_split: Mapping[str, str],
    segment_index: Mapping[str, str],
) -> VideoOverlapReport:
    """Count videos contributing segments to more than one partition."""
    videos_by_partition: dict[str, set[str]] = {}
    for segment_id, partition in segment_split.items():
        if segment_id not in segment_index:
            raise UnknownSegmentError(f"segment {segment_id!r} maps to no video")
        videos_by_partition.setdefault(partition, set()).add(
            segment_index[segment_id]
        )
    names = [n for n in PARTITION_NAMES if n in videos_by_partition] + sorted(
        set(videos_by_partition) - set(PARTITION_NAMES)
    )
    pairwise = {
        (a, b): len(videos_by_partition[a] & videos_by_partition[b])
        for a, b in combinations(names, 2)
    }
    triple = 0
    if len(names) >= 3:
        triple = len(
            set.intersection(*(videos_by_partition[n] for n in names[:3]))
        )
    return VideoOverlapReport(
        videos_per_partition={n: len(videos_by_partition[n]) for n in names},
        pairwise=pairwise,
        triple=triple,
    )


def signer_disjoint_split(
    manifest: DatasetManifest,
    assignment: ClusterAssignment,
    req: SplitRequest,
) -> SplitDefinition:
    """Each signer's videos land wholly in one partition.

    Signers are shuffled by seed, then placed one by one into the partition
    with the largest remaining hour deficit (ties resolve in train, dev,
    test order). Garbage videos either stay in train (they cannot be proven
    disjoint from test signers) or are excluded, per the request policy.
    """
    req.validate()
    if not manifest.videos:
        raise EmptyManifestError("manifest has no videos")

    videos_by_signer: dict[int, list[str]] = {}
    signer_hours: dict[int, float] = {}
    garbage_videos: list[str] = []
    garbage_hours = 0.0
    for rec in manifest.videos:
        cid = _require_assignment(rec.video_id, assignment)
        if cid == GARBAGE:
            garbage_videos.append(rec.video_id)
            garbage_hours += rec.duration_s / 3600.0
        else:
            videos_by_signer.setdefault(int(cid), []).append(rec.video_id)
            signer_hours[int(cid)] = (
                signer_hours.get(int(cid), 0.0) + rec.duration_s / 3600.0
            )
    if len(videos_by_signer) < 3:
        raise TooFewSignersError(
            f"need at least 3 non-garbage signers, got {len(videos_by_signer)}"
        )

    include_garbage = req.garbage_policy == TRAIN_ONLY
    total_hours = sum(signer_hours.values()) + (garbage_hours if include_garbage else 0.0)
    targets = {
        name: req.ratios[i] * total_hours for i, name in enumerate(PARTITION_NAMES)
    }
    assigned = {name: 0.0 for name in PARTITION_NAMES}
    if include_garbage:
        assigned["train"] += garbage_hours

    order = sorted(videos_by_signer)
    rng = rng_for(req.seed, "signer-disjoint-split")
    rng.shuffle(order)

    partitions: dict[str, list[str]] = {name: [] for name in PARTITION_NAMES}
    if include_garbage:
        partitions["train"].extend(garbage_videos)
    for signer in order:
        deficits = {name: targets[name] - assigned[name] for name in PARTITION_NAMES}
        best = max(PARTITION_NAMES, key=lambda name: deficits[name])
        partitions[best].extend(videos_by_signer[signer])
        assigned[best] += signer_hours[signer]

    split = SplitDefinition(
        partitions={name: sorted(vids) for name, vids in partitions.items()},
        provenance=Provenance(
            seed=req.seed,
            ratios=tuple(req.ratios),
            method="signer_disjoint",
            source_assignment_digest=assignment_digest(assignment),
            garbage_policy=req.garbage_policy,
        ),
    )
    split.validate(manifest)
    return split


def split_test_by_overlap(
    split: SplitDefinition,
    assignment: ClusterAssignment,
    manifest: DatasetManifest,
) -> TestSubdivision:
    """Divide the test partition by whether its signer also trains."""
    by_id = manifest.by_id()
    train_signers = {
        cid
        for vid in split.partitions.get("train", [])
        if (cid := _require_assignment(vid, assignment)) != GARBAGE
    }
    with_overlap: list[str] = []
    no_overlap: list[str] = []
    for vid in split.partitions.get("test", []):
        cid = _require_assignment(vid, assignment)
        if cid != GARBAGE and cid in train_signers:
            with_overlap.append(vid)
        else:
            no_overlap.append(vid)

    def part_stats(vids: list[str]) -> dict[str, float]:
        signers = {
            assignment.entries[v] for v in vids if assignment.entries[v] != GARBAGE
        }
        hours = sum(by_id[v].duration_s for v in vids if v in by_id) / 3600.0
        return {"n_videos": len(vids), "n_signers": len(signers), "hours": hours}

    return TestSubdivision(
        with_overlap=sorted(with_overlap),
        no_overlap=sorted(no_overlap),
        stats={
            "with_overlap": part_stats(with_overlap),
            "no_overlap": part_stats(no_overlap),
        },
    )


def video_disjoint_split(
    video_ids: Sequence[str],
    ratios: tuple[float, float, float],
    seed: int,
) -> SplitDefinition:
    """Seeded shuffle, then a contiguous cut by video count.

    Dev and test take floor(ratio * n) videos each; the remainder stays
    in train.
    """
    SplitRequest(ratios=tuple(ratios), seed=seed).validate()
    ids = list(video_ids)
    if len(ids) < 3:
        raise TooFewVideosError(f"need at least 3 videos, got {len(ids)}")
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate video ids")

    rng = rng_for(seed, "video-disjoint-split")
    order = sorted(ids)
    rng.shuffle(order)
    n = len(order)
    n_dev = int(np.floor(ratios[1] * n))
    n_test = int(np.floor(ratios[2] * n))
    n_train = n - n_dev - n_test
    split = SplitDefinition(
        partitions={
            "train": sorted(order[:n_train]),
            "dev": sorted(order[n_train : n_train + n_dev]),
            "test": sorted(order[n_train + n_dev :]),
        },
        provenance=Provenance(
            seed=seed,
            ratios=tuple(ratios),
            method="video_disjoint",
            source_assignment_digest=None,
        ),
    )
    split.validate()
    return split


def split_stats(
    split: SplitDefinition,
    manifest: DatasetManifest,
    assignment: ClusterAssignment,
) -> dict[str, dict[str, float]]:
    """Per-partition hours, distinct non-garbage signers, and video count."""
    by_id = manifest.by_id()
    stats: dict[str, dict[str, float]] = {}
    for name in PARTITION_NAMES:
        vids = split.partitions.get(name, [])
        signers: set[int] = set()
        hours = 0.0
        for vid in vids:
            cid = _require_assignment(vid, assignment)
            if vid not in by_id:
                raise UnknownVideoError(f"split video {vid!r} missing from manifest")
            hours += by_id[vid].duration_s / 3600.0
            if cid != GARBAGE:
                signers.add(int(cid))
        stats[name] = {
            "hours": hours,
            "n_signers": len(signers),
            "n_videos": len(vids),
        }
    return stats
