"""Canonical data model: manifests, embeddings, poses, assignments, splits.

Validation lives next to the types so that loaders and generators share a
single source of truth for the invariants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .errors import ConfigError, DimensionMismatch, InvariantViolation

EMBEDDING_DIM = 128

# Landmark layout per frame: face block, body block, one block per hand.
FACE_LANDMARKS = 70
BODY_LANDMARKS = 25
HAND_LANDMARKS = 21
N_LANDMARKS = FACE_LANDMARKS + BODY_LANDMARKS + 2 * HAND_LANDMARKS  # 137

BODY_OFFSET = FACE_LANDMARKS
LEFT_HAND_OFFSET = BODY_OFFSET + BODY_LANDMARKS
RIGHT_HAND_OFFSET = LEFT_HAND_OFFSET + HAND_LANDMARKS

# Shoulders sit at positions 2 and 5 of the standard 25-point body block.
RIGHT_SHOULDER = BODY_OFFSET + 2
LEFT_SHOULDER = BODY_OFFSET + 5

#: Sentinel cluster id for videos whose gallery was predominantly noise.
GARBAGE = "garbage"

ClusterId = Union[int, str]

PARTITION_NAMES = ("train", "dev", "test")


@dataclass(frozen=True)
class Span:
    """Half-open annotated frame range ``[start_frame, end_frame)``."""

    start_frame: int
    end_frame: int
    signing: bool

    def validate(self) -> None:
        if self.start_frame < 0:
            raise InvariantViolation(f"span start {self.start_frame} < 0")
        if self.start_frame >= self.end_frame:
            raise InvariantViolation(
                f"span [{self.start_frame}, {self.end_frame}) is empty or reversed"
            )


@dataclass
class VideoRecord:
    video_id: str
    duration_s: float
    fps: float
    n_frames: int
    signer_label: str | None = None
    annotations: list[Span] = field(default_factory=list)

    def validate(self) -> None:
        if not self.video_id:
            raise InvariantViolation("empty video_id")
        if not (self.fps > 0 and np.isfinite(self.fps)):
            raise InvariantViolation(f"{self.video_id}: fps must be > 0, got {self.fps}")
        if self.n_frames < 1:
            raise InvariantViolation(f"{self.video_id}: n_frames must be >= 1")
        expected = self.n_frames / self.fps
        if expected > 0 and abs(self.duration_s - expected) > 0.02 * expected:
            raise InvariantViolation(
                f"{self.video_id}: duration_s {self.duration_s:.4f} deviates more than "
                f"2% from n_frames/fps = {expected:.4f}"
            )
        prev_end = None
        for span in self.annotations:
            span.validate()
            if span.end_frame > self.n_frames:
                raise InvariantViolation(
                    f"{self.video_id}: span [{span.start_frame}, {span.end_frame}) "
                    f"exceeds n_frames {self.n_frames}"
                )
            if prev_end is not None and span.start_frame < prev_end:
                raise InvariantViolation(
                    f"{self.video_id}: annotation spans unsorted or overlapping "
                    f"at frame {span.start_frame}"
                )
            prev_end = span.end_frame


@dataclass
class DatasetManifest:
    videos: list[VideoRecord]
    dataset_id: str = ""

    def validate(self) -> None:
        seen: set[str] = set()
        for rec in self.videos:
            if rec.video_id in seen:
                raise InvariantViolation(f"duplicate video_id {rec.video_id!r}")
            seen.add(rec.video_id)
            rec.validate()

    def video_ids(self) -> list[str]:
        return [rec.video_id for rec in self.videos]

    def by_id(self) -> dict[str, VideoRecord]:
        return {rec.video_id: rec for rec in self.videos}

    def total_hours(self) -> float:
        return sum(rec.duration_s for rec in self.videos) / 3600.0


@dataclass
class EmbeddingTable:
    """Flat table of gallery embeddings keyed by ``(video_id, frame_index)``."""

    video_ids: list[str]
    frame_indices: np.ndarray  # (n,) int64
    vectors: np.ndarray  # (n, EMBEDDING_DIM) float64

    def __len__(self) -> int:
        return len(self.video_ids)

    def validate(self) -> None:
        n = len(self.video_ids)
        if self.frame_indices.shape != (n,):
            raise InvariantViolation("frame_indices length mismatch")
        if self.vectors.ndim != 2 or self.vectors.shape[0] != n:
            raise InvariantViolation("vectors row count mismatch")
        if n and self.vectors.shape[1] != EMBEDDING_DIM:
            raise DimensionMismatch(
                f"embedding vectors must have {EMBEDDING_DIM} components, "
                f"got {self.vectors.shape[1]}"
            )
        if n and not np.isfinite(self.vectors).all():
            raise InvariantViolation("embedding vectors contain non-finite components")
        keys = set(zip(self.video_ids, self.frame_indices.tolist()))
        if len(keys) != n:
            raise InvariantViolation("duplicate (video_id, frame_index) rows")

    def sorted_copy(self) -> "EmbeddingTable":
        order = sorted(
            range(len(self.video_ids)),
            key=lambda i: (self.video_ids[i], int(self.frame_indices[i])),
        )
        return EmbeddingTable(
            video_ids=[self.video_ids[i] for i in order],
            frame_indices=self.frame_indices[order],
            vectors=self.vectors[order],
        )

    @staticmethod
    def empty(dim: int = EMBEDDING_DIM) -> "EmbeddingTable":
        return EmbeddingTable([], np.zeros(0, dtype=np.int64), np.zeros((0, dim)))


@dataclass
class PoseSequence:
    """Per-frame landmark track: ``landmarks[t, i] = (x, y, confidence)``."""

    video_id: str
    fps: float
    landmarks: np.ndarray  # (n_frames, N_LANDMARKS, 3) float64

    @property
    def n_frames(self) -> int:
        return self.landmarks.shape[0]

    def validate(self) -> None:
        if self.landmarks.ndim != 3 or self.landmarks.shape[1:] != (N_LANDMARKS, 3):
            raise DimensionMismatch(
                f"{self.video_id}: landmarks must be (n, {N_LANDMARKS}, 3), "
                f"got {self.landmarks.shape}"
            )
        if not (self.fps > 0 and np.isfinite(self.fps)):
            raise InvariantViolation(f"{self.video_id}: fps must be > 0")
        if not np.isfinite(self.landmarks).all():
            raise InvariantViolation(f"{self.video_id}: non-finite landmark values")
        conf = self.landmarks[:, :, 2]
        if conf.size and (conf.min() < 0 or conf.max() > 1):
            raise InvariantViolation(f"{self.video_id}: confidence outside [0, 1]")


@dataclass
class ClusterAssignment:
    """Maps every video to a cluster id (int >= 0) or the garbage sentinel."""

    entries: dict[str, ClusterId]

    def validate(self) -> None:
        for vid, cid in self.entries.items():
            if cid == GARBAGE:
                continue
            if not isinstance(cid, (int, np.integer)) or cid < 0:
                raise InvariantViolation(
                    f"{vid}: cluster id must be a non-negative int or {GARBAGE!r}, "
                    f"got {cid!r}"
                )

    def signer_of(self, video_id: str) -> ClusterId:
        return self.entries[video_id]

    def garbage_videos(self) -> list[str]:
        return sorted(v for v, c in self.entries.items() if c == GARBAGE)

    def n_clusters(self) -> int:
        return len({c for c in self.entries.values() if c != GARBAGE})


@dataclass(frozen=True)
class Provenance:
    seed: int
    ratios: tuple[float, float, float]
    method: str
    source_assignment_digest: str | None = None
    garbage_policy: str | None = None


@dataclass
class SplitDefinition:
    partitions: dict[str, list[str]]
    provenance: Provenance

    def validate(self, manifest: DatasetManifest | None = None) -> None:
        unknown = set(self.partitions) - set(PARTITION_NAMES)
        if unknown:
            raise InvariantViolation(f"unknown partition names {sorted(unknown)}")
        seen: set[str] = set()
        for name in PARTITION_NAMES:
            for vid in self.partitions.get(name, []):
                if vid in seen:
                    raise InvariantViolation(f"video {vid!r} appears in two partitions")
                seen.add(vid)
        if manifest is not None:
            extra = seen - set(manifest.video_ids())
            if extra:
                raise InvariantViolation(
                    f"split references videos missing from manifest: {sorted(extra)[:5]}"
                )

    def partition_of(self) -> dict[str, str]:
        return {
            vid: name
            for name in PARTITION_NAMES
            for vid in self.partitions.get(name, [])
        }


# Garbage policies for signer-disjoint splitting.
TRAIN_ONLY = "train_only"
EXCLUDE = "exclude"


@dataclass
class SynthConfig:
    """Knobs for the seeded synthetic generators.

    The embedding fields drive :func:`signerlab.synth.synth_embeddings`, the
    pose fields drive :func:`signerlab.synth.synth_pose_dataset`; both share
    the signer/video counts and the seed.
    """

    n_signers: int = 25
    videos_per_signer: int = 2
    seed: int = 0

    # Embedding gallery generation.
    gallery_noise_sigma: float = 0.05
    rows_per_video: int = 20
    embedding_dim: int = EMBEDDING_DIM
    center_min_dist: float = 0.8
    center_resample_attempts: int = 1000

    # Pose generation.
    n_frames: int = 120
    fps: float = 25.0
    signing_rate: float = 0.5
    style_offset_mag: float = 1.0
    signing_amp: float = 0.05
    rest_amp: float = 0.02
    jitter: float = 0.002

    def validate(self) -> None:
        if self.n_signers < 1 or self.videos_per_signer < 1 or self.rows_per_video < 1:
            raise ConfigError("signer/video/row counts must be >= 1")
        if self.gallery_noise_sigma < 0:
            raise ConfigError("gallery_noise_sigma must be >= 0")
        if self.embedding_dim != EMBEDDING_DIM:
            raise ConfigError(f"embedding_dim is fixed at {EMBEDDING_DIM}")
        if self.center_min_dist < 0 or self.center_resample_attempts < 1:
            raise ConfigError("invalid center separation settings")
        if self.n_frames < 1:
            raise ConfigError("n_frames must be >= 1")
        if not (self.fps > 0 and np.isfinite(self.fps)):
            raise ConfigError("fps must be > 0")
        if not 0 < self.signing_rate < 1:
            raise ConfigError("signing_rate must lie strictly between 0 and 1")
        if min(self.style_offset_mag, self.signing_amp, self.rest_amp, self.jitter) < 0:
            raise ConfigError("amplitudes must be >= 0")


def assignment_from_labels(manifest: DatasetManifest) -> ClusterAssignment:
    """Ground-truth assignment from manifest signer labels.

    Labels map to dense integer ids in sorted label order; unlabeled videos
    land in the garbage class.
    """
    labels = sorted({r.signer_label for r in manifest.videos if r.signer_label})
    index: Mapping[str, int] = {lab: i for i, lab in enumerate(labels)}
    entries: dict[str, ClusterId] = {}
    for rec in manifest.videos:
        entries[rec.video_id] = (
            index[rec.signer_label] if rec.signer_label else GARBAGE
        )
    return ClusterAssignment(entries)
