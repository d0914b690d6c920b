"""Detector input representation.

Pose sequences become shoulder-normalized landmark flow: each landmark's
displacement from the previous frame, scaled by the frame rate so values
are in shoulder-widths per second no matter how the video was sampled.
Frame labels come from the manifest's signing spans; fixed-length windows
feed the segment-classification path.

Feature files declare their width in a header record, so externally
computed per-frame features (any dimension) flow through the same
pipeline as landmark flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import (
    ConfigError,
    DegeneratePoseError,
    DimensionMismatch,
    FpsError,
    InvariantViolation,
    NoValidShouldersError,
    ParseError,
)
from .io import atomic_write_text, dump_record, iter_records
from .types import LEFT_SHOULDER, N_LANDMARKS, RIGHT_SHOULDER, PoseSequence, VideoRecord

FLOW_DIM = 2 * N_LANDMARKS  # (dx, dy) per landmark


@dataclass
class FlowSequence:
    """Per-frame landmark flow; ``features[t]`` interleaves (dx, dy) pairs."""

    video_id: str
    fps: float
    features: np.ndarray  # (n_frames, FLOW_DIM) float64

    @property
    def n_frames(self) -> int:
        return self.features.shape[0]

    def validate(self) -> None:
        if self.features.ndim != 2 or self.features.shape[1] != FLOW_DIM:
            raise DimensionMismatch(
                f"{self.video_id}: flow must be (n, {FLOW_DIM}), got {self.features.shape}"
            )
        if not np.isfinite(self.features).all():
            raise InvariantViolation(f"{self.video_id}: non-finite flow values")
        if self.n_frames and np.any(self.features[0] != 0.0):
            raise InvariantViolation(f"{self.video_id}: first flow frame must be zero")


@dataclass
class LabeledFeatures:
    """Per-frame feature vectors plus the per-frame signing labels."""

    video_id: str
    fps: float
    features: np.ndarray  # (n_frames, dim)
    labels: np.ndarray | None = None  # (n_frames,) bool


@dataclass
class Segment:
    """Fixed-length window of per-frame features classified as one unit."""

    video_id: str
    start_frame: int
    features: np.ndarray  # (length, dim)
    label: bool


def normalize_pose(seq: PoseSequence) -> PoseSequence:
    """Rescale coordinates so the mean shoulder distance equals one.

    The mean runs over frames where both shoulder landmarks have positive
    confidence; confidences are untouched.
    """
    lm = seq.landmarks
    conf_ok = (lm[:, RIGHT_SHOULDER, 2] > 0) & (lm[:, LEFT_SHOULDER, 2] > 0)
    if not conf_ok.any():
        raise NoValidShouldersError(
            f"{seq.video_id}: no frame with both shoulders detected"
        )
    delta = lm[conf_ok, RIGHT_SHOULDER, :2] - lm[conf_ok, LEFT_SHOULDER, :2]
    mean_dist = float(np.linalg.norm(delta, axis=1).mean())
    if mean_dist < 1e-6:
        raise DegeneratePoseError(
            f"{seq.video_id}: mean shoulder distance {mean_dist:g} is degenerate"
        )
    scaled = lm.copy()
    scaled[:, :, :2] /= mean_dist
    return PoseSequence(video_id=seq.video_id, fps=seq.fps, landmarks=scaled)


def landmark_flow(seq: PoseSequence) -> FlowSequence:
    """Frame-rate-normalized landmark flow.

    ``flow[t] = (p[t] - p[t-1]) * fps`` for t >= 1 with a zero first frame;
    a landmark missing (confidence 0) in either frame contributes zero.
    """
    if not (seq.fps > 0 and np.isfinite(seq.fps)):
        raise FpsError(f"{seq.video_id}: fps must be finite and > 0, got {seq.fps}")
    lm = seq.landmarks
    flow = np.zeros((lm.shape[0], N_LANDMARKS, 2))
    if lm.shape[0] > 1:
        diff = (lm[1:, :, :2] - lm[:-1, :, :2]) * seq.fps
        visible = (lm[1:, :, 2] > 0) & (lm[:-1, :, 2] > 0)
        flow[1:] = np.where(visible[:, :, None], diff, 0.0)
    return FlowSequence(
        video_id=seq.video_id,
        fps=seq.fps,
        features=flow.reshape(lm.shape[0], FLOW_DIM),
    )


def label_frames(record: VideoRecord) -> np.ndarray:
    """Per-frame signing labels; span ends are exclusive."""
    labels = np.zeros(record.n_frames, dtype=bool)
    for span in record.annotations:
        if span.signing:
            labels[span.start_frame : span.end_frame] = True
    return labels


def make_segments(
    video_id: str,
    features: np.ndarray,
    labels: np.ndarray,
    length: int = 20,
    stride: int = 20,
) -> list[Segment]:
    """Windows at 0, stride, 2*stride, ...; incomplete tails are dropped.

    A segment's label is the majority of its frame labels, signing on ties.
    """
    if length < 1 or stride < 1:
        raise ConfigError("segment length and stride must be >= 1")
    features = np.asarray(features)
    labels = np.asarray(labels, dtype=bool)
    if len(features) != len(labels):
        raise DimensionMismatch(
            f"{video_id}: {len(features)} feature frames vs {len(labels)} labels"
        )
    segments = []
    for start in range(0, len(features) - length + 1, stride):
        window = labels[start : start + length]
        segments.append(
            Segment(
                video_id=video_id,
                start_frame=start,
                features=features[start : start + length],
                label=bool(2 * int(window.sum()) >= length),
            )
        )
    return segments


# -- feature & segment files --------------------------------------------------


def save_frame_features(items: Iterable[LabeledFeatures], path: str | Path) -> None:
    items = sorted(items, key=lambda it: it.video_id)
    dim = int(items[0].features.shape[1]) if items else FLOW_DIM
    lines = [dump_record({"kind": "frame_features", "dim": dim})]
    for it in items:
        if it.features.shape[1] != dim:
            raise DimensionMismatch(
                f"{it.video_id}: feature width {it.features.shape[1]} != header dim {dim}"
            )
        for t in range(it.features.shape[0]):
            record = {
                "video_id": it.video_id,
                "fps": it.fps,
                "frame_index": t,
                "features": it.features[t].tolist(),
                "label": None if it.labels is None else bool(it.labels[t]),
            }
            lines.append(dump_record(record))
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def load_frame_features(path: str | Path) -> tuple[int, list[LabeledFeatures]]:
    """Returns the declared feature dimension and one item per video."""
    dim: int | None = None
    rows: dict[str, dict[int, tuple[list[float], bool | None]]] = {}
    fps: dict[str, float] = {}
    for line_no, record in iter_records(path):
        if dim is None:
            if record.get("kind") != "frame_features" or "dim" not in record:
                raise ParseError(str(path), line_no, "missing frame_features header")
            dim = int(record["dim"])
            continue
        feats = record["features"]
        if len(feats) != dim:
            raise DimensionMismatch(
                f"{path}:{line_no}: {len(feats)} components, header says {dim}"
            )
        vid = str(record["video_id"])
        fps[vid] = float(record["fps"])
        rows.setdefault(vid, {})[int(record["frame_index"])] = (
            feats,
            record.get("label"),
        )
    if dim is None:
        raise ParseError(str(path), 1, "empty feature file")
    items = []
    for vid in sorted(rows):
        frames = rows[vid]
        if sorted(frames) != list(range(len(frames))):
            raise InvariantViolation(f"{vid}: frame indices are not 0..n-1")
        feats = np.asarray([frames[t][0] for t in range(len(frames))])
        raw_labels = [frames[t][1] for t in range(len(frames))]
        labels = (
            None
            if any(lab is None for lab in raw_labels)
            else np.asarray(raw_labels, dtype=bool)
        )
        items.append(
            LabeledFeatures(video_id=vid, fps=fps[vid], features=feats, labels=labels)
        )
    return dim, items


def save_segments(
    segments: Iterable[Segment], path: str | Path, length: int = 20
) -> None:
    segments = sorted(segments, key=lambda s: (s.video_id, s.start_frame))
    dim = int(segments[0].features.shape[1]) if segments else FLOW_DIM
    lines = [dump_record({"kind": "segments", "dim": dim, "length": length})]
    for seg in segments:
        if seg.features.shape != (length, dim):
            raise DimensionMismatch(
                f"{seg.video_id}@{seg.start_frame}: segment shape "
                f"{seg.features.shape} != ({length}, {dim})"
            )
        lines.append(
            dump_record(
                {
                    "video_id": seg.video_id,
                    "start_frame": seg.start_frame,
                    "features": seg.features.tolist(),
                    "label": bool(seg.label),
                }
            )
        )
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def load_segments(path: str | Path) -> tuple[int, int, list[Segment]]:
    """Returns (dim, length, segments)."""
    header: dict | None = None
    segments: list[Segment] = []
    for line_no, record in iter_records(path):
        if header is None:
            if record.get("kind") != "segments":
                raise ParseError(str(path), line_no, "missing segments header")
            header = record
            continue
        feats = np.asarray(record["features"], dtype=np.float64)
        if feats.shape != (int(header["length"]), int(header["dim"])):
            raise DimensionMismatch(
                f"{path}:{line_no}: segment shape {feats.shape} does not match header"
            )
        segments.append(
            Segment(
                video_id=str(record["video_id"]),
                start_frame=int(record["start_frame"]),
                features=feats,
                label=bool(record["label"]),
            )
        )
    if header is None:
        raise ParseError(str(path), 1, "empty segment file")
    return int(header["dim"]), int(header["length"]), segments
