"""Extraction jobs: video in, signerlab record files out.

Embedding extraction emits one row per requested gallery frame that shows
exactly one detected face; every other requested frame is skipped and
enumerated in a sidecar log (``<out>.skipped.jsonl``). Pose extraction
emits one record per decoded frame, with all-zero landmarks where nothing
was detected.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .detect import detect_heads
from .embed import embed_face
from .pose import landmarks_from_head
from .video import VideoReader


class VideoUnreadableError(Exception):
    """The video file cannot be opened or decoded."""


class NoFacesError(Exception):
    """Every requested gallery frame was skipped."""


@dataclass
class ExtractionJob:
    video_path: str
    out_path: str
    video_id: str = ""
    frame_indices: list[int] = field(default_factory=list)
    fps_override: float | None = None
    detector: str = "auto"
    embedder: str = "patch"

    def __post_init__(self) -> None:
        if not self.video_id:
            self.video_id = Path(self.video_path).stem

    @property
    def skip_log_path(self) -> str:
        return f"{self.out_path}.skipped.jsonl"


def _atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        umask = os.umask(0)
        os.umask(umask)
        os.fchmod(fd, 0o666 & ~umask)  # mkstemp defaults to 0600
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def _write_skip_log(job: ExtractionJob, skipped: Iterable[dict]) -> None:
    _atomic_write(job.skip_log_path, "".join(_dump(r) + "\n" for r in skipped))


def extract_embeddings(job: ExtractionJob) -> str:
    """One 128-d embedding row per requested frame with exactly one face.

    Returns the output path; raises NoFacesError when every frame was
    skipped. The skip log is written in all cases.
    """
    wanted = sorted(set(int(i) for i in job.frame_indices))
    if not wanted:
        raise ValueError("no gallery frame indices requested")
    rows: list[str] = []
    skipped: list[dict] = []
    remaining = set(wanted)
    with VideoReader(job.video_path, job.fps_override) as reader:
        for index, frame in reader.frames():
            if index not in remaining:
                continue
            remaining.discard(index)
            boxes = detect_heads(frame, job.detector)
            if len(boxes) == 0:
                skipped.append(
                    {"video_id": job.video_id, "frame_index": index, "reason": "no_face"}
                )
                continue
            if len(boxes) > 1:
                skipped.append(
                    {
                        "video_id": job.video_id,
                        "frame_index": index,
                        "reason": "multiple_faces",
                    }
                )
                continue
            vector = embed_face(frame, boxes[0], job.embedder)
            if vector is None:
                skipped.append(
                    {
                        "video_id": job.video_id,
                        "frame_index": index,
                        "reason": "embedding_failed",
                    }
                )
                continue
            rows.append(
                _dump(
                    {
                        "video_id": job.video_id,
                        "frame_index": index,
                        "vector": vector.tolist(),
                    }
                )
            )
    for index in sorted(remaining):  # requested beyond the decoded range
        skipped.append(
            {"video_id": job.video_id, "frame_index": index, "reason": "out_of_range"}
        )
    _write_skip_log(job, skipped)
    if not rows:
        raise NoFacesError(
            f"{job.video_path}: all {len(wanted)} requested frames were skipped "
            f"(see {job.skip_log_path})"
        )
    _atomic_write(job.out_path, "".join(line + "\n" for line in rows))
    return job.out_path


def extract_pose(job: ExtractionJob) -> str:
    """One 137-landmark record per decoded frame; undetected parts are
    (0, 0, 0). Returns the output path."""
    lines: list[str] = []
    undetected: list[dict] = []
    with VideoReader(job.video_path, job.fps_override) as reader:
        fps = reader.fps
        for index, frame in reader.frames():
            boxes = detect_heads(frame, job.detector)
            if boxes:
                landmarks = landmarks_from_head(boxes[0])
            else:
                landmarks = np.zeros((137, 3))
                undetected.append(
                    {
                        "video_id": job.video_id,
                        "frame_index": index,
                        "reason": "no_person",
                    }
                )
            lines.append(
                _dump(
                    {
                        "video_id": job.video_id,
                        "fps": fps,
                        "frame_index": index,
                        "landmarks": landmarks.tolist(),
                    }
                )
            )
    if not lines:
        raise VideoUnreadableError(f"{job.video_path}: decoded zero frames")
    _write_skip_log(job, undetected)
    _atomic_write(job.out_path, "".join(line + "\n" for line in lines))
    return job.out_path


def load_frame_indices(path: str | Path, video_id: str) -> list[int]:
    """Gallery frame list: signerlab gallery records or bare ints per line."""
    indices: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("{"):
                record = json.loads(line)
                if record.get("video_id") == video_id:
                    indices.extend(int(i) for i in record.get("frames", []))
            else:
                indices.append(int(line))
    return indices
