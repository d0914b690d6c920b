"""Adapter conformance: outputs must pass the signerlab loaders, skipped
frames must be fully enumerated, and reruns must be byte-identical."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import signerlab  # the primary toolkit validates the emitted formats
from signerlab_extract import (
    ExtractionJob,
    NoFacesError,
    VideoUnreadableError,
    extract_embeddings,
    extract_pose,
)
from signerlab_extract.jobs import load_frame_indices

from conftest import BLANK_FRAMES, FPS, N_FRAMES


def gallery_indices() -> list[int]:
    # Mix of good frames, blank frames, a two-head frame, one out of range.
    return [0, 5, 10, 41, 42, 61, 100, 150, 200, 249, 400]


def run_embeddings(sample_clip, tmp_path, name="emb") -> ExtractionJob:
    job = ExtractionJob(
        video_path=sample_clip,
        out_path=str(tmp_path / f"{name}.jsonl"),
        video_id="sample",
        frame_indices=gallery_indices(),
        detector="blob",
    )
    extract_embeddings(job)
    return job


def test_embeddings_pass_primary_validation(sample_clip, tmp_path):
    job = run_embeddings(sample_clip, tmp_path)
    table = signerlab.load_embeddings(job.out_path)  # validates 128-d + finite
    assert set(table.video_ids) == {"sample"}
    skipped = {41, 42, 61, 400}
    assert sorted(table.frame_indices.tolist()) == sorted(
        set(gallery_indices()) - skipped
    )


def test_embeddings_skip_log_enumerates_all_skips(sample_clip, tmp_path):
    job = run_embeddings(sample_clip, tmp_path)
    entries = [
        json.loads(line)
        for line in Path(job.skip_log_path).read_text().splitlines()
    ]
    by_frame = {e["frame_index"]: e["reason"] for e in entries}
    assert by_frame == {
        41: "no_face",
        42: "no_face",
        61: "multiple_faces",
        400: "out_of_range",
    }
    emitted = {
        json.loads(line)["frame_index"]
        for line in Path(job.out_path).read_text().splitlines()
    }
    assert emitted | set(by_frame) == set(gallery_indices())
    assert not emitted & set(by_frame)


def test_embeddings_deterministic(sample_clip, tmp_path):
    a = run_embeddings(sample_clip, tmp_path, "a")
    b = run_embeddings(sample_clip, tmp_path, "b")
    assert Path(a.out_path).read_bytes() == Path(b.out_path).read_bytes()
    assert (
        Path(a.skip_log_path).read_bytes() == Path(b.skip_log_path).read_bytes()
    )


def test_embeddings_all_skipped_raises(sample_clip, tmp_path):
    job = ExtractionJob(
        video_path=sample_clip,
        out_path=str(tmp_path / "none.jsonl"),
        video_id="sample",
        frame_indices=list(BLANK_FRAMES),
        detector="blob",
    )
    with pytest.raises(NoFacesError):
        extract_embeddings(job)
    entries = Path(job.skip_log_path).read_text().splitlines()
    assert len(entries) == len(list(BLANK_FRAMES))


def test_pose_passes_primary_validation(sample_clip, tmp_path):
    job = ExtractionJob(
        video_path=sample_clip,
        out_path=str(tmp_path / "pose.jsonl"),
        video_id="sample",
        detector="blob",
    )
    extract_pose(job)
    (sequence,) = signerlab.load_poses(job.out_path)  # validates 137x3 frames
    assert sequence.n_frames == N_FRAMES
    assert sequence.fps == pytest.approx(FPS)

    # Blank frames carry zero confidence everywhere.
    for index in BLANK_FRAMES:
        assert np.all(sequence.landmarks[index] == 0.0)
    # Detected frames place both shoulders, so normalization works.
    normalized = signerlab.normalize_pose(sequence)
    from signerlab.types import LEFT_SHOULDER, RIGHT_SHOULDER

    ok = (
        (normalized.landmarks[:, RIGHT_SHOULDER, 2] > 0)
        & (normalized.landmarks[:, LEFT_SHOULDER, 2] > 0)
    )
    dist = np.linalg.norm(
        normalized.landmarks[ok, RIGHT_SHOULDER, :2]
        - normalized.landmarks[ok, LEFT_SHOULDER, :2],
        axis=1,
    )
    assert abs(dist.mean() - 1.0) < 1e-9


def test_pose_frame_count_matches_decoder(sample_clip, tmp_path):
    import cv2

    job = ExtractionJob(
        video_path=sample_clip,
        out_path=str(tmp_path / "pose.jsonl"),
        detector="blob",
    )
    extract_pose(job)
    capture = cv2.VideoCapture(sample_clip)
    decoded = 0
    while capture.read()[0]:
        decoded += 1
    capture.release()
    lines = Path(job.out_path).read_text().splitlines()
    assert len(lines) == decoded


def test_pose_undetected_frames_logged(sample_clip, tmp_path):
    job = ExtractionJob(
        video_path=sample_clip,
        out_path=str(tmp_path / "pose.jsonl"),
        detector="blob",
    )
    extract_pose(job)
    logged = {
        json.loads(line)["frame_index"]
        for line in Path(job.skip_log_path).read_text().splitlines()
    }
    assert logged == set(BLANK_FRAMES)


def test_unreadable_video_errors(tmp_path):
    bad = tmp_path / "missing.avi"
    job = ExtractionJob(video_path=str(bad), out_path=str(tmp_path / "out.jsonl"))
    with pytest.raises(VideoUnreadableError):
        extract_pose(job)


def test_fps_override(sample_clip, tmp_path):
    job = ExtractionJob(
        video_path=sample_clip,
        out_path=str(tmp_path / "pose.jsonl"),
        fps_override=30.0,
        detector="blob",
    )
    extract_pose(job)
    first = json.loads(Path(job.out_path).read_text().splitlines()[0])
    assert first["fps"] == 30.0


def test_frame_list_formats(tmp_path):
    plain = tmp_path / "plain.txt"
    plain.write_text("3\n1\n2\n")
    assert load_frame_indices(plain, "any") == [3, 1, 2]
    records = tmp_path / "gallery.jsonl"
    records.write_text(
        json.dumps({"video_id": "sample", "frames": [7, 9]})
        + "\n"
        + json.dumps({"video_id": "other", "frames": [1]})
        + "\n"
    )
    assert load_frame_indices(records, "sample") == [7, 9]


def test_cli_entry_points(sample_clip, tmp_path):
    frames = tmp_path / "frames.txt"
    frames.write_text("".join(f"{i}\n" for i in [0, 5, 10, 20]))
    out = tmp_path / "cli_emb.jsonl"
    proc = subprocess.run(
        [
            sys.executable, "-m", "signerlab_extract.run_embeddings",
            "--video", sample_clip, "--frames", str(frames),
            "--out", str(out), "--video-id", "sample", "--detector", "blob",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert len(signerlab.load_embeddings(out)) == 4

    pose_out = tmp_path / "cli_pose.jsonl"
    proc = subprocess.run(
        [
            sys.executable, "-m", "signerlab_extract.run_pose",
            "--video", sample_clip, "--out", str(pose_out),
            "--video-id", "sample", "--detector", "blob",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert signerlab.load_poses(pose_out)[0].n_frames == N_FRAMES
