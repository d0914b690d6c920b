"""Standalone entry points: extract-embeddings and extract-pose."""

from __future__ import annotations

import argparse
import sys

from .jobs import (
    ExtractionJob,
    NoFacesError,
    VideoUnreadableError,
    extract_embeddings,
    extract_pose,
    load_frame_indices,
)


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--video", required=True, help="input video file")
    parser.add_argument("--out", required=True, help="output record file")
    parser.add_argument("--video-id", default="", help="defaults to the video stem")
    parser.add_argument("--fps", type=float, default=None, help="override metadata fps")
    parser.add_argument(
        "--detector", choices=["auto", "blob", "haar"], default="auto"
    )


def main_embeddings(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(
        prog="extract-embeddings",
        description="Emit one 128-d face embedding per requested gallery frame.",
    )
    _common(parser)
    parser.add_argument(
        "--frames", required=True,
        help="gallery frame list (signerlab gallery records or one index per line)",
    )
    parser.add_argument(
        "--embedder", choices=["patch", "face-recognition"], default="patch"
    )
    args = parser.parse_args(argv)
    job = ExtractionJob(
        video_path=args.video,
        out_path=args.out,
        video_id=args.video_id,
        fps_override=args.fps,
        detector=args.detector,
        embedder=args.embedder,
    )
    job.frame_indices = load_frame_indices(args.frames, job.video_id)
    try:
        extract_embeddings(job)
    except (NoFacesError, VideoUnreadableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1) from exc
    print(f"wrote {args.out} (skips in {job.skip_log_path})")


def main_pose(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(
        prog="extract-pose",
        description="Emit one 137-landmark pose record per decoded frame.",
    )
    _common(parser)
    args = parser.parse_args(argv)
    job = ExtractionJob(
        video_path=args.video,
        out_path=args.out,
        video_id=args.video_id,
        fps_override=args.fps,
        detector=args.detector,
    )
    try:
        extract_pose(job)
    except VideoUnreadableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1) from exc
    print(f"wrote {args.out} (undetected frames in {job.skip_log_path})")
