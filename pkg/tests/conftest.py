"""Shared builders for manifests, assignments, and toy splits."""

from __future__ import annotations

import numpy as np
import pytest

from signerlab import (
    ClusterAssignment,
    DatasetManifest,
    Provenance,
    Span,
    SplitDefinition,
    VideoRecord,
)


def make_video(
    video_id: str,
    n_frames: int = 100,
    fps: float = 25.0,
    signer_label: str | None = None,
    annotations: list[Span] | None = None,
    duration_s: float | None = None,
) -> VideoRecord:
    return VideoRecord(
        video_id=video_id,
        duration_s=n_frames / fps if duration_s is None else duration_s,
        fps=fps,
        n_frames=n_frames,
        signer_label=signer_label,
        annotations=annotations or [],
    )


def make_manifest(videos: list[VideoRecord], dataset_id: str = "t") -> DatasetManifest:
    manifest = DatasetManifest(videos=videos, dataset_id=dataset_id)
    manifest.validate()
    return manifest


def manifest_for_signers(
    signer_videos: dict[str, list[str]],
    hours_per_video: float = 1.0,
) -> tuple[DatasetManifest, ClusterAssignment]:
    """Manifest plus ground-truth assignment; signer keys become cluster ids
    in sorted order, the key 'garbage' maps to the garbage class."""
    from signerlab import GARBAGE

    ids = {s: i for i, s in enumerate(sorted(k for k in signer_videos if k != GARBAGE))}
    videos = []
    entries = {}
    for signer, vids in signer_videos.items():
        for vid in vids:
            n_frames = int(hours_per_video * 3600 * 25)
            videos.append(make_video(vid, n_frames=n_frames, signer_label=None))
            entries[vid] = GARBAGE if signer == GARBAGE else ids[signer]
    return make_manifest(videos), ClusterAssignment(entries)


def make_split(
    train: list[str], dev: list[str], test: list[str], seed: int = 0
) -> SplitDefinition:
    return SplitDefinition(
        partitions={"train": train, "dev": dev, "test": test},
        provenance=Provenance(seed=seed, ratios=(0.6, 0.2, 0.2), method="manual"),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def pytest_collection_modifyitems(config, items):
    criteria = {}
    for item in items:
        marker = item.get_closest_marker("acceptance_criterion")
        if marker:
            criteria[item.nodeid] = marker.args[0]
    config._acceptance_criteria = criteria


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per release criterion, printed outside capture."""
    criteria = getattr(config, "_acceptance_criteria", {})
    if not criteria:
        return
    terminalreporter.section("acceptance criteria")
    seen = set()
    for outcome, verdict in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(outcome, []):
            name = criteria.get(getattr(report, "nodeid", None))
            if name and report.nodeid not in seen:
                seen.add(report.nodeid)
                terminalreporter.write_line(f"ACCEPTANCE {verdict}: {name}")
