"""Data model, file formats, and synthetic generators."""

from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import signerlab as sl
from signerlab.errors import (
    CenterSeparationError,
    ConfigError,
    DimensionMismatch,
    InvariantViolation,
    ParseError,
)

from conftest import make_manifest, make_split, make_video


# -- manifest -----------------------------------------------------------------


def test_manifest_roundtrip_handwritten(tmp_path):
    path = tmp_path / "manifest.jsonl"
    lines = [
        {
            "video_id": "a",
            "duration_s": 4.0,
            "fps": 25.0,
            "n_frames": 100,
            "signer_label": "s1",
            "annotations": [{"start_frame": 10, "end_frame": 20, "signing": True}],
        },
        {
            "video_id": "b",
            "duration_s": 2.0,
            "fps": 25.0,
            "n_frames": 50,
            "signer_label": None,
            "annotations": [],
        },
    ]
    path.write_text("".join(json.dumps(r) + "\n" for r in lines))
    manifest = sl.load_manifest(path)
    assert len(manifest.videos) == 2
    assert manifest.videos[0].annotations[0] == sl.Span(10, 20, True)
    assert manifest.videos[1].signer_label is None


def test_manifest_duplicate_video_id_rejected(tmp_path):
    path = tmp_path / "manifest.jsonl"
    record = {
        "video_id": "a",
        "duration_s": 4.0,
        "fps": 25.0,
        "n_frames": 100,
        "signer_label": None,
        "annotations": [],
    }
    path.write_text(json.dumps(record) + "\n" + json.dumps(record) + "\n")
    with pytest.raises(InvariantViolation, match="duplicate"):
        sl.load_manifest(path)


def test_manifest_missing_file():
    with pytest.raises(FileNotFoundError):
        sl.load_manifest("/nonexistent/manifest.jsonl")


def test_manifest_parse_error_carries_line_number(tmp_path):
    path = tmp_path / "manifest.jsonl"
    good = {
        "video_id": "a",
        "duration_s": 4.0,
        "fps": 25.0,
        "n_frames": 100,
        "signer_label": None,
        "annotations": [],
    }
    path.write_text(json.dumps(good) + "\nnot json\n")
    with pytest.raises(ParseError) as err:
        sl.load_manifest(path)
    assert err.value.line_no == 2


@pytest.mark.parametrize(
    "mutate",
    [
        lambda v: setattr(v, "fps", 0.0),
        lambda v: setattr(v, "fps", -1.0),
        lambda v: setattr(v, "n_frames", 0),
        lambda v: setattr(v, "duration_s", 10.0),  # > 2% off 100/25
        lambda v: setattr(v, "annotations", [sl.Span(5, 5, True)]),
        lambda v: setattr(v, "annotations", [sl.Span(-1, 5, True)]),
        lambda v: setattr(v, "annotations", [sl.Span(0, 101, True)]),
        lambda v: setattr(
            v, "annotations", [sl.Span(0, 10, True), sl.Span(5, 20, False)]
        ),
    ],
)
def test_manifest_rejects_enumerated_violations(mutate):
    video = make_video("a", n_frames=100, fps=25.0)
    mutate(video)
    with pytest.raises(InvariantViolation):
        make_manifest([video])


def test_synth_pose_manifest_roundtrip(tmp_path):
    cfg = sl.SynthConfig(n_signers=3, videos_per_signer=2, n_frames=40, seed=5)
    manifest, _ = sl.synth_pose_dataset(cfg)
    path = tmp_path / "manifest.jsonl"
    sl.save_manifest(manifest, path)
    loaded = sl.load_manifest(path)
    assert loaded == manifest


# -- embeddings ----------------------------------------------------------------


def test_embeddings_single_zero_row(tmp_path):
    path = tmp_path / "emb.jsonl"
    path.write_text(
        json.dumps({"video_id": "a", "frame_index": 0, "vector": [0.0] * 128}) + "\n"
    )
    table = sl.load_embeddings(path)
    assert len(table) == 1
    assert table.vectors.shape == (1, 128)


def test_embeddings_dimension_mismatch(tmp_path):
    path = tmp_path / "emb.jsonl"
    path.write_text(
        json.dumps({"video_id": "a", "frame_index": 0, "vector": [0.0] * 127}) + "\n"
    )
    with pytest.raises(DimensionMismatch):
        sl.load_embeddings(path)


def test_embeddings_roundtrip_bitwise(tmp_path):
    cfg = sl.SynthConfig(n_signers=4, videos_per_signer=2, rows_per_video=5, seed=9)
    table, _ = sl.synth_embeddings(cfg)
    path = tmp_path / "emb.jsonl"
    sl.save_embeddings(table, path)
    loaded = sl.load_embeddings(path)
    assert loaded.video_ids == table.video_ids
    assert np.array_equal(loaded.frame_indices, table.frame_indices)
    assert np.array_equal(loaded.vectors, table.vectors)  # bitwise


# -- splits ---------------------------------------------------------------------


def test_split_roundtrip_empty(tmp_path):
    split = make_split([], [], [])
    path = tmp_path / "split.json"
    sl.save_split(split, path)
    assert sl.load_split(path) == split


def test_split_roundtrip_preserves_seed(tmp_path):
    split = make_split(["a"], ["b"], ["c"], seed=7)
    path = tmp_path / "split.json"
    sl.save_split(split, path)
    assert sl.load_split(path).provenance.seed == 7


@settings(max_examples=100, deadline=None)
@given(
    shuffle_seed=st.integers(0, 2**32 - 1),
    cuts=st.tuples(st.integers(0, 100), st.integers(0, 100)),
    seed=st.integers(0, 2**63 - 1),
)
def test_split_roundtrip_randomized(tmp_path_factory, shuffle_seed, cuts, seed):
    vids = [f"v{i:03d}" for i in range(100)]
    np.random.default_rng(shuffle_seed).shuffle(vids)
    cut1, cut2 = sorted(cuts)
    split = sl.SplitDefinition(
        partitions={
            "train": sorted(vids[:cut1]),
            "dev": sorted(vids[cut1:cut2]),
            "test": sorted(vids[cut2:]),
        },
        provenance=sl.Provenance(
            seed=seed,
            ratios=(0.6, 0.2, 0.2),
            method="video_disjoint",
            source_assignment_digest=None,
        ),
    )
    path = tmp_path_factory.mktemp("splits") / "split.json"
    sl.save_split(split, path)
    assert sl.load_split(path) == split


def test_split_rejects_overlap():
    with pytest.raises(InvariantViolation):
        make_split(["a"], ["a"], []).validate()


# -- poses and assignments -------------------------------------------------------


def test_poses_roundtrip(tmp_path):
    cfg = sl.SynthConfig(n_signers=2, videos_per_signer=1, n_frames=12, seed=3)
    _, poses = sl.synth_pose_dataset(cfg)
    path = tmp_path / "poses.jsonl"
    sl.save_poses(poses, path)
    loaded = sl.load_poses(path)
    assert [p.video_id for p in loaded] == [p.video_id for p in poses]
    for a, b in zip(loaded, poses):
        assert a.fps == b.fps
        assert np.array_equal(a.landmarks, b.landmarks)


def test_assignment_roundtrip(tmp_path):
    assignment = sl.ClusterAssignment({"a": 0, "b": 3, "c": sl.GARBAGE})
    path = tmp_path / "assign.jsonl"
    sl.save_assignment(assignment, path)
    assert sl.load_assignment(path) == assignment


def test_gallery_selection_roundtrip(tmp_path):
    selection = {"a": [0, 5, 9], "b": [2]}
    path = tmp_path / "gallery.jsonl"
    sl.save_gallery_selection(selection, path)
    assert sl.load_gallery_selection(path) == selection


# -- synthetic embeddings ---------------------------------------------------------


def test_synth_embeddings_zero_noise_rows_equal_centers():
    cfg = sl.SynthConfig(
        n_signers=2, videos_per_signer=1, rows_per_video=1, gallery_noise_sigma=0.0, seed=1
    )
    table, truth = sl.synth_embeddings(cfg)
    assert len(table) == 2
    # Both rows are unit vectors (the centers themselves).
    norms = np.linalg.norm(table.vectors, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-12)
    # And the two signer centers respect the separation floor.
    assert np.linalg.norm(table.vectors[0] - table.vectors[1]) >= cfg.center_min_dist


def test_synth_embeddings_deterministic():
    cfg = sl.SynthConfig(n_signers=5, videos_per_signer=2, rows_per_video=4, seed=42)
    t1, truth1 = sl.synth_embeddings(cfg)
    t2, truth2 = sl.synth_embeddings(cfg)
    assert truth1 == truth2
    assert t1.video_ids == t2.video_ids
    assert np.array_equal(t1.vectors, t2.vectors)


def test_synth_embeddings_separation_unsatisfiable():
    cfg = sl.SynthConfig(
        n_signers=50,
        videos_per_signer=1,
        rows_per_video=1,
        center_min_dist=1.99,
        center_resample_attempts=50,
        seed=0,
    )
    with pytest.raises(CenterSeparationError):
        sl.synth_embeddings(cfg)


def test_synth_embeddings_downstream_recovery():
    cfg = sl.SynthConfig(
        n_signers=25,
        videos_per_signer=2,
        rows_per_video=20,
        gallery_noise_sigma=0.05,
        center_min_dist=0.8,
        seed=13,
    )
    table, truth = sl.synth_embeddings(cfg)
    manifest = sl.gallery_manifest(cfg, truth)
    rows = sl.epsilon_sweep(table, manifest, [0.2, 0.4, 0.6, 0.8, 1.0, 1.2], min_pts=3)
    assert sl.best_sweep_row(rows).accuracy >= 24 / 25


def test_atomic_write_leaves_only_target(tmp_path):
    from signerlab.io import atomic_write_text

    target = tmp_path / "out.jsonl"
    atomic_write_text(target, "old\n")
    atomic_write_text(target, "new\n")
    assert target.read_text() == "new\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.jsonl"]  # no temp debris


def test_synth_config_invalid():
    with pytest.raises(ConfigError):
        sl.SynthConfig(n_signers=0).validate()
    with pytest.raises(ConfigError):
        sl.SynthConfig(gallery_noise_sigma=-1.0).validate()
    with pytest.raises(ConfigError):
        sl.SynthConfig(signing_rate=1.5).validate()


# -- synthetic poses ---------------------------------------------------------------


def test_synth_poses_deterministic():
    cfg = sl.SynthConfig(n_signers=3, videos_per_signer=2, n_frames=30, seed=8)
    m1, p1 = sl.synth_pose_dataset(cfg)
    m2, p2 = sl.synth_pose_dataset(cfg)
    assert m1 == m2
    for a, b in zip(p1, p2):
        assert np.array_equal(a.landmarks, b.landmarks)


def test_synth_poses_zero_style_equalizes_signers():
    cfg = sl.SynthConfig(
        n_signers=6, videos_per_signer=4, n_frames=200, style_offset_mag=0.0, seed=21
    )
    manifest, poses = sl.synth_pose_dataset(cfg)
    by_id = manifest.by_id()
    per_signer: dict[str, list[float]] = {}
    for seq in poses:
        flow = sl.landmark_flow(sl.normalize_pose(seq))
        label = by_id[seq.video_id].signer_label
        per_signer.setdefault(label, []).append(float(np.abs(flow.features).mean()))
    means = np.array([np.mean(v) for v in per_signer.values()])
    # All signers share motion statistics: spread within sampling error.
    assert means.std() / means.mean() < 0.15


def test_synth_poses_signing_spans_have_higher_flow():
    cfg = sl.SynthConfig(n_signers=2, videos_per_signer=2, n_frames=300, seed=4)
    manifest, poses = sl.synth_pose_dataset(cfg)
    by_id = manifest.by_id()
    for seq in poses:
        labels = sl.label_frames(by_id[seq.video_id])
        if labels.all() or not labels.any():
            continue
        from signerlab.types import LEFT_HAND_OFFSET

        flow = sl.landmark_flow(sl.normalize_pose(seq))
        hands = flow.features[:, 2 * LEFT_HAND_OFFSET :]
        signing_mag = np.abs(hands[labels]).mean()
        rest_mag = np.abs(hands[~labels]).mean()
        assert signing_mag > rest_mag
