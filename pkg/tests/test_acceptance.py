"""Acceptance suite: one test per release criterion, at stated tolerances.

Each test carries an ``acceptance_criterion`` marker; the conftest summary
hook prints one ACCEPTANCE PASS/FAIL line per criterion after the run.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

import signerlab as sl
from signerlab.clustering import DbscanParams
from signerlab.detector import TrainConfig
from signerlab.experiment import run_overlap_experiments
from signerlab.features import LabeledFeatures

from conftest import make_manifest, make_video
from test_clustering import as_sets, brute_force_dbscan, random_instance
from test_cli import full_pipeline
from test_detector import finite_difference_max_rel_error, random_batch


def criterion(name):
    return pytest.mark.acceptance_criterion(name)


@criterion("DBSCAN oracle equivalence (1000 instances, < 60 s)")
def test_dbscan_oracle_equivalence_1000():
    rng = np.random.default_rng(2024)
    start = time.monotonic()
    for _ in range(1000):
        points, eps, min_pts = random_instance(rng)
        labeling = sl.dbscan(points, DbscanParams(epsilon=eps, min_pts=min_pts))
        assert as_sets(labeling) == brute_force_dbscan(points.tolist(), eps, min_pts)
    elapsed = time.monotonic() - start
    assert elapsed < 60.0, f"took {elapsed:.1f}s"


@criterion("Noise monotonicity over 100 randomized epsilon grids")
def test_noise_monotonicity_100_grids():
    rng = np.random.default_rng(55)
    violations = 0
    for trial in range(100):
        cfg = sl.SynthConfig(
            n_signers=int(rng.integers(3, 9)),
            videos_per_signer=int(rng.integers(1, 3)),
            rows_per_video=int(rng.integers(3, 8)),
            gallery_noise_sigma=float(rng.uniform(0.01, 0.2)),
            seed=int(rng.integers(0, 2**31)),
        )
        table, _ = sl.synth_embeddings(cfg)
        grid = np.unique(np.sort(rng.uniform(0.05, 2.0, size=6)))
        min_pts = int(rng.integers(1, 5))
        noise = [
            sl.dbscan(table, DbscanParams(epsilon=float(e), min_pts=min_pts)).noise_count()
            for e in grid
        ]
        if any(b > a for a, b in zip(noise, noise[1:])):
            violations += 1
    assert violations == 0


@criterion("Clustering recovery at desk scale (25 signers, accuracy >= 0.95)")
def test_clustering_recovery_desk_scale():
    cfg = sl.SynthConfig(
        n_signers=25,
        videos_per_signer=2,
        rows_per_video=20,
        gallery_noise_sigma=0.05,
        center_min_dist=0.8,
        seed=424242,
    )
    grid = [round(0.2 + 0.1 * k, 10) for k in range(11)]  # 0.2 .. 1.2

    def best_accuracy():
        table, truth = sl.synth_embeddings(cfg)
        manifest = sl.gallery_manifest(cfg, truth)
        rows = sl.epsilon_sweep(table, manifest, grid, min_pts=3)
        return sl.best_sweep_row(rows)

    first, second = best_accuracy(), best_accuracy()
    assert first == second, "sweep is not deterministic per seed"
    assert first.accuracy >= 0.95


@criterion("Split disjointness and ratio fidelity over 100 seeds")
def test_split_disjointness_100_seeds():
    rng = np.random.default_rng(10)
    ratio_checked = 0
    for seed in range(100):
        n_signers = int(rng.integers(60, 90))
        videos = []
        entries = {}
        for si in range(n_signers):
            for vi in range(int(rng.integers(1, 3))):
                vid = f"s{si:02d}v{vi}"
                hours = float(rng.uniform(0.1, 0.3))
                videos.append(
                    make_video(vid, n_frames=int(hours * 3600 * 25), fps=25.0)
                )
                entries[vid] = si
        manifest = make_manifest(videos)
        assignment = sl.ClusterAssignment(entries)
        split = sl.signer_disjoint_split(
            manifest, assignment, sl.SplitRequest(ratios=(0.6, 0.2, 0.2), seed=seed)
        )
        report = sl.audit_signer_overlap(split, assignment, manifest)
        assert report.is_disjoint(), f"seed {seed} produced signer overlap"

        total = manifest.total_hours()
        by_signer: dict[int, float] = {}
        for rec in manifest.videos:
            by_signer[entries[rec.video_id]] = (
                by_signer.get(entries[rec.video_id], 0.0) + rec.duration_s / 3600.0
            )
        if max(by_signer.values()) / total <= 0.05:
            ratio_checked += 1
            stats = sl.split_stats(split, manifest, assignment)
            for name, want in zip(("train", "dev", "test"), (0.6, 0.2, 0.2)):
                achieved = stats[name]["hours"] / total
                assert abs(achieved - want) <= 0.05, (
                    f"seed {seed}: {name} at {achieved:.3f} vs {want}"
                )
    assert ratio_checked >= 95  # the no-dominant-signer premise held almost always


@criterion("Audit exactness vs set-algebra enumeration on 50 manifests")
def test_audit_exactness_50_manifests():
    rng = np.random.default_rng(31)
    for trial in range(50):
        n_signers = int(rng.integers(3, 15))
        videos = []
        entries: dict[str, object] = {}
        for si in range(n_signers):
            for vi in range(int(rng.integers(1, 4))):
                vid = f"t{trial}s{si}v{vi}"
                videos.append(make_video(vid, n_frames=int(rng.integers(100, 5000))))
                entries[vid] = sl.GARBAGE if rng.random() < 0.15 else si
        manifest = make_manifest(videos)
        assignment = sl.ClusterAssignment(entries)
        ids = manifest.video_ids()
        marks = rng.integers(0, 3, size=len(ids))
        names = ("train", "dev", "test")
        split = sl.SplitDefinition(
            partitions={
                name: [v for v, m in zip(ids, marks) if m == k]
                for k, name in enumerate(names)
            },
            provenance=sl.Provenance(seed=0, ratios=(0.6, 0.2, 0.2), method="manual"),
        )
        report = sl.audit_signer_overlap(split, assignment, manifest)

        # Independent enumeration straight from the definitions.
        durations = {r.video_id: r.duration_s for r in manifest.videos}
        sets = {
            name: {
                entries[v]
                for v in split.partitions[name]
                if entries[v] != sl.GARBAGE
            }
            for name in names
        }
        assert report.n_signers == {n: len(sets[n]) for n in names}
        assert report.n_videos == {n: len(split.partitions[n]) for n in names}
        for n in names:
            assert report.garbage_videos[n] == sum(
                1 for v in split.partitions[n] if entries[v] == sl.GARBAGE
            )
            assert report.hours[n] == pytest.approx(
                sum(durations[v] for v in split.partitions[n]) / 3600.0
            )
        assert report.pairwise[("train", "dev")] == len(sets["train"] & sets["dev"])
        assert report.pairwise[("train", "test")] == len(sets["train"] & sets["test"])
        assert report.pairwise[("dev", "test")] == len(sets["dev"] & sets["test"])
        assert report.triple == len(sets["train"] & sets["dev"] & sets["test"])
        for n in names:
            others = [sets[o] for o in names if o != n]
            assert report.exclusive[n] == len(sets[n] - others[0] - others[1])


@criterion("Shoulder normalization to 1 (1e-9) and fps-invariant flow (1e-9)")
def test_normalization_and_flow_tolerances():
    from signerlab.types import LEFT_SHOULDER, N_LANDMARKS, RIGHT_SHOULDER

    rng = np.random.default_rng(8)
    for _ in range(20):
        coords = rng.normal(0.5, 0.2, size=(int(rng.integers(2, 40)), N_LANDMARKS, 2))
        coords[:, RIGHT_SHOULDER] += (0.3, 0.0)
        pose = sl.PoseSequence(
            video_id="v",
            fps=25.0,
            landmarks=np.concatenate(
                [coords, np.ones((coords.shape[0], N_LANDMARKS, 1))], axis=2
            ),
        )
        out = sl.normalize_pose(pose)
        dist = np.linalg.norm(
            out.landmarks[:, RIGHT_SHOULDER, :2] - out.landmarks[:, LEFT_SHOULDER, :2],
            axis=1,
        ).mean()
        assert abs(dist - 1.0) <= 1e-9

    def linear_pose(n, step, fps):
        coords = np.zeros((n, N_LANDMARKS, 2))
        coords[:, RIGHT_SHOULDER, 0] = -0.5
        coords[:, LEFT_SHOULDER, 0] = 0.5
        for t in range(n):
            coords[t, 0, 0] = step * t
        return sl.PoseSequence(
            video_id="v",
            fps=fps,
            landmarks=np.concatenate([coords, np.ones((n, N_LANDMARKS, 1))], axis=2),
        )

    f25 = sl.landmark_flow(linear_pose(6, 0.1, 25.0))
    f50 = sl.landmark_flow(linear_pose(11, 0.05, 50.0))
    assert np.all(np.abs(f25.features[1:, 0] - 2.5) <= 1e-9)
    assert np.all(np.abs(f50.features[1:, 0] - 2.5) <= 1e-9)


@criterion("Gradient check <= 1e-4 over 10 random configs, both modes")
def test_gradient_check_10_configs():
    rng = np.random.default_rng(17)
    for mode in (sl.FRAME, sl.SEGMENT):
        for trial in range(10):
            d = int(rng.integers(1, 6))
            cfg = sl.DetectorConfig(
                input_dim=d,
                hidden_size=int(rng.integers(1, 7)),
                dropout_p=float(rng.choice([0.0, 0.0, 0.3])),
                mode=mode,
                seed=trial,
            )
            model = sl.init_model(cfg)
            batch = random_batch(rng, mode, d)
            worst = finite_difference_max_rel_error(model, batch, seed=trial, samples=6)
            assert worst <= 1e-4, f"{mode} trial {trial}: rel error {worst:.2e}"


@criterion("Trainability: >= 95% dev accuracy within 20 epochs, < 5 min")
def test_trainability_separable_flow():
    rng = np.random.default_rng(3)
    items = []
    for k in range(24):  # separable flow-shaped data at full width
        labels = rng.integers(0, 2, 100).astype(bool)
        feats = rng.normal(0.0, 0.05, (100, sl.FLOW_DIM))
        feats[labels, 190:274] += 0.6  # strong hand flow while signing
        items.append(LabeledFeatures(f"v{k:02d}", 25.0, feats, labels))
    cfg = sl.DetectorConfig(input_dim=sl.FLOW_DIM, hidden_size=64, dropout_p=0.5, seed=1)
    tcfg = TrainConfig(learning_rate=3e-3, epochs=20, batch_size=8, seed=7)
    start = time.monotonic()
    _, history = sl.train(sl.init_model(cfg), items[:18], items[18:], tcfg)
    elapsed = time.monotonic() - start
    assert elapsed < 300.0, f"training took {elapsed:.0f}s"
    assert max(history) >= 0.95, f"best dev accuracy {max(history):.3f}"


@criterion("Overlap effect: positive median gap with style on, smaller when off")
def test_overlap_effect_directional():
    tcfg = TrainConfig(learning_rate=3e-3, epochs=10)
    medians = {}
    for style in (1.0, 0.0):
        cfg = sl.SynthConfig(
            n_signers=20, videos_per_signer=3, n_frames=150, style_offset_mag=style
        )
        summary = run_overlap_experiments(
            cfg, n_seeds=7, master_seed=2026, train_cfg=tcfg
        )
        medians[style] = summary.median_gap
    assert medians[1.0] > 0.0, f"style-on median gap {medians[1.0]:.2f}"
    assert abs(medians[0.0]) < medians[1.0], (
        f"null median {medians[0.0]:.2f} not below style-on {medians[1.0]:.2f}"
    )


@criterion("Relative-decrease arithmetic reproduces 4.17% and 6.27% (+-0.01)")
def test_relative_decrease_reproduces_headline():
    assert sl.relative_decrease(0.8900, 0.8529) == pytest.approx(4.17, abs=0.01)
    assert sl.relative_decrease(0.893, 0.837) == pytest.approx(6.27, abs=0.01)


@criterion("Segment windowing: 45 -> 2, 20 -> 1, 19 -> 0")
def test_segment_windowing_exact():
    for n, want in ((45, 2), (20, 1), (19, 0)):
        segments = sl.make_segments(
            "v", np.zeros((n, 4)), np.zeros(n, dtype=bool), length=20, stride=20
        )
        assert len(segments) == want


@criterion("End-to-end CLI determinism: byte-identical outputs for one seed")
def test_cli_end_to_end_determinism(tmp_path):
    first = full_pipeline(tmp_path / "a", "77")
    second = full_pipeline(tmp_path / "b", "77")
    assert set(first) == set(second)
    for name in first:
        assert first[name] == second[name], f"{name} differs between identical runs"
