"""Seeded synthetic datasets.

Desk-scale stand-ins for a real corpus: gallery embeddings clustered
around per-signer centers, and pose sequences whose signing bouts show
high-variance hand motion on top of a persistent per-signer style. The
style knob is what lets a detector overfit to signers; at zero every
signer shares identical motion statistics.
"""

from __future__ import annotations

import numpy as np

from .errors import CenterSeparationError
from .seeding import rng_for
from .types import (
    BODY_LANDMARKS,
    BODY_OFFSET,
    FACE_LANDMARKS,
    HAND_LANDMARKS,
    LEFT_HAND_OFFSET,
    N_LANDMARKS,
    RIGHT_HAND_OFFSET,
    DatasetManifest,
    EmbeddingTable,
    PoseSequence,
    Span,
    SynthConfig,
    VideoRecord,
)

SIGNER_LABEL_FMT = "signer{:03d}"

# Fraction of the hand-step amplitude contributed by the per-signer drift
# direction during signing bouts (scaled by the style knob).
_DRIFT_FRACTION = 1.5

# Per-step decay of the hand random walk; keeps hands near their rest pose.
_WALK_DECAY = 0.96


def _signer_centers(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """Unit-sphere centers with pairwise distance >= cfg.center_min_dist."""
    centers = np.zeros((cfg.n_signers, cfg.embedding_dim))
    for i in range(cfg.n_signers):
        for _ in range(cfg.center_resample_attempts):
            c = rng.standard_normal(cfg.embedding_dim)
            c /= np.linalg.norm(c)
            if i == 0 or np.linalg.norm(centers[:i] - c, axis=1).min() >= cfg.center_min_dist:
                centers[i] = c
                break
        else:
            raise CenterSeparationError(
                f"could not separate center {i} by {cfg.center_min_dist} "
                f"within {cfg.center_resample_attempts} attempts"
            )
    return centers


def embedding_video_id(signer: int, video: int) -> str:
    return f"vid_s{signer:03d}_v{video:02d}"


def synth_embeddings(cfg: SynthConfig) -> tuple[EmbeddingTable, dict[str, int]]:
    """Gallery embeddings: per-signer center plus Gaussian noise per row.

    Returns the table (canonical row order) and the ground-truth map
    video_id -> signer index.
    """
    cfg.validate()
    rng = rng_for(cfg.seed, "synth-embeddings:centers")
    centers = _signer_centers(cfg, rng)

    video_ids: list[str] = []
    frame_indices: list[int] = []
    vectors: list[np.ndarray] = []
    truth: dict[str, int] = {}
    for si in range(cfg.n_signers):
        for vi in range(cfg.videos_per_signer):
            vid = embedding_video_id(si, vi)
            truth[vid] = si
            vrng = rng_for(cfg.seed, f"synth-embeddings:{vid}")
            noise = vrng.normal(
                0.0, cfg.gallery_noise_sigma, size=(cfg.rows_per_video, cfg.embedding_dim)
            )
            for fi in range(cfg.rows_per_video):
                video_ids.append(vid)
                frame_indices.append(fi)
                vectors.append(centers[si] + noise[fi])

    table = EmbeddingTable(
        video_ids=video_ids,
        frame_indices=np.asarray(frame_indices, dtype=np.int64),
        vectors=np.asarray(vectors, dtype=np.float64),
    ).sorted_copy()
    table.validate()
    return table, truth


def gallery_manifest(cfg: SynthConfig, truth: dict[str, int]) -> DatasetManifest:
    """Companion manifest for a synthetic gallery (labels from the truth map)."""
    fps = 25.0
    videos = [
        VideoRecord(
            video_id=vid,
            duration_s=cfg.rows_per_video / fps,
            fps=fps,
            n_frames=cfg.rows_per_video,
            signer_label=SIGNER_LABEL_FMT.format(signer),
        )
        for vid, signer in sorted(truth.items())
    ]
    manifest = DatasetManifest(videos=videos, dataset_id="synth-gallery")
    manifest.validate()
    return manifest


# -- pose generation ----------------------------------------------------------


def _face_template() -> np.ndarray:
    angles = np.linspace(0.0, 2.0 * np.pi, FACE_LANDMARKS, endpoint=False)
    return np.stack(
        [0.5 + 0.08 * np.cos(angles), 0.28 + 0.10 * np.sin(angles)], axis=1
    )


def _body_template() -> np.ndarray:
    body = np.zeros((BODY_LANDMARKS, 2))
    body[:] = (0.5, 0.55)  # default: mid-torso
    body[0] = (0.5, 0.33)  # nose
    body[1] = (0.5, 0.45)  # neck
    body[2] = (0.325, 0.45)  # right shoulder
    body[3] = (0.28, 0.58)  # right elbow
    body[4] = (0.30, 0.70)  # right wrist
    body[5] = (0.675, 0.45)  # left shoulder
    body[6] = (0.72, 0.58)  # left elbow
    body[7] = (0.70, 0.70)  # left wrist
    body[8] = (0.5, 0.78)  # mid hip
    body[9] = (0.44, 0.78)
    body[12] = (0.56, 0.78)
    return body


def _hand_template(center: tuple[float, float]) -> np.ndarray:
    angles = np.linspace(0.0, 2.0 * np.pi, HAND_LANDMARKS, endpoint=False)
    radii = 0.012 + 0.018 * (np.arange(HAND_LANDMARKS) % 5) / 4.0
    return np.stack(
        [center[0] + radii * np.cos(angles), center[1] + radii * np.sin(angles)],
        axis=1,
    )


def _rest_pose() -> np.ndarray:
    pose = np.zeros((N_LANDMARKS, 2))
    pose[:FACE_LANDMARKS] = _face_template()
    pose[BODY_OFFSET : BODY_OFFSET + BODY_LANDMARKS] = _body_template()
    pose[LEFT_HAND_OFFSET : LEFT_HAND_OFFSET + HAND_LANDMARKS] = _hand_template((0.70, 0.70))
    pose[RIGHT_HAND_OFFSET : RIGHT_HAND_OFFSET + HAND_LANDMARKS] = _hand_template((0.30, 0.70))
    return pose


def _signing_bouts(cfg: SynthConfig, rng: np.random.Generator) -> list[Span]:
    """Alternating rest/signing spans covering [0, n_frames)."""
    mean_sign = 30.0
    mean_rest = max(mean_sign * (1.0 - cfg.signing_rate) / cfg.signing_rate, 3.0)
    spans: list[Span] = []
    signing = bool(rng.random() < cfg.signing_rate)
    t = 0
    while t < cfg.n_frames:
        mean = mean_sign if signing else mean_rest
        length = int(max(3, round(rng.uniform(0.5 * mean, 1.5 * mean))))
        end = min(t + length, cfg.n_frames)
        if signing:
            spans.append(Span(start_frame=t, end_frame=end, signing=True))
        t = end
        signing = not signing
    return spans


def pose_video_id(signer: int, video: int) -> str:
    return f"pose_s{signer:03d}_v{video:02d}"


def synth_pose_dataset(cfg: SynthConfig) -> tuple[DatasetManifest, list[PoseSequence]]:
    """Pose sequences with signing bouts and per-signer motion style.

    Hands follow a decaying random walk whose step size is large during
    signing bouts and small at rest. The style knob adds two persistent
    per-signer traits: a log-scale multiplier on all step sizes and a drift
    direction mixed into signing steps. Face and body landmarks only jitter;
    a per-video camera scale multiplies all coordinates.
    """
    cfg.validate()
    hand_slice = slice(LEFT_HAND_OFFSET, N_LANDMARKS)
    n_hand_coords = 2 * HAND_LANDMARKS * 2
    rest = _rest_pose()

    videos: list[VideoRecord] = []
    sequences: list[PoseSequence] = []
    for si in range(cfg.n_signers):
        srng = rng_for(cfg.seed, f"synth-poses:signer:{si}")
        amp_mult = float(np.exp(cfg.style_offset_mag * srng.uniform(-1.0, 1.0)))
        drift = srng.standard_normal(n_hand_coords)
        drift *= cfg.style_offset_mag * _DRIFT_FRACTION * cfg.signing_amp / np.linalg.norm(drift)

        for vi in range(cfg.videos_per_signer):
            vid = pose_video_id(si, vi)
            vrng = rng_for(cfg.seed, f"synth-poses:video:{vid}")
            scale = vrng.uniform(0.7, 1.4)
            spans = _signing_bouts(cfg, vrng)
            signing_mask = np.zeros(cfg.n_frames, dtype=bool)
            for span in spans:
                signing_mask[span.start_frame : span.end_frame] = True

            coords = np.empty((cfg.n_frames, N_LANDMARKS, 2))
            coords[:] = rest
            coords += vrng.normal(0.0, cfg.jitter, size=coords.shape)

            walk = np.zeros(n_hand_coords)
            for t in range(cfg.n_frames):
                if signing_mask[t]:
                    step = amp_mult * cfg.signing_amp * vrng.standard_normal(n_hand_coords)
                    step += drift
                else:
                    step = amp_mult * cfg.rest_amp * vrng.standard_normal(n_hand_coords)
                walk = _WALK_DECAY * walk + step
                coords[t, hand_slice] += walk.reshape(-1, 2)

            landmarks = np.concatenate(
                [coords * scale, np.ones((cfg.n_frames, N_LANDMARKS, 1))], axis=2
            )
            sequences.append(PoseSequence(video_id=vid, fps=cfg.fps, landmarks=landmarks))
            videos.append(
                VideoRecord(
                    video_id=vid,
                    duration_s=cfg.n_frames / cfg.fps,
                    fps=cfg.fps,
                    n_frames=cfg.n_frames,
                    signer_label=SIGNER_LABEL_FMT.format(si),
                    annotations=spans,
                )
            )

    manifest = DatasetManifest(videos=videos, dataset_id="synth-poses")
    manifest.validate()
    for seq in sequences:
        seq.validate()
    return manifest, sequences
