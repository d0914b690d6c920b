"""Geometric 137-landmark layout derived from a detected head box.

Landmark order matches the signerlab pose format: 70 face points, a
25-point body block (shoulders at body indices 2 and 5), then 21 points
per hand. Landmarks this backend cannot place are emitted as (0, 0, 0) so
downstream masking applies; detected-but-derived body points carry reduced
confidence.
"""

from __future__ import annotations

import numpy as np

from .detect import Detection

FACE_LANDMARKS = 70
BODY_LANDMARKS = 25
HAND_LANDMARKS = 21
N_LANDMARKS = FACE_LANDMARKS + BODY_LANDMARKS + 2 * HAND_LANDMARKS

FACE_CONFIDENCE = 0.9
BODY_CONFIDENCE = 0.6


def empty_frame() -> np.ndarray:
    return np.zeros((N_LANDMARKS, 3), dtype=np.float64)


def landmarks_from_head(box: Detection) -> np.ndarray:
    """Place face points on the head ellipse and infer a torso below it."""
    out = empty_frame()
    cx, cy = box.x + box.w / 2.0, box.y + box.h / 2.0

    angles = np.linspace(0.0, 2.0 * np.pi, FACE_LANDMARKS, endpoint=False)
    out[:FACE_LANDMARKS, 0] = cx + 0.45 * box.w * np.cos(angles)
    out[:FACE_LANDMARKS, 1] = cy + 0.45 * box.h * np.sin(angles)
    out[:FACE_LANDMARKS, 2] = FACE_CONFIDENCE

    body = out[FACE_LANDMARKS : FACE_LANDMARKS + BODY_LANDMARKS]
    neck_y = box.y + 1.25 * box.h
    body[0] = (cx, cy, BODY_CONFIDENCE)  # nose proxy
    body[1] = (cx, neck_y, BODY_CONFIDENCE)  # neck
    body[2] = (cx - 0.9 * box.w, neck_y + 0.15 * box.h, BODY_CONFIDENCE)  # r shoulder
    body[5] = (cx + 0.9 * box.w, neck_y + 0.15 * box.h, BODY_CONFIDENCE)  # l shoulder
    body[8] = (cx, neck_y + 2.2 * box.h, BODY_CONFIDENCE)  # mid hip
    return out
