"""128-d face embeddings.

The built-in ``patch`` embedder resizes the face crop to a 16x8 grayscale
patch and standardizes it: fully deterministic, good enough for identity
grouping on controlled footage. When the ``face_recognition`` package is
installed its CNN embeddings can be selected instead.
"""

from __future__ import annotations

import cv2
import numpy as np

from .detect import Detection

EMBEDDING_DIM = 128

try:  # optional heavyweight backend
    import face_recognition  # type: ignore

    FACE_RECOGNITION_AVAILABLE = True
except ImportError:
    FACE_RECOGNITION_AVAILABLE = False


def patch_embedding(frame: np.ndarray, box: Detection) -> np.ndarray:
    crop = frame[box.y : box.y + box.h, box.x : box.x + box.w]
    gray = cv2.cvtColor(crop, cv2.COLOR_BGR2GRAY).astype(np.float64)
    patch = cv2.resize(gray, (8, 16), interpolation=cv2.INTER_AREA).ravel()
    patch -= patch.mean()
    norm = np.linalg.norm(patch)
    if norm > 0:
        patch /= norm
    return patch


def cnn_embedding(frame: np.ndarray, box: Detection) -> np.ndarray | None:
    rgb = cv2.cvtColor(frame, cv2.COLOR_BGR2RGB)
    location = (box.y, box.x + box.w, box.y + box.h, box.x)  # top, right, bottom, left
    vectors = face_recognition.face_encodings(rgb, [location])
    return np.asarray(vectors[0], dtype=np.float64) if vectors else None


def embed_face(frame: np.ndarray, box: Detection, backend: str) -> np.ndarray | None:
    if backend == "patch":
        return patch_embedding(frame, box)
    if backend == "face-recognition":
        if not FACE_RECOGNITION_AVAILABLE:
            raise RuntimeError("face_recognition is not installed")
        return cnn_embedding(frame, box)
    raise ValueError(f"unknown embedder backend {backend!r}")
