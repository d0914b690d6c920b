"""Head/face detection backends.

``blob`` finds bright elliptical regions on dark footage (controlled
recordings, synthetic clips); ``haar`` wraps OpenCV's frontal-face cascade
when its data file ships with the installed build. ``auto`` prefers haar
and falls back to blob.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import cv2
import numpy as np

BLOB_THRESHOLD = 90
MIN_AREA_FRACTION = 0.002


@dataclass(frozen=True)
class Detection:
    """Axis-aligned head box in pixel coordinates."""

    x: int
    y: int
    w: int
    h: int


def _blob_detect(frame: np.ndarray) -> list[Detection]:
    gray = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY)
    _, mask = cv2.threshold(gray, BLOB_THRESHOLD, 255, cv2.THRESH_BINARY)
    contours, _ = cv2.findContours(mask, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
    min_area = MIN_AREA_FRACTION * frame.shape[0] * frame.shape[1]
    boxes = []
    for contour in contours:
        if cv2.contourArea(contour) >= min_area:
            x, y, w, h = cv2.boundingRect(contour)
            boxes.append(Detection(int(x), int(y), int(w), int(h)))
    boxes.sort(key=lambda b: (-(b.w * b.h), b.x, b.y))
    return boxes


_haar_cascade = None


def haar_available() -> bool:
    data_dir = getattr(getattr(cv2, "data", None), "haarcascades", "")
    return bool(data_dir) and os.path.exists(
        os.path.join(data_dir, "haarcascade_frontalface_default.xml")
    )


def _haar_detect(frame: np.ndarray) -> list[Detection]:
    global _haar_cascade
    if _haar_cascade is None:
        _haar_cascade = cv2.CascadeClassifier(
            os.path.join(cv2.data.haarcascades, "haarcascade_frontalface_default.xml")
        )
    gray = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY)
    found = _haar_cascade.detectMultiScale(gray, scaleFactor=1.1, minNeighbors=5)
    boxes = [Detection(int(x), int(y), int(w), int(h)) for x, y, w, h in found]
    boxes.sort(key=lambda b: (-(b.w * b.h), b.x, b.y))
    return boxes


def detect_heads(frame: np.ndarray, backend: str = "auto") -> list[Detection]:
    """All plausible head boxes, largest first."""
    if backend == "auto":
        backend = "haar" if haar_available() else "blob"
    if backend == "haar":
        if not haar_available():
            raise RuntimeError("haar cascade data is not available in this OpenCV build")
        return _haar_detect(frame)
    if backend == "blob":
        return _blob_detect(frame)
    raise ValueError(f"unknown detector backend {backend!r}")
