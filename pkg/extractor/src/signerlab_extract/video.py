"""Frame access via OpenCV."""

from __future__ import annotations

from pathlib import Path
from typing import Iterator

import cv2
import numpy as np


class VideoReader:
    """Sequential decoder with optional fps override for bad metadata."""

    def __init__(self, path: str | Path, fps_override: float | None = None):
        self.path = str(path)
        self.capture = cv2.VideoCapture(self.path)
        if not self.capture.isOpened():
            from .jobs import VideoUnreadableError

            raise VideoUnreadableError(f"cannot open video {self.path!r}")
        meta_fps = float(self.capture.get(cv2.CAP_PROP_FPS) or 0.0)
        self.fps = fps_override if fps_override else (meta_fps if meta_fps > 0 else 25.0)

    def frames(self) -> Iterator[tuple[int, np.ndarray]]:
        index = 0
        while True:
            ok, frame = self.capture.read()
            if not ok:
                break
            yield index, frame
            index += 1

    def release(self) -> None:
        self.capture.release()

    def __enter__(self) -> "VideoReader":
        return self

    def __exit__(self, *exc) -> None:
        self.release()
