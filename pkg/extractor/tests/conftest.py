"""Synthesized sample clip: 10 seconds, one moving bright head, a blank gap,
and a short stretch with a second head."""

from __future__ import annotations

import numpy as np
import pytest

cv2 = pytest.importorskip("cv2")

FPS = 25
N_FRAMES = 10 * FPS  # 10-second clip
SIZE = (160, 120)  # (width, height)
BLANK_FRAMES = range(40, 50)
TWO_HEAD_FRAMES = range(60, 65)


def draw_frame(index: int) -> np.ndarray:
    frame = np.zeros((SIZE[1], SIZE[0], 3), dtype=np.uint8)
    if index in BLANK_FRAMES:
        return frame
    cx = int(60 + 25 * np.sin(index / 20.0))
    cy = int(45 + 8 * np.cos(index / 30.0))
    cv2.ellipse(frame, (cx, cy), (16, 20), 0, 0, 360, (200, 210, 220), -1)
    if index in TWO_HEAD_FRAMES:
        cv2.ellipse(frame, (125, 40), (12, 15), 0, 0, 360, (190, 200, 210), -1)
    return frame


@pytest.fixture(scope="session")
def sample_clip(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("clips") / "sample.avi"
    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"MJPG"), FPS, SIZE
    )
    assert writer.isOpened(), "OpenCV cannot write MJPG AVI in this environment"
    for index in range(N_FRAMES):
        writer.write(draw_frame(index))
    writer.release()
    return str(path)
