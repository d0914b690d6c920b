"""Line-delimited record files for every persisted type.

All artifacts are UTF-8 text, one JSON record per line, numbers at full
precision. Writers emit records in canonical order (video_id, then
frame_index) and replace the target atomically, so a fixed seed yields
byte-identical files.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Iterator

import numpy as np

from .errors import DimensionMismatch, InvariantViolation, ParseError
from .types import (
    EMBEDDING_DIM,
    GARBAGE,
    N_LANDMARKS,
    PARTITION_NAMES,
    ClusterAssignment,
    DatasetManifest,
    EmbeddingTable,
    PoseSequence,
    Provenance,
    Span,
    SplitDefinition,
    VideoRecord,
)


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file + rename in one directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        umask = os.umask(0)
        os.umask(umask)
        os.fchmod(fd, 0o666 & ~umask)  # mkstemp defaults to 0600
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_record(record: dict[str, Any]) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def write_records(path: str | Path, records: Iterable[dict[str, Any]]) -> None:
    atomic_write_text(path, "".join(dump_record(r) + "\n" for r in records))


def iter_records(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield ``(line_no, record)`` pairs; malformed lines raise ParseError."""
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(path), line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise ParseError(str(path), line_no, "record is not a JSON object")
            yield line_no, record


def read_records(path: str | Path) -> list[dict[str, Any]]:
    return [record for _, record in iter_records(path)]


def _require(record: dict[str, Any], key: str, path: str | Path, line_no: int) -> Any:
    if key not in record:
        raise ParseError(str(path), line_no, f"missing field {key!r}")
    return record[key]


# -- manifest ---------------------------------------------------------------


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    manifest.validate()
    records: list[dict[str, Any]] = []
    if manifest.dataset_id:
        records.append({"dataset_id": manifest.dataset_id})
    for rec in sorted(manifest.videos, key=lambda r: r.video_id):
        records.append(
            {
                "video_id": rec.video_id,
                "duration_s": rec.duration_s,
                "fps": rec.fps,
                "n_frames": rec.n_frames,
                "signer_label": rec.signer_label,
                "annotations": [
                    {
                        "start_frame": s.start_frame,
                        "end_frame": s.end_frame,
                        "signing": s.signing,
                    }
                    for s in rec.annotations
                ],
            }
        )
    write_records(path, records)


def load_manifest(path: str | Path) -> DatasetManifest:
    dataset_id = ""
    videos: list[VideoRecord] = []
    for line_no, record in iter_records(path):
        if "video_id" not in record and "dataset_id" in record:
            dataset_id = str(record["dataset_id"])
            continue
        spans = []
        for raw in record.get("annotations") or []:
            spans.append(
                Span(
                    start_frame=int(_require(raw, "start_frame", path, line_no)),
                    end_frame=int(_require(raw, "end_frame", path, line_no)),
                    signing=bool(_require(raw, "signing", path, line_no)),
                )
            )
        label = record.get("signer_label")
        videos.append(
            VideoRecord(
                video_id=str(_require(record, "video_id", path, line_no)),
                duration_s=float(_require(record, "duration_s", path, line_no)),
                fps=float(_require(record, "fps", path, line_no)),
                n_frames=int(_require(record, "n_frames", path, line_no)),
                signer_label=None if label is None else str(label),
                annotations=spans,
            )
        )
    manifest = DatasetManifest(videos=videos, dataset_id=dataset_id)
    manifest.validate()
    return manifest


# -- embeddings -------------------------------------------------------------


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    table.validate()
    table = table.sorted_copy()
    lines = []
    for i, vid in enumerate(table.video_ids):
        lines.append(
            dump_record(
                {
                    "video_id": vid,
                    "frame_index": int(table.frame_indices[i]),
                    "vector": table.vectors[i].tolist(),
                }
            )
        )
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def load_embeddings(path: str | Path) -> EmbeddingTable:
    video_ids: list[str] = []
    frames: list[int] = []
    vectors: list[list[float]] = []
    for line_no, record in iter_records(path):
        vec = _require(record, "vector", path, line_no)
        if len(vec) != EMBEDDING_DIM:
            raise DimensionMismatch(
                f"{path}:{line_no}: vector has {len(vec)} components, "
                f"expected {EMBEDDING_DIM}"
            )
        video_ids.append(str(_require(record, "video_id", path, line_no)))
        frames.append(int(_require(record, "frame_index", path, line_no)))
        vectors.append(vec)
    table = EmbeddingTable(
        video_ids=video_ids,
        frame_indices=np.asarray(frames, dtype=np.int64),
        vectors=(
            np.asarray(vectors, dtype=np.float64)
            if vectors
            else np.zeros((0, EMBEDDING_DIM))
        ),
    )
    table.validate()
    return table


# -- poses ------------------------------------------------------------------


def save_poses(sequences: Iterable[PoseSequence], path: str | Path) -> None:
    lines = []
    for seq in sorted(sequences, key=lambda s: s.video_id):
        seq.validate()
        for t in range(seq.n_frames):
            lines.append(
                dump_record(
                    {
                        "video_id": seq.video_id,
                        "fps": seq.fps,
                        "frame_index": t,
                        "landmarks": seq.landmarks[t].tolist(),
                    }
                )
            )
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def load_poses(path: str | Path) -> list[PoseSequence]:
    frames: dict[str, dict[int, list[list[float]]]] = {}
    fps: dict[str, float] = {}
    for line_no, record in iter_records(path):
        vid = str(_require(record, "video_id", path, line_no))
        lm = _require(record, "landmarks", path, line_no)
        if len(lm) != N_LANDMARKS:
            raise DimensionMismatch(
                f"{path}:{line_no}: frame has {len(lm)} landmarks, "
                f"expected {N_LANDMARKS}"
            )
        fps[vid] = float(_require(record, "fps", path, line_no))
        frames.setdefault(vid, {})[
            int(_require(record, "frame_index", path, line_no))
        ] = lm
    sequences = []
    for vid in sorted(frames):
        by_index = frames[vid]
        if sorted(by_index) != list(range(len(by_index))):
            raise InvariantViolation(f"{vid}: frame indices are not 0..n-1")
        stacked = np.asarray(
            [by_index[t] for t in range(len(by_index))], dtype=np.float64
        )
        seq = PoseSequence(video_id=vid, fps=fps[vid], landmarks=stacked)
        seq.validate()
        sequences.append(seq)
    return sequences


# -- cluster assignments ----------------------------------------------------


def save_assignment(assignment: ClusterAssignment, path: str | Path) -> None:
    assignment.validate()
    write_records(
        path,
        (
            {"video_id": vid, "cluster": assignment.entries[vid]}
            for vid in sorted(assignment.entries)
        ),
    )


def load_assignment(path: str | Path) -> ClusterAssignment:
    entries: dict[str, Any] = {}
    for line_no, record in iter_records(path):
        vid = str(_require(record, "video_id", path, line_no))
        cluster = _require(record, "cluster", path, line_no)
        if cluster != GARBAGE:
            try:
                cluster = int(cluster)
            except (TypeError, ValueError):
                raise ParseError(
                    str(path), line_no, f"cluster must be an int or {GARBAGE!r}"
                ) from None
        if vid in entries:
            raise InvariantViolation(f"duplicate assignment for {vid!r}")
        entries[vid] = cluster
    assignment = ClusterAssignment(entries)
    assignment.validate()
    return assignment


def assignment_digest(assignment: ClusterAssignment) -> str:
    """SHA-256 over the canonical serialized assignment."""
    import hashlib

    text = "".join(
        dump_record({"video_id": vid, "cluster": assignment.entries[vid]}) + "\n"
        for vid in sorted(assignment.entries)
    )
    return hashlib.sha256(text.encode()).hexdigest()


# -- splits -----------------------------------------------------------------


def save_split(split: SplitDefinition, path: str | Path) -> None:
    split.validate()
    prov = {
        "seed": split.provenance.seed,
        "ratios": list(split.provenance.ratios),
        "method": split.provenance.method,
        "source_assignment_digest": split.provenance.source_assignment_digest,
    }
    if split.provenance.garbage_policy is not None:
        prov["garbage_policy"] = split.provenance.garbage_policy
    record = {
        "partitions": {
            name: sorted(split.partitions.get(name, [])) for name in PARTITION_NAMES
        },
        "provenance": prov,
    }
    atomic_write_text(path, dump_record(record) + "\n")


def load_split(path: str | Path) -> SplitDefinition:
    records = read_records(path)
    if len(records) != 1:
        raise ParseError(str(path), 1, "split file must hold exactly one record")
    record = records[0]
    partitions = _require(record, "partitions", path, 1)
    prov = _require(record, "provenance", path, 1)
    ratios = prov.get("ratios", [0.0, 0.0, 0.0])
    split = SplitDefinition(
        partitions={
            name: [str(v) for v in partitions.get(name, [])]
            for name in PARTITION_NAMES
        },
        provenance=Provenance(
            seed=int(prov.get("seed", 0)),
            ratios=(float(ratios[0]), float(ratios[1]), float(ratios[2])),
            method=str(prov.get("method", "")),
            source_assignment_digest=prov.get("source_assignment_digest"),
            garbage_policy=prov.get("garbage_policy"),
        ),
    )
    split.validate()
    return split


# -- gallery selections -----------------------------------------------------


def save_gallery_selection(selection: dict[str, list[int]], path: str | Path) -> None:
    write_records(
        path,
        (
            {"video_id": vid, "frames": [int(f) for f in selection[vid]]}
            for vid in sorted(selection)
        ),
    )


def load_gallery_selection(path: str | Path) -> dict[str, list[int]]:
    selection: dict[str, list[int]] = {}
    for line_no, record in iter_records(path):
        vid = str(_require(record, "video_id", path, line_no))
        selection[vid] = [int(f) for f in _require(record, "frames", path, line_no)]
    return selection
