"""Signer identification: gallery sampling, DBSCAN, per-video majority vote.

The clustering operates on raw embedding vectors with the Euclidean
metric. A row is CORE iff at least ``min_pts`` rows (itself included) lie
within ``epsilon``; clusters are connected components of core rows under
epsilon-adjacency; non-core rows adjacent to a core become BORDER members
of that core's cluster (lowest cluster id on ties); everything else is
NOISE. Cluster ids are 0-based in order of each cluster's first core row.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    EmptyVideoError,
    NoLabeledSignersError,
    NonFiniteInputError,
    UnknownVideoError,
)
from .seeding import rng_for
from .types import GARBAGE, ClusterAssignment, ClusterId, DatasetManifest, EmbeddingTable

#: Cluster value for noise rows.
NOISE = -1

# Rows per distance-computation chunk (bounds peak memory at ~32 MB).
_CHUNK_TARGET = 32 * 1024 * 1024


class PointKind(IntEnum):
    CORE = 0
    BORDER = 1
    NOISE = 2


@dataclass(frozen=True)
class DbscanParams:
    epsilon: float
    min_pts: int = 3

    def validate(self) -> None:
        if not (self.epsilon > 0 and np.isfinite(self.epsilon)):
            raise ConfigError(f"epsilon must be finite and > 0, got {self.epsilon}")
        if self.min_pts < 1:
            raise ConfigError(f"min_pts must be >= 1, got {self.min_pts}")


@dataclass
class PointLabeling:
    """Per-row cluster id (NOISE = -1) and point kind."""

    cluster: np.ndarray  # (n,) int64
    kind: np.ndarray  # (n,) uint8, values of PointKind

    def __len__(self) -> int:
        return len(self.cluster)

    def n_clusters(self) -> int:
        return int(self.cluster.max() + 1) if (self.cluster >= 0).any() else 0

    def noise_count(self) -> int:
        return int((self.cluster == NOISE).sum())


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    n_signers: int
    garbage_videos: int
    accuracy: float
    noise_rows: int


def _as_vectors(table: EmbeddingTable | np.ndarray) -> np.ndarray:
    if isinstance(table, EmbeddingTable):
        return np.asarray(table.vectors, dtype=np.float64)
    return np.asarray(table, dtype=np.float64)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        parent = self.parent
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            # Smaller root wins so representatives stay stable.
            if ri < rj:
                self.parent[rj] = ri
            else:
                self.parent[ri] = rj


def _chunk_bounds(n: int, dim: int) -> list[tuple[int, int]]:
    rows = max(1, _CHUNK_TARGET // max(1, n * max(dim, 1) * 8))
    return [(s, min(s + rows, n)) for s in range(0, n, rows)]


def _neighbor_chunk(X: np.ndarray, start: int, stop: int, eps2: float) -> np.ndarray:
    diff = X[start:stop, None, :] - X[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    return d2 <= eps2


def dbscan(
    table: EmbeddingTable | np.ndarray,
    params: DbscanParams,
    threads: int = 1,
) -> PointLabeling:
    """Cluster embedding rows; any row order is accepted, ids follow it."""
    params.validate()
    X = _as_vectors(table)
    if X.ndim != 2:
        X = X.reshape(len(X), -1) if len(X) else X.reshape(0, 1)
    n = len(X)
    if n == 0:
        return PointLabeling(
            cluster=np.zeros(0, dtype=np.int64), kind=np.zeros(0, dtype=np.uint8)
        )
    if not np.isfinite(X).all():
        raise NonFiniteInputError("input vectors contain NaN or infinity")

    eps2 = params.epsilon * params.epsilon
    chunks = _chunk_bounds(n, X.shape[1])

    def compute(bounds: tuple[int, int]) -> np.ndarray:
        return _neighbor_chunk(X, bounds[0], bounds[1], eps2)

    # Pass 1: neighbor counts -> core mask.
    counts = np.zeros(n, dtype=np.int64)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            masks = list(pool.map(compute, chunks))
    else:
        masks = None
    for ci, (start, stop) in enumerate(chunks):
        mask = masks[ci] if masks is not None else compute((start, stop))
        counts[start:stop] = mask.sum(axis=1)
    core = counts >= params.min_pts

    # Pass 2: union core points across epsilon-adjacency, then attach borders.
    uf = _UnionFind(n)
    border_cluster = np.full(n, NOISE, dtype=np.int64)
    core_idx = np.flatnonzero(core)
    for ci, (start, stop) in enumerate(chunks):
        mask = masks[ci] if masks is not None else compute((start, stop))
        for row in range(start, stop):
            if core[row]:
                for j in np.flatnonzero(mask[row - start] & core):
                    if j > row:
                        uf.union(row, int(j))

    # Number clusters by their first core row.
    root_to_id: dict[int, int] = {}
    cluster = np.full(n, NOISE, dtype=np.int64)
    for row in core_idx:
        root = uf.find(int(row))
        if root not in root_to_id:
            root_to_id[root] = len(root_to_id)
        cluster[row] = root_to_id[root]

    kind = np.full(n, PointKind.NOISE, dtype=np.uint8)
    kind[core] = PointKind.CORE

    # Border pass: lowest adjacent core cluster id wins.
    if core_idx.size:
        for ci, (start, stop) in enumerate(chunks):
            mask = masks[ci] if masks is not None else compute((start, stop))
            for row in range(start, stop):
                if core[row]:
                    continue
                adjacent = mask[row - start] & core
                if adjacent.any():
                    border_cluster[row] = cluster[adjacent].min()
        is_border = border_cluster != NOISE
        cluster[is_border] = border_cluster[is_border]
        kind[is_border] = PointKind.BORDER

    return PointLabeling(cluster=cluster, kind=kind)


def sample_gallery(
    frames_by_video: Mapping[str, Sequence[int]],
    k: int,
    seed: int,
) -> dict[str, list[int]]:
    """Per video, min(k, n) distinct frame indices drawn uniformly.

    Draws are keyed by (seed, video_id) so the selection for one video
    does not depend on which other videos are present.
    """
    if k < 1:
        raise ConfigError(f"gallery size k must be >= 1, got {k}")
    selection: dict[str, list[int]] = {}
    for vid in sorted(frames_by_video):
        frames = np.asarray(list(frames_by_video[vid]), dtype=np.int64)
        if frames.size == 0:
            raise EmptyVideoError(f"video {vid!r} has no frames to sample")
        rng = rng_for(seed, f"gallery:{vid}")
        take = min(k, frames.size)
        chosen = rng.choice(frames, size=take, replace=False)
        selection[vid] = sorted(int(f) for f in chosen)
    return selection


def frames_from_manifest(manifest: DatasetManifest) -> dict[str, range]:
    return {rec.video_id: range(rec.n_frames) for rec in manifest.videos}


def assign_videos(
    labeling: PointLabeling, table: EmbeddingTable
) -> ClusterAssignment:
    """Majority vote over each video's rows.

    The most frequent cluster wins (ties to the lowest id); a video goes to
    the garbage class only when noise rows strictly outnumber every cluster
    or no row belongs to any cluster.
    """
    if len(labeling) != len(table):
        raise UnknownVideoError(
            f"labeling covers {len(labeling)} rows but table has {len(table)}"
        )
    rows_by_video: dict[str, list[int]] = {}
    for i, vid in enumerate(table.video_ids):
        rows_by_video.setdefault(vid, []).append(i)

    entries: dict[str, ClusterId] = {}
    for vid, rows in rows_by_video.items():
        labels = labeling.cluster[rows]
        noise_count = int((labels == NOISE).sum())
        clustered = labels[labels != NOISE]
        if clustered.size == 0:
            entries[vid] = GARBAGE
            continue
        ids, freq = np.unique(clustered, return_counts=True)
        best = freq.max()
        winner = int(ids[freq == best].min())
        entries[vid] = GARBAGE if noise_count > best else winner
    assignment = ClusterAssignment(entries)
    assignment.validate()
    return assignment


def clustering_accuracy(
    assignment: ClusterAssignment, manifest: DatasetManifest
) -> float:
    """Fraction of labeled signers whose videos form one clean cluster.

    A signer counts as correct iff all of their videos share a single
    non-garbage cluster id that no other labeled signer's video received.
    """
    videos_by_signer: dict[str, list[str]] = {}
    for rec in manifest.videos:
        if rec.signer_label:
            videos_by_signer.setdefault(rec.signer_label, []).append(rec.video_id)
    if not videos_by_signer:
        raise NoLabeledSignersError("manifest has no videos with signer_label")

    owners: dict[ClusterId, set[str]] = {}
    for signer, vids in videos_by_signer.items():
        for vid in vids:
            if vid not in assignment.entries:
                raise UnknownVideoError(f"labeled video {vid!r} has no assignment")
            owners.setdefault(assignment.entries[vid], set()).add(signer)

    correct = 0
    for signer, vids in videos_by_signer.items():
        ids = {assignment.entries[v] for v in vids}
        if len(ids) != 1:
            continue
        (cid,) = ids
        if cid == GARBAGE or len(owners[cid]) != 1:
            continue
        correct += 1
    return correct / len(videos_by_signer)


def epsilon_sweep(
    table: EmbeddingTable,
    manifest: DatasetManifest,
    eps_grid: Sequence[float],
    min_pts: int = 3,
    seed: int = 0,
    threads: int = 1,
) -> list[SweepRow]:
    """One clustering pipeline run per epsilon of a strictly increasing grid."""
    if len(eps_grid) == 0:
        raise ConfigError("epsilon grid is empty")
    if any(b <= a for a, b in zip(eps_grid, eps_grid[1:])):
        raise ConfigError("epsilon grid must be strictly increasing")
    del seed  # reserved: the sweep itself draws nothing
    rows = []
    for eps in eps_grid:
        labeling = dbscan(table, DbscanParams(epsilon=float(eps), min_pts=min_pts), threads)
        assignment = assign_videos(labeling, table)
        accuracy = clustering_accuracy(assignment, manifest)
        ids = {c for c in assignment.entries.values() if c != GARBAGE}
        rows.append(
            SweepRow(
                epsilon=float(eps),
                n_signers=len(ids),
                garbage_videos=len(assignment.garbage_videos()),
                accuracy=accuracy,
                noise_rows=labeling.noise_count(),
            )
        )
    return rows


def best_sweep_row(rows: Sequence[SweepRow]) -> SweepRow:
    """Highest accuracy; earliest epsilon on ties."""
    if not rows:
        raise ConfigError("no sweep rows")
    best = rows[0]
    for row in rows[1:]:
        if row.accuracy > best.accuracy:
            best = row
    return best
