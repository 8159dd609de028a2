"""Turn real datasets into benchmark instances.

Loaders parse GloVe text embeddings and MNIST IDX image files into raw
column collections.  ``preprocess`` then reproduces the benchmark setup on
real data: sample n points, replace them by their best rank-k approximation,
and pick queries from held-out vectors whose projected nearest/second-nearest
distance ratio lands just above the gap parameter, rescaling so the nearest
neighbor sits at distance exactly 1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, IngestError, ParameterError
from .linalg import as_matrix, rank_k_approximation, top_k_left_singular_subspace
from .model import (
    MAX_SHUFFLE_ATTEMPTS,
    LatentInstance,
    _half_data_ranks_ok,
    seeded_rng,
    verify_gap,
)

MNIST_IMAGE_MAGIC = 0x00000803

# Queries qualify when second-nearest / nearest falls in
# [1 + epsilon, (1 + epsilon) * (1 + RATIO_WINDOW)].
RATIO_WINDOW = 0.05


@dataclass(frozen=True)
class RawDataset:
    """A bag of raw vectors, one per column, with optional per-column labels."""

    name: str
    vectors: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        v = as_matrix(self.vectors, "vectors")
        if self.labels is not None and len(self.labels) != v.shape[1]:
            raise ParameterError(
                f"{len(self.labels)} labels for {v.shape[1]} vectors"
            )
        object.__setattr__(self, "vectors", v)

    @property
    def d(self) -> int:
        return self.vectors.shape[0]

    @property
    def count(self) -> int:
        return self.vectors.shape[1]


def load_glove(path) -> RawDataset:
    """Parse a GloVe-style text file: one token plus d decimals per line.

    The first line fixes d; any later line that disagrees, or fails to
    parse, is reported with its 1-based line number.
    """
    labels: list[str] = []
    rows: list[np.ndarray] = []
    d = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                raise FormatError(f"line {lineno}: empty line")
            token, values = parts[0], parts[1:]
            if d is None:
                d = len(values)
                if d < 1:
                    raise FormatError(f"line {lineno}: no vector components")
            elif len(values) != d:
                raise FormatError(
                    f"line {lineno}: expected {d} components, got {len(values)}"
                )
            try:
                rows.append(np.array(values, dtype=np.float64))
            except ValueError as exc:
                raise FormatError(f"line {lineno}: non-numeric component") from exc
            labels.append(token)
    if not rows:
        raise FormatError("file contains no vectors")
    return RawDataset(
        name=Path(path).stem, vectors=np.stack(rows, axis=1), labels=tuple(labels)
    )


def load_mnist_idx(path, limit: int | None = None) -> RawDataset:
    """Parse an IDX3 image file into flattened [0, 1]-scaled columns.

    The big-endian header must carry the image magic 0x00000803; pixels are
    unsigned bytes divided by 255.  ``limit`` keeps only the first images.
    """
    if limit is not None and limit < 1:
        raise ParameterError(f"limit must be >= 1, got {limit}")
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16:
        raise FormatError(f"file too short for an IDX3 header ({len(blob)} bytes)")
    magic, count, n_rows, n_cols = struct.unpack(">IIII", blob[:16])
    if magic != MNIST_IMAGE_MAGIC:
        raise FormatError(
            f"bad magic 0x{magic:08x}, expected 0x{MNIST_IMAGE_MAGIC:08x}"
        )
    take = count if limit is None else min(limit, count)
    pixels_per_image = n_rows * n_cols
    need = take * pixels_per_image
    if len(blob) - 16 < need:
        raise FormatError(
            f"truncated pixel data: header promises {take} images of "
            f"{pixels_per_image} bytes, file holds {len(blob) - 16}"
        )
    raw = np.frombuffer(blob, dtype=np.uint8, count=need, offset=16)
    vectors = raw.reshape(take, pixels_per_image).T.astype(np.float64) / 255.0
    return RawDataset(name=Path(path).stem, vectors=vectors)


def _eligible_query(
    projected: np.ndarray, data_k: np.ndarray, epsilon: float
) -> tuple[int, float, float] | None:
    """Return (nn 0-based, nearest dist, ratio) when the candidate qualifies."""
    dists = np.linalg.norm(data_k - projected[:, None], axis=0)
    order = np.argsort(dists, kind="stable")
    d1 = float(dists[order[0]])
    d2 = float(dists[order[1]])
    if d1 <= 1e-12:
        return None
    ratio = d2 / d1
    if 1.0 + epsilon <= ratio <= (1.0 + epsilon) * (1.0 + RATIO_WINDOW):
        return int(order[0]), d1, ratio
    return None


def preprocess(
    raw: RawDataset,
    n: int,
    k: int,
    epsilon: float,
    query_count: int,
    seed: int,
    query_source: RawDataset | None = None,
) -> list[LatentInstance]:
    """Build rank-k benchmark instances from raw data.

    n columns are sampled as data points and replaced by their rank-k
    approximation.  Query candidates (held-out columns by default, or
    ``query_source`` when the dataset ships a separate query split) are
    projected onto the same subspace; candidates whose second-nearest to
    nearest distance ratio falls in [1 + epsilon, (1 + epsilon) * 1.05] are
    accepted, scanned in seeded random order, until ``query_count`` instances
    exist.  Each instance is globally rescaled so the nearest neighbor sits
    at distance exactly 1, then its points are shuffled until both halves
    have rank k.
    """
    if n < 4 or n % 2 != 0:
        raise ParameterError(f"n must be even and >= 4, got {n}")
    if not 1 <= k <= min(raw.d, n // 2):
        raise ParameterError(f"k must satisfy 1 <= k <= min(d, n/2), got {k}")
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if query_count < 1:
        raise ParameterError(f"query_count must be >= 1, got {query_count}")
    if raw.count < n:
        raise ParameterError(f"dataset has {raw.count} vectors, need n={n}")
    if query_source is not None and query_source.d != raw.d:
        raise ParameterError(
            f"query source dimension {query_source.d} does not match data dimension {raw.d}"
        )

    rng = seeded_rng(seed, 0)
    sample = rng.choice(raw.count, size=n, replace=False)
    data = raw.vectors[:, sample]
    basis = top_k_left_singular_subspace(data, k)
    data_k = rank_k_approximation(data, k)

    if query_source is not None:
        candidates = query_source.vectors
    else:
        held_out = np.setdiff1d(np.arange(raw.count), sample)
        candidates = raw.vectors[:, held_out]
    if candidates.shape[1] == 0:
        raise IngestError("no held-out vectors to draw queries from")

    order = rng.permutation(candidates.shape[1])
    instances: list[LatentInstance] = []
    for pos, cand_idx in enumerate(order):
        if len(instances) == query_count:
            break
        projected = basis.columns @ (basis.columns.T @ candidates[:, cand_idx])
        hit = _eligible_query(projected, data_k, epsilon)
        if hit is None:
            continue
        nn0, d1, _ = hit
        scale = 1.0 / d1
        B = np.empty((raw.d, n + 1), dtype=np.float64)
        for attempt in range(MAX_SHUFFLE_ATTEMPTS):
            perm = seeded_rng(seed, 1, len(instances), attempt).permutation(n)
            B[:, :n] = scale * data_k[:, perm]
            B[:, n] = scale * projected
            if _half_data_ranks_ok(B, n, k):
                break
        else:
            raise IngestError(
                f"no shuffle out of {MAX_SHUFFLE_ATTEMPTS} produced rank-{k} halves"
            )
        nn_index = int(np.nonzero(perm == nn0)[0][0]) + 1
        inst = LatentInstance(B=B, k=k, epsilon=epsilon, nn_index=nn_index)
        if not verify_gap(inst):
            raise IngestError("constructed instance violates its distance invariants")
        instances.append(inst)

    if len(instances) < query_count:
        raise IngestError(
            f"only {len(instances)} of {query_count} requested queries qualify: "
            f"ratio window [{1 + epsilon:.4f}, {(1 + epsilon) * (1 + RATIO_WINDOW):.4f}] "
            f"matched too few of the {candidates.shape[1]} candidates"
        )
    return instances
