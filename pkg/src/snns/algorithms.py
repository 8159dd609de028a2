"""Nearest-neighbor search routines on the observed matrix.

The split-half strategy: divide the n points in two, estimate the latent
subspace from each half independently, and measure each half's point-to-query
distances after projecting onto the subspace learned from the *other* half.
Projection kills most of the ambient noise while the cross-half estimate
keeps the projected noise independent of the points being measured.

All returned point indices are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .linalg import (
    OrthonormalBasis,
    as_matrix,
    singular_values,
    top_k_left_singular_subspace,
)


@dataclass(frozen=True)
class NnsAnswer:
    """Result of a nearest-neighbor query.

    ``estimated_sq_distance``, when present, is the bias-corrected squared
    distance used for the final comparison (projected squared norm minus
    2*k*sigma^2, clamped at zero for reporting).
    """

    index: int
    estimated_sq_distance: float | None = None


@dataclass(frozen=True)
class SplitView:
    """The two d x (n/2 + 1) halves of an observed matrix; each half carries
    its n/2 point columns with the query column appended."""

    first: np.ndarray
    second: np.ndarray

    @property
    def points_per_half(self) -> int:
        return self.first.shape[1] - 1


def split(A) -> SplitView:
    """Split observed columns into two halves, replicating the query column."""
    a = as_matrix(A, "A")
    n = a.shape[1] - 1
    if n < 4 or n % 2 != 0:
        raise ParameterError(f"point count must be even and >= 4, got {n}")
    half = n // 2
    first = np.concatenate([a[:, :half], a[:, -1:]], axis=1)
    second = np.concatenate([a[:, half:n], a[:, -1:]], axis=1)
    return SplitView(first=first, second=second)


def _projected_distances(half: np.ndarray, basis: OrthonormalBasis) -> np.ndarray:
    """||P (point_j - query)|| for each point column of a half."""
    diffs = half[:, :-1] - half[:, -1:]
    return np.linalg.norm(basis.columns.T @ diffs, axis=0)


def _cross_projected(view: SplitView, k: int, include_query_in_svd: bool):
    half = view.points_per_half
    d = view.first.shape[0]
    if not 1 <= k <= min(d, half):
        raise ParameterError(f"k must satisfy 1 <= k <= min(d, n/2) = {min(d, half)}, got {k}")
    train1 = view.first if include_query_in_svd else view.first[:, :half]
    train2 = view.second if include_query_in_svd else view.second[:, :half]
    u1 = top_k_left_singular_subspace(train1, k)
    u2 = top_k_left_singular_subspace(train2, k)
    return _projected_distances(view.first, u2), _projected_distances(view.second, u1)


def svd_split_nns(A, k: int, include_query_in_svd: bool = False) -> NnsAnswer:
    """Nearest neighbor by cross-half projected distances.

    Each subspace is fit on a half's point columns only; pass
    ``include_query_in_svd=True`` to add the query column to the fit.
    Within a half, argmin ties break to the lowest index.  An exact tie
    between the two half-minima goes to the second half's candidate: the
    cross-half comparison is a strict less-than on the first half's minimum.
    """
    view = split(A)
    dist1, dist2 = _cross_projected(view, k, include_query_in_svd)
    j1 = int(np.argmin(dist1))
    j2 = int(np.argmin(dist2))
    if dist1[j1] < dist2[j2]:
        return NnsAnswer(index=j1 + 1)
    return NnsAnswer(index=j2 + 1 + view.points_per_half)


def naive_nns(A) -> NnsAnswer:
    """Plain nearest neighbor on raw observed distances; ties break low."""
    a = as_matrix(A, "A")
    if a.shape[1] < 2:
        raise ParameterError("need at least one point column besides the query")
    dists = np.linalg.norm(a[:, :-1] - a[:, -1:], axis=0)
    return NnsAnswer(index=int(np.argmin(dists)) + 1)


def oracle_nns(instance) -> NnsAnswer:
    """Nearest neighbor on the latent matrix itself (ground-truth scan)."""
    dists = instance.latent_distances()
    return NnsAnswer(index=int(np.argmin(dists)) + 1)


def _corrected_sq_distances(A, k: int, sigma: float) -> np.ndarray:
    """Bias-corrected squared distance estimates, unclamped, point order 1..n."""
    if sigma < 0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    view = split(A)
    dist1, dist2 = _cross_projected(view, k, False)
    raw = np.concatenate([dist1, dist2]) ** 2
    return raw - 2.0 * k * sigma**2


def estimated_sq_distances(A, k: int, sigma: float) -> np.ndarray:
    """Estimated squared latent distances from each point to the query.

    The projected squared norm overshoots the latent value by 2*k*sigma^2 in
    expectation, so that constant is subtracted; reported values are clamped
    at zero.  Rankings should use ``knn``, which sorts the unclamped values
    to avoid artificial ties at zero.
    """
    return np.maximum(_corrected_sq_distances(A, k, sigma), 0.0)


def knn(A, k: int, sigma: float, K: int) -> list[int]:
    """Indices of the K points with smallest estimated squared distance,
    ascending, ties to the lowest index."""
    est = _corrected_sq_distances(A, k, sigma)
    if not 1 <= K <= est.size:
        raise ParameterError(f"K must satisfy 1 <= K <= n = {est.size}, got {K}")
    order = np.argsort(est, kind="stable")
    return [int(j) + 1 for j in order[:K]]


def estimate_noise_sigma(A, k: int) -> float:
    """Heuristic noise-level estimate from the tail spectrum of each half.

    Assumes singular values beyond the k-th are noise-dominated, in which
    case the (k+1)-th singular value of a d x (n/2) half concentrates near
    sigma * (sqrt(n/2) + sqrt(d)).  This is a convenience for exploratory
    use; the search routines never call it.
    """
    view = split(A)
    half = view.points_per_half
    d = view.first.shape[0]
    if not 1 <= k < min(d, half):
        raise ParameterError(
            f"k must satisfy 1 <= k < min(d, n/2) = {min(d, half)}, got {k}"
        )
    scale = np.sqrt(half) + np.sqrt(d)
    estimates = [
        singular_values(view.first[:, :half])[k] / scale,
        singular_values(view.second[:, :half])[k] / scale,
    ]
    return float(np.mean(estimates))
