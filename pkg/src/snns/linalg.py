"""Dense linear-algebra primitives used by the rest of the package.

Everything here works on plain float64 numpy arrays whose columns are
points.  Subspaces are represented by their orthonormal bases; explicit
d x d projector matrices are never formed outside of small-dimension
tests, since ||P @ v|| equals ||Q.T @ v|| for an orthonormal Q.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParameterError

# Singular values at or below RANK_RTOL * s_1 count as zero when deciding
# numerical rank.
RANK_RTOL = 1e-10

# Tolerance for the orthonormality check on basis columns.
ORTHONORMAL_ATOL = 1e-8


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate and return ``m`` as a 2-d float64 array with finite entries."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ParameterError(f"{name} must be 2-dimensional, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ParameterError(f"{name} must be non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class OrthonormalBasis:
    """Orthonormal columns spanning a subspace of R^d.

    The column array is copied and frozen at construction; instances are
    immutable and safe to share across threads.
    """

    columns: np.ndarray

    def __post_init__(self):
        cols = as_matrix(self.columns, "basis columns")
        if cols.shape[1] > cols.shape[0]:
            raise ParameterError(
                f"basis cannot have more columns ({cols.shape[1]}) than rows ({cols.shape[0]})"
            )
        gram = cols.T @ cols
        if not np.allclose(gram, np.eye(cols.shape[1]), atol=ORTHONORMAL_ATOL, rtol=0):
            raise ParameterError("basis columns are not orthonormal")
        cols = cols.copy()
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)

    @property
    def ambient_dim(self) -> int:
        return self.columns.shape[0]

    @property
    def dim(self) -> int:
        return self.columns.shape[1]


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD with the ambient LAPACK failure mapped to NumericError."""
    a = as_matrix(m)
    try:
        return np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails
        raise NumericError(f"SVD did not converge on shape {a.shape}") from exc


def singular_values(m) -> np.ndarray:
    a = as_matrix(m)
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericError(f"SVD did not converge on shape {a.shape}") from exc


def numerical_rank(m) -> int:
    """Number of singular values above RANK_RTOL relative to the largest."""
    s = singular_values(m)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > RANK_RTOL * s[0]))


def singular_value(m, k: int) -> float:
    """k-th largest singular value of ``m`` (1-based); 0.0 when k exceeds
    the numerical rank."""
    if k < 1:
        raise ParameterError(f"singular value index must be >= 1, got {k}")
    s = singular_values(m)
    if k > s.size or s[k - 1] <= RANK_RTOL * s[0]:
        return 0.0
    return float(s[k - 1])


def spectral_norm(m) -> float:
    return float(singular_values(m)[0])


def top_k_left_singular_subspace(m, k: int) -> OrthonormalBasis:
    """Orthonormal basis of the span of the top-k left singular vectors."""
    a = as_matrix(m)
    if not 1 <= k <= min(a.shape):
        raise ParameterError(
            f"k must satisfy 1 <= k <= min(d, m) = {min(a.shape)}, got {k}"
        )
    u, _, _ = svd(a)
    return OrthonormalBasis(u[:, :k])


def project(basis: OrthonormalBasis, v) -> np.ndarray:
    """Orthogonal projection of vector ``v`` onto the subspace of ``basis``."""
    w = np.asarray(v, dtype=np.float64)
    if w.shape != (basis.ambient_dim,):
        raise ParameterError(
            f"vector has shape {w.shape}, expected ({basis.ambient_dim},)"
        )
    c = basis.columns
    return c @ (c.T @ w)


def projected_column_norms(basis: OrthonormalBasis, m) -> np.ndarray:
    """Norms ||P @ m[:, j]|| for every column, without forming P."""
    a = as_matrix(m)
    if a.shape[0] != basis.ambient_dim:
        raise ParameterError(
            f"matrix has {a.shape[0]} rows, basis ambient dimension is {basis.ambient_dim}"
        )
    return np.linalg.norm(basis.columns.T @ a, axis=0)


def rank_k_approximation(m, k: int) -> np.ndarray:
    """Best rank-k approximation in Frobenius norm (truncated SVD)."""
    a = as_matrix(m)
    if not 1 <= k <= min(a.shape):
        raise ParameterError(
            f"k must satisfy 1 <= k <= min(d, m) = {min(a.shape)}, got {k}"
        )
    u, s, vt = svd(a)
    return (u[:, :k] * s[:k]) @ vt[:k]


def principal_angle_cosines(b1: OrthonormalBasis, b2: OrthonormalBasis) -> np.ndarray:
    """Cosines of the principal angles between two subspaces, descending."""
    if b1.ambient_dim != b2.ambient_dim:
        raise ParameterError("bases live in different ambient dimensions")
    return np.clip(singular_values(b1.columns.T @ b2.columns), 0.0, 1.0)
