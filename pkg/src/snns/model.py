"""Problem instances: latent low-rank data, noisy observations, generation.

An instance is a d x (n+1) matrix whose first n columns are data points and
whose last column is the query.  Point indices are 1-based everywhere in the
public API; numpy's 0-based indexing stays internal.

All randomness flows through explicit integer seeds.  ``seeded_rng`` builds a
generator from a seed plus optional stream labels, and ``derive_seed`` maps
(seed, labels) to a fresh 64-bit seed, so nested experiments can hand out
independent, reproducible streams without sharing generator state.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, GenerationError, ParameterError
from .linalg import as_matrix, numerical_rank, singular_value

_U64 = 0xFFFFFFFFFFFFFFFF

# Tolerance for the exact-distance invariants of a latent instance.
GAP_ATOL = 1e-8

# Relative tolerance for "lies in the latent subspace" checks.
SUBSPACE_RTOL = 1e-8

# How many shuffles to try before giving up on rank-k halves.
MAX_SHUFFLE_ATTEMPTS = 16

MAGIC = b"SNNS1"
_HEADER = struct.Struct("<IIIdI")  # d, n, k, epsilon, nn_index
_NOISY_EXTRA = struct.Struct("<dQ")  # sigma, seed


def seeded_rng(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for ``seed``; stream labels select substreams."""
    entropy = (int(seed) & _U64,) + tuple(int(s) & _U64 for s in stream)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, *stream: int) -> int:
    """Fold stream labels into ``seed``, yielding a fresh 64-bit seed."""
    entropy = (int(seed) & _U64,) + tuple(int(s) & _U64 for s in stream)
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def _frozen_matrix(m, name: str) -> np.ndarray:
    a = as_matrix(m, name).copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LatentInstance:
    """Noise-free instance: B holds n points plus the query as its last column.

    ``nn_index`` (1-based) marks the planted nearest neighbor of the query.
    ``epsilon`` is the gap parameter: every other point is at distance at
    least (1 + epsilon) times the nearest-neighbor distance.  The constructor
    checks shapes and ranges only; geometric invariants are ``verify_gap``'s
    job so that deliberately broken instances can still be built in tests.
    """

    B: np.ndarray
    k: int
    epsilon: float
    nn_index: int

    def __post_init__(self):
        B = _frozen_matrix(self.B, "B")
        n = B.shape[1] - 1
        if n < 2 or n % 2 != 0:
            raise ParameterError(f"point count must be even and >= 2, got {n}")
        if not 1 <= self.k <= B.shape[0]:
            raise ParameterError(f"k must satisfy 1 <= k <= d={B.shape[0]}, got {self.k}")
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if not 1 <= self.nn_index <= n:
            raise ParameterError(f"nn_index must lie in [1, {n}], got {self.nn_index}")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "nn_index", int(self.nn_index))

    @property
    def d(self) -> int:
        return self.B.shape[0]

    @property
    def n(self) -> int:
        return self.B.shape[1] - 1

    @property
    def query(self) -> np.ndarray:
        return self.B[:, -1]

    def latent_distances(self) -> np.ndarray:
        """Distances from each of the n points to the query (index j-1 is point j)."""
        return np.linalg.norm(self.B[:, :-1] - self.B[:, -1:], axis=0)


@dataclass(frozen=True)
class NoisyInstance:
    """Observed matrix A = B + noise, with the noise draw's sigma and seed."""

    A: np.ndarray
    sigma: float
    seed: int

    def __post_init__(self):
        A = _frozen_matrix(self.A, "A")
        if self.sigma < 0:
            raise ParameterError(f"sigma must be nonnegative, got {self.sigma}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1] - 1


def perturb(instance: LatentInstance, sigma: float, seed: int) -> NoisyInstance:
    """Add i.i.d. N(0, sigma^2) noise to every entry of B.

    Identical (instance, sigma, seed) triples produce bit-identical matrices.
    sigma = 0 returns B itself, untouched.
    """
    if sigma < 0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0:
        A = instance.B.copy()
    else:
        noise = seeded_rng(seed).standard_normal(instance.B.shape)
        A = instance.B + sigma * noise
    return NoisyInstance(A=A, sigma=sigma, seed=seed)


def verify_gap(instance: LatentInstance, tol: float = GAP_ATOL) -> bool:
    """Check the distance invariants: the planted neighbor sits at distance
    exactly 1 and every other point at distance >= 1 + epsilon, within tol."""
    dists = instance.latent_distances()
    nn = instance.nn_index - 1
    if abs(dists[nn] - 1.0) > tol:
        return False
    others = np.delete(dists, nn)
    return bool(np.all(others >= 1.0 + instance.epsilon - tol))


def synthetic_points(
    n_points: int, d: int, k: int, spectrum, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Random d x n_points rank-k point cloud with prescribed singular values.

    Returns (points, subspace_factor) where points = X @ diag(spectrum) @ Y.T
    for independent Haar-ish orthonormal factors X (d x k) and Y (n_points x k)
    obtained by QR of Gaussian matrices.  The singular values of ``points``
    equal ``spectrum`` exactly up to roundoff.
    """
    spec = np.asarray(spectrum, dtype=np.float64)
    if spec.shape != (k,):
        raise ParameterError(f"spectrum must have length k={k}, got shape {spec.shape}")
    if not np.all(spec > 0):
        raise ParameterError("spectrum entries must be positive")
    if np.any(np.diff(spec) > 0):
        raise ParameterError("spectrum must be nonincreasing")
    if k > min(d, n_points):
        raise ParameterError(f"k={k} exceeds min(d, n_points)={min(d, n_points)}")
    x, _ = np.linalg.qr(rng.standard_normal((d, k)))
    y, _ = np.linalg.qr(rng.standard_normal((n_points, k)))
    return x @ (spec[:, None] * y.T), x


def embed_query_collinear(
    points, direction, epsilon: float
) -> tuple[np.ndarray, np.ndarray]:
    """Place a query and its planted neighbor on the ray t * direction.

    Walking in from t = +infinity, the query lands at the first t where the
    nearest of ``points`` is at distance exactly 1 + epsilon; the planted
    neighbor is then placed one more unit out along the ray, so it sits at
    distance exactly 1 from the query.  Returns (query, neighbor).
    """
    pts = as_matrix(points, "points")
    u = np.asarray(direction, dtype=np.float64)
    if u.shape != (pts.shape[0],):
        raise ParameterError(
            f"direction has shape {u.shape}, expected ({pts.shape[0]},)"
        )
    unorm = float(np.linalg.norm(u))
    if unorm == 0.0:
        raise ParameterError("direction must be nonzero")
    if epsilon < 0:
        raise ParameterError(f"epsilon must be nonnegative, got {epsilon}")

    # residual of the direction against the span of the points
    r = numerical_rank(pts)
    if r > 0:
        u_svd, _, _ = np.linalg.svd(pts, full_matrices=False)
        span = u_svd[:, :r]
        resid = np.linalg.norm(u - span @ (span.T @ u))
        if resid > SUBSPACE_RTOL * unorm:
            raise ParameterError(
                "direction does not lie in the span of the points "
                f"(relative residual {resid / unorm:.3e})"
            )

    # larger real root of ||t*u - p||^2 = (1+eps)^2 for each point p
    radius_sq = (1.0 + epsilon) ** 2
    dots = pts.T @ u
    norms_sq = np.einsum("ij,ij->j", pts, pts)
    disc = dots**2 - unorm**2 * (norms_sq - radius_sq)
    real = disc >= 0
    if not np.any(real):
        raise GenerationError(
            "no point comes within 1 + epsilon of the ray; cannot place query"
        )
    roots = (dots[real] + np.sqrt(disc[real])) / unorm**2
    t1 = float(np.max(roots))
    query = t1 * u
    neighbor = (t1 + 1.0 / unorm) * u
    return query, neighbor


def _half_data_ranks_ok(B: np.ndarray, n: int, k: int) -> bool:
    # Halves can carry at most n/2 independent directions, so a full-dimension
    # instance (k > n/2) is checked against that ceiling instead.
    target = min(k, n // 2)
    return (
        numerical_rank(B[:, : n // 2]) >= target
        and numerical_rank(B[:, n // 2 : n]) >= target
    )


def generate_synthetic(
    n: int, d: int, k: int, spectrum, epsilon: float, seed: int
) -> LatentInstance:
    """Generate a random rank-k instance with a planted nearest neighbor.

    The first n-1 points form a rank-k cloud with singular values
    ``spectrum``; the query and its neighbor are embedded along a random
    in-subspace ray so the neighbor sits at distance exactly 1 and every
    other point at distance >= 1 + epsilon.  The n points are then shuffled
    (the query stays last) and the shuffle is redrawn, at most
    MAX_SHUFFLE_ATTEMPTS times, until both halves of the point matrix reach
    full rank.
    """
    if n < 4 or n % 2 != 0:
        raise ParameterError(f"n must be even and >= 4, got {n}")
    if not 1 <= k <= min(d, n - 1):
        raise ParameterError(f"k must satisfy 1 <= k <= min(d, n-1), got {k}")
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")

    rng = seeded_rng(seed, 0)
    points, x = synthetic_points(n - 1, d, k, spectrum, rng)

    direction = x @ rng.standard_normal(k)
    while np.linalg.norm(direction) < 1e-12:  # pragma: no cover - probability zero
        direction = x @ rng.standard_normal(k)

    query, neighbor = embed_query_collinear(points, direction, epsilon)
    columns = np.empty((d, n + 1), dtype=np.float64)
    columns[:, : n - 1] = points
    columns[:, n - 1] = neighbor
    columns[:, n] = query

    for attempt in range(MAX_SHUFFLE_ATTEMPTS):
        perm = seeded_rng(seed, 1, attempt).permutation(n)
        B = np.empty_like(columns)
        B[:, :n] = columns[:, perm]
        B[:, n] = query
        if _half_data_ranks_ok(B, n, k):
            nn_index = int(np.nonzero(perm == n - 1)[0][0]) + 1
            return LatentInstance(B=B, k=k, epsilon=epsilon, nn_index=nn_index)
    raise GenerationError(
        f"no shuffle out of {MAX_SHUFFLE_ATTEMPTS} produced rank-{min(k, n // 2)} halves"
    )


def half_matrices(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split the point columns in two and append the query column to each."""
    B = as_matrix(B, "B")
    n = B.shape[1] - 1
    if n < 4 or n % 2 != 0:
        raise ParameterError(f"point count must be even and >= 4, got {n}")
    half = n // 2
    first = np.concatenate([B[:, :half], B[:, -1:]], axis=1)
    second = np.concatenate([B[:, half:n], B[:, -1:]], axis=1)
    return first, second


def instance_sk(instance: LatentInstance) -> float:
    """min of the k-th singular values of the two query-augmented halves of B."""
    first, second = half_matrices(instance.B)
    return min(singular_value(first, instance.k), singular_value(second, instance.k))


# --- binary container ------------------------------------------------------
#
# Layout (all little-endian):
#   magic   5 bytes  b"SNNS1"
#   d       u32
#   n       u32
#   k       u32
#   epsilon f64
#   nn_index u32     1-based
#   B       d*(n+1) f64, row-major
# and, only when a noisy observation is stored alongside:
#   sigma   f64
#   seed    u64
#   A       d*(n+1) f64, row-major


def write_instance(
    path, instance: LatentInstance, noisy: NoisyInstance | None = None
) -> None:
    """Write an instance (and optionally a noisy observation of it) to disk."""
    if noisy is not None and noisy.A.shape != instance.B.shape:
        raise ParameterError(
            f"noisy matrix shape {noisy.A.shape} does not match B shape {instance.B.shape}"
        )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(
            _HEADER.pack(
                instance.d, instance.n, instance.k, instance.epsilon, instance.nn_index
            )
        )
        fh.write(np.ascontiguousarray(instance.B, dtype="<f8").tobytes())
        if noisy is not None:
            fh.write(_NOISY_EXTRA.pack(noisy.sigma, noisy.seed & _U64))
            fh.write(np.ascontiguousarray(noisy.A, dtype="<f8").tobytes())


def read_instance(path) -> tuple[LatentInstance, NoisyInstance | None]:
    """Read a container written by ``write_instance``.

    Returns the latent instance and, if the file carries one, the noisy
    observation; otherwise None in the second slot.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise FormatError(f"bad magic {blob[:len(MAGIC)]!r}, expected {MAGIC!r}")
    off = len(MAGIC)
    if len(blob) < off + _HEADER.size:
        raise FormatError("truncated header")
    d, n, k, epsilon, nn_index = _HEADER.unpack_from(blob, off)
    off += _HEADER.size
    count = d * (n + 1)
    if len(blob) < off + 8 * count:
        raise FormatError("truncated latent matrix")
    B = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(d, n + 1)
    off += 8 * count
    try:
        instance = LatentInstance(B=B, k=k, epsilon=epsilon, nn_index=nn_index)
    except ParameterError as exc:
        raise FormatError(f"invalid instance header: {exc}") from exc

    if len(blob) == off:
        return instance, None
    if len(blob) != off + _NOISY_EXTRA.size + 8 * count:
        raise FormatError(
            f"file length {len(blob)} matches neither the latent-only nor the noisy layout"
        )
    sigma, seed = _NOISY_EXTRA.unpack_from(blob, off)
    off += _NOISY_EXTRA.size
    A = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(d, n + 1)
    return instance, NoisyInstance(A=A, sigma=sigma, seed=seed)
