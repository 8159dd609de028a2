"""Experiment harness: success-rate sweeps, threshold detection, reporting.

A sweep runs one algorithm over a sigma grid against a latent instance,
drawing fresh noise per trial.  Success means returning the planted
nearest-neighbor index exactly; a secondary counter tracks the weaker
(1 + epsilon)-approximate criterion.  Results serialize to CSV with a fixed
header and to a self-contained SVG plot.  Identical configurations and
instances reproduce byte-identical output.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .algorithms import naive_nns, svd_split_nns
from .errors import ParameterError, SweepError
from .model import LatentInstance, derive_seed, generate_synthetic, instance_sk, perturb

SUCCESS_RATE_THRESHOLD = 0.9

CSV_HEADER = (
    "algorithm,sigma,successes,trials,success_rate,n,d,k,epsilon,s_k,seed,"
    "approx_successes,approx_success_rate"
)


class Algorithm(enum.Enum):
    SVD_SPLIT = "SVD_SPLIT"
    NAIVE = "NAIVE"


@dataclass(frozen=True)
class SweepConfig:
    """What to run: one algorithm, a sigma grid, trials per grid point.

    ``instance_source`` is a free-form label recorded for provenance (e.g.
    the generator parameters or the instance file name); the instances
    themselves are passed to the sweep functions.
    """

    algorithm: Algorithm
    sigma_grid: tuple[float, ...]
    trials_per_point: int = 100
    seed: int = 0
    instance_source: str = ""

    def __post_init__(self):
        grid = tuple(float(s) for s in self.sigma_grid)
        if len(grid) < 1:
            raise ParameterError("sigma grid must be non-empty")
        if any(s < 0 for s in grid):
            raise ParameterError("sigma grid entries must be nonnegative")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ParameterError("sigma grid must be strictly ascending")
        if self.trials_per_point < 1:
            raise ParameterError(f"trials_per_point must be >= 1, got {self.trials_per_point}")
        object.__setattr__(self, "sigma_grid", grid)


@dataclass(frozen=True)
class ExperimentRecord:
    """Outcome of one (algorithm, sigma) grid point."""

    algorithm: str
    sigma: float
    successes: int
    trials: int
    success_rate: float
    n: int
    d: int
    k: int
    epsilon: float
    s_k: float
    seed: int
    approx_successes: int
    approx_success_rate: float

    @property
    def params(self) -> dict:
        return {"n": self.n, "d": self.d, "k": self.k, "epsilon": self.epsilon, "s_k": self.s_k}

    def to_csv_row(self) -> str:
        return (
            f"{self.algorithm},{self.sigma!r},{self.successes},{self.trials},"
            f"{self.success_rate!r},{self.n},{self.d},{self.k},{self.epsilon!r},"
            f"{self.s_k!r},{self.seed},{self.approx_successes},{self.approx_success_rate!r}"
        )


def _solve_index(algorithm: Algorithm, A: np.ndarray, k: int) -> int:
    if algorithm is Algorithm.SVD_SPLIT:
        return svd_split_nns(A, k).index
    if algorithm is Algorithm.NAIVE:
        return naive_nns(A).index
    raise ParameterError(f"unknown algorithm {algorithm!r}")


def success_probability(
    algorithm: Algorithm,
    instance: LatentInstance,
    sigma: float,
    trials: int,
    seed: int,
) -> ExperimentRecord:
    """Fraction of fresh-noise trials that recover the planted neighbor.

    Each trial perturbs the instance with an independent sub-seeded noise
    draw and runs the algorithm.  Exact recovery feeds ``success_rate``; a
    returned point within (1 + epsilon) of the optimal latent distance feeds
    the approximate counters.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    latent = instance.latent_distances()
    approx_limit = (1.0 + instance.epsilon) * latent[instance.nn_index - 1]
    successes = 0
    approx = 0
    for t in range(trials):
        noisy = perturb(instance, sigma, derive_seed(seed, t))
        idx = _solve_index(algorithm, noisy.A, instance.k)
        if idx == instance.nn_index:
            successes += 1
        if latent[idx - 1] <= approx_limit * (1.0 + 1e-12):
            approx += 1
    return ExperimentRecord(
        algorithm=algorithm.value,
        sigma=float(sigma),
        successes=successes,
        trials=trials,
        success_rate=successes / trials,
        n=instance.n,
        d=instance.d,
        k=instance.k,
        epsilon=instance.epsilon,
        s_k=instance_sk(instance),
        seed=seed,
        approx_successes=approx,
        approx_success_rate=approx / trials,
    )


def success_probability_over_instances(
    algorithm: Algorithm,
    instances: list[LatentInstance],
    sigma: float,
    seed: int,
    trials_per_instance: int = 1,
) -> ExperimentRecord:
    """Success rate pooled over a family of instances (e.g. ingested queries),
    each perturbed with ``trials_per_instance`` fresh noise draws."""
    if not instances:
        raise ParameterError("need at least one instance")
    records = [
        success_probability(algorithm, inst, sigma, trials_per_instance, derive_seed(seed, i))
        for i, inst in enumerate(instances)
    ]
    successes = sum(r.successes for r in records)
    approx = sum(r.approx_successes for r in records)
    trials = sum(r.trials for r in records)
    first = records[0]
    return replace(
        first,
        successes=successes,
        trials=trials,
        success_rate=successes / trials,
        s_k=min(r.s_k for r in records),
        seed=seed,
        approx_successes=approx,
        approx_success_rate=approx / trials,
    )


def sweep(
    config: SweepConfig, instance: LatentInstance, threads: int = 1
) -> list[ExperimentRecord]:
    """Run the configured algorithm at every grid sigma; records come back in
    grid order regardless of thread scheduling."""
    if threads < 1:
        raise ParameterError(f"threads must be >= 1, got {threads}")

    def run_point(i_sigma):
        i, sigma = i_sigma
        return success_probability(
            config.algorithm,
            instance,
            sigma,
            config.trials_per_point,
            derive_seed(config.seed, i),
        )

    points = list(enumerate(config.sigma_grid))
    if threads == 1:
        return [run_point(p) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_point, points))


def noise_threshold(
    config: SweepConfig, instance: LatentInstance, threads: int = 1
) -> float:
    """Smallest grid sigma whose success rate drops below 90%.

    The grid must bracket the transition: the first grid point must still
    succeed at 90% or better and the last must not, otherwise the detection
    is meaningless and a SweepError asks for a wider grid.
    """
    records = sweep(config, instance, threads=threads)
    if records[0].success_rate < SUCCESS_RATE_THRESHOLD:
        raise SweepError(
            f"success rate {records[0].success_rate:.3f} at the lowest sigma "
            f"{records[0].sigma:g} is already below {SUCCESS_RATE_THRESHOLD}; extend the grid downward"
        )
    if records[-1].success_rate >= SUCCESS_RATE_THRESHOLD:
        raise SweepError(
            f"success rate {records[-1].success_rate:.3f} at the highest sigma "
            f"{records[-1].sigma:g} is still at or above {SUCCESS_RATE_THRESHOLD}; extend the grid upward"
        )
    for r in records:
        if r.success_rate < SUCCESS_RATE_THRESHOLD:
            return r.sigma
    raise AssertionError("unreachable: last record was below the threshold")


@dataclass(frozen=True)
class SyntheticFamily:
    """Generator parameters for a family of synthetic instances."""

    n: int
    d: int
    k: int
    spectrum: tuple[float, ...]
    epsilon: float
    seed: int

    def instance(self, spectrum_scale: float = 1.0) -> LatentInstance:
        spec = tuple(s * spectrum_scale for s in self.spectrum)
        return generate_synthetic(self.n, self.d, self.k, spec, self.epsilon, self.seed)


@dataclass(frozen=True)
class SkStudyResult:
    """Noise thresholds against the data's k-th singular value, with the
    least-squares line through the (s_k, threshold) pairs."""

    s_k_values: tuple[float, ...]
    thresholds: tuple[float, ...]
    slope: float
    intercept: float
    pearson_r: float


def sk_dependence_study(
    family: SyntheticFamily,
    sk_multipliers: tuple[float, ...],
    config: SweepConfig,
    threads: int = 1,
) -> SkStudyResult:
    """Measure how the noise threshold scales with the spectrum size.

    For each multiplier m the family's spectrum is scaled by m (so its k-th
    singular value becomes m times the base value), the 90% threshold is
    measured with the shared sweep config, and a least-squares line is fit
    to the (s_k, threshold) pairs.
    """
    if len(sk_multipliers) < 4:
        raise ParameterError(f"need at least 4 multipliers, got {len(sk_multipliers)}")
    if any(m <= 0 for m in sk_multipliers):
        raise ParameterError("multipliers must be positive")
    base_sk = family.spectrum[family.k - 1]
    xs = []
    ys = []
    for m in sk_multipliers:
        inst = family.instance(spectrum_scale=m)
        xs.append(m * base_sk)
        ys.append(noise_threshold(config, inst, threads=threads))
    x = np.asarray(xs)
    y = np.asarray(ys)
    slope, intercept = np.polyfit(x, y, 1)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        r = float("nan")
    else:
        r = float(np.corrcoef(x, y)[0, 1])
    return SkStudyResult(
        s_k_values=tuple(xs),
        thresholds=tuple(ys),
        slope=float(slope),
        intercept=float(intercept),
        pearson_r=r,
    )


# --- reporting --------------------------------------------------------------


def emit_csv(records: list[ExperimentRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(r.to_csv_row() + "\n")


def parse_csv(path) -> list[ExperimentRecord]:
    """Read back a CSV written by ``emit_csv``; round-trips exactly."""
    with open(path, "r", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ParameterError(f"unexpected CSV header: {lines[0] if lines else '<empty>'!r}")
    spec = [(f.name, f.type) for f in fields(ExperimentRecord)]
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(spec):
            raise ParameterError(f"expected {len(spec)} fields, got {len(parts)}: {line!r}")
        kwargs = {}
        for (name, ftype), raw in zip(spec, parts):
            if ftype == "int":
                kwargs[name] = int(raw)
            elif ftype == "float":
                kwargs[name] = float(raw)
            else:
                kwargs[name] = raw
        records.append(ExperimentRecord(**kwargs))
    return records


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 20, 20, 50


def _x_positions(sigmas: np.ndarray) -> np.ndarray:
    # geometric grids plot evenly on a log axis; fall back to linear when a
    # zero sigma makes that impossible
    if np.all(sigmas > 0) and sigmas.size > 1:
        lo, hi = np.log10(sigmas[0]), np.log10(sigmas[-1])
        span = hi - lo if hi > lo else 1.0
        return (np.log10(sigmas) - lo) / span
    lo, hi = sigmas[0], sigmas[-1]
    span = hi - lo if hi > lo else 1.0
    return (sigmas - lo) / span


def emit_plot(records: list[ExperimentRecord], path) -> None:
    """Write a self-contained SVG of success rate against sigma, one polyline
    per algorithm, with a dashed line at the 90% detection level."""
    if not records:
        raise ParameterError("nothing to plot")
    by_algo: dict[str, list[ExperimentRecord]] = {}
    for r in records:
        by_algo.setdefault(r.algorithm, []).append(r)
    sigmas = np.asarray(sorted({r.sigma for r in records}))
    xs = {s: x for s, x in zip(sigmas, _x_positions(sigmas))}

    def px(frac: float) -> float:
        return _ML + frac * (_W - _ML - _MR)

    def py(rate: float) -> float:
        return _MT + (1.0 - rate) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_ML}" y1="{py(0)}" x2="{_W - _MR}" y2="{py(0)}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{py(0)}" x2="{_ML}" y2="{_MT}" stroke="black"/>',
    ]
    for rate in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = py(rate)
        parts.append(
            f'<text x="{_ML - 8}" y="{y + 4}" text-anchor="end" font-size="12">{rate:g}</text>'
        )
        parts.append(
            f'<line x1="{_ML - 4}" y1="{y}" x2="{_ML}" y2="{y}" stroke="black"/>'
        )
    for s in sigmas[:: max(1, len(sigmas) // 8)]:
        x = px(xs[s])
        parts.append(
            f'<text x="{x}" y="{py(0) + 18}" text-anchor="middle" font-size="11">{s:.3g}</text>'
        )
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 12}" text-anchor="middle" '
        f'font-size="13">sigma</text>'
    )
    parts.append(
        f'<text x="16" y="{(_MT + _H - _MB) / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2})">success rate</text>'
    )
    y90 = py(SUCCESS_RATE_THRESHOLD)
    parts.append(
        f'<line x1="{_ML}" y1="{y90}" x2="{_W - _MR}" y2="{y90}" stroke="gray" '
        f'stroke-dasharray="6 4"/>'
    )
    parts.append(
        f'<text x="{_W - _MR - 4}" y="{y90 - 6}" text-anchor="end" font-size="11" '
        f'fill="gray">0.9</text>'
    )
    for i, (algo, rs) in enumerate(sorted(by_algo.items())):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(
            f"{px(xs[r.sigma]):.2f},{py(r.success_rate):.2f}"
            for r in sorted(rs, key=lambda r: r.sigma)
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{_ML + 10}" y="{_MT + 16 + 16 * i}" font-size="12" '
            f'fill="{color}">{algo}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(parts) + "\n")
