"""Information-theoretic limits on denoising, and the experiments probing them.

Two two-point swap constructions bound what any algorithm can do:

* variance pair: N(0, sigma^2 I_k) versus N(0, (sigma^2 + 1/k) I_k).  Their
  symmetric KL divergence is at most 1/(2 k sigma^4), so once sigma greatly
  exceeds k^(-1/4) the pair is indistinguishable and nearest-neighbor
  identification must fail.
* mean-shift pair: N(mu, sigma^2 I_k) versus N(mu + eps * e1, sigma^2 I_k).
  Total variation is at most min(1, eps / (2 sigma)), capping any test's
  advantage once sigma greatly exceeds eps.

The experiment routines play the corresponding pair-assignment game with the
optimal test and report Monte-Carlo accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import seeded_rng

_BATCH = 512  # trials per draw; keeps peak memory modest at large k


@dataclass(frozen=True)
class DistinguishabilityResult:
    """Accuracy of the optimal pair test over Monte-Carlo trials.

    ``epsilon`` is None for the variance game, which has no shift parameter.
    """

    k: int
    sigma: float
    trials: int
    accuracy: float
    stderr: float
    epsilon: float | None = None


def kl_isotropic_gaussians(mu1, var1: float, mu2, var2: float, k: int) -> float:
    """KL( N(mu1, var1*I_k) || N(mu2, var2*I_k) ), in nats."""
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if var1 <= 0 or var2 <= 0:
        raise ParameterError(f"variances must be positive, got {var1}, {var2}")
    m1 = np.asarray(mu1, dtype=np.float64)
    m2 = np.asarray(mu2, dtype=np.float64)
    if m1.shape != (k,) or m2.shape != (k,):
        raise ParameterError(f"means must have shape ({k},), got {m1.shape}, {m2.shape}")
    shift_sq = float(np.sum((m2 - m1) ** 2))
    return 0.5 * (k * math.log(var2 / var1) - k + k * var1 / var2 + shift_sq / var2)


def swap_kl(k: int, sigma: float) -> tuple[float, float]:
    """Symmetric KL of the variance pair and its closed-form cap.

    Returns (exact, cap) with exact = KL(P1||P2) + KL(P2||P1) for
    P1 = N(0, sigma^2 I_k), P2 = N(0, (sigma^2 + 1/k) I_k), and
    cap = 1/(2 k sigma^4).  The exact value never exceeds the cap.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    zero = np.zeros(k)
    v1 = sigma**2
    v2 = sigma**2 + 1.0 / k
    exact = kl_isotropic_gaussians(zero, v1, zero, v2, k) + kl_isotropic_gaussians(
        zero, v2, zero, v1, k
    )
    cap = 1.0 / (2.0 * k * sigma**4)
    assert exact <= cap, f"symmetric KL {exact} exceeded its cap {cap}"
    return exact, cap


def tv_mean_shift_bound(epsilon: float, sigma: float) -> float:
    """Upper bound min(1, eps/(2 sigma)) on the total variation between the
    mean-shift pair's distributions."""
    if epsilon < 0:
        raise ParameterError(f"epsilon must be nonnegative, got {epsilon}")
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    return min(1.0, epsilon / (2.0 * sigma))


def _binomial_stderr(accuracy: float, trials: int) -> float:
    return math.sqrt(accuracy * (1.0 - accuracy) / trials)


def swap_test_experiment_k(
    k: int, sigma: float, trials: int, seed: int
) -> DistinguishabilityResult:
    """Play the variance-pair assignment game with the optimal test.

    Each trial draws one sample from each distribution and assigns the
    larger-squared-norm sample to the larger-variance distribution, which is
    the likelihood-ratio test for this pair.  Exact norm ties (probability
    zero) count as failures.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if sigma < 0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    rng = seeded_rng(seed)
    wide = math.sqrt(sigma**2 + 1.0 / k)
    correct = 0
    done = 0
    while done < trials:
        m = min(_BATCH, trials - done)
        x = sigma * rng.standard_normal((m, k))
        y = wide * rng.standard_normal((m, k))
        correct += int(np.count_nonzero(np.einsum("ij,ij->i", y, y) > np.einsum("ij,ij->i", x, x)))
        done += m
    accuracy = correct / trials
    return DistinguishabilityResult(
        k=k,
        sigma=sigma,
        trials=trials,
        accuracy=accuracy,
        stderr=_binomial_stderr(accuracy, trials),
    )


def swap_test_experiment_eps(
    k: int, sigma: float, epsilon: float, trials: int, seed: int
) -> DistinguishabilityResult:
    """Play the mean-shift-pair assignment game with the optimal test.

    The likelihood ratio depends only on the shifted coordinate, so the test
    assigns the sample with the larger first coordinate to the shifted
    distribution; the remaining k-1 coordinates are identically distributed
    under both and are not drawn.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    if epsilon < 0:
        raise ParameterError(f"epsilon must be nonnegative, got {epsilon}")
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    rng = seeded_rng(seed)
    x1 = sigma * rng.standard_normal(trials)
    y1 = epsilon + sigma * rng.standard_normal(trials)
    accuracy = float(np.count_nonzero(y1 > x1)) / trials
    return DistinguishabilityResult(
        k=k,
        sigma=sigma,
        trials=trials,
        accuracy=accuracy,
        stderr=_binomial_stderr(accuracy, trials),
        epsilon=epsilon,
    )


CSV_HEADER = "k,sigma,epsilon,trials,accuracy,stderr,kl_exact,kl_bound,tv_bound"


def csv_row(result: DistinguishabilityResult) -> str:
    """One CSV row per experiment; bound columns that do not apply stay empty."""
    if result.epsilon is None:
        exact, cap = swap_kl(result.k, result.sigma) if result.sigma > 0 else (None, None)
        kl_exact = "" if exact is None else repr(exact)
        kl_bound = "" if cap is None else repr(cap)
        eps_field = ""
        tv_field = ""
    else:
        kl_exact = ""
        kl_bound = ""
        eps_field = repr(result.epsilon)
        tv_field = repr(tv_mean_shift_bound(result.epsilon, result.sigma))
    return (
        f"{result.k},{result.sigma!r},{eps_field},{result.trials},"
        f"{result.accuracy!r},{result.stderr!r},{kl_exact},{kl_bound},{tv_field}"
    )
