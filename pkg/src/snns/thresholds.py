"""Noise-tolerance bounds and regime classification.

``theorem_sigma_cap`` evaluates the guarantee that comes with the split-SVD
search: below the returned sigma, the search returns a (1 + epsilon)-
approximate nearest neighbor of the latent data with probability at least
1 - 1/n.  The cap is the minimum of three terms, each guarding a different
failure mode: concentration of the projected noise (k term), estimation of
the latent subspace (spectral term), and the additive gap between the true
neighbor and the rest (gap term).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .linalg import numerical_rank, singular_value
from .model import LatentInstance, half_matrices


class BindingTerm(enum.Enum):
    K_TERM = "k_term"
    SPECTRAL_TERM = "spectral_term"
    GAP_TERM = "gap_term"


class Regime(enum.Enum):
    """Noise regimes by sigma against the ambient and latent dimensions.

    SUB_AMBIENT:   sigma <= 1/sqrt(d); raw distances are still informative.
    PRIOR_WORK_OK: sigma <= 1/d^(1/4); classical spectral arguments suffice.
    SVD_OK:        sigma <= 1/k^(1/4); split-SVD search still succeeds.
    IMPOSSIBLE:    above 1/k^(1/4); no algorithm can distinguish reliably.
    """

    SUB_AMBIENT = "SUB_AMBIENT"
    PRIOR_WORK_OK = "PRIOR_WORK_OK"
    SVD_OK = "SVD_OK"
    IMPOSSIBLE = "IMPOSSIBLE"


CSV_HEADER = "term_k,term_spectral,term_gap,sigma_cap,binding_term"


@dataclass(frozen=True)
class ThresholdReport:
    """The three candidate caps, their minimum, and which term binds."""

    term_k: float
    term_spectral: float
    term_gap: float
    sigma_cap: float
    binding_term: BindingTerm

    def to_dict(self) -> dict:
        return {
            "term_k": self.term_k,
            "term_spectral": self.term_spectral,
            "term_gap": self.term_gap,
            "sigma_cap": self.sigma_cap,
            "binding_term": self.binding_term.value,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv_row(self) -> str:
        return (
            f"{self.term_k!r},{self.term_spectral!r},{self.term_gap!r},"
            f"{self.sigma_cap!r},{self.binding_term.value}"
        )


def theorem_sigma_cap(instance: LatentInstance) -> ThresholdReport:
    """Largest guaranteed-safe noise level for the split-SVD search.

    Requires both halves of the point matrix to have rank k.  The minimum
    point-to-query distance enters the k and gap terms; the smaller of the
    two halves' k-th singular values (query column included) enters the
    spectral term.
    """
    n, k, eps = instance.n, instance.k, instance.epsilon
    if n < 4:
        raise ParameterError(f"need n >= 4, got {n}")
    if k > n // 2:
        raise ParameterError(f"k={k} exceeds n/2={n // 2}; halves cannot reach rank k")
    half = n // 2
    B = instance.B
    if numerical_rank(B[:, :half]) < k or numerical_rank(B[:, half:n]) < k:
        raise ParameterError("a half of the point matrix is rank-deficient below k")

    min_dist = float(np.min(instance.latent_distances()))
    first, second = half_matrices(B)
    sk = min(singular_value(first, k), singular_value(second, k))
    log_n = math.log(n)

    term_k = math.sqrt(eps / 240.0) * min_dist / (k * log_n) ** 0.25
    term_spectral = eps * sk / (75.0 * math.sqrt(n))
    term_gap = eps * min_dist / (36.0 * math.sqrt(log_n))

    terms = {
        BindingTerm.K_TERM: term_k,
        BindingTerm.SPECTRAL_TERM: term_spectral,
        BindingTerm.GAP_TERM: term_gap,
    }
    binding = min(terms, key=lambda t: terms[t])
    return ThresholdReport(
        term_k=term_k,
        term_spectral=term_spectral,
        term_gap=term_gap,
        sigma_cap=terms[binding],
        binding_term=binding,
    )


def corollary_interval_holds(true_sq: float, est_sq: float, epsilon: float) -> bool:
    """Whether an estimated squared distance falls inside the guaranteed
    relative window [(1 - eps/3) * true, (1 + eps/3) * true], inclusive."""
    if true_sq < 0:
        raise ParameterError(f"true squared distance must be nonnegative, got {true_sq}")
    lo = (1.0 - epsilon / 3.0) * true_sq
    hi = (1.0 + epsilon / 3.0) * true_sq
    return lo <= est_sq <= hi


def classify_regime(sigma: float, d: int, k: int) -> Regime:
    """Place a noise level into its regime; boundary values go to the lower
    (more benign) bucket."""
    if sigma < 0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    if not 1 <= k <= d:
        raise ParameterError(f"need 1 <= k <= d, got k={k}, d={d}")
    if sigma <= d**-0.5:
        return Regime.SUB_AMBIENT
    if sigma <= d**-0.25:
        return Regime.PRIOR_WORK_OK
    if sigma <= k**-0.25:
        return Regime.SVD_OK
    return Regime.IMPOSSIBLE
