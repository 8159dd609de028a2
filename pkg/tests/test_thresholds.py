import json

import numpy as np
import pytest

from snns.errors import ParameterError
from snns.linalg import singular_value
from snns.model import LatentInstance, generate_synthetic, half_matrices
from snns.thresholds import (
    CSV_HEADER,
    BindingTerm,
    Regime,
    ThresholdReport,
    classify_regime,
    corollary_interval_holds,
    theorem_sigma_cap,
)


def standard_instance(seed=0):
    return generate_synthetic(200, 100, 10, (1.0,) * 10, 0.05, seed)


# frozen by direct arithmetic on the three-term cap at minDist = 1,
# eps = 0.05, k = 10, n = 200
TERM_K_AT_UNIT_DIST = 0.0053498904510032
TERM_GAP_AT_UNIT_DIST = 0.0006033905708375028


def test_term_values_on_standard_instance():
    inst = standard_instance()
    report = theorem_sigma_cap(inst)
    assert report.term_k == pytest.approx(TERM_K_AT_UNIT_DIST, abs=1e-6)
    assert report.term_gap == pytest.approx(TERM_GAP_AT_UNIT_DIST, abs=1e-6)
    b1, b2 = half_matrices(inst.B)
    sk = min(singular_value(b1, inst.k), singular_value(b2, inst.k))
    assert report.term_spectral == pytest.approx(
        0.05 * sk / (75.0 * np.sqrt(200.0)), rel=1e-12
    )


def test_cap_is_min_and_binding_term_attains():
    inst = standard_instance()
    report = theorem_sigma_cap(inst)
    terms = {
        BindingTerm.K_TERM: report.term_k,
        BindingTerm.SPECTRAL_TERM: report.term_spectral,
        BindingTerm.GAP_TERM: report.term_gap,
    }
    assert report.sigma_cap == min(terms.values())
    assert terms[report.binding_term] == report.sigma_cap


def test_homogeneity_under_scaling():
    inst = standard_instance()
    base = theorem_sigma_cap(inst)
    scaled = theorem_sigma_cap(
        LatentInstance(B=3.0 * inst.B, k=inst.k, epsilon=inst.epsilon, nn_index=inst.nn_index)
    )
    assert scaled.term_k == pytest.approx(3.0 * base.term_k, rel=1e-9)
    assert scaled.term_spectral == pytest.approx(3.0 * base.term_spectral, rel=1e-9)
    assert scaled.term_gap == pytest.approx(3.0 * base.term_gap, rel=1e-9)
    assert scaled.sigma_cap == pytest.approx(3.0 * base.sigma_cap, rel=1e-9)


def test_cap_monotone_in_epsilon():
    inst = standard_instance()
    wider = LatentInstance(B=inst.B, k=inst.k, epsilon=0.2, nn_index=inst.nn_index)
    assert theorem_sigma_cap(wider).sigma_cap > theorem_sigma_cap(inst).sigma_cap


def test_small_spectrum_shrinks_spectral_term():
    big = generate_synthetic(40, 20, 3, (1.0,) * 3, 0.1, 1)
    small = generate_synthetic(40, 20, 3, (0.01,) * 3, 0.1, 1)
    assert (
        theorem_sigma_cap(small).term_spectral
        < theorem_sigma_cap(big).term_spectral
    )
    assert theorem_sigma_cap(small).binding_term is BindingTerm.SPECTRAL_TERM


def test_rank_deficient_halves_rejected():
    base = generate_synthetic(8, 6, 2, (1.0, 1.0), 0.1, 0)
    lifted = LatentInstance(B=base.B, k=3, epsilon=0.1, nn_index=base.nn_index)
    with pytest.raises(ParameterError):
        theorem_sigma_cap(lifted)


def test_report_serialization_roundtrip():
    inst = standard_instance()
    report = theorem_sigma_cap(inst)
    decoded = json.loads(report.to_json())
    assert decoded["sigma_cap"] == report.sigma_cap
    assert decoded["binding_term"] == report.binding_term.value
    row = report.to_csv_row()
    assert len(row.split(",")) == len(CSV_HEADER.split(","))


# --- corollary interval -------------------------------------------------------

def test_corollary_interval_examples():
    assert corollary_interval_holds(1.0, 1.0, 0.05)
    assert not corollary_interval_holds(1.0, 1.0 + 0.05 / 3 + 1e-9, 0.05)
    assert corollary_interval_holds(4.0, 4.0 * (1 - 0.05 / 3), 0.05)
    assert corollary_interval_holds(4.0, 4.0 * (1 + 0.05 / 3), 0.05)
    assert not corollary_interval_holds(1.0, 1.0 - 0.05 / 3 - 1e-9, 0.05)


def test_corollary_interval_rejects_negative_true_value():
    with pytest.raises(ParameterError):
        corollary_interval_holds(-1.0, 0.5, 0.05)


# --- regime classifier ----------------------------------------------------------

def test_regime_examples():
    d, k = 100, 10
    assert classify_regime(0.5 / np.sqrt(d), d, k) is Regime.SUB_AMBIENT
    assert classify_regime(1.0 / np.sqrt(d), d, k) is Regime.SUB_AMBIENT
    assert classify_regime(1.0 / d**0.25, d, k) is Regime.PRIOR_WORK_OK
    assert classify_regime(0.35, 784, 30) is Regime.SVD_OK
    assert classify_regime(5.0, d, k) is Regime.IMPOSSIBLE


def test_regime_order_preserving_in_sigma():
    order = [Regime.SUB_AMBIENT, Regime.PRIOR_WORK_OK, Regime.SVD_OK, Regime.IMPOSSIBLE]
    d, k = 256, 16
    last = 0
    for sigma in np.linspace(0.0, 2.0, 200):
        bucket = order.index(classify_regime(float(sigma), d, k))
        assert bucket >= last
        last = bucket


def test_regime_rejects_bad_arguments():
    with pytest.raises(ParameterError):
        classify_regime(-0.1, 10, 2)
    with pytest.raises(ParameterError):
        classify_regime(0.1, 2, 10)  # k > d
