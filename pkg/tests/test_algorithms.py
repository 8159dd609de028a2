import numpy as np
import pytest

from snns.algorithms import (
    estimate_noise_sigma,
    estimated_sq_distances,
    knn,
    naive_nns,
    oracle_nns,
    split,
    svd_split_nns,
)
from snns.errors import ParameterError
from snns.linalg import singular_value
from snns.model import (
    LatentInstance,
    derive_seed,
    generate_synthetic,
    half_matrices,
    perturb,
    seeded_rng,
)
from snns.thresholds import theorem_sigma_cap

from _oracles import brute_force_nn, brute_force_split_nns


def small_instance(seed=0, n=40, d=20, k=3, epsilon=0.1):
    return generate_synthetic(n, d, k, (1.0,) * k, epsilon, seed)


# --- split ------------------------------------------------------------------

def test_split_column_assignment():
    A = np.array([[10.0, 20.0, 30.0, 40.0, 99.0]])
    view = split(A)
    assert np.array_equal(view.first, np.array([[10.0, 20.0, 99.0]]))
    assert np.array_equal(view.second, np.array([[30.0, 40.0, 99.0]]))
    assert view.points_per_half == 2


def test_split_shares_query_column():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((6, 9))
    view = split(A)
    assert np.array_equal(view.first[:, -1], A[:, -1])
    assert np.array_equal(view.second[:, -1], A[:, -1])
    assert np.array_equal(np.concatenate([view.first[:, :-1], view.second[:, :-1]], axis=1), A[:, :-1])


def test_split_rejects_odd_or_tiny_n():
    rng = np.random.default_rng(2)
    with pytest.raises(ParameterError):
        split(rng.standard_normal((3, 6)))  # n = 5
    with pytest.raises(ParameterError):
        split(rng.standard_normal((3, 3)))  # n = 2


# --- naive ------------------------------------------------------------------

def test_naive_hand_example():
    A = np.array([[0.0, 5.0, 1.0]])
    assert naive_nns(A).index == 1


def test_naive_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(50):
        d = int(rng.integers(1, 6))
        n = int(rng.integers(1, 9))
        A = rng.standard_normal((d, n + 1))
        assert naive_nns(A).index == brute_force_nn(A[:, :n], A[:, n])


# --- noiseless exactness ------------------------------------------------------

def test_all_solvers_exact_at_sigma_zero():
    for seed in range(8):
        inst = small_instance(seed)
        assert oracle_nns(inst).index == inst.nn_index
        assert svd_split_nns(inst.B, inst.k).index == inst.nn_index
        assert naive_nns(inst.B).index == inst.nn_index
        assert knn(inst.B, inst.k, 0.0, 1) == [inst.nn_index]


def test_oracle_follows_moved_index():
    inst = small_instance(4)
    j = inst.nn_index
    B = inst.B.copy()
    other = 1 if j != 1 else 2
    B[:, j - 1], B[:, other - 1] = B[:, other - 1].copy(), B[:, j - 1].copy()
    moved = LatentInstance(B=B, k=inst.k, epsilon=inst.epsilon, nn_index=other)
    assert oracle_nns(moved).index == other


# --- svd split nns ------------------------------------------------------------

def test_svd_split_rejects_bad_k():
    inst = small_instance()
    with pytest.raises(ParameterError):
        svd_split_nns(inst.B, 0)
    with pytest.raises(ParameterError):
        svd_split_nns(inst.B, inst.d + 1)
    with pytest.raises(ParameterError):
        svd_split_nns(inst.B, inst.n // 2 + 1)


def test_svd_split_matches_independent_oracle_on_noisy_data():
    hits = 0
    trials = 100
    for t in range(trials):
        rng = seeded_rng(100, t)
        d = int(rng.integers(2, 6))
        n = int(rng.choice([4, 6, 8]))
        k = int(rng.integers(1, min(2, d, n // 2) + 1))
        A = rng.standard_normal((d, n + 1))
        if svd_split_nns(A, k).index == brute_force_split_nns(A, k):
            hits += 1
    assert hits == trials


def test_svd_split_hand_built_line_instance():
    # points on span{e1}, k=1: the projection is onto e1 and the winner is
    # decided by first coordinates alone
    A = np.zeros((3, 5))
    A[0] = [4.0, -3.0, 0.5, 2.0, 0.3]
    A[1:] = 0.01  # off-subspace residue, killed by the projection
    answer = svd_split_nns(A, 1)
    assert answer.index == brute_force_split_nns(A, 1)
    assert answer.index == 3


def test_cross_half_tie_goes_to_second_half():
    # mirrored halves make both half-minima exactly equal; the strict
    # less-than on the first half's minimum sends the tie to the second half
    rng = np.random.default_rng(9)
    pts = rng.standard_normal((5, 3))
    q = rng.standard_normal((5, 1))
    A = np.concatenate([pts, pts, q], axis=1)
    answer = svd_split_nns(A, 2)
    assert answer.index > 3
    # knn's stable sort keeps the lowest index instead
    first = knn(A, 2, 0.0, 1)[0]
    assert first == answer.index - 3


def test_within_half_argmin_tie_breaks_low():
    A = np.array([[1.0, 1.0, 5.0, 6.0, 0.0]])
    # both first-half points sit at distance 1 from the query
    assert svd_split_nns(A, 1).index == 1


def test_high_success_below_theorem_cap():
    inst = generate_synthetic(200, 100, 10, (1.0,) * 10, 0.05, 0)
    sigma = 0.5 * theorem_sigma_cap(inst).sigma_cap
    hits = 0
    for t in range(100):
        noisy = perturb(inst, sigma, derive_seed(77, t))
        if svd_split_nns(noisy.A, inst.k).index == inst.nn_index:
            hits += 1
    assert hits >= 90


def test_include_query_in_svd_flag_changes_fit_not_contract():
    inst = small_instance(6)
    noisy = perturb(inst, 0.05, 3)
    a = svd_split_nns(noisy.A, inst.k)
    b = svd_split_nns(noisy.A, inst.k, include_query_in_svd=True)
    assert 1 <= a.index <= inst.n
    assert 1 <= b.index <= inst.n


# --- distance estimates -------------------------------------------------------

def test_estimates_exact_on_noiseless_subspace_data():
    inst = small_instance(7)
    est = estimated_sq_distances(inst.B, inst.k, 0.0)
    true_sq = inst.latent_distances() ** 2
    assert est.shape == (inst.n,)
    assert np.max(np.abs(est - true_sq)) < 1e-8


def test_estimates_clamped_at_zero():
    rng = np.random.default_rng(11)
    # query nearly on top of a point, huge sigma: correction drives the raw
    # value negative and the report clamps it
    inst = small_instance(8)
    est = estimated_sq_distances(inst.B, inst.k, 10.0)
    assert np.all(est >= 0.0)
    assert np.any(est == 0.0)


def test_estimates_reject_negative_sigma():
    inst = small_instance()
    with pytest.raises(ParameterError):
        estimated_sq_distances(inst.B, inst.k, -0.5)


def test_knn_hand_instance_ordering():
    # distances 1, 1.2, 1.4, 2 on a line; query at the origin
    A = np.zeros((2, 5))
    A[0, :4] = [1.0, 1.2, 1.4, 2.0]
    got = knn(A, 1, 0.0, 2)
    assert got == [1, 2]
    assert knn(A, 1, 0.0, 4) == [1, 2, 3, 4]


def test_knn_full_k_is_permutation():
    inst = small_instance(9)
    noisy = perturb(inst, 0.1, 1)
    got = knn(noisy.A, inst.k, 0.1, inst.n)
    assert sorted(got) == list(range(1, inst.n + 1))


def test_knn_rejects_bad_K():
    inst = small_instance()
    with pytest.raises(ParameterError):
        knn(inst.B, inst.k, 0.0, 0)
    with pytest.raises(ParameterError):
        knn(inst.B, inst.k, 0.0, inst.n + 1)


def test_argmin_invariance_of_sigma():
    # the returned index never depends on sigma: the raw comparison and the
    # corrected-distance ranking agree for any sigma fed to knn
    for seed in range(10):
        inst = small_instance(seed)
        noisy = perturb(inst, 0.08, seed + 50)
        base = svd_split_nns(noisy.A, inst.k).index
        for sigma in (0.0, 0.08, 1.0):
            assert knn(noisy.A, inst.k, sigma, 1) == [base]


# --- projected-norm error bound -----------------------------------------------

def test_projected_norm_error_within_stated_bound():
    # |  ||P u (a - q)||^2 - 2 k sigma^2 - ||b - q||^2  | stays within
    # 100 sigma^2 n / s_k^2 * b^2 + 40 sigma sqrt(n) / s_k * b^2
    # + 20 sigma b sqrt(ln n) + 40 sigma^2 sqrt(k ln n)
    # requires n >= d and k >= ln n; checked per point over repeated noise
    n, d, k = 64, 32, 8
    inst = generate_synthetic(n, d, k, (1.0,) * k, 0.1, 21)
    sigma = 0.02
    trials = 150
    b1, b2 = half_matrices(inst.B)
    sk = min(singular_value(b1, k), singular_value(b2, k))
    true_sq = inst.latent_distances() ** 2
    rhs = (
        100.0 * sigma**2 * n / sk**2 * true_sq
        + 40.0 * sigma * np.sqrt(n) / sk * true_sq
        + 20.0 * sigma * np.sqrt(true_sq) * np.sqrt(np.log(n))
        + 40.0 * sigma**2 * np.sqrt(k * np.log(n))
    )
    failures = np.zeros(n)
    for t in range(trials):
        noisy = perturb(inst, sigma, derive_seed(5, t))
        est = estimated_sq_distances(noisy.A, k, sigma)
        failures += np.abs(est - true_sq) > rhs
    # allowed failure rate per point: 2 / n^2
    assert np.all(failures / trials <= 2.0 / n**2)


# --- sigma estimator ----------------------------------------------------------

def test_estimate_noise_sigma_recovers_scale():
    inst = generate_synthetic(200, 100, 10, (1.0,) * 10, 0.05, 2)
    for sigma in (0.05, 0.2):
        noisy = perturb(inst, sigma, 13)
        est = estimate_noise_sigma(noisy.A, inst.k)
        assert est == pytest.approx(sigma, rel=0.25)


def test_estimate_noise_sigma_requires_headroom():
    inst = small_instance()
    with pytest.raises(ParameterError):
        estimate_noise_sigma(inst.B, min(inst.d, inst.n // 2))
