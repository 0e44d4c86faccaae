import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inspectcp.cusum import cusum_transform
from inspectcp.exceptions import InvalidInputError, ThresholdTooLargeError
from inspectcp.projection import SolverConfig, angle
from inspectcp.simulate import NoiseModel, generate, standard_signal
from inspectcp.single import (
    LAMBDA_FLOOR,
    NoiseProfile,
    default_lambda,
    estimate_noise_mad,
    inspect_single,
    inspect_single_split,
    normalize,
    try_inspect_single,
)


def test_mad_constant_row_is_zero():
    assert estimate_noise_mad(np.full((1, 10), 4.0)).sigma_hat[0] == 0.0


def test_mad_alternating_row():
    # 100 differences of +-2 split evenly: median 0, MAD 2
    row = np.tile([0.0, 2.0], 51)[:101]
    assert estimate_noise_mad(row).sigma_hat[0] == pytest.approx(2.1)
    # with n = 100 there are 50 differences of +2 and 49 of -2, so the median is 2 and MAD 0
    assert estimate_noise_mad(np.tile([0.0, 2.0], 50)).sigma_hat[0] == 0.0


def test_mad_needs_three_columns():
    with pytest.raises(InvalidInputError):
        estimate_noise_mad(np.zeros((2, 2)))


def test_mad_gaussian_scale():
    hits = 0
    for r in range(100):
        row = 2.0 * np.random.Generator(np.random.PCG64(np.random.SeedSequence([11, r]))).standard_normal(2000)
        hits += 1.9 <= estimate_noise_mad(row).sigma_hat[0] <= 2.1
    assert hits >= 95


def test_normalize_identity_and_scaling():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(3, 20))
    Y, zero = normalize(X, NoiseProfile(np.ones(3)))
    np.testing.assert_array_equal(Y, X)
    assert zero == []
    Y, _ = normalize(3 * X, NoiseProfile(np.array([3.0, 3.0, 3.0])))
    np.testing.assert_allclose(Y, X)


def test_normalize_constant_row_passthrough():
    X = np.vstack([np.random.default_rng(1).normal(size=10), np.full(10, 7.0)])
    prof = estimate_noise_mad(X)
    Y, zero = normalize(X, prof)
    assert zero == [1]
    np.testing.assert_array_equal(Y[1], X[1])


def test_normalize_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        normalize(np.zeros((2, 5)), NoiseProfile(np.ones(3)))
    with pytest.raises(InvalidInputError):
        NoiseProfile(np.array([-1.0]))


def test_default_lambda():
    assert default_lambda(500, 1000) == pytest.approx(math.sqrt(0.5 * math.log(500 * math.log(1000))))
    assert default_lambda(500, 1000) == pytest.approx(2.02, abs=0.01)
    assert default_lambda(1, 2) == LAMBDA_FLOOR


def test_noiseless_single_change():
    X = np.zeros((2, 8))
    X[0, 4:] = 1.0
    det = inspect_single(X, SolverConfig(lam=0.1))
    assert det.z_hat == 4
    np.testing.assert_allclose(np.abs(det.v_hat), [1.0, 0.0], atol=1e-12)
    assert det.variant == "full"
    assert det.t_max == pytest.approx(abs(det.projected_cusum[3]))


@pytest.mark.parametrize("method", ["soft", "admm"])
@pytest.mark.parametrize("z", [1, 5, 11])
def test_noiseless_exact_recovery_any_method(method, z):
    spec = standard_signal(12, 4, 2, z, 2.0)
    det = inspect_single(spec.mean_matrix(), SolverConfig(lam=0.05), method)
    assert det.z_hat == z


def test_location_matches_exhaustive_scan():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(3, 12))
    X[0, 7:] += 2.0
    X[2, 7:] += 1.0
    det = inspect_single(X, SolverConfig(lam=0.3))
    T = cusum_transform(X)
    scores = [abs(float(det.v_hat @ T[:, t])) for t in range(11)]
    best = max(range(11), key=lambda t: (scores[t], -t))
    assert det.z_hat == best + 1
    assert det.t_max == pytest.approx(scores[best])


def test_ties_go_to_lowest_index():
    # symmetric series: |projected CUSUM| is symmetric, two maxima
    X = np.array([[0.0, 1.0, 1.0, 0.0]])
    det = inspect_single(X, SolverConfig(lam=0.0))
    assert det.z_hat == 1


def test_threshold_too_large():
    with pytest.raises(ThresholdTooLargeError):
        inspect_single(np.zeros((2, 6)), SolverConfig(lam=1.0))
    assert try_inspect_single(np.zeros((2, 6)), SolverConfig(lam=1.0)) is None


def test_split_noiseless():
    X = np.zeros((2, 16))
    X[0, 8:] = 1.0
    det = inspect_single_split(X, SolverConfig(lam=0.1))
    assert det.z_hat == 8
    assert det.variant == "split"
    assert det.projected_cusum.size == 7


def test_split_odd_n_drops_last_column():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(3, 17))
    X[:, 9:] += 2.0
    det = inspect_single_split(X)
    assert det.z_hat % 2 == 0
    assert det.z_hat <= 16
    assert any("odd" in d for d in det.diagnostics)
    ref = inspect_single_split(X[:, :16])
    assert det.z_hat == ref.z_hat


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(4, 40))
def test_split_location_is_even(seed, n):
    X = np.random.default_rng(seed).normal(size=(3, n))
    det = inspect_single_split(X, SolverConfig(lam=0.0))
    assert det.z_hat % 2 == 0
    assert 2 <= det.z_hat <= n - 1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.1, 10.0))
def test_scale_equivariance(seed, c):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(5, 30))
    X[:2, 12:] += 1.5
    a = inspect_single(X, SolverConfig(lam=0.5))
    b = inspect_single(c * X, SolverConfig(lam=0.5 * c))
    assert a.z_hat == b.z_hat
    assert b.t_max == pytest.approx(c * a.t_max, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(6, 25))
    X[:3, 10:] += 1.0
    perm = rng.permutation(6)
    a = inspect_single(X, SolverConfig(lam=0.4))
    b = inspect_single(X[perm], SolverConfig(lam=0.4))
    assert a.z_hat == b.z_hat
    assert b.t_max == pytest.approx(a.t_max, rel=1e-8)
    assert angle(a.v_hat[perm], b.v_hat) < 1e-6


def test_angle_recovery_under_theoretical_lambda():
    n, p, k, z, vt = 400, 50, 3, 160, 60.0
    spec = standard_signal(n, p, k, z, vt)
    v = spec.thetas[0] / vt
    lam = 2 * math.sqrt(math.log(p * math.log(n)))
    tau = min(z, n - z) / n
    bound = 32 * lam * math.sqrt(k) / (tau * vt * math.sqrt(n))
    assert bound < 1
    ok = 0
    for r in range(200):
        X = generate(spec, NoiseModel(), seed=(21, r))
        det = inspect_single(X, SolverConfig(lam=lam))
        ok += math.sin(math.radians(angle(det.v_hat, v))) < bound
    assert ok >= 180
