import math

import numpy as np
import pytest

from inspectcp.exceptions import InvalidInputError
from inspectcp.projection import SolverConfig
from inspectcp.simulate import NoiseModel, generate, overlap_signal, standard_signal
from inspectcp.single import inspect_single_split
from inspectcp.spatial import (
    DependenceModel,
    PrecisionEstimate,
    RHO_EPS,
    build_residuals,
    covariance_global,
    covariance_local,
    estimate_rho_global,
    estimate_rho_local,
    inspect_single_spatial,
    precision_global,
    precision_local,
)


def _null(n, p, noise, seed):
    return generate(overlap_signal(n, p, 1, (), ()), noise, seed)


class TestPrecision:
    def test_local_identity(self):
        np.testing.assert_array_equal(precision_local(0.0, 4), np.eye(4))

    def test_local_hand_value(self):
        np.testing.assert_allclose(precision_local(0.5, 2), [[4 / 3, -2 / 3], [-2 / 3, 4 / 3]], rtol=1e-14)

    @pytest.mark.parametrize("rho,p", [(0.7, 10), (-0.4, 7), (0.95, 30), (0.3, 2)])
    def test_local_inverse(self, rho, p):
        np.testing.assert_allclose(precision_local(rho, p) @ covariance_local(rho, p), np.eye(p), atol=1e-10)

    def test_global_hand_value(self):
        np.testing.assert_allclose(precision_global(1.0, 2), [[0.75, -0.25], [-0.25, 0.75]], rtol=1e-14)
        np.testing.assert_array_equal(precision_global(0.0, 3), np.eye(3))

    @pytest.mark.parametrize("rho,p", [(3.0, 50), (-0.5, 8), (0.2, 1)])
    def test_global_inverse(self, rho, p):
        np.testing.assert_allclose(precision_global(rho, p) @ covariance_global(rho, p), np.eye(p), atol=1e-12)

    @pytest.mark.parametrize("bad", [1.0, -1.0, 1.5])
    def test_local_rejects(self, bad):
        with pytest.raises(InvalidInputError):
            precision_local(bad, 5)

    def test_global_rejects(self):
        with pytest.raises(InvalidInputError):
            precision_global(-1.0, 5)

    @pytest.mark.parametrize("kind,rho", [("local_ar", 0.6), ("local_ar", -0.3), ("global_equi", 2.0), ("iid", 0.0)])
    def test_operator_matches_matrix(self, kind, rho):
        p = 9
        Theta = {"local_ar": precision_local, "global_equi": precision_global}.get(
            kind, lambda r, q: np.eye(q)
        )(rho, p)
        est = PrecisionEstimate(kind, rho, Theta, 1)
        v = np.random.default_rng(0).normal(size=p)
        np.testing.assert_allclose(est.apply(v), Theta @ v, atol=1e-12)

    def test_dependence_model_ranges(self):
        DependenceModel("local_ar", 0.5)
        DependenceModel("global_equi", 5.0)
        for kwargs in [{"kind": "local_ar", "rho": 1.0}, {"kind": "global_equi", "rho": -1.0}, {"kind": "x"}]:
            with pytest.raises(InvalidInputError):
                DependenceModel(**kwargs)


@pytest.mark.parametrize("p", [5, 20, 100])
def test_local_eigenvalue_bounds(p):
    for rho in np.linspace(-0.95, 0.95, 39):
        ev = np.linalg.eigvalsh(covariance_local(rho, p))
        r = abs(rho)
        assert (1 - r) / (1 + r) - 1e-12 <= ev.min()
        assert ev.max() <= (1 + r) / (1 - r) + 1e-12


class TestRhoEstimators:
    def test_local_identity_sample(self):
        est = estimate_rho_local(math.sqrt(4) * np.eye(4))
        assert est.rho_hat == pytest.approx(0.0, abs=1e-12)

    def test_local_factored_cubic(self):
        # two samples whose second-moment matrix is [[1, .5], [.5, 1]]: a = 0.5, b = 2
        L = np.linalg.cholesky(np.array([[1.0, 0.5], [0.5, 1.0]]))
        est = estimate_rho_local(math.sqrt(2) * L.T)
        assert est.rho_hat == pytest.approx(0.5, abs=1e-10)
        np.testing.assert_allclose(est.theta_hat, precision_local(0.5, 2), atol=1e-9)
        assert est.sample_count == 2

    def test_local_needs_two_coordinates(self):
        with pytest.raises(InvalidInputError):
            estimate_rho_local(np.ones((3, 1)))

    def test_local_monte_carlo(self):
        hits = 0
        for r in range(100):
            W = _null(5000, 50, NoiseModel("cs_local", param=0.6), (7, r)).T
            hits += 0.55 <= estimate_rho_local(W).rho_hat <= 0.65
        assert hits >= 95

    def test_local_estimate_is_positive_definite(self):
        W = _null(300, 12, NoiseModel("cs_local", param=-0.8), 3).T
        est = estimate_rho_local(W)
        np.testing.assert_allclose(est.theta_hat, est.theta_hat.T, atol=1e-10)
        assert np.linalg.eigvalsh(est.theta_hat).min() > 0

    def test_global_single_sample(self):
        assert estimate_rho_global(np.ones((1, 2))).rho_hat == pytest.approx(1.0)

    def test_global_zero_sums_clamped(self):
        est = estimate_rho_global(np.array([[1.0, -1.0], [2.0, -2.0]]))
        assert est.rho_hat == -1 + RHO_EPS
        assert est.diagnostics and "clamped" in est.diagnostics[0]
        assert np.all(np.isfinite(est.theta_hat))

    def test_global_monte_carlo(self):
        p, m, rho = 20, 10_000, 0.5
        hits = 0
        for r in range(100):
            g = np.random.Generator(np.random.PCG64(np.random.SeedSequence([8, r])))
            W = g.standard_normal((m, p)) + math.sqrt(rho / p) * g.standard_normal((m, 1))
            hits += 0.4 <= estimate_rho_global(W).rho_hat <= 0.6
        assert hits >= 95


class TestResiduals:
    def test_count(self):
        X1 = np.zeros((3, 100))
        assert build_residuals(X1, 0.1).shape == (10, 3)

    def test_means_cancel(self):
        X1 = np.tile(np.arange(1.0, 6.0)[:, None], (1, 400))
        np.testing.assert_array_equal(build_residuals(X1, 0.2), np.zeros((80, 5)))

    def test_too_few_columns(self):
        with pytest.raises(InvalidInputError):
            build_residuals(np.zeros((2, 10)), 0.1)
        with pytest.raises(InvalidInputError):
            build_residuals(np.zeros((2, 10)), 1.0)

    def test_covariance_scale(self):
        p, rho = 10, 0.5
        X1 = _null(4000, p, NoiseModel("cs_local", param=rho), 12) + 3.0
        R = build_residuals(X1, 0.5)
        assert R.shape == (2000, p)
        Sigma = covariance_local(rho, p)
        S = R.T @ R / R.shape[0]
        assert np.linalg.norm(S - Sigma) <= 0.15 * np.linalg.norm(Sigma, 2)


def test_oracle_direction_maximises_snr():
    rng = np.random.default_rng(5)
    p = 8
    Sigma = covariance_local(0.5, p)
    Theta = precision_local(0.5, p)
    for _ in range(5):
        theta = np.zeros(p)
        theta[rng.choice(p, 3, replace=False)] = rng.normal(size=3)
        v = Theta @ theta
        v /= np.linalg.norm(v)
        best = abs(v @ theta) / math.sqrt(v @ Sigma @ v)
        A = rng.normal(size=(10_000, p))
        A /= np.linalg.norm(A, axis=1, keepdims=True)
        snr = np.abs(A @ theta) / np.sqrt(np.einsum("ij,jk,ik->i", A, Sigma, A))
        assert snr.max() <= best + 1e-12


class TestInspectSpatial:
    def _data(self, seed, rho=0.5):
        spec = standard_signal(400, 60, 6, 160, 4.0)
        return generate(spec, NoiseModel("cs_local", param=rho), seed)

    def test_iid_matches_split(self):
        X = self._data(1)
        cfg = SolverConfig(lam=1.5)
        a = inspect_single_spatial(X, cfg, "iid")
        b = inspect_single_split(X, cfg)
        assert a.z_hat == b.z_hat
        np.testing.assert_allclose(a.v_hat, b.v_hat, atol=1e-12)
        assert a.t_max == pytest.approx(b.t_max, rel=1e-12)

    @pytest.mark.parametrize("kind", ["local_ar", "global_equi", "iid"])
    def test_unit_norm_and_even_location(self, kind):
        det = inspect_single_spatial(self._data(2), SolverConfig(lam=1.5), kind, tau_lb=0.2)
        assert np.linalg.norm(det.v_hat) == pytest.approx(1.0, abs=1e-10)
        assert det.z_hat % 2 == 0

    def test_estimated_rho_is_reasonable(self):
        det = inspect_single_spatial(self._data(3, rho=0.6), SolverConfig(lam=1.5), "local_ar", tau_lb=0.4)
        assert 0.4 <= det.precision.rho_hat <= 0.8

    def test_residual_failure_falls_back_to_identity(self):
        X = self._data(4)[:, :12]
        det = inspect_single_spatial(X, SolverConfig(lam=0.5), "local_ar", tau_lb=0.1)
        assert any("identity" in d for d in det.diagnostics)
        ref = inspect_single_split(X, SolverConfig(lam=0.5))
        assert det.z_hat == ref.z_hat

    def test_locates_change(self):
        errs = []
        for r in range(10):
            det = inspect_single_spatial(self._data((9, r)), SolverConfig(lam=1.5), "local_ar", tau_lb=0.2)
            errs.append(abs(det.z_hat - 160))
        assert np.median(errs) <= 10
