import math

import numpy as np
import pytest

from fbmlab import DomainError
from fbmlab.experiments import (
    DEFAULT_SCALING_SPECS,
    audit_experiment,
    converge_experiment,
    hermite_experiment,
    identity_experiment,
    parse_integrand_list,
    sampler_experiment,
    scaling_experiment,
    sextic_experiment,
    taylor_experiment,
)
from fbmlab.quadrature import hermite_mean_exact
from fbmlab.variations import sin_map


class TestIntegrandList:
    def test_split(self):
        labels = [g.label for g in parse_integrand_list("1; x; x^2 ; sin")]
        assert labels == ["1", "x", "x^2", "sin"]

    def test_single_with_commas(self):
        (g,) = parse_integrand_list("poly:1,0,2")
        assert g(1.0) == 3.0

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            parse_integrand_list(" ; ")


class TestConverge:
    def test_trivial_integrand_collapses_to_endpoint(self):
        res = converge_experiment(64, 1.0, 60, 101, ["1"], refinement_factor=2)
        assert np.allclose(res.est_int["1"], res.est_b1, atol=1e-12)
        assert np.allclose(res.orc_int["1"], res.orc_b1, atol=1e-12)
        assert res.ks["int:1"].statistic == pytest.approx(res.ks["B"].statistic)

    def test_shapes_and_determinism(self):
        a = converge_experiment(32, 1.0, 60, 7, ["x"], refinement_factor=4)
        b = converge_experiment(32, 1.0, 60, 7, ["x"], refinement_factor=4)
        assert a.refinement == 128
        assert np.array_equal(a.est_cubic, b.est_cubic)
        assert np.array_equal(a.orc_int["x"], b.orc_int["x"])

    def test_worker_count_does_not_change_results(self):
        a = converge_experiment(32, 1.0, 64, 7, ["sin"], workers=1)
        b = converge_experiment(32, 1.0, 64, 7, ["sin"], workers=2)
        assert np.array_equal(a.est_int["sin"], b.est_int["sin"])
        assert np.array_equal(a.orc_b1, b.orc_b1)

    def test_estimator_oracle_streams_disjoint(self):
        res = converge_experiment(32, 1.0, 60, 7, ["x"])
        # oracle uses stream ids offset by the replication count, so the
        # B(1) samples must differ from the estimator draws
        assert not np.allclose(res.est_b1, res.orc_b1)

    def test_refinement_factor_validated(self):
        with pytest.raises(DomainError):
            converge_experiment(32, 1.0, 60, 7, ["x"], refinement_factor=3)


class TestIdentity:
    def test_residuals_tiny(self):
        res = identity_experiment(256, 1.0, 25, 11)
        assert max(res.max_rel_residuals.values()) < 1e-10
        assert len(res.vn) == 25

    def test_variance_sane_at_moderate_n(self):
        res = identity_experiment(512, 1.0, 400, 13)
        assert 3.0 < res.vn_variance < 9.0
        assert abs(res.vn_b1_corr) < 0.5


class TestSextic:
    def test_targets_and_medians(self):
        res = sextic_experiment([64, 128], 1.0, 40, 17, mean_replications=60)
        assert res.mean_target == 15.0
        assert len(res.medians) == 2
        assert res.mean_n == 128
        assert res.mean_se > 0


class TestHermite:
    def test_mean_matches_exact_finite_n(self):
        # unbiased check: the MC mean of the left variation must sit within
        # 4 standard errors of the exact finite-n mean formula
        res = hermite_experiment(256, 1.0, 600, 19)
        exact = hermite_mean_exact(sin_map(), 256, 1.0)
        se = res.left.std(ddof=1) / math.sqrt(len(res.left))
        assert abs(res.left.mean() - exact) <= 4 * se

    def test_right_mirrors_left_in_sign(self):
        res = hermite_experiment(256, 1.0, 600, 19)
        exact_right = -hermite_mean_exact(sin_map(), 256, 1.0)
        # right endpoint anchors at t_k instead of t_{k-1}; its exact mean
        # uses the mirrored covariance, close to the negated left value
        se = res.right.std(ddof=1) / math.sqrt(len(res.right))
        assert abs(res.right.mean() - exact_right) <= 5 * se

    def test_limits_attached(self):
        res = hermite_experiment(64, 1.0, 200, 23)
        assert res.mean_limit == pytest.approx(6 - 9.75 * math.exp(-0.5), abs=1e-9)
        assert res.variance_limit > 1.0
        assert res.bounded


class TestScaling:
    def test_default_specs_cover_all_estimators(self):
        assert set(DEFAULT_SCALING_SPECS) == {e for e in DEFAULT_SCALING_SPECS}
        res = scaling_experiment(29, replications=200)
        assert set(res.fits) == set(DEFAULT_SCALING_SPECS)
        for fit in res.fits.values():
            assert fit.r_squared > 0.9


class TestTaylorExperiment:
    def test_poly_corpus_closes(self):
        res = taylor_experiment(31, pairs=200, poly_count=10)
        assert res.max_poly_r6 < 1e-9
        assert res.gamma_exact
        assert res.gamma == pytest.approx(-1 / 480)
        # pairs span d up to 2, so R6 ~ d^6 |g^(6) oscillation| / 5! ~ 1e-3
        assert res.sin_max_r6 < 0.01


class TestAuditExperiment:
    def test_structure(self):
        res = audit_experiment([64, 128, 256])
        assert [row["n"] for row in res.anchor_sums] == [64, 128, 256]
        assert res.anchor_sums_decreasing()
        assert res.orthogonality_max_dev < 1e-8
        assert len(res.covar) == 3

    def test_large_n_skips_covar(self):
        res = audit_experiment([2048, 8192])
        assert [row["n"] for row in res.covar] == [2048]
        assert len(res.anchor_sums) == 2


class TestSamplerExperiment:
    def test_small_validation(self):
        res = sampler_experiment(
            37, gram_n=128, gram_replications=500, ks_replications=200,
            probe_indices=(16, 32, 64, 128),
        )
        assert res.gram_max_z < 5.0
        assert not res.method_ks.rejects_at_1pct
        assert res.var_b1_z < 5.0
        assert abs(res.bw_corr) < 5.0 / math.sqrt(500)
