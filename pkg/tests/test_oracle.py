import math

import numpy as np
import pytest

from fbmlab import (
    DomainError,
    Grid,
    LimitSample,
    SeedPolicy,
    change_of_variable_residual,
    constant_map,
    ito_left_sum,
    kappa_constant,
    monomial_map,
    parse_integrand,
    sample_bm,
    sample_fbm,
    signed_cubic_limit,
    sin_map,
    weak_strat_integral,
)

KAPPA = kappa_constant(10_000).kappa


class TestSignedCubicLimit:
    def test_zero_scale(self):
        w = sample_bm(Grid(32), SeedPolicy(1, 0))
        assert np.all(signed_cubic_limit(w, 0.0).partials == 0.0)

    def test_scaling_is_exact(self):
        w = sample_bm(Grid(32), SeedPolicy(1, 0))
        one = signed_cubic_limit(w, 1.3)
        two = signed_cubic_limit(w, 2.6)
        assert np.array_equal(two.partials, 2.0 * one.partials)

    def test_kind_check(self):
        b = sample_fbm(Grid(32), SeedPolicy(1, 0))
        with pytest.raises(DomainError):
            signed_cubic_limit(b, KAPPA)

    def test_variance_at_unit_time(self):
        grid = Grid(64)
        reps = 2000
        finals = np.array(
            [signed_cubic_limit(sample_bm(grid, SeedPolicy(2, r)), KAPPA).final for r in range(reps)]
        )
        assert abs(finals.var(ddof=1) - KAPPA**2) <= 0.1 * KAPPA**2


class TestItoLeftSum:
    def test_unit_integrand(self):
        w = sample_bm(Grid(64), SeedPolicy(3, 0))
        step = ito_left_sum(np.ones(65), w)
        assert np.max(np.abs(step.partials - w.values)) < 1e-14

    def test_constant_scales(self):
        w = sample_bm(Grid(64), SeedPolicy(3, 1))
        step = ito_left_sum(np.full(65, 2.5), w)
        assert np.max(np.abs(step.partials - 2.5 * w.values)) < 1e-13

    def test_length_mismatch(self):
        w = sample_bm(Grid(64), SeedPolicy(3, 2))
        with pytest.raises(DomainError):
            ito_left_sum(np.ones(64), w)

    def test_kind_check(self):
        b = sample_fbm(Grid(16), SeedPolicy(3, 3))
        with pytest.raises(DomainError):
            ito_left_sum(np.ones(17), b)

    def test_isometry(self):
        # E[(int_0^1 s dW)^2] = int_0^1 s^2 ds = 1/3
        grid = Grid(256)
        reps = 2000
        t = grid.times()
        vals = np.array(
            [ito_left_sum(t, sample_bm(grid, SeedPolicy(4, r))).final for r in range(reps)]
        )
        sq = vals**2
        se = sq.std(ddof=1) / math.sqrt(reps)
        assert abs(sq.mean() - 1.0 / 3.0) <= 4 * se


class TestLimitSample:
    def test_draw_shapes(self):
        sample = LimitSample.draw(128, SeedPolicy(5, 0), KAPPA)
        assert sample.b_path.grid.n == 128
        assert sample.w_path.grid.n == 128
        assert sample.refinement == 128

    def test_invalid_refinement(self):
        sample = LimitSample.draw(128, SeedPolicy(5, 0), KAPPA)
        with pytest.raises(DomainError):
            weak_strat_integral(sin_map(), sample, 1.0, eval_n=96)

    def test_mismatched_paths_rejected(self):
        b = sample_fbm(Grid(64), SeedPolicy(5, 1))
        w = sample_bm(Grid(32), SeedPolicy(5, 1))
        with pytest.raises(DomainError):
            LimitSample(b_path=b, w_path=w, kappa=KAPPA, refinement=64)

    def test_independence_of_b_and_w(self):
        reps = 2000
        pairs = np.array(
            [
                (
                    s.b_path.values[-1],
                    s.w_path.values[-1],
                )
                for s in (LimitSample.draw(64, SeedPolicy(6, r), KAPPA) for r in range(reps))
            ]
        )
        assert abs(np.corrcoef(pairs.T)[0, 1]) < 4.0 / math.sqrt(reps)


class TestWeakStratIntegral:
    def test_constant_integrand(self):
        sample = LimitSample.draw(256, SeedPolicy(7, 0), KAPPA)
        value = weak_strat_integral(constant_map(1.0), sample, 1.0)
        assert value == pytest.approx(sample.b_path.values[-1], abs=1e-12)

    def test_linear_integrand(self):
        sample = LimitSample.draw(256, SeedPolicy(7, 1), KAPPA)
        value = weak_strat_integral(monomial_map(1), sample, 0.75)
        b_t = sample.b_path.value_at(0.75)
        assert value == pytest.approx(0.5 * b_t**2, abs=1e-12)

    def test_quadratic_integrand_closed_form(self):
        # G''' = 2, so the correction is exactly (kappa/6) W(t)
        sample = LimitSample.draw(512, SeedPolicy(7, 2), KAPPA)
        value = weak_strat_integral(monomial_map(2), sample, 1.0)
        target = sample.b_path.values[-1] ** 3 / 3.0 + KAPPA * sample.w_path.values[-1] / 6.0
        assert value == pytest.approx(target, abs=1e-12)

    def test_cached_values(self):
        sample = LimitSample.draw(64, SeedPolicy(7, 3), KAPPA)
        value = weak_strat_integral(sin_map(), sample, 1.0)
        assert sample.values[("sin", 1.0, 64)] == value

    def test_refinement_stability(self):
        # same randomness, coarser evaluation: consecutive refinement
        # differences shrink in RMS (left sums converge in mean square)
        reps = 300
        fine = 4096
        diffs = {1024: [], 2048: [], 4096: []}
        g = sin_map()
        for r in range(reps):
            sample = LimitSample.draw(fine, SeedPolicy(8, r), KAPPA)
            v = {k: weak_strat_integral(g, sample, 1.0, eval_n=k) for k in (512, 1024, 2048, 4096)}
            diffs[1024].append(v[1024] - v[512])
            diffs[2048].append(v[2048] - v[1024])
            diffs[4096].append(v[4096] - v[2048])
        rms = {k: float(np.sqrt(np.mean(np.square(d)))) for k, d in diffs.items()}
        assert rms[2048] < math.sqrt(2.0) * rms[1024]
        assert rms[4096] < math.sqrt(2.0) * rms[2048]

    def test_out_of_range_time(self):
        sample = LimitSample.draw(64, SeedPolicy(7, 4), KAPPA)
        with pytest.raises(DomainError):
            weak_strat_integral(sin_map(), sample, 1.5)


class TestChangeOfVariable:
    def test_constant_map_residual(self):
        sample = LimitSample.draw(128, SeedPolicy(9, 0), KAPPA)
        assert change_of_variable_residual(constant_map(4.0), sample, 1.0) == pytest.approx(
            0.0, abs=1e-14
        )

    @pytest.mark.parametrize(
        "g",
        [
            monomial_map(2),
            sin_map(),
            parse_integrand("poly:0.3,-1,0.5,2"),
            parse_integrand("sin:1.5,0.7,0.2"),
            parse_integrand("exp:0.8,0.6"),
        ],
    )
    def test_residual_is_round_off(self, g):
        sample = LimitSample.draw(512, SeedPolicy(9, 1), KAPPA)
        for t in (0.25, 1.0):
            assert abs(change_of_variable_residual(g, sample, t)) < 1e-9

    def test_residual_all_refinements(self):
        sample = LimitSample.draw(256, SeedPolicy(9, 2), KAPPA)
        for eval_n in (64, 128, 256):
            assert abs(change_of_variable_residual(sin_map(), sample, 1.0, eval_n)) < 1e-10
