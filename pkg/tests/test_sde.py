"""Tests for the exact transition kernels of GBM and CIR."""

import math

import numpy as np
import pytest

from sdegan.sde import (
    Cir,
    ClampCounter,
    Gbm,
    cir_transition_params,
    exact_sample,
    exact_sample_with_z,
    feller_delta,
    step_from_z,
    transition_cdf,
    transition_quantile,
    z_from_step,
)

GBM = Gbm(mu=0.05, sigma=0.2)
CIR_SAT = Cir(kappa=0.1, s_bar=0.1, gamma=0.1)    # Feller satisfied, delta = 4
CIR_VIO = Cir(kappa=0.1, s_bar=0.1, gamma=0.3)    # Feller violated, delta = 0.44


class TestModelValidation:
    def test_gbm_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            Gbm(mu=0.05, sigma=0.0)

    def test_cir_rejects_bad_params(self):
        for bad in (dict(kappa=-0.1, s_bar=0.1, gamma=0.1),
                    dict(kappa=0.1, s_bar=0.0, gamma=0.1),
                    dict(kappa=0.1, s_bar=0.1, gamma=-1.0)):
            with pytest.raises(ValueError):
                Cir(**bad)


class TestCirTransitionParams:
    def test_delta_feller_satisfied(self):
        p = cir_transition_params(CIR_SAT, s_t=0.1, dt=1.0)
        assert p.delta == pytest.approx(4.0, abs=1e-12)

    def test_delta_feller_violated(self):
        p = cir_transition_params(CIR_VIO, s_t=0.1, dt=1.0)
        assert p.delta == pytest.approx(0.4444, abs=1e-4)

    def test_xi_and_cbar(self):
        p = cir_transition_params(CIR_SAT, s_t=0.1, dt=1.0)
        decay = math.exp(-0.1)
        xi = 4 * 0.1 * 0.1 * decay / (0.01 * (1 - decay))
        assert p.xi == pytest.approx(38.0334, abs=1e-3)
        assert p.xi == pytest.approx(xi, rel=1e-14)
        assert p.c_bar == pytest.approx(2.37907e-3, abs=1e-8)

    def test_rejects_gbm(self):
        with pytest.raises(TypeError):
            cir_transition_params(GBM, s_t=0.1, dt=1.0)


class TestFellerDelta:
    def test_satisfied(self):
        assert feller_delta(CIR_SAT) == (pytest.approx(4.0), True)

    def test_violated(self):
        delta, ok = feller_delta(CIR_VIO)
        assert delta == pytest.approx(0.4444, abs=1e-4)
        assert not ok

    def test_boundary_inclusive(self):
        # 4 * 0.5 * 1.0 / 1.0 == 2.0 exactly in floating point.
        delta, ok = feller_delta(Cir(kappa=0.5, s_bar=1.0, gamma=1.0))
        assert delta == 2.0
        assert ok

    def test_rejects_gbm(self):
        with pytest.raises(TypeError):
            feller_delta(GBM)


class TestTransitionCdf:
    def test_gbm_median(self):
        # Median of the lognormal step is exp((mu - sigma^2/2) dt).
        x = math.exp(0.03)
        assert transition_cdf(GBM, 1.0, 1.0, x) == pytest.approx(0.5, abs=1e-12)

    def test_zero_at_origin(self):
        for model in (GBM, CIR_SAT, CIR_VIO):
            assert transition_cdf(model, 0.1, 1.0, 0.0) == 0.0
            assert transition_cdf(model, 0.1, 1.0, -3.0) == 0.0

    def test_cir_quantile_roundtrip(self):
        q = transition_quantile(CIR_SAT, 0.1, 1.0, 0.3)
        assert transition_cdf(CIR_SAT, 0.1, 1.0, q) == pytest.approx(0.3, abs=1e-8)

    @pytest.mark.parametrize("model", [GBM, CIR_SAT, CIR_VIO])
    def test_valid_cdf_shape(self, model):
        xs = np.geomspace(1e-4, 5.0, 120)
        vals = transition_cdf(model, 0.1, 1.0, xs)
        assert np.all(np.diff(vals) >= 0)
        assert vals[0] >= 0.0 and vals[-1] > 0.999


class TestTransitionQuantile:
    def test_gbm_median(self):
        got = transition_quantile(GBM, 1.0, 1.0, 0.5)
        assert got == pytest.approx(1.0304545, abs=1e-6)

    def test_cir_scaling_identity(self):
        from sdegan.special_fns import ncx2_quantile_values
        p = cir_transition_params(CIR_VIO, s_t=0.1, dt=1.0)
        for prob in (0.1, 0.5, 0.9):
            want = p.c_bar * ncx2_quantile_values(prob, p.delta, p.xi)
            assert transition_quantile(CIR_VIO, 0.1, 1.0, prob) == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("model", [GBM, CIR_SAT, CIR_VIO])
    def test_strictly_monotone(self, model):
        probs = np.linspace(0.01, 0.99, 99)
        q = transition_quantile(model, 0.1, 1.0, probs)
        assert np.all(np.diff(q) > 0)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            transition_quantile(GBM, 1.0, 1.0, 0.0)


class TestStepFromZ:
    def test_gbm_at_zero(self):
        assert step_from_z(GBM, 1.0, 1.0, 0.0) == pytest.approx(math.exp(0.03), rel=1e-9)

    def test_gbm_at_one(self):
        assert step_from_z(GBM, 1.0, 1.0, 1.0) == pytest.approx(1.2586000, abs=1e-6)

    def test_matches_quantile_of_cdf(self):
        for model in (GBM, CIR_SAT, CIR_VIO):
            for z in (-2.0, -0.5, 0.0, 1.5):
                from sdegan.special_fns import std_normal_cdf
                want = transition_quantile(model, 0.1, 0.5, std_normal_cdf(z))
                assert step_from_z(model, 0.1, 0.5, z) == pytest.approx(want, rel=1e-9)

    def test_cir_conditional_mean(self):
        # E[S_{t+dt} | S_t] = s_bar + (s_t - s_bar) e^{-kappa dt}.
        rng = np.random.default_rng(5)
        z = rng.standard_normal(1_000_000)
        vals = step_from_z(CIR_SAT, 0.01, 1.0, z)
        assert vals.mean() == pytest.approx(0.018565, abs=3e-4)

    @pytest.mark.parametrize("model", [GBM, CIR_SAT, CIR_VIO])
    def test_strictly_increasing_in_z(self, model):
        z = np.linspace(-4, 4, 81)
        s = step_from_z(model, 0.1, 1.0, z)
        assert np.all(np.diff(s) > 0)


class TestZFromStep:
    def test_gbm_median_maps_to_zero(self):
        assert z_from_step(GBM, 1.0, 1.0, math.exp(0.03)) == pytest.approx(0.0, abs=1e-8)

    @pytest.mark.parametrize("model", [CIR_SAT, CIR_VIO])
    def test_roundtrip_on_exact_samples(self, model):
        rng = np.random.default_rng(21)
        s = exact_sample(model, 0.1, 1.0, rng, size=1000)
        z = z_from_step(model, 0.1, 1.0, s)
        back = step_from_z(model, 0.1, 1.0, z)
        assert np.max(np.abs(back - s) / s) < 1e-5

    def test_monotone(self):
        s = np.linspace(0.02, 0.4, 60)
        z = z_from_step(CIR_VIO, 0.1, 1.0, s)
        assert np.all(np.diff(z) > 0)

    def test_gbm_affine_in_logreturn(self):
        # z(s_t e^r) is affine in r with slope 1/(sigma sqrt(dt)).
        dt = 0.5
        rs = np.array([-0.3, -0.1, 0.0, 0.2, 0.4])
        z = z_from_step(GBM, 1.0, dt, np.exp(rs))
        slope = np.diff(z) / np.diff(rs)
        assert np.max(np.abs(slope - 1.0 / (0.2 * math.sqrt(dt)))) < 1e-8

    def test_clamp_counter(self):
        counter = ClampCounter()
        z_from_step(CIR_VIO, 0.1, 1.0, 1e-280, clamp_counter=counter)
        assert counter.count == 1

    def test_rejects_outside_support(self):
        with pytest.raises(ValueError):
            z_from_step(GBM, 1.0, 1.0, -0.5)


class TestExactSample:
    def test_gbm_sampler_cdf_consistency(self):
        rng = np.random.default_rng(33)
        draws = np.sort(exact_sample(GBM, 1.0, 1.0, rng, size=100_000))
        n = draws.size
        cdf = transition_cdf(GBM, 1.0, 1.0, draws)
        ks = max(np.max(np.arange(1, n + 1) / n - cdf), np.max(cdf - np.arange(0, n) / n))
        assert ks < 0.006

    def test_cir_sampler_cdf_consistency(self):
        rng = np.random.default_rng(34)
        draws = np.sort(exact_sample(CIR_VIO, 0.1, 1.0, rng, size=100_000))
        n = draws.size
        cdf = transition_cdf(CIR_VIO, 0.1, 1.0, draws)
        ks = max(np.max(np.arange(1, n + 1) / n - cdf), np.max(cdf - np.arange(0, n) / n))
        assert ks < 0.006

    @pytest.mark.parametrize("mode", ["inverse_cdf", "mixture"])
    def test_paired_z_reproduces_sample(self, mode):
        rng = np.random.default_rng(35)
        s, z = exact_sample_with_z(CIR_SAT, 0.1, 1.0, rng, size=500, mode=mode)
        back = step_from_z(CIR_SAT, 0.1, 1.0, z)
        assert np.max(np.abs(back - s) / s) < 1e-6

    def test_cir_mean_identity_empirical(self):
        rng = np.random.default_rng(36)
        for model, s_t, dt in ((CIR_SAT, 0.1, 1.0), (CIR_VIO, 0.05, 0.4)):
            p = cir_transition_params(model, s_t, dt)
            want = model.s_bar + (s_t - model.s_bar) * math.exp(-model.kappa * dt)
            assert p.c_bar * (p.delta + p.xi) == pytest.approx(want, rel=1e-12)
            n = 1_000_000
            draws = exact_sample(model, s_t, dt, rng, size=n)
            se = math.sqrt(p.c_bar**2 * 2 * (p.delta + 2 * p.xi) / n)
            assert abs(draws.mean() - want) < 5 * se
