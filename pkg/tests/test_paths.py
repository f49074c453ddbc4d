"""Tests for path generation and the path-level experiments.

Experiments that need a trained generator use the exact-map stand-in here;
the trained-GAN versions are exercised by the acceptance suite.
"""

import math
import warnings

import numpy as np
import pytest

from sdegan.gan import GanVariant
from sdegan.nn import IDENTITY, SIGMOID, MLP
from sdegan.paths import (
    ExactStepper,
    GanSampler,
    SchemeStepper,
    autocorr_scatter,
    disc_grid,
    error_vs_dt_experiment,
    generate_paths,
    map_dump,
    mean_reversion_experiment,
)
from sdegan.preprocess import LogReturn, MeanScale
from sdegan.schemes import SchemeKind
from sdegan.sde import Cir, Gbm
from sdegan.stats import ks_two_sample

GBM = Gbm(mu=0.05, sigma=0.2)
CIR_SAT = Cir(kappa=0.1, s_bar=0.1, gamma=0.1)
CIR_VIO = Cir(kappa=0.1, s_bar=0.1, gamma=0.3)


class TestGeneratePaths:
    def test_exact_gbm_zero_noise_is_median_path(self):
        z = np.zeros((5, 4))
        ens = generate_paths(ExactStepper(GBM), GBM, 1.0, 1.0, 4, 5, z=z)
        for k in range(5):
            assert np.allclose(ens.values[:, k], math.exp(0.03 * k), rtol=1e-12)

    def test_common_random_numbers_bitwise(self):
        rng = np.random.default_rng(0)
        z = rng.standard_normal((100, 8))
        exact = generate_paths(ExactStepper(GBM), GBM, 1.0, 0.25, 8, 100, z=z)
        euler = generate_paths(SchemeStepper(GBM, SchemeKind.EULER), GBM, 1.0,
                               0.25, 8, 100, z=z)
        assert exact.z_draws is euler.z_draws or np.array_equal(exact.z_draws,
                                                                euler.z_draws)
        assert not np.allclose(exact.values[:, -1], euler.values[:, -1])

    def test_cir_terminal_mean(self):
        rng = np.random.default_rng(1)
        ens = generate_paths(ExactStepper(CIR_SAT), CIR_SAT, 0.1, 0.5, 4, 100_000,
                             rng=rng)
        want = 0.1 + (0.1 - 0.1) * math.exp(-0.1 * 2.0)
        se = ens.terminal.std() / math.sqrt(ens.terminal.size)
        assert abs(ens.terminal.mean() - want) < 5 * se

    def test_positivity_of_exact_paths(self):
        rng = np.random.default_rng(2)
        for model, s0 in ((GBM, 1.0), (CIR_VIO, 0.01)):
            ens = generate_paths(ExactStepper(model), model, s0, 1.0, 10, 2000,
                                 rng=rng)
            assert np.all(ens.values > 0)

    def test_exact_terminal_law_step_consistency(self):
        # Terminal distribution is invariant to the number of exact steps.
        rng = np.random.default_rng(3)
        t_final, m = 2.0, 100_000
        one = generate_paths(ExactStepper(GBM), GBM, 1.0, t_final, 1, m, rng=rng)
        many = generate_paths(ExactStepper(GBM), GBM, 1.0, t_final / 40, 40, m,
                              rng=rng)
        assert ks_two_sample(one.terminal, many.terminal) < 0.01

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            generate_paths(ExactStepper(GBM), GBM, 1.0, 1.0, 4, 5,
                           z=np.zeros((5, 3)))
        with pytest.raises(ValueError):
            generate_paths(ExactStepper(GBM), GBM, -1.0, 1.0, 4, 5,
                           z=np.zeros((5, 4)))

    def test_csv(self, tmp_path):
        ens = generate_paths(ExactStepper(GBM), GBM, 1.0, 1.0, 2, 3,
                             z=np.zeros((3, 2)))
        f = tmp_path / "paths.csv"
        ens.to_csv(f)
        lines = f.read_text().splitlines()
        assert lines[0] == "path_id,step,value"
        assert len(lines) == 1 + 3 * 3


class TestGanSampler:
    @staticmethod
    def _identity_generator(n_cond):
        # Linear net computing r = 0.03*dt + 0.2*z for easy checks.
        w = np.zeros((1 + n_cond, 1))
        w[0, 0] = 0.2
        w[1, 0] = 0.03
        return MLP([w], [np.zeros(1)], (IDENTITY,))

    def test_step_decodes(self):
        sampler = GanSampler(self._identity_generator(1), GBM, LogReturn(),
                             GanVariant.SUPERVISED, dt_grid=(0.5, 1.0))
        out = sampler.step(np.array([1.0, 2.0]), 1.0, np.array([0.0, 0.0]))
        assert np.allclose(out, [math.exp(0.03), 2 * math.exp(0.03)], rtol=1e-6)

    def test_extrapolation_warning(self):
        sampler = GanSampler(self._identity_generator(1), GBM, LogReturn(),
                             GanVariant.SUPERVISED, dt_grid=(0.5, 1.0))
        with pytest.warns(RuntimeWarning, match="outside the trained grid"):
            sampler.step(np.array([1.0]), 4.0, np.array([0.0]))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            sampler.step(np.array([1.0]), 0.67, np.array([0.0]))


class TestErrorVsDt:
    def test_exact_source_zero_error(self):
        rng = np.random.default_rng(4)
        rows = error_vs_dt_experiment(ExactStepper(GBM), GBM, 1.0, t_final=1.0,
                                      n_list=(4, 2), m_paths=200, rng=rng)
        for row in rows:
            if row.source == "exact":
                assert row.e_w == 0.0 and row.e_s == 0.0

    def test_gbm_euler_rate_recovered(self):
        rng = np.random.default_rng(5)
        rows = error_vs_dt_experiment(ExactStepper(GBM), GBM, 1.0, t_final=1.0,
                                      n_list=(16, 32, 64, 128, 256),
                                      m_paths=20_000, rng=rng)
        euler = [(r.dt, r.e_s) for r in rows if r.source == "euler"]
        dts = np.array([v[0] for v in euler])
        errs = np.array([v[1] for v in euler])
        slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert abs(slope - 0.5) < 0.1

    def test_sources_present_for_cir(self):
        rng = np.random.default_rng(6)
        rows = error_vs_dt_experiment(ExactStepper(CIR_VIO), CIR_VIO, 0.1,
                                      t_final=2.0, n_list=(1, 2), m_paths=500,
                                      rng=rng)
        sources = {r.source for r in rows}
        assert sources == {"exact", "truncated_euler", "truncated_milstein"}


class TestMeanReversion:
    def test_exact_means_match_closed_form(self):
        rng = np.random.default_rng(7)
        res = mean_reversion_experiment(ExactStepper(CIR_VIO), CIR_VIO, s0=0.01,
                                        dt=1.0, n_reps=20, m_paths=50_000, rng=rng)
        # 5-sigma band with the stationary-scale std as a conservative bound
        for k in range(res.mean_observed.size):
            se = 0.06 / math.sqrt(50_000)
            assert abs(res.mean_observed[k] - res.mean_exact[k]) < 5 * se + 1e-12

    def test_exact_curve_monotone_approach(self):
        rng = np.random.default_rng(8)
        res = mean_reversion_experiment(ExactStepper(CIR_VIO), CIR_VIO, s0=0.01,
                                        dt=1.0, n_reps=10, m_paths=1000, rng=rng)
        gaps = np.abs(res.mean_exact - CIR_VIO.s_bar)
        assert np.all(np.diff(gaps) < 0)

    def test_rejects_gbm(self):
        with pytest.raises(TypeError):
            mean_reversion_experiment(ExactStepper(GBM), GBM,
                                      rng=np.random.default_rng(0))


class TestMapDump:
    def test_exact_stand_in_matches_exactly(self):
        sampler = ExactStepper(CIR_VIO, transform=MeanScale(s_bar=0.1))
        dump = map_dump(sampler, CIR_VIO, MeanScale(s_bar=0.1), 0.1, 1.0)
        assert np.allclose(dump.r_gan, dump.r_exact, atol=1e-12)
        assert dump.z.size == 100

    def test_exact_map_monotone(self):
        sampler = ExactStepper(GBM, transform=LogReturn())
        dump = map_dump(sampler, GBM, LogReturn(), 1.0, 1.0)
        assert np.all(np.diff(dump.r_exact) > 0)

    def test_csv(self, tmp_path):
        sampler = ExactStepper(GBM, transform=LogReturn())
        dump = map_dump(sampler, GBM, LogReturn(), 1.0, 1.0,
                        z_grid=np.array([-1.0, 0.0, 1.0]))
        f = tmp_path / "map.csv"
        dump.to_csv(f)
        assert f.read_text().splitlines()[0] == "z,r_gan,r_exact"


class TestDiscGrid:
    def test_zero_weight_discriminator_is_half(self):
        rng = np.random.default_rng(9)
        d = MLP.create(4, 1, SIGMOID, rng, hidden=(8,))
        for w in d.weights:
            w[:] = 0.0
        grid = disc_grid(d, GanVariant.SUPERVISED, 0.1, 1.0,
                         np.linspace(-2, 2, 5), np.linspace(-1, 1, 7))
        assert grid.d_out.shape == (5, 7)
        assert np.all(grid.d_out == 0.5)

    def test_outputs_in_unit_interval(self):
        rng = np.random.default_rng(10)
        d = MLP.create(4, 1, SIGMOID, rng, hidden=(16,))
        grid = disc_grid(d, GanVariant.SUPERVISED, 0.1, 1.0,
                         np.linspace(-3, 3, 9), np.linspace(-1, 2, 11))
        assert np.all((grid.d_out > 0) & (grid.d_out < 1))

    def test_vanilla_rejected(self):
        rng = np.random.default_rng(11)
        d = MLP.create(3, 1, SIGMOID, rng, hidden=(8,))
        with pytest.raises(ValueError, match="supervised"):
            disc_grid(d, GanVariant.VANILLA, 0.1, 1.0, np.zeros(2), np.zeros(2))

    def test_csv(self, tmp_path):
        rng = np.random.default_rng(12)
        d = MLP.create(4, 1, SIGMOID, rng, hidden=(8,))
        grid = disc_grid(d, GanVariant.SUPERVISED, 0.1, 1.0,
                         np.array([-1.0, 1.0]), np.array([0.0, 0.5]))
        f = tmp_path / "grid.csv"
        grid.to_csv(f)
        lines = f.read_text().splitlines()
        assert lines[0] == "z,r,d_out"
        assert len(lines) == 5


class TestAutocorrScatter:
    def test_exact_stand_in_matches(self):
        rng = np.random.default_rng(13)
        table = autocorr_scatter(ExactStepper(CIR_SAT), CIR_SAT, rng=rng, n=500)
        assert np.max(np.abs(table.s_next_gan - table.s_next_exact)
                      / table.s_next_exact) < 1e-5

    def test_all_positive(self):
        rng = np.random.default_rng(14)
        table = autocorr_scatter(ExactStepper(CIR_VIO), CIR_VIO, rng=rng, n=1000)
        assert table.s_t.size == 1000
        assert np.all(table.s_t > 0)
        assert np.all(table.s_next_exact > 0)
        assert np.all(table.s_next_gan > 0)
