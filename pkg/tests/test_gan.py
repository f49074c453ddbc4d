"""Tests for GAN losses, input assembly, and the training loop (smoke scale).

Full-recipe convergence checks live in the acceptance suite; here the
losses are verified against closed forms and finite differences, and the
loop is exercised on small configurations.
"""

import math

import numpy as np
import pytest

from sdegan.gan import (
    GanVariant,
    TrainConfig,
    assemble_d_input,
    d_input_width,
    d_loss_and_grads,
    g_loss_and_grads,
    held_out_eval_data,
    train,
)
from sdegan.nn import IDENTITY, SIGMOID, MLP
from sdegan.preprocess import LogReturn, MeanScale, build_training_set
from sdegan.sde import Cir, Gbm

GBM = Gbm(mu=0.05, sigma=0.2)
CIR = Cir(kappa=0.1, s_bar=0.1, gamma=0.3)


def small_training_set(model, n=2000, seed=1):
    rng = np.random.default_rng(seed)
    if isinstance(model, Gbm):
        return build_training_set(model, LogReturn(), (0.5, 1.0), (), n, rng)
    return build_training_set(model, MeanScale(s_bar=model.s_bar), (0.5, 1.0),
                              (0.05, 0.1), n, rng)


def zero_weight_discriminator(in_dim, hidden=(8, 8)):
    rng = np.random.default_rng(0)
    net = MLP.create(in_dim, 1, SIGMOID, rng, hidden=hidden)
    for w in net.weights:
        w[:] = 0.0
    return net


class TestInputAssembly:
    def test_widths(self):
        assert d_input_width(GanVariant.VANILLA, 1) == 2
        assert d_input_width(GanVariant.SUPERVISED, 1) == 3
        assert d_input_width(GanVariant.VANILLA, 2) == 3
        assert d_input_width(GanVariant.SUPERVISED, 2) == 4

    def test_column_layout(self):
        r = np.array([1.0, 2.0])
        z = np.array([3.0, 4.0])
        cond = np.array([[5.0, 6.0], [7.0, 8.0]])
        sup = assemble_d_input(r, z, cond, GanVariant.SUPERVISED)
        assert np.array_equal(sup, [[1, 3, 5, 6], [2, 4, 7, 8]])
        van = assemble_d_input(r, z, cond, GanVariant.VANILLA)
        assert np.array_equal(van, [[1, 5, 6], [2, 7, 8]])

    def test_mispairing_changes_supervised_input_only(self):
        rng = np.random.default_rng(2)
        r, z = rng.standard_normal(16), rng.standard_normal(16)
        cond = rng.standard_normal((16, 1))
        perm = rng.permutation(16)
        d = MLP.create(3, 1, SIGMOID, np.random.default_rng(3), hidden=(8,))
        paired = d_loss_and_grads(d, assemble_d_input(r, z, cond, GanVariant.SUPERVISED),
                                  assemble_d_input(r, z, cond, GanVariant.SUPERVISED))[0]
        mispaired = d_loss_and_grads(d, assemble_d_input(r, z[perm], cond, GanVariant.SUPERVISED),
                                     assemble_d_input(r, z, cond, GanVariant.SUPERVISED))[0]
        assert paired != pytest.approx(mispaired, abs=1e-9)

        d_v = MLP.create(2, 1, SIGMOID, np.random.default_rng(3), hidden=(8,))
        paired_v = d_loss_and_grads(d_v, assemble_d_input(r, z, cond, GanVariant.VANILLA),
                                    assemble_d_input(r, z, cond, GanVariant.VANILLA))[0]
        mispaired_v = d_loss_and_grads(d_v, assemble_d_input(r, z[perm], cond, GanVariant.VANILLA),
                                       assemble_d_input(r, z, cond, GanVariant.VANILLA))[0]
        assert paired_v == pytest.approx(mispaired_v, abs=1e-12)


class TestDLoss:
    def test_constant_half_discriminator(self):
        d = zero_weight_discriminator(3)
        rng = np.random.default_rng(4)
        real = rng.standard_normal((32, 3))
        fake = rng.standard_normal((32, 3))
        loss, grads = d_loss_and_grads(d, real, fake)
        assert loss == pytest.approx(2.0 * math.log(2.0), rel=1e-6)

    def test_saturated_ideal_discriminator_loss_near_zero(self):
        # One linear layer with a huge weight on the only feature separates
        # real (+1) from fake (-1) rows perfectly.
        net = MLP([np.array([[50.0]])], [np.array([0.0])], (SIGMOID,))
        loss, _ = d_loss_and_grads(net, np.full((8, 1), 1.0), np.full((8, 1), -1.0))
        assert 0.0 < loss < 1e-6

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(5)
        d = MLP.create(3, 1, SIGMOID, rng, hidden=(6, 5))
        real = rng.standard_normal((12, 3))
        fake = rng.standard_normal((10, 3))
        _, grads = d_loss_and_grads(d, real, fake)
        h = 1e-5
        for p, g in zip(d.params(), grads):
            flat, gflat = p.ravel(), g.ravel()
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + h
                plus = d_loss_and_grads(d, real, fake)[0]
                flat[idx] = orig - h
                minus = d_loss_and_grads(d, real, fake)[0]
                flat[idx] = orig
                fd = (plus - minus) / (2 * h)
                assert gflat[idx] == pytest.approx(fd, rel=1e-6, abs=1e-9)

    def test_label_smoothing_changes_loss(self):
        d = MLP.create(2, 1, SIGMOID, np.random.default_rng(60), hidden=(8,))
        rng = np.random.default_rng(6)
        real = rng.standard_normal((16, 2))
        fake = rng.standard_normal((16, 2))
        hard = d_loss_and_grads(d, real, fake)[0]
        soft = d_loss_and_grads(d, real, fake, label_real=0.9, label_fake=0.1)[0]
        assert hard != pytest.approx(soft, abs=1e-9)


class TestGLoss:
    def test_constant_half_discriminator(self):
        g = MLP.create(2, 1, IDENTITY, np.random.default_rng(7), hidden=(8,))
        d = zero_weight_discriminator(3)
        rng = np.random.default_rng(8)
        loss, _ = g_loss_and_grads(g, d, rng.standard_normal(16),
                                   rng.standard_normal((16, 1)), GanVariant.SUPERVISED)
        assert loss == pytest.approx(math.log(2.0), rel=1e-6)

    @pytest.mark.parametrize("variant", [GanVariant.VANILLA, GanVariant.SUPERVISED])
    def test_generator_gradients_match_finite_differences(self, variant):
        rng = np.random.default_rng(9)
        g = MLP.create(2, 1, IDENTITY, rng, hidden=(5, 4))
        d = MLP.create(d_input_width(variant, 1), 1, SIGMOID, rng, hidden=(6,))
        z = rng.standard_normal(8)
        cond = rng.standard_normal((8, 1))
        _, grads = g_loss_and_grads(g, d, z, cond, variant)
        h = 1e-5
        for p, gr in zip(g.params(), grads):
            flat, gflat = p.ravel(), gr.ravel()
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + h
                plus = g_loss_and_grads(g, d, z, cond, variant)[0]
                flat[idx] = orig - h
                minus = g_loss_and_grads(g, d, z, cond, variant)[0]
                flat[idx] = orig
                fd = (plus - minus) / (2 * h)
                assert gflat[idx] == pytest.approx(fd, rel=1e-6, abs=1e-9)


class TestTrain:
    def test_smoke_losses_finite(self):
        ts = small_training_set(GBM, n=1000)
        res = train(GanVariant.SUPERVISED, ts,
                    TrainConfig(batch_size=100, epochs=1, seed=3, eval_every=5,
                                eval_n=500))
        assert len(res.log.iteration) == 10
        assert all(math.isfinite(v) for v in res.log.d_loss)
        assert all(math.isfinite(v) for v in res.log.g_loss)
        assert math.isfinite(res.log.final_ks)

    def test_bit_reproducible(self):
        ts = small_training_set(CIR, n=1000)
        cfg = TrainConfig(batch_size=100, epochs=1, seed=11, eval_every=10, eval_n=200)
        a = train(GanVariant.SUPERVISED, ts, cfg)
        b = train(GanVariant.SUPERVISED, ts, cfg)
        for wa, wb in zip(a.generator.params(), b.generator.params()):
            assert np.array_equal(wa, wb)
        for wa, wb in zip(a.discriminator.params(), b.discriminator.params()):
            assert np.array_equal(wa, wb)
        assert a.log.d_loss == b.log.d_loss
        assert a.log.ks == b.log.ks

    def test_variants_share_generator_architecture(self):
        ts = small_training_set(GBM, n=1000)
        cfg = TrainConfig(batch_size=200, epochs=1, seed=5, eval_every=100, eval_n=100)
        sup = train(GanVariant.SUPERVISED, ts, cfg)
        van = train(GanVariant.VANILLA, ts, cfg)
        assert sup.generator.dims == van.generator.dims
        assert sup.generator.activations == van.generator.activations
        assert sup.discriminator.in_dim == van.discriminator.in_dim + 1

    def test_lr_schedule_applied_to_generator(self):
        ts = small_training_set(GBM, n=1000)
        cfg = TrainConfig(batch_size=100, epochs=2, seed=6, eval_every=1000,
                          eval_n=100, lr_decay_interval=10)
        res = train(GanVariant.VANILLA, ts, cfg)
        assert res.log.lr_g[0] == pytest.approx(1e-4)
        assert res.log.lr_g[-1] == pytest.approx(1e-4 / 1.05, rel=1e-12)

    def test_epoch_callback_invoked(self):
        ts = small_training_set(GBM, n=500)
        seen = []
        train(GanVariant.VANILLA, ts,
              TrainConfig(batch_size=100, epochs=3, seed=7, eval_every=1000, eval_n=100),
              epoch_callback=lambda epoch, g, d, log: seen.append(epoch))
        assert seen == [0, 1, 2]

    def test_log_csv(self, tmp_path):
        ts = small_training_set(GBM, n=500)
        res = train(GanVariant.SUPERVISED, ts,
                    TrainConfig(batch_size=100, epochs=1, seed=8, eval_every=2,
                                eval_n=100))
        path = tmp_path / "log.csv"
        res.log.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# variant=supervised")
        assert lines[1] == "iteration,d_loss,g_loss,lr_g,ks,w1"
        # eval every 2 iterations: odd rows have empty ks/w1 fields
        assert lines[2].endswith(",,")
        assert not lines[3].endswith(",,")

    def test_divergence_guard(self):
        from sdegan.gan import TrainingDiverged

        ts = small_training_set(GBM, n=500)
        # an absurd discriminator learning rate blows the logits up fast
        cfg = TrainConfig(batch_size=100, epochs=5, seed=10, eval_every=2,
                          eval_n=100, lr_d=1e25, lr_g=1e25)
        with pytest.raises(TrainingDiverged):
            train(GanVariant.SUPERVISED, ts, cfg)

    def test_held_out_data_reproducible(self):
        ts = small_training_set(CIR, n=500)
        cfg = TrainConfig(batch_size=100, epochs=1, seed=9, eval_n=300)
        a = held_out_eval_data(ts.model, ts.gbm_s_t, cfg)
        b = held_out_eval_data(ts.model, ts.gbm_s_t, cfg)
        assert a[0] == b[0] and a[1] == b[1]
        assert np.array_equal(a[2], b[2])
        assert np.array_equal(a[3], b[3])
        assert a[1] == 0.1  # CIR monitoring condition
