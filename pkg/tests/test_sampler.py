"""Ancestral sampling: init modes, step algebra, end-to-end oracles."""

import numpy as np
import pytest

from genmatte.codec import LatentCodec, decode, encode
from genmatte.denoiser import (TARGET_FUNCTIONS, GaussianOracle, ProceduralOracle)
from genmatte.errors import ConfigError, ShapeError, StepError
from genmatte.sampler import (GuidanceLatent, SamplerConfig, ancestral_step,
                              default_step_indices, init_state, sample)
from genmatte.schedule import make_schedule, q_sample
from genmatte.tensor import SeededRng, randn


class TestSamplerConfig:
    def test_default_indices(self):
        idx = default_step_indices(1000, 10)
        assert idx[0] == 1000 and idx[-1] == 1
        assert len(idx) == 10
        assert all(a > b for a, b in zip(idx, idx[1:]))

    def test_invariants_enforced(self):
        with pytest.raises(ConfigError):
            SamplerConfig((10, 5, 2))            # must end at 1
        with pytest.raises(ConfigError):
            SamplerConfig((5, 5, 1))             # strictly decreasing
        with pytest.raises(ConfigError):
            SamplerConfig((10, 1), eta=1.5)      # eta in [0,1]
        with pytest.raises(ConfigError):
            SamplerConfig((10, 1), guidance_mode="other")

    def test_steps_property(self):
        cfg = SamplerConfig.create(1000, steps=10)
        assert cfg.steps == len(cfg.step_indices) == 10


class TestInitState:
    def test_no_guide_is_pure_noise(self, schedule1000):
        cfg = SamplerConfig.create(1000, steps=10)
        a = init_state(cfg, schedule1000, None, SeededRng(3), shape=(1, 4, 4))
        b = randn(SeededRng(3), (1, 4, 4))
        assert np.array_equal(a, b)

    def test_literal_vs_normalized_algebra(self):
        # alpha_bar = 0.25: literal = sqrt(3) eps + g, normalized = sqrt(.75)
        # eps + 0.5 g, and normalized == sqrt(ab) * literal
        s = make_schedule(1, 0.75, 0.75)
        eps = randn(SeededRng(1), (2, 3, 3))
        g = randn(SeededRng(2), (2, 3, 3))
        guide = GuidanceLatent(g=g, m_unknown=np.zeros((1, 3, 3)))
        lit = init_state(SamplerConfig((1,), guidance_mode="literal"), s, guide,
                         SeededRng(1))
        norm = init_state(SamplerConfig((1,), guidance_mode="normalized"), s, guide,
                          SeededRng(1))
        np.testing.assert_allclose(lit, np.sqrt(3.0) * eps + g, atol=1e-12)
        np.testing.assert_allclose(norm, np.sqrt(0.75) * eps + 0.5 * g, atol=1e-12)
        np.testing.assert_allclose(norm, np.sqrt(0.25) * lit, rtol=1e-6)

    def test_all_unknown_mask_drops_guide(self, schedule1000):
        cfg = SamplerConfig.create(1000, steps=5)
        g = np.zeros((1, 4, 4))
        guide = GuidanceLatent(g=g, m_unknown=np.ones((1, 4, 4)))
        out = init_state(cfg, schedule1000, guide, SeededRng(9))
        ab = schedule1000.alpha_bar(1000)
        pure = np.sqrt(1 - ab) * randn(SeededRng(9), (1, 4, 4))
        np.testing.assert_allclose(out, pure, atol=1e-12)

    def test_guide_nonzero_on_unknown_rejected(self):
        g = np.ones((1, 2, 2))
        with pytest.raises(ShapeError):
            GuidanceLatent(g=g, m_unknown=np.ones((1, 2, 2)))

    def test_noise_floods_guide_high_frequencies(self, schedule1000):
        # band energy above half-Nyquist contributed by the guide is < 5%
        # of the band energy of the init state at the default T
        cfg = SamplerConfig.create(1000, steps=10)
        rng = np.random.default_rng(0)
        g = rng.uniform(0, 1, size=(1, 32, 32))
        guide = GuidanceLatent(g=g, m_unknown=np.zeros((1, 32, 32)))
        z_t = init_state(cfg, schedule1000, guide, SeededRng(5))
        ab = schedule1000.alpha_bar(1000)

        def band_energy(x):
            f = np.fft.fftshift(np.fft.fft2(x[0]))
            h, w = f.shape
            fy = np.fft.fftshift(np.fft.fftfreq(h))[:, None]
            fx = np.fft.fftshift(np.fft.fftfreq(w))[None, :]
            band = np.maximum(np.abs(fy), np.abs(fx)) > 0.25
            return float(np.sum(np.abs(f[band]) ** 2))

        guide_contrib = band_energy(np.sqrt(ab) * g)
        total = band_energy(z_t)
        assert guide_contrib / total < 0.05


class TestAncestralStep:
    def test_true_noise_one_step_inversion(self, schedule1000):
        # with eps_hat equal to the true noise, one step t -> 0 recovers z0
        z0 = randn(SeededRng(11), (1, 4, 4))
        eps = randn(SeededRng(12), (1, 4, 4))
        t = 640
        z_t = q_sample(z0, t, eps, schedule1000)
        out = ancestral_step(z_t, t, 0, eps, schedule1000, eta=0.0, rng=None)
        np.testing.assert_allclose(out, z0, atol=1e-6)

    def test_deterministic_at_eta_zero(self, schedule1000):
        z_t = randn(SeededRng(1), (2, 3, 3))
        eps = randn(SeededRng(2), (2, 3, 3))
        a = ancestral_step(z_t, 500, 250, eps, schedule1000, 0.0, None)
        b = ancestral_step(z_t, 500, 250, eps, schedule1000, 0.0, None)
        assert np.array_equal(a, b)

    def test_step_ordering_enforced(self, schedule1000):
        z = np.zeros((1, 2, 2))
        with pytest.raises(StepError):
            ancestral_step(z, 100, 100, z, schedule1000, 0.0, None)
        with pytest.raises(StepError):
            ancestral_step(z, 100, 200, z, schedule1000, 0.0, None)

    def test_variance_coefficients_consistent(self, schedule1000):
        # eta=1: ab_p * 1 + (1 - ab_p - v) + v == 1 - decomposition sanity
        ab_c = schedule1000.alpha_bar(500)
        ab_p = schedule1000.alpha_bar(250)
        v = (1 - ab_p) / (1 - ab_c) * (1 - ab_c / ab_p)
        assert 0 < v < 1 - ab_p


class TestSampleEndToEnd:
    def _procedural(self, schedule):
        mc = LatentCodec(2, 1, 11)
        ic = LatentCodec(2, 1, 22)
        oracle = ProceduralOracle(TARGET_FUNCTIONS["luminance_threshold"], mc, ic, schedule)
        return oracle, mc, ic

    def test_procedural_recovers_target_any_seed(self, schedule1000):
        oracle, mc, ic = self._procedural(schedule1000)
        img = np.clip(randn(SeededRng(21), (1, 16, 16)) * 0.3 + 0.5, 0, 1)
        target = TARGET_FUNCTIONS["luminance_threshold"](img)
        cond = encode(img, ic)
        cfg = SamplerConfig.create(1000, steps=10, eta=1.0)
        for seed in (0, 1, 99):
            z0 = sample(oracle, cond, cfg, schedule1000, SeededRng(seed),
                        latent_shape=(4, 8, 8))
            matte = decode(z0, mc)
            assert np.abs(matte - target).max() < 1e-3

    def test_same_seed_identical(self, schedule1000):
        oracle = GaussianOracle(np.zeros((1, 2, 2)), 0.5, schedule1000)
        cfg = SamplerConfig.create(1000, steps=10, eta=1.0)
        a = sample(oracle, None, cfg, schedule1000, SeededRng(5), latent_shape=(1, 2, 2))
        b = sample(oracle, None, cfg, schedule1000, SeededRng(5), latent_shape=(1, 2, 2))
        assert np.array_equal(a, b)

    def test_different_seeds_differ_with_stochastic_oracle(self, schedule1000):
        oracle = GaussianOracle(np.zeros((1, 2, 2)), 0.5, schedule1000)
        cfg = SamplerConfig.create(1000, steps=10, eta=1.0)
        a = sample(oracle, None, cfg, schedule1000, SeededRng(5), latent_shape=(1, 2, 2))
        b = sample(oracle, None, cfg, schedule1000, SeededRng(6), latent_shape=(1, 2, 2))
        assert np.any(a != b)

    def test_guidance_mode_identity_for_invariant_denoisers(self, schedule1000):
        # denoisers whose z0-prediction ignores z_t scale (procedural, and
        # gaussian with a point mass) give the same final z0 in both modes
        oracle, mc, ic = self._procedural(schedule1000)
        img = np.clip(randn(SeededRng(31), (1, 8, 8)) * 0.3 + 0.5, 0, 1)
        cond = encode(img, ic)
        g = encode(np.full((1, 8, 8), 0.5), mc)
        guide = GuidanceLatent(g=g, m_unknown=np.zeros((1, 4, 4)))
        outs = {}
        for mode in ("literal", "normalized"):
            cfg = SamplerConfig.create(1000, steps=10, eta=0.0, guidance_mode=mode)
            outs[mode] = sample(oracle, cond, cfg, schedule1000, SeededRng(7), guide=guide)
        assert np.abs(outs["literal"] - outs["normalized"]).max() < 1e-5

    def test_gaussian_moments_quick(self, schedule1000):
        # small version of the acceptance criterion: batched scalar chains
        oracle = GaussianOracle(np.full((1, 1, 1), 0.7), 0.04, schedule1000)
        cfg = SamplerConfig.create(1000, steps=10, eta=1.0)
        vals = []
        for seed in range(2000):
            z = sample(oracle, None, cfg, schedule1000, SeededRng(seed),
                       latent_shape=(1, 1, 1))
            vals.append(z[0, 0, 0])
        vals = np.asarray(vals)
        assert abs(vals.mean() - 0.7) < 0.02
        assert abs(vals.var() - 0.04) / 0.04 < 0.20
