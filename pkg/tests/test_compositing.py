"""Composition equation and residual check."""

import numpy as np
import pytest

from genmatte.compositing import composite, image_buffer, residual
from genmatte.errors import ShapeError
from genmatte.trainer import make_synthetic_dataset


class TestComposite:
    def test_alpha_one_gives_fg(self):
        fg = image_buffer(np.random.default_rng(0).uniform(0, 1, (3, 4, 4)))
        bg = image_buffer(np.random.default_rng(1).uniform(0, 1, (3, 4, 4)))
        np.testing.assert_array_equal(composite(np.ones((1, 4, 4)), fg, bg), fg)

    def test_alpha_zero_gives_bg(self):
        fg = image_buffer(np.full((3, 2, 2), 0.9))
        bg = image_buffer(np.full((3, 2, 2), 0.1))
        np.testing.assert_array_equal(composite(np.zeros((1, 2, 2)), fg, bg), bg)

    def test_half_alpha_midpoint(self):
        out = composite(np.full((1, 2, 2), 0.5), np.ones((3, 2, 2)), np.zeros((3, 2, 2)))
        np.testing.assert_allclose(out, 0.5)

    def test_affine_in_alpha(self):
        rng = np.random.default_rng(2)
        fg = rng.uniform(0, 1, (3, 3, 3))
        bg = rng.uniform(0, 1, (3, 3, 3))
        a1 = rng.uniform(0, 1, (1, 3, 3))
        a2 = rng.uniform(0, 1, (1, 3, 3))
        lam = 0.3
        lhs = composite(lam * a1 + (1 - lam) * a2, fg, bg)
        rhs = lam * composite(a1, fg, bg) + (1 - lam) * composite(a2, fg, bg)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            composite(np.zeros((1, 2, 2)), np.zeros((3, 2, 2)), np.zeros((3, 2, 3)))
        with pytest.raises(ShapeError):
            image_buffer(np.zeros((2, 2, 2)))


class TestResidual:
    def test_zero_for_composited(self):
        rng = np.random.default_rng(3)
        alpha = rng.uniform(0, 1, (1, 4, 4))
        fg = rng.uniform(0, 1, (3, 4, 4))
        bg = rng.uniform(0, 1, (3, 4, 4))
        c = composite(alpha, fg, bg)
        assert residual(c, alpha, fg, bg) == 0.0

    def test_alpha_perturbation_linearity(self):
        alpha = np.full((1, 2, 2), 0.4)
        fg = np.ones((3, 2, 2))
        bg = np.zeros((3, 2, 2))
        c = composite(alpha, fg, bg)
        assert residual(c, alpha + 0.1, fg, bg) == pytest.approx(0.1, abs=1e-12)

    def test_equal_fg_bg_makes_alpha_irrelevant(self):
        rng = np.random.default_rng(4)
        fg = rng.uniform(0, 1, (3, 3, 3))
        c = fg + 0.05
        r1 = residual(c, np.zeros((1, 3, 3)), fg, fg)
        r2 = residual(c, np.ones((1, 3, 3)), fg, fg)
        assert r1 == pytest.approx(r2, abs=1e-12)
        assert r1 == pytest.approx(0.05, abs=1e-12)


def test_synthetic_dataset_composition_closure():
    # the data generator builds images as exact compositions
    for s in make_synthetic_dataset(4, 16, 16, seed=5, kind="matting"):
        assert residual(s.image, s.matte, s.fg, s.bg) == pytest.approx(0.0, abs=1e-12)
        assert s.matte.min() >= 0.0 and s.matte.max() <= 1.0
