"""CLI behaviour: golden matte run, exit codes, diagnostics files."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from genmatte.cli import main
from genmatte.denoiser import TARGET_FUNCTIONS
from genmatte.imgio import load_image, save_image


@pytest.fixture()
def runner():
    return CliRunner()


def _write_test_image(path, h=32, w=48):
    rng = np.random.default_rng(7)
    img = rng.uniform(0.05, 0.95, (3, h, w))
    save_image(path, np.round(img * 255) / 255, bit_depth=8)
    return load_image(str(path))


class TestMatteCommand:
    def test_golden_procedural_hr(self, runner, tmp_path):
        # small input: no LR downscale happens, so the oracle pipeline must
        # reproduce the built-in target exactly up to PNG quantization
        inp = tmp_path / "in.png"
        img = _write_test_image(inp)
        result = runner.invoke(main, ["matte", str(inp), "--oracle", "procedural",
                                      "--hr", "--seed", "5"])
        assert result.exit_code == 0, result.output
        out = tmp_path / "in_alpha.png"
        assert out.exists()
        matte = load_image(str(out))
        target = TARGET_FUNCTIONS["luminance_softstep"](img)
        assert matte.shape == target.shape
        assert np.abs(matte - target).max() < 1e-3

    def test_lr_regime_steps_flag(self, runner, tmp_path):
        inp = tmp_path / "in.png"
        _write_test_image(inp, 16, 16)
        result = runner.invoke(main, ["matte", str(inp), "--oracle", "procedural",
                                      "--steps", "10"])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "in_alpha.png").exists()

    def test_missing_input_exit_3(self, runner, tmp_path):
        result = runner.invoke(main, ["matte", str(tmp_path / "absent.png"),
                                      "--oracle", "procedural"])
        assert result.exit_code == 3
        assert not list(tmp_path.glob("*_alpha.png"))

    def test_bad_config_exit_4(self, runner, tmp_path):
        inp = tmp_path / "in.png"
        _write_test_image(inp, 16, 16)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sampler": {"step": 1}}))
        result = runner.invoke(main, ["matte", str(inp), "--config", str(cfg),
                                      "--oracle", "procedural"])
        assert result.exit_code == 4

    def test_conflicting_guides_exit_2(self, runner, tmp_path):
        inp = tmp_path / "in.png"
        _write_test_image(inp, 16, 16)
        result = runner.invoke(main, ["matte", str(inp), "--trimap", str(inp),
                                      "--mask", str(inp)])
        assert result.exit_code == 2

    def test_diagnostics_files(self, runner, tmp_path):
        inp = tmp_path / "in.png"
        _write_test_image(inp)
        result = runner.invoke(main, ["matte", str(inp), "--oracle", "gaussian",
                                      "--hr", "--diagnostics", "--seeds", "4"])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "in_uncertainty.png").exists()
        plan = json.loads((tmp_path / "in_patches.json").read_text())
        assert "boxes" in plan and plan["latent_f"] == 8

    def test_custom_out_path(self, runner, tmp_path):
        inp = tmp_path / "in.png"
        _write_test_image(inp, 16, 16)
        out = tmp_path / "result.png"
        result = runner.invoke(main, ["matte", str(inp), "--oracle", "procedural",
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert out.exists()

    def test_seed_determinism(self, runner, tmp_path):
        inp = tmp_path / "in.png"
        _write_test_image(inp, 16, 16)
        blobs = []
        for name in ("a.png", "b.png"):
            out = tmp_path / name
            r = runner.invoke(main, ["matte", str(inp), "--oracle", "gaussian",
                                     "--seed", "9", "--out", str(out)])
            assert r.exit_code == 0, r.output
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]


class TestEvalCommand:
    def test_table_and_json(self, runner, tmp_path):
        a = tmp_path / "a.png"
        b = tmp_path / "b.png"
        save_image(a, np.full((1, 4, 4), 0.5), bit_depth=16)
        save_image(b, np.zeros((1, 4, 4)), bit_depth=16)
        r = runner.invoke(main, ["eval", str(a), str(b)])
        assert r.exit_code == 0 and "SAD" in r.output
        r = runner.invoke(main, ["eval", str(a), str(b), "--json"])
        payload = json.loads(r.output)
        assert payload["mse"] == pytest.approx(250.0, rel=1e-3)


class TestTrainCommand:
    def test_writes_weights(self, runner, tmp_path):
        out = tmp_path / "weights.bin"
        r = runner.invoke(main, ["train", "--out", str(out), "--iters", "10",
                                 "--pairs", "4", "--size", "16"])
        assert r.exit_code == 0, r.output
        assert out.exists()
        from genmatte.denoiser import ToyMlpDenoiser

        model = ToyMlpDenoiser.load(str(out))
        assert model.d_z == 4
