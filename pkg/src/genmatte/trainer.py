"""Desk-scale training of the toy denoiser with hand-rolled gradients.

Plain SGD on the Monte-Carlo noise-prediction objective, optionally
combined with a pixel-space reconstruction term.  Everything is driven
by SeededRng streams, so a fixed seed reproduces the loss curve
bitwise.
"""

from dataclasses import dataclass, field

import numpy as np

from genmatte import codec as codec_mod
from genmatte.denoiser import DenoiserInput, TextEmbedder, ToyMlpDenoiser
from genmatte.errors import CapabilityError, ConfigError, TrainingError
from genmatte.sampler import implied_z0
from genmatte.schedule import DiffusionSchedule, q_sample
from genmatte.tensor import SeededRng, Tensor3, randn

PATCH_PROMPT = ("enhance", "details")


@dataclass
class TrainPair:
    image: Tensor3
    matte: Tensor3
    scale: str = "full"                 # "full" or "half"
    prompt: tuple | None = None

    def __post_init__(self):
        if self.image.shape[1:] != self.matte.shape[1:]:
            raise ConfigError("image and matte dims differ")
        if self.scale not in ("full", "half"):
            raise ConfigError(f"scale tag must be full|half, got {self.scale!r}")


@dataclass
class TrainBatch:
    pairs: list

    def __post_init__(self):
        if not self.pairs:
            raise ConfigError("batch must contain at least one pair")


@dataclass
class TrainConfig:
    lr: float = 1.0
    iters: int = 2000
    batch: int = 8
    seed: int = 0
    use_text: bool = False
    multi_scale: bool = True
    pixel_loss_weight: float = 0.0

    def __post_init__(self):
        if self.lr < 0:
            raise ConfigError(f"lr must be >= 0, got {self.lr}")
        if self.iters < 1:
            raise ConfigError(f"iters must be >= 1, got {self.iters}")
        if self.batch < 1:
            raise ConfigError(f"batch must be >= 1, got {self.batch}")


def _prepare(denoiser: ToyMlpDenoiser, batch: TrainBatch, schedule: DiffusionSchedule,
             rng: SeededRng, matte_codec, image_codec, embedder: TextEmbedder | None):
    """Draw (t, eps) per pair and assemble stacked site features.

    Returns per-pair records of (feature columns, noise target, t, z_t,
    matte); the draw order is pair-major: t first, then the noise field.
    """
    records = []
    for pair in batch.pairs:
        t = int(rng.randint(1, schedule.T + 1, 1)[0])
        z0 = codec_mod.encode(pair.matte, matte_codec)
        eps = randn(rng, z0.shape)
        z_t = q_sample(z0, t, eps, schedule)
        cond = codec_mod.encode(pair.image, image_codec)
        text = None
        if denoiser.d_txt:
            tokens = pair.prompt if pair.prompt else ()
            text = embedder.embed(list(tokens)) if embedder else np.zeros(denoiser.d_txt)
        cols = denoiser.features(DenoiserInput(z_t, cond, t, text))
        records.append({"cols": cols, "eps": eps, "t": t, "z_t": z_t, "matte": pair.matte})
    return records


def _pair_losses(denoiser, records, schedule, matte_codec, pixel_loss_weight,
                 want_grads: bool):
    total_cond = 0.0
    total_pix = 0.0
    grad_acc = None
    n = len(records)
    for rec in records:
        out, cache = denoiser.forward_features(rec["cols"])
        c, h, w = rec["eps"].shape
        eps_hat = out.T.reshape(c, h, w)
        diff = eps_hat - rec["eps"]
        total_cond += float(np.mean(diff * diff))
        d_eps = 2.0 * diff / diff.size / n
        if pixel_loss_weight != 0.0:
            ab = schedule.alpha_bar(rec["t"])
            z0_hat = implied_z0(rec["z_t"], eps_hat, ab)
            dec = codec_mod.decode(z0_hat, matte_codec)
            pix_diff = dec - rec["matte"]
            total_pix += float(np.mean(pix_diff * pix_diff))
            # adjoint of decode is encode (orthonormal codec); chain the
            # z0-from-eps slope -sqrt(1-ab)/sqrt(ab)
            d_pix = codec_mod.encode(2.0 * pix_diff / pix_diff.size, matte_codec)
            d_eps = d_eps + pixel_loss_weight * (-np.sqrt(1.0 - ab) / np.sqrt(ab)) * d_pix / n
        if want_grads:
            g = denoiser.backward_features(cache, d_eps.reshape(c, h * w).T)
            gv = denoiser.grads_flat(g)
            grad_acc = gv if grad_acc is None else grad_acc + gv
    return total_cond / n, total_pix / n, grad_acc


def loss_conditional(denoiser: ToyMlpDenoiser, batch: TrainBatch,
                     schedule: DiffusionSchedule, rng: SeededRng,
                     matte_codec, image_codec, embedder=None) -> float:
    """Monte-Carlo noise-prediction loss, mean over elements and pairs."""
    records = _prepare(denoiser, batch, schedule, rng, matte_codec, image_codec, embedder)
    cond, _, _ = _pair_losses(denoiser, records, schedule, matte_codec, 0.0, False)
    return cond


def loss_pixel(denoiser: ToyMlpDenoiser, batch: TrainBatch, schedule: DiffusionSchedule,
               rng: SeededRng, matte_codec, image_codec, embedder=None) -> float:
    """Reconstruction loss: MSE between decode(implied z0) and the matte."""
    records = _prepare(denoiser, batch, schedule, rng, matte_codec, image_codec, embedder)
    _, pix, _ = _pair_losses(denoiser, records, schedule, matte_codec, 1.0, False)
    return pix


def combined_loss(denoiser, batch, schedule, rng, matte_codec, image_codec,
                  pixel_loss_weight: float, embedder=None) -> float:
    records = _prepare(denoiser, batch, schedule, rng, matte_codec, image_codec, embedder)
    cond, pix, _ = _pair_losses(denoiser, records, schedule, matte_codec,
                                pixel_loss_weight, False)
    return cond + pixel_loss_weight * pix


def grad_loss(denoiser, batch: TrainBatch, schedule: DiffusionSchedule, rng: SeededRng,
              matte_codec, image_codec, pixel_loss_weight: float = 0.0,
              embedder=None) -> np.ndarray:
    """Gradient of the combined loss under the same rng draws as the loss."""
    if not isinstance(denoiser, ToyMlpDenoiser):
        raise CapabilityError("analytic gradients require the toy MLP denoiser")
    records = _prepare(denoiser, batch, schedule, rng, matte_codec, image_codec, embedder)
    _, _, grads = _pair_losses(denoiser, records, schedule, matte_codec,
                               pixel_loss_weight, True)
    return grads


@dataclass
class TrainResult:
    denoiser: ToyMlpDenoiser
    loss_curve: list = field(default_factory=list)


def _half_scale_crop(pair: TrainPair, rng: SeededRng, f: int) -> TrainPair:
    _, h, w = pair.image.shape
    ch, cw = max(f, (h // 2) // f * f), max(f, (w // 2) // f * f)
    if ch >= h and cw >= w:
        return pair
    y0 = int(rng.randint(0, (h - ch) // f + 1, 1)[0]) * f
    x0 = int(rng.randint(0, (w - cw) // f + 1, 1)[0]) * f
    return TrainPair(
        image=np.ascontiguousarray(pair.image[:, y0 : y0 + ch, x0 : x0 + cw]),
        matte=np.ascontiguousarray(pair.matte[:, y0 : y0 + ch, x0 : x0 + cw]),
        scale="half",
        prompt=PATCH_PROMPT,
    )


def train(denoiser: ToyMlpDenoiser, dataset, cfg: TrainConfig,
          schedule: DiffusionSchedule, matte_codec, image_codec,
          embedder: TextEmbedder | None = None) -> TrainResult:
    """Mini-batch SGD; batches mix full pairs and half-scale crops.

    Half-scale crops carry the patch prompt when use_text is on.
    Raises TrainingError with the iteration index if the loss stops
    being finite.
    """
    if not dataset:
        raise ConfigError("dataset must be non-empty")
    if cfg.use_text and not denoiser.d_txt:
        raise ConfigError("use_text requires a denoiser with text inputs")
    rng = SeededRng(cfg.seed)
    curve = []
    for it in range(cfg.iters):
        chosen = rng.randint(0, len(dataset), cfg.batch)
        pairs = []
        for i in chosen:
            pair = dataset[int(i)]
            if cfg.multi_scale and float(rng.uniforms(1)[0]) < 0.5:
                pair = _half_scale_crop(pair, rng, matte_codec.f)
            pairs.append(pair)
        batch = TrainBatch(pairs)
        # divergence shows up as float overflow before the NaN check fires;
        # suppress the transient warnings, the guard below reports it
        with np.errstate(over="ignore", invalid="ignore"):
            records = _prepare(denoiser, batch, schedule, rng, matte_codec,
                               image_codec, embedder if cfg.use_text else None)
            cond, pix, grads = _pair_losses(denoiser, records, schedule, matte_codec,
                                            cfg.pixel_loss_weight, True)
        loss = cond + cfg.pixel_loss_weight * pix
        if not np.isfinite(loss):
            raise TrainingError(f"loss diverged at iteration {it}")
        curve.append(loss)
        if cfg.lr > 0:
            params = denoiser.params_flat()
            denoiser.set_params_flat(params - cfg.lr * grads)
    return TrainResult(denoiser, curve)


# ---------------------------------------------------------------------------
# synthetic data


@dataclass(frozen=True)
class SyntheticSample:
    image: Tensor3
    matte: Tensor3
    fg: Tensor3 | None = None
    bg: Tensor3 | None = None


def _smooth_field(rng: SeededRng, channels: int, h: int, w: int) -> np.ndarray:
    """Low-frequency color field from random plane waves, clamped to [0,1]."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    out = np.zeros((channels, h, w))
    for c in range(channels):
        coeff = rng.uniforms(5)
        out[c] = (0.5 + 0.25 * np.sin(2 * np.pi * (coeff[0] * xx / w + coeff[1] * yy / h)
                                      + 2 * np.pi * coeff[2])
                  + 0.2 * (coeff[3] - 0.5) + 0.15 * np.cos(2 * np.pi * coeff[4] * xx / w))
    return np.clip(out, 0.0, 1.0)


def _disc_alpha(rng: SeededRng, h: int, w: int) -> np.ndarray:
    """Soft-edged discs plus hair-like polylines with Gaussian falloff."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    alpha = np.zeros((h, w))
    n_discs = 1 + int(rng.randint(0, 2, 1)[0])
    for _ in range(n_discs):
        u = rng.uniforms(4)
        cx, cy = u[0] * w, u[1] * h
        rad = (0.15 + 0.2 * u[2]) * min(h, w)
        edge = max(1.5, 0.15 * rad * (0.5 + u[3]))
        d = np.sqrt((xx - cx) ** 2 + (yy - cy) ** 2)
        alpha = np.maximum(alpha, np.clip((rad - d) / edge + 0.5, 0.0, 1.0))
    n_hairs = 2 + int(rng.randint(0, 3, 1)[0])
    for _ in range(n_hairs):
        u = rng.uniforms(6)
        x0, y0 = u[0] * w, u[1] * h
        ang = 2 * np.pi * u[2]
        length = (0.2 + 0.4 * u[3]) * min(h, w)
        x1, y1 = x0 + length * np.cos(ang), y0 + length * np.sin(ang)
        sigma = 0.6 + 1.2 * u[4]
        dx, dy = x1 - x0, y1 - y0
        L2 = max(dx * dx + dy * dy, 1e-9)
        t = np.clip(((xx - x0) * dx + (yy - y0) * dy) / L2, 0.0, 1.0)
        dist2 = (xx - (x0 + t * dx)) ** 2 + (yy - (y0 + t * dy)) ** 2
        alpha = np.maximum(alpha, (0.5 + 0.5 * u[5]) * np.exp(-dist2 / (2 * sigma * sigma)))
    return alpha


def make_synthetic_dataset(n: int, height: int, width: int, seed: int = 0,
                           kind: str = "matting", channels: int = 3):
    """Procedural (image, matte) pairs with exact ground truth.

    kind="matting": alpha from soft shapes, image composited from smooth
    foreground/background fields (the composition residual is zero by
    construction).  kind="threshold": grayscale shape image whose matte
    is its luminance thresholded at 0.5.
    """
    if kind not in ("matting", "threshold"):
        raise ConfigError(f"unknown dataset kind {kind!r}")
    rng = SeededRng(seed)
    samples = []
    for _ in range(n):
        alpha = _disc_alpha(rng, height, width)[None]
        if kind == "threshold":
            image = alpha.copy() if channels == 1 else np.repeat(alpha, 3, axis=0)
            matte = (alpha >= 0.5).astype(np.float64)
            samples.append(SyntheticSample(image=image, matte=matte))
        else:
            fg = _smooth_field(rng, channels, height, width)
            bg = _smooth_field(rng, channels, height, width)
            image = alpha * fg + (1.0 - alpha) * bg
            samples.append(SyntheticSample(image=image, matte=alpha, fg=fg, bg=bg))
    return samples


def dataset_pairs(samples, prompt=None):
    """TrainPair view of a synthetic sample list."""
    return [TrainPair(image=s.image, matte=s.matte, prompt=prompt) for s in samples]


def save_dataset(samples, directory) -> None:
    """Write paired image/matte files plus an index JSON."""
    import json
    from pathlib import Path

    from genmatte import imgio

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, s in enumerate(samples):
        img_name = f"image_{i:04d}.png"
        matte_name = f"matte_{i:04d}.png"
        imgio.save_image(directory / img_name, s.image,
                         bit_depth=8 if s.image.shape[0] == 3 else 16)
        imgio.save_image(directory / matte_name, s.matte, bit_depth=16)
        entries.append({"image": img_name, "matte": matte_name})
    (directory / "index.json").write_text(
        json.dumps({"pairs": entries}, indent=2), encoding="utf-8")


def load_dataset(directory):
    """Load TrainPairs from a directory written by save_dataset."""
    import json
    from pathlib import Path

    from genmatte import imgio

    directory = Path(directory)
    index = json.loads((directory / "index.json").read_text(encoding="utf-8"))
    pairs = []
    for entry in index["pairs"]:
        image = imgio.load_image(str(directory / entry["image"]))
        matte = imgio.load_image(str(directory / entry["matte"]))
        pairs.append(TrainPair(image=image, matte=matte[:1],
                               prompt=tuple(entry["prompt"]) if entry.get("prompt") else None))
    return pairs
