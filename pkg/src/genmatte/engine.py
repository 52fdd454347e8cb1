"""Engine facade shared by the CLI and the HTTP service.

Owns the schedule, codecs, embedder and denoiser built from an
EngineConfig, translates user guidance (trimap / mask / scribbles /
prompt) into latent guides at the LR raster, and runs the two-path
pipeline.  All randomness flows from the request seed, so identical
(image, config, seed) gives identical output bytes.
"""

import threading
from dataclasses import replace

import numpy as np

from genmatte import guidance as guidance_mod
from genmatte import hires, imgio
from genmatte.codec import LatentCodec
from genmatte.config import EngineConfig
from genmatte.denoiser import (TARGET_FUNCTIONS, GaussianOracle, ProceduralOracle,
                               TextEmbedder, ToyMlpDenoiser)
from genmatte.errors import ConfigError, ShapeError, ValidationError
from genmatte.sampler import SamplerConfig
from genmatte.schedule import make_schedule
from genmatte.tensor import Tensor3, resize_nearest

SPATIAL_GUIDE_KINDS = ("trimap", "mask", "scribbles")
HR_DETAIL_PROMPT = "enhance details"


class MattingEngine:
    def __init__(self, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        sc = self.config.schedule
        self.schedule = make_schedule(sc.T, sc.beta_start, sc.beta_end, sc.kind)
        cc = self.config.codec
        self.matte_codec = LatentCodec(cc.f, 1, cc.matte_mix_seed)
        self._image_codecs = {
            1: LatentCodec(cc.f, 1, cc.image_mix_seed),
            3: LatentCodec(cc.f, 3, cc.image_mix_seed),
        }
        dn = self.config.denoiser
        self.embedder = TextEmbedder(dn.d_txt, dn.text_table_seed)
        self._denoisers = {}
        self._lock = threading.Lock()
        self._mlp = None
        if dn.kind == "mlp":
            self._mlp = ToyMlpDenoiser.load(dn.weights_path)

    # -- component access --------------------------------------------------

    def image_codec(self, channels: int) -> LatentCodec:
        if channels not in self._image_codecs:
            raise ShapeError(f"images must have 1 or 3 channels, got {channels}")
        return self._image_codecs[channels]

    def denoiser_for(self, channels: int, kind: str | None = None):
        dn = self.config.denoiser
        kind = kind or dn.kind
        key = (kind, channels)
        with self._lock:
            if key in self._denoisers:
                return self._denoisers[key]
            if kind == "gaussian":
                d = GaussianOracle(dn.gaussian_mu, dn.gaussian_s2, self.schedule)
            elif kind == "procedural":
                if dn.target not in TARGET_FUNCTIONS:
                    raise ConfigError(
                        f"unknown procedural target {dn.target!r}; "
                        f"available: {sorted(TARGET_FUNCTIONS)}"
                    )
                d = ProceduralOracle(TARGET_FUNCTIONS[dn.target], self.matte_codec,
                                     self.image_codec(channels), self.schedule)
            elif kind == "mlp":
                d = self._mlp
            else:
                raise ConfigError(f"unknown denoiser kind {kind!r}")
            self._denoisers[key] = d
            return d

    def sampler_config(self, steps: int | None = None, eta: float | None = None,
                       guidance_mode: str | None = None) -> SamplerConfig:
        sp = self.config.sampler
        return SamplerConfig.create(
            self.schedule.T,
            steps=steps if steps is not None else sp.steps,
            eta=eta if eta is not None else sp.eta,
            guidance_mode=guidance_mode if guidance_mode is not None else sp.guidance_mode,
        )

    # -- guidance ----------------------------------------------------------

    def _guide_fn(self, guidance: dict, image_hw, padded_hw):
        """Closure mapping LR canvas dims to a GuidanceLatent."""
        kinds = [k for k in SPATIAL_GUIDE_KINDS if k in guidance]
        if len(kinds) != 1:
            raise ValidationError(
                f"exactly one spatial guidance kind required, got {kinds or 'none'}"
            )
        kind = kinds[0]
        payload = guidance[kind]

        def build(lr_hw):
            scale_y = lr_hw[0] / padded_hw[0]
            scale_x = lr_hw[1] / padded_hw[1]
            if kind == "scribbles":
                strokes = _scaled_strokes(payload, scale_x, scale_y)
                guide = guidance_mod.scribble_guide(strokes, lr_hw[0], lr_hw[1])
            else:
                img = payload
                if img.shape[1:] != image_hw:
                    raise ValidationError(
                        f"guidance dims {img.shape[1:]} != image dims {image_hw}"
                    )
                padded, _ = imgio.pad_to_multiple(img, _pad_multiple(self.matte_codec.f))
                small = resize_nearest(padded, lr_hw)
                if kind == "trimap":
                    # 8-bit files carry 0.5 as 128/255; snap within the
                    # quantization step
                    guide = guidance_mod.trimap_guide(small, tol=2.0 / 255.0)
                elif guidance.get("literal"):
                    guide = guidance_mod.mask_guide(small)
                else:
                    guide = guidance_mod.coarse_mask_guide(
                        small, int(guidance.get("band", 16)))
            return guidance_mod.guide_latent(guide, self.matte_codec)

        return build

    # -- main entry ----------------------------------------------------------

    def matte(self, image: Tensor3, *, hr: bool = False, seed: int = 0,
              guidance: dict | None = None, prompt: str | None = None,
              diagnostics: bool = False, steps: int | None = None,
              eta: float | None = None, guidance_mode: str | None = None,
              ensemble: int | None = None, patch_size: int | None = None,
              overlap: int | None = None, oracle: str | None = None) -> hires.MatteResult:
        """Run the pipeline on a [0,1] image tensor; returns a MatteResult."""
        image = np.asarray(image, dtype=np.float64)
        if image.ndim != 3 or image.shape[0] not in (1, 3):
            raise ShapeError(f"image must be (1|3,H,W), got shape {image.shape}")
        if not np.all(np.isfinite(image)):
            raise ValidationError("image contains non-finite values")
        image = np.clip(image, 0.0, 1.0)
        denoiser = self.denoiser_for(image.shape[0], kind=oracle)
        if isinstance(denoiser, ToyMlpDenoiser):
            image = _match_mlp_channels(image, denoiser, self.matte_codec.f)
        params = self.config.hires
        over = {}
        if ensemble is not None:
            over["ensemble_size"] = ensemble
        if patch_size is not None:
            over["patch_size"] = patch_size
        if overlap is not None:
            over["overlap"] = overlap
        if over:
            params = replace(params, **over)
        if not hr and not diagnostics:
            params = replace(params, ensemble_size=1)
        cfg = self.sampler_config(steps, eta, guidance_mode)
        pad_mult = _pad_multiple(self.matte_codec.f)
        padded_hw = tuple(-(-d // pad_mult) * pad_mult for d in image.shape[1:])
        guide_fn = (self._guide_fn(guidance, image.shape[1:], padded_hw)
                    if guidance else None)
        text = self.embedder.embed_prompt(prompt) if prompt else None
        hr_text = self.embedder.embed_prompt(HR_DETAIL_PROMPT) if prompt else None
        return hires.matte_hr(
            image, denoiser, self.matte_codec, self.image_codec(image.shape[0]),
            self.schedule, cfg, params, seed, refine=hr, lr_guide_fn=guide_fn,
            text=text, hr_text=hr_text,
        )


def _pad_multiple(f: int) -> int:
    return hires.LATENT_MULTIPLE * f


def _scaled_strokes(doc, scale_x: float, scale_y: float):
    if not isinstance(doc, dict) or "strokes" not in doc:
        raise ValidationError("scribble document must be {'strokes': [...]}")
    strokes = []
    for s in doc["strokes"]:
        if not isinstance(s, dict):
            raise ValidationError("each stroke must be an object")
        pts = [[float(p[0]) * scale_x, float(p[1]) * scale_y] for p in s.get("points", [])]
        strokes.append({
            "label": s.get("label"),
            "radius": max(1.0, float(s.get("radius", 1.0)) * (scale_x + scale_y) / 2.0),
            "points": pts,
        })
    return strokes


def _match_mlp_channels(image: Tensor3, mlp: ToyMlpDenoiser, f: int) -> Tensor3:
    """Promote gray to RGB when the trained model expects RGB latents."""
    expect = mlp.d_cond // (f * f) if mlp.d_cond else image.shape[0]
    if expect == image.shape[0]:
        return image
    if image.shape[0] == 1 and expect == 3:
        return np.repeat(image, 3, axis=0)
    raise ShapeError(
        f"trained denoiser expects {expect}-channel images, got {image.shape[0]}"
    )
