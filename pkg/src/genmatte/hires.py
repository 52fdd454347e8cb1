"""High-resolution path: LR ensemble, uncertainty map, patch plan,
shared-noise patch refinement, per-step collage merge, final fusion.

Latent-space boxes are refined with noise cropped from full-canvas
fields so overlapping patches see identical stochastic inputs; per-site
denoisers then produce identical values on overlaps and dense tiling is
exactly equivalent to full-frame sampling.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from genmatte import codec as codec_mod
from genmatte import sampler as sampler_mod
from genmatte.denoiser import Denoiser, DenoiserInput
from genmatte.errors import ConfigError, EnsembleError, InternalError, ShapeError
from genmatte.schedule import DiffusionSchedule
from genmatte.tensor import (PatchBox, SeededRng, Tensor3, crop, derive_seed,
                             randn, resize_bilinear, resize_nearest, uncrop)

# latent grids are kept at multiples of this so patch grids and pooling
# stay aligned; pixel padding therefore targets LATENT_MULTIPLE * f
LATENT_MULTIPLE = 8


@dataclass(frozen=True)
class UncertaintyMap:
    """Per-pixel population std over the LR ensemble, at LR matte scale."""

    grid: Tensor3

    def __post_init__(self):
        if self.grid.ndim != 3 or self.grid.shape[0] != 1:
            raise ShapeError(f"uncertainty grid must be (1,H,W), got {self.grid.shape}")
        if np.any(self.grid < 0):
            raise ShapeError("uncertainty values must be >= 0")


@dataclass(frozen=True)
class PatchPlan:
    """Latent-space boxes selected for refinement plus coverage counts."""

    boxes: tuple
    patch_size: int
    overlap: int
    coverage: Tensor3

    @property
    def empty(self) -> bool:
        return len(self.boxes) == 0

    def site_count(self) -> int:
        return int(sum(b.w * b.h for b in self.boxes))

    def to_dict(self) -> dict:
        return {
            "patch_size": self.patch_size,
            "overlap": self.overlap,
            "boxes": [b.to_dict() for b in self.boxes],
        }


@dataclass(frozen=True)
class EnsembleResult:
    """L low-resolution predictions with their latents and seeds."""

    mattes: tuple
    latents: tuple
    seeds: tuple

    @property
    def size(self) -> int:
        return len(self.mattes)


def lr_ensemble(image: Tensor3, denoiser: Denoiser, matte_codec: codec_mod.LatentCodec,
                image_codec: codec_mod.LatentCodec, cfg: sampler_mod.SamplerConfig,
                schedule: DiffusionSchedule, L: int, base_seed: int,
                guide: sampler_mod.GuidanceLatent | None = None,
                text: np.ndarray | None = None) -> EnsembleResult:
    """L independent samples with child seeds; mattes clamped to [0, 1]."""
    if L < 1:
        raise ConfigError(f"ensemble size must be >= 1, got {L}")
    cond = codec_mod.encode(image, image_codec)
    latent_shape = (matte_codec.latent_channels, cond.shape[1], cond.shape[2])
    mattes, latents, seeds = [], [], []
    for member in range(L):
        seed = derive_seed(base_seed, member)
        rng = SeededRng(seed)
        z0 = sampler_mod.sample(denoiser, cond, cfg, schedule, rng,
                                guide=guide, text=text, latent_shape=latent_shape)
        matte = np.clip(codec_mod.decode(z0, matte_codec), 0.0, 1.0)
        mattes.append(matte)
        latents.append(z0)
        seeds.append(seed)
    return EnsembleResult(tuple(mattes), tuple(latents), tuple(seeds))


def uncertainty(e: EnsembleResult) -> UncertaintyMap:
    """Per-pixel population standard deviation over the ensemble mattes."""
    if e.size < 2:
        raise EnsembleError(f"uncertainty needs an ensemble of >= 2, got {e.size}")
    stack = np.stack([m[0] for m in e.mattes], axis=0)
    return UncertaintyMap(np.std(stack, axis=0)[None])


def representative_member(e: EnsembleResult) -> int:
    """Index of the matte closest (mean L1) to the pixel-space ensemble mean."""
    stack = np.stack([m[0] for m in e.mattes], axis=0)
    mean = stack.mean(axis=0)
    dists = [float(np.mean(np.abs(m - mean))) for m in stack]
    return int(np.argmin(dists))


def _disk(radius: int) -> np.ndarray:
    yy, xx = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    return (yy * yy + xx * xx) <= radius * radius


def select_patches(u: UncertaintyMap, tau: float, patch_size: int, overlap: int,
                   codec_f: int, dilate_radius: int = 3) -> PatchPlan:
    """Cover every flagged latent site with patch-size boxes on a stride.

    Pixels with u >= tau are flagged, dilated by dilate_radius, pooled
    to latent sites (any flagged pixel flags its site), then covered by
    boxes laid on a stride of (patch_size - overlap), keeping only boxes
    that intersect flagged sites.  Border boxes are clamped to the
    canvas, so every grid box keeps >= overlap sites in common with its
    neighbour where both are kept.
    """
    if tau <= 0:
        raise ConfigError(f"tau must be > 0, got {tau}")
    if not patch_size > overlap >= 0:
        raise ConfigError(f"need patch_size > overlap >= 0, got {patch_size}, {overlap}")
    _, h_px, w_px = u.grid.shape
    if h_px % codec_f or w_px % codec_f:
        raise ShapeError(f"uncertainty dims {h_px}x{w_px} not divisible by f={codec_f}")
    h_lat, w_lat = h_px // codec_f, w_px // codec_f
    coverage = np.zeros((1, h_lat, w_lat), dtype=np.float64)
    flagged_px = u.grid[0] >= tau
    if not flagged_px.any():
        return PatchPlan((), patch_size, overlap, coverage)
    if dilate_radius > 0:
        flagged_px = ndimage.binary_dilation(flagged_px, structure=_disk(dilate_radius))
    flagged_lat = flagged_px.reshape(h_lat, codec_f, w_lat, codec_f).max(axis=(1, 3))
    stride = patch_size - overlap
    boxes = []
    for y0 in range(0, h_lat, stride):
        bh = min(patch_size, h_lat - y0)
        for x0 in range(0, w_lat, stride):
            bw = min(patch_size, w_lat - x0)
            if flagged_lat[y0 : y0 + bh, x0 : x0 + bw].any():
                box = PatchBox(x0, y0, bw, bh)
                boxes.append(box)
                coverage[0, y0 : y0 + bh, x0 : x0 + bw] += 1.0
    return PatchPlan(tuple(boxes), patch_size, overlap, coverage)


@dataclass
class NoiseField:
    """Full-canvas standard-normal field per step index, derived from one seed.

    Field i belongs to step_indices[i]: field 0 seeds the initial state,
    field i > 0 supplies the stochastic term of the transition entering
    step_indices[i].  Patch noise is always a crop of these fields, so
    overlapping patches agree exactly on their overlap.
    """

    latent_shape: tuple
    step_indices: tuple
    seed: int
    _fields: dict = field(default_factory=dict, repr=False)

    def field_at(self, i: int) -> Tensor3:
        if not 0 <= i < len(self.step_indices):
            raise ShapeError(f"field index {i} outside 0..{len(self.step_indices) - 1}")
        if i not in self._fields:
            rng = SeededRng(derive_seed(self.seed, i))
            self._fields[i] = randn(rng, self.latent_shape)
        return self._fields[i]

    def crop_at(self, i: int, box: PatchBox) -> Tensor3:
        return crop(self.field_at(i), box)


def shared_noise(latent_shape, step_indices, seed: int) -> NoiseField:
    """Noise fields shared by all patches of one refinement pass."""
    return NoiseField(tuple(latent_shape), tuple(step_indices), seed)


def _feather_weights(box: PatchBox, canvas_hw, overlap: int) -> np.ndarray:
    """Per-site weights ramping linearly over overlap/2 sites from each
    box edge; edges flush with the canvas border keep full weight.
    Weights stay strictly positive so coverage implies nonzero mass."""
    h, w = canvas_hw
    half = overlap // 2
    wy = np.ones(box.h)
    wx = np.ones(box.w)
    if half > 0:
        ramp = (np.arange(half) + 1.0) / (half + 1.0)
        if box.y > 0:
            wy[:half] = np.minimum(wy[:half], ramp[: box.h])
        if box.y + box.h < h:
            wy[-half:] = np.minimum(wy[-half:], ramp[: box.h][::-1])
        if box.x > 0:
            wx[:half] = np.minimum(wx[:half], ramp[: box.w])
        if box.x + box.w < w:
            wx[-half:] = np.minimum(wx[-half:], ramp[: box.w][::-1])
    return wy[:, None] * wx[None, :]


def merge_collage(patches, canvas_hw, weights: str = "uniform", overlap: int = 0,
                  background: float = 0.0) -> Tensor3:
    """Coverage-normalized weighted average of uncropped patches.

    Sites outside every box take the background value.  weights is
    'uniform' (1 inside each box) or 'feathered' (linear ramp over
    overlap/2 sites at interior box edges).
    """
    if weights not in ("uniform", "feathered"):
        raise ConfigError(f"weights must be 'uniform' or 'feathered', got {weights!r}")
    if not patches:
        raise ConfigError("merge_collage needs at least one patch")
    channels = patches[0][0].shape[0]
    h, w = canvas_hw
    num = np.zeros((channels, h, w), dtype=np.float64)
    den = np.zeros((h, w), dtype=np.float64)
    covered = np.zeros((h, w), dtype=bool)
    for patch, box in patches:
        if patch.shape != (channels, box.h, box.w):
            raise ShapeError(f"patch shape {patch.shape} does not match box {box}")
        wgt = (_feather_weights(box, canvas_hw, overlap) if weights == "feathered"
               else np.ones((box.h, box.w)))
        num[:, box.y : box.y + box.h, box.x : box.x + box.w] += patch * wgt[None]
        den[box.y : box.y + box.h, box.x : box.x + box.w] += wgt
        covered[box.y : box.y + box.h, box.x : box.x + box.w] = True
    if np.any(covered & (den <= 0.0)):
        raise InternalError("zero total weight on a covered site")
    out = np.full((channels, h, w), background, dtype=np.float64)
    np.divide(num, den[None], out=out, where=(den > 0.0)[None])
    return out


def hr_refine(image_hr: Tensor3, lr_latent: Tensor3, plan: PatchPlan,
              denoiser: Denoiser, matte_codec: codec_mod.LatentCodec,
              image_codec: codec_mod.LatentCodec, cfg: sampler_mod.SamplerConfig,
              schedule: DiffusionSchedule, seed: int,
              text: np.ndarray | None = None, merge_weights: str = "feathered",
              guide_upsample: str = "bilinear") -> Tensor3:
    """Patch-wise reverse process over the plan; returns the merged clean latent.

    Every patch starts from its crop of the shared init field combined
    with its crop of the upsampled LR latent; every denoising step runs
    per patch, merges the stepped patches into a collage, and re-crops
    for the next step.
    """
    if plan.empty:
        raise ConfigError("hr_refine requires a non-empty patch plan")
    cond_full = codec_mod.encode(image_hr, image_codec)
    h_lat, w_lat = cond_full.shape[1:]
    canvas = (h_lat, w_lat)
    resize = resize_bilinear if guide_upsample == "bilinear" else resize_nearest
    guide_up = resize(lr_latent, canvas)
    shape = (matte_codec.latent_channels, h_lat, w_lat)
    noise = shared_noise(shape, cfg.step_indices, seed)
    ab0 = schedule.alpha_bar(cfg.step_indices[0])
    states = {}
    conds = {}
    for box in plan.boxes:
        eps = noise.crop_at(0, box)
        states[box] = sampler_mod.guided_init(eps, crop(guide_up, box), ab0, cfg.guidance_mode)
        conds[box] = crop(cond_full, box)
    idx = cfg.step_indices
    merged = None
    for i, t_cur in enumerate(idx):
        t_prev = idx[i + 1] if i + 1 < len(idx) else 0
        stepped = []
        for box in plan.boxes:
            eps_hat = denoiser.predict_eps(DenoiserInput(states[box], conds[box], t_cur, text))
            step_noise = noise.crop_at(i + 1, box) if (cfg.eta > 0 and t_prev > 0) else None
            nxt = sampler_mod.ancestral_step(states[box], t_cur, t_prev, eps_hat,
                                             schedule, cfg.eta, rng=None, noise=step_noise)
            stepped.append((nxt, box))
        merged = merge_collage(stepped, canvas, weights=merge_weights, overlap=plan.overlap)
        if t_prev > 0:
            for box in plan.boxes:
                states[box] = crop(merged, box)
    return merged


@dataclass(frozen=True)
class HiresParams:
    """Knobs of the high-resolution path."""

    ensemble_size: int = 8
    tau_floor: float = 0.05
    tau_percentile: float = 90.0
    dilate_radius: int = 3
    patch_size: int = 64
    overlap: int = 16
    feather_width: int = 8
    lr_long_side: int = 512
    hr_eta: float = 0.0
    merge_weights: str = "feathered"
    guide_upsample: str = "bilinear"

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise ConfigError("ensemble_size must be >= 1")
        if not self.patch_size > self.overlap >= 0:
            raise ConfigError("need patch_size > overlap >= 0")
        if self.tau_floor <= 0:
            raise ConfigError("tau_floor must be > 0")
        if not 0.0 <= self.hr_eta <= 1.0:
            raise ConfigError("hr_eta must lie in [0, 1]")
        if self.lr_long_side < 1:
            raise ConfigError("lr_long_side must be >= 1")


def tau_policy(u: UncertaintyMap, floor: float, percentile: float) -> float:
    """Threshold: at least `floor`, else the percentile of nonzero values."""
    nz = u.grid[u.grid > 0]
    if nz.size == 0:
        return floor
    return max(floor, float(np.percentile(nz, percentile)))


@dataclass
class MatteResult:
    """Pipeline output plus optional diagnostics."""

    matte: Tensor3
    uncertainty: UncertaintyMap | None
    plan: PatchPlan
    chosen_index: int
    lr_mattes: tuple
    latent_f: int
    lr_hw: tuple
    refined: bool


def _lr_dims(padded_hw, lr_long_side: int, pad_mult: int):
    h, w = padded_hw
    long = max(h, w)
    if long <= lr_long_side:
        return (h, w)
    scale = lr_long_side / long
    lh = max(pad_mult, int(round(h * scale / pad_mult)) * pad_mult)
    lw = max(pad_mult, int(round(w * scale / pad_mult)) * pad_mult)
    return (lh, lw)


def matte_hr(image_hr: Tensor3, denoiser: Denoiser, matte_codec: codec_mod.LatentCodec,
             image_codec: codec_mod.LatentCodec, schedule: DiffusionSchedule,
             lr_cfg: sampler_mod.SamplerConfig, params: HiresParams, seed: int,
             refine: bool = True, lr_guide_fn=None, text: np.ndarray | None = None,
             hr_text: np.ndarray | None = None) -> MatteResult:
    """Two-path matting: LR ensemble then uncertainty-driven patch refinement.

    Pads the input to the latent granularity, runs the LR ensemble at a
    reduced scale, selects high-uncertainty patches, refines them with
    shared noise at full scale, fuses with the upsampled LR latent, and
    decodes.  lr_guide_fn, when given, receives the LR canvas dims and
    returns the GuidanceLatent for the LR path.
    """
    from genmatte import imgio

    f = matte_codec.f
    pad_mult = LATENT_MULTIPLE * f
    padded, orig_hw = imgio.pad_to_multiple(image_hr, pad_mult)
    h_px, w_px = padded.shape[1:]
    lr_hw = _lr_dims((h_px, w_px), params.lr_long_side, pad_mult)
    image_lr = padded if lr_hw == (h_px, w_px) else resize_bilinear(padded, lr_hw)
    guide = lr_guide_fn(lr_hw) if lr_guide_fn is not None else None
    ens = lr_ensemble(image_lr, denoiser, matte_codec, image_codec, lr_cfg, schedule,
                      params.ensemble_size, derive_seed(seed, 1), guide=guide, text=text)
    chosen = representative_member(ens)
    u_map = uncertainty(ens) if ens.size >= 2 else None
    hr_lat_hw = (h_px // f, w_px // f)
    lr_latent = ens.latents[chosen]
    up = resize_bilinear if params.guide_upsample == "bilinear" else resize_nearest
    lr_latent_up = (lr_latent if lr_latent.shape[1:] == hr_lat_hw
                    else up(lr_latent, hr_lat_hw))
    plan = PatchPlan((), params.patch_size, params.overlap,
                     np.zeros((1,) + hr_lat_hw))
    if refine and u_map is not None:
        u_hr = UncertaintyMap(np.clip(resize_bilinear(u_map.grid, (h_px, w_px)), 0, None))
        tau = tau_policy(u_map, params.tau_floor, params.tau_percentile)
        plan = select_patches(u_hr, tau, params.patch_size, params.overlap, f,
                              params.dilate_radius)
    refined = not plan.empty
    if refined:
        hr_cfg = sampler_mod.SamplerConfig(lr_cfg.step_indices, eta=params.hr_eta,
                                           guidance_mode=lr_cfg.guidance_mode)
        z0_hr = hr_refine(padded, lr_latent, plan, denoiser, matte_codec, image_codec,
                          hr_cfg, schedule, derive_seed(seed, 2), text=hr_text,
                          merge_weights=params.merge_weights,
                          guide_upsample=params.guide_upsample)
        fused = fuse_final(z0_hr, lr_latent_up, plan, params.feather_width)
    else:
        fused = lr_latent_up
    matte = np.clip(codec_mod.decode(fused, matte_codec), 0.0, 1.0)
    matte = imgio.unpad(matte, orig_hw)
    return MatteResult(matte=matte, uncertainty=u_map, plan=plan, chosen_index=chosen,
                       lr_mattes=ens.mattes, latent_f=f, lr_hw=lr_hw, refined=refined)


def fuse_final(z0_hr: Tensor3, lr_latent_up: Tensor3, plan: PatchPlan,
               feather_width: int) -> Tensor3:
    """Blend refined and upsampled-LR latents through the coverage mask.

    The mask is the plan coverage indicator with a linear ramp of
    feather_width latent sites inward from the region border; an empty
    plan returns the LR latent unchanged.
    """
    if z0_hr.shape != lr_latent_up.shape:
        raise ShapeError(f"latent shapes differ: {z0_hr.shape} vs {lr_latent_up.shape}")
    cov = plan.coverage[0] > 0
    if not cov.any():
        return lr_latent_up.copy()
    if cov.all():
        dist = np.full(cov.shape, np.inf)
    else:
        dist = ndimage.distance_transform_edt(cov)
    if feather_width > 0:
        m = np.clip(dist / feather_width, 0.0, 1.0)
    else:
        m = cov.astype(np.float64)
    return m[None] * z0_hr + (1.0 - m[None]) * lr_latent_up
