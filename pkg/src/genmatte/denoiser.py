"""Noise-prediction models: analytic oracles and a trainable toy MLP.

Every denoiser maps (noisy matte latent, image latent, step, optional
text vector) to a predicted noise tensor with the matte latent's shape.
The two oracles make the sampling pipeline exactly testable: the
Gaussian oracle is the closed-form optimum for a Gaussian latent
population, and the procedural oracle pins the implied clean latent to
a known function of the conditioning image.
"""

import io
import struct
from dataclasses import dataclass

import numpy as np

from genmatte import codec as codec_mod
from genmatte.errors import CapabilityError, ConfigError, ShapeError, StepError
from genmatte.schedule import DiffusionSchedule
from genmatte.tensor import SeededRng, Tensor3, derive_seed

TIME_EMBED_DIM = 8


@dataclass
class DenoiserInput:
    """Inputs to one noise prediction."""

    z_t: Tensor3
    cond_latent: Tensor3 | None
    t: int
    text_cond: np.ndarray | None = None

    def validate(self, T: int | None = None) -> None:
        if self.cond_latent is not None and self.cond_latent.shape[1:] != self.z_t.shape[1:]:
            raise ShapeError(
                f"conditioning spatial dims {self.cond_latent.shape[1:]} "
                f"!= latent spatial dims {self.z_t.shape[1:]}"
            )
        if self.t < 1 or (T is not None and self.t > T):
            raise StepError(f"step {self.t} outside [1, {T}]")


class Denoiser:
    """Interface: predict the noise component of a noisy latent."""

    def predict_eps(self, inp: DenoiserInput) -> Tensor3:
        raise NotImplementedError

    def z0_posterior_std(self, t: int) -> float | None:
        """Exact posterior std of z0 given z_t, when the model knows it.

        Ordinary denoisers return None.  Oracles with a closed-form
        posterior return the per-element std so the sampler's
        stochastic mode can draw z0 from the posterior instead of
        collapsing it to the mean; without that completion, strided
        ancestral sampling systematically loses variance.
        """
        return None


def time_embedding(t: int, T: int, dim: int = TIME_EMBED_DIM) -> np.ndarray:
    """Sinusoidal expansion of the normalized step t/T."""
    tau = t / T
    out = np.empty(dim, dtype=np.float64)
    for j in range(dim // 2):
        out[2 * j] = np.sin(np.pi * tau * (2.0**j))
        out[2 * j + 1] = np.cos(np.pi * tau * (2.0**j))
    return out


class GaussianOracle(Denoiser):
    """Exact conditional-mean denoiser for z0 ~ N(mu, s2 * I).

    predict_eps returns E[eps | z_t] derived from the conjugate
    posterior mean E[z0 | z_t] = mu + (sqrt(ab) s2 / (ab s2 + 1 - ab))
    (z_t - sqrt(ab) mu).  Conditioning inputs are ignored.
    """

    def __init__(self, mu, s2: float, schedule: DiffusionSchedule):
        if s2 < 0:
            raise ConfigError(f"s2 must be >= 0, got {s2}")
        self.mu = np.asarray(mu, dtype=np.float64)
        self.s2 = float(s2)
        self.schedule = schedule

    def posterior_mean_z0(self, z_t: Tensor3, t: int) -> Tensor3:
        ab = self.schedule.alpha_bar(t)
        gain = np.sqrt(ab) * self.s2 / (ab * self.s2 + 1.0 - ab)
        return self.mu + gain * (z_t - np.sqrt(ab) * self.mu)

    def predict_eps(self, inp: DenoiserInput) -> Tensor3:
        inp.validate(self.schedule.T)
        ab = self.schedule.alpha_bar(inp.t)
        z0_hat = self.posterior_mean_z0(inp.z_t, inp.t)
        return (inp.z_t - np.sqrt(ab) * z0_hat) / np.sqrt(1.0 - ab)

    def z0_posterior_std(self, t: int) -> float:
        ab = self.schedule.alpha_bar(t)
        return float(np.sqrt(self.s2 * (1.0 - ab) / (ab * self.s2 + 1.0 - ab)))


class ProceduralOracle(Denoiser):
    """Denoiser whose implied clean latent is a known function of the input.

    z0* = encode(target_fn(decode(cond_latent))); the predicted noise is
    exactly (z_t - sqrt(ab) z0*) / sqrt(1 - ab), so any sampler built on
    the z0-parameterization recovers target_fn(input) regardless of the
    noise realization.  target_fn must be deterministic; per-pixel
    targets additionally commute with latent-space cropping, which the
    patch pipeline relies on.
    """

    def __init__(self, target_fn, matte_codec: codec_mod.LatentCodec,
                 image_codec: codec_mod.LatentCodec, schedule: DiffusionSchedule):
        self.target_fn = target_fn
        self.matte_codec = matte_codec
        self.image_codec = image_codec
        self.schedule = schedule

    def implied_z0(self, cond_latent: Tensor3) -> Tensor3:
        img = codec_mod.decode(cond_latent, self.image_codec)
        matte = np.asarray(self.target_fn(img), dtype=np.float64)
        if matte.ndim == 2:
            matte = matte[None]
        return codec_mod.encode(matte, self.matte_codec)

    def predict_eps(self, inp: DenoiserInput) -> Tensor3:
        inp.validate(self.schedule.T)
        if inp.cond_latent is None:
            raise ShapeError("procedural oracle requires a conditioning latent")
        ab = self.schedule.alpha_bar(inp.t)
        z0 = self.implied_z0(inp.cond_latent)
        if z0.shape[1:] != inp.z_t.shape[1:]:
            raise ShapeError(
                f"implied latent spatial dims {z0.shape[1:]} != z_t dims {inp.z_t.shape[1:]}"
            )
        return (inp.z_t - np.sqrt(ab) * z0) / np.sqrt(1.0 - ab)

    def z0_posterior_std(self, t: int) -> float:
        return 0.0


def _luminance(img: Tensor3) -> np.ndarray:
    if img.shape[0] == 3:
        return 0.2126 * img[0] + 0.7152 * img[1] + 0.0722 * img[2]
    return img[0]


def _target_constant_one(img: Tensor3) -> Tensor3:
    return np.ones((1,) + img.shape[1:], dtype=np.float64)


def _target_luminance_threshold(img: Tensor3) -> Tensor3:
    return (_luminance(img) >= 0.5).astype(np.float64)[None]


def _target_luminance_softstep(img: Tensor3) -> Tensor3:
    u = np.clip((_luminance(img) - 0.375) / 0.25, 0.0, 1.0)
    return (u * u * (3.0 - 2.0 * u))[None]


def _target_luminance_affine(img: Tensor3) -> Tensor3:
    return (0.1 + 0.8 * np.clip(_luminance(img), 0.0, 1.0))[None]


TARGET_FUNCTIONS = {
    "constant_one": _target_constant_one,
    "luminance_threshold": _target_luminance_threshold,
    "luminance_softstep": _target_luminance_softstep,
    "luminance_affine": _target_luminance_affine,
}


class TextEmbedder:
    """Deterministic toy text embedding: mean of per-token unit vectors."""

    def __init__(self, d_txt: int = 16, table_seed: int = 0x7E57AB1E):
        if d_txt < 1:
            raise ConfigError(f"d_txt must be >= 1, got {d_txt}")
        self.d_txt = d_txt
        self.table_seed = table_seed

    def _token_vector(self, token: str) -> np.ndarray:
        h = 0xCBF29CE484222325
        for byte in token.encode("utf-8"):
            h ^= byte
            h = (h * 0x100000001B3) & ((1 << 64) - 1)
        rng = SeededRng(derive_seed(self.table_seed, h))
        v = rng.normals(self.d_txt)
        return v / np.linalg.norm(v)

    def embed(self, tokens) -> np.ndarray:
        """Mean of token vectors; the empty list maps to the zero vector."""
        if not tokens:
            return np.zeros(self.d_txt, dtype=np.float64)
        return np.mean([self._token_vector(t) for t in tokens], axis=0)

    def embed_prompt(self, prompt: str) -> np.ndarray:
        return self.embed(prompt.split())


class ToyMlpDenoiser(Denoiser):
    """Per-spatial-site MLP with a block-structured first layer.

    The first layer keeps separate weight blocks for the noisy latent,
    the image-latent conditioning, the time embedding and the text
    vector, summed in a fixed order (latent, time, bias, conditioning,
    text).  Zero conditioning blocks therefore leave the computation of
    the unconditional model untouched down to the last bit, which is
    what makes the zero-init extension exact.

    With spatial_mixing=True the latent block reads the 3x3
    neighbourhood of each site (edge padded); that variant exists for
    seam experiments and supports inference only.
    """

    def __init__(self, d_z: int, d_cond: int, d_txt: int, hidden, T: int,
                 init_seed: int = 0, spatial_mixing: bool = False):
        if d_z < 1 or d_cond < 0 or d_txt < 0:
            raise ConfigError("invalid feature dims")
        hidden = tuple(int(h) for h in hidden)
        if not hidden or any(h < 1 for h in hidden):
            raise ConfigError(f"hidden widths must be non-empty positive, got {hidden}")
        self.d_z, self.d_cond, self.d_txt = d_z, d_cond, d_txt
        self.d_time = TIME_EMBED_DIM
        self.hidden = hidden
        self.T = T
        self.spatial_mixing = spatial_mixing
        self.init_seed = init_seed
        rng = SeededRng(derive_seed(init_seed, 0xD0))
        dz_in = d_z * (9 if spatial_mixing else 1)
        h1 = hidden[0]
        self.w_z = self._init_block(rng, dz_in, h1)
        self.w_time = self._init_block(rng, self.d_time, h1)
        self.w_cond = self._init_block(rng, d_cond, h1) if d_cond else None
        self.w_text = self._init_block(rng, d_txt, h1) if d_txt else None
        self.b1 = np.zeros(h1)
        self.layers = []
        dims = list(hidden) + [d_z]
        for a, b in zip(dims[:-1], dims[1:]):
            self.layers.append([self._init_block(rng, a, b), np.zeros(b)])

    @staticmethod
    def _init_block(rng: SeededRng, d_in: int, d_out: int) -> np.ndarray:
        return rng.normals(d_in * d_out).reshape(d_in, d_out) * np.sqrt(1.0 / max(d_in, 1))

    # -- feature assembly ------------------------------------------------

    def _z_features(self, z_t: Tensor3) -> np.ndarray:
        c, h, w = z_t.shape
        if not self.spatial_mixing:
            return z_t.reshape(c, h * w).T
        padded = np.pad(z_t, ((0, 0), (1, 1), (1, 1)), mode="edge")
        feats = [padded[:, dy : dy + h, dx : dx + w] for dy in range(3) for dx in range(3)]
        return np.concatenate(feats, axis=0).reshape(9 * c, h * w).T

    def features(self, inp: DenoiserInput) -> list:
        z = inp.z_t
        if z.shape[0] != self.d_z:
            raise ShapeError(f"expected {self.d_z} latent channels, got {z.shape[0]}")
        n = z.shape[1] * z.shape[2]
        cols = [self._z_features(z), np.tile(time_embedding(inp.t, self.T), (n, 1))]
        if self.d_cond:
            if inp.cond_latent is None:
                raise ShapeError("conditional model requires cond_latent")
            if inp.cond_latent.shape[0] != self.d_cond:
                raise ShapeError(
                    f"expected {self.d_cond} conditioning channels, "
                    f"got {inp.cond_latent.shape[0]}"
                )
            cols.append(inp.cond_latent.reshape(self.d_cond, n).T)
        if self.d_txt:
            text = inp.text_cond if inp.text_cond is not None else np.zeros(self.d_txt)
            if text.shape != (self.d_txt,):
                raise ShapeError(f"text vector must have shape ({self.d_txt},)")
            cols.append(np.tile(text, (n, 1)))
        return cols

    # -- forward / backward ----------------------------------------------

    def forward_features(self, cols):
        """Forward pass on assembled feature columns; returns (out, cache)."""
        z_feats = cols[0]
        h = z_feats @ self.w_z
        h = h + cols[1] @ self.w_time
        h = h + self.b1
        i = 2
        if self.d_cond:
            h = h + cols[i] @ self.w_cond
            i += 1
        if self.d_txt:
            h = h + cols[i] @ self.w_text
        acts = [np.tanh(h)]
        for j, (w, b) in enumerate(self.layers):
            h = acts[-1] @ w + b
            if j < len(self.layers) - 1:
                acts.append(np.tanh(h))
        return h, (cols, acts)

    def backward_features(self, cache, d_out):
        """Gradients of all parameters given d loss / d output."""
        if self.spatial_mixing:
            raise CapabilityError("spatial-mixing variant supports inference only")
        cols, acts = cache
        grads = {"layers": [None] * len(self.layers)}
        d = d_out
        for j in reversed(range(len(self.layers))):
            hin = acts[j]
            grads["layers"][j] = (hin.T @ d, d.sum(axis=0))
            d = (d @ self.layers[j][0].T) * (1.0 - hin * hin)
        grads["w_z"] = cols[0].T @ d
        grads["w_time"] = cols[1].T @ d
        grads["b1"] = d.sum(axis=0)
        i = 2
        if self.d_cond:
            grads["w_cond"] = cols[i].T @ d
            i += 1
        if self.d_txt:
            grads["w_text"] = cols[i].T @ d
        return grads

    def predict_eps(self, inp: DenoiserInput) -> Tensor3:
        inp.validate(self.T)
        out, _ = self.forward_features(self.features(inp))
        c, h, w = inp.z_t.shape
        return np.ascontiguousarray(out.T.reshape(self.d_z, h, w))

    # -- parameter vector ------------------------------------------------

    def _param_arrays(self):
        arrs = [self.w_z, self.w_time]
        if self.d_cond:
            arrs.append(self.w_cond)
        if self.d_txt:
            arrs.append(self.w_text)
        arrs.append(self.b1)
        for w, b in self.layers:
            arrs.extend([w, b])
        return arrs

    def params_flat(self) -> np.ndarray:
        return np.concatenate([a.reshape(-1) for a in self._param_arrays()])

    def set_params_flat(self, v: np.ndarray) -> None:
        arrs = self._param_arrays()
        total = sum(a.size for a in arrs)
        if v.shape != (total,):
            raise ShapeError(f"expected parameter vector of length {total}, got {v.shape}")
        off = 0
        for a in arrs:
            a[...] = v[off : off + a.size].reshape(a.shape)
            off += a.size

    def grads_flat(self, grads) -> np.ndarray:
        arrs = [grads["w_z"], grads["w_time"]]
        if self.d_cond:
            arrs.append(grads["w_cond"])
        if self.d_txt:
            arrs.append(grads["w_text"])
        arrs.append(grads["b1"])
        for gw, gb in grads["layers"]:
            arrs.extend([gw, gb])
        return np.concatenate([a.reshape(-1) for a in arrs])

    # -- serialization ---------------------------------------------------

    MAGIC = b"GMW1"
    VERSION = 1

    def save_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(self.MAGIC)
        buf.write(struct.pack(
            "<7I", self.VERSION, self.d_z, self.d_cond, self.d_txt,
            1 if self.spatial_mixing else 0, self.T, len(self.hidden),
        ))
        buf.write(struct.pack(f"<{len(self.hidden)}I", *self.hidden))
        for a in self._param_arrays():
            buf.write(np.asarray(a, dtype="<f4").tobytes())
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.save_bytes())

    @classmethod
    def load_bytes(cls, data: bytes) -> "ToyMlpDenoiser":
        if data[:4] != cls.MAGIC:
            raise ConfigError("not a toy-denoiser weight file (bad magic)")
        version, d_z, d_cond, d_txt, spatial, T, n_hidden = struct.unpack_from("<7I", data, 4)
        if version != cls.VERSION:
            raise ConfigError(f"unsupported weight file version {version}")
        off = 4 + 7 * 4
        hidden = struct.unpack_from(f"<{n_hidden}I", data, off)
        off += 4 * n_hidden
        model = cls(d_z, d_cond, d_txt, hidden, T, spatial_mixing=bool(spatial))
        for a in model._param_arrays():
            vals = np.frombuffer(data, dtype="<f4", count=a.size, offset=off)
            a[...] = vals.reshape(a.shape).astype(np.float64)
            off += 4 * a.size
        if off != len(data):
            raise ConfigError("weight file length mismatch")
        return model

    @classmethod
    def load(cls, path) -> "ToyMlpDenoiser":
        with open(path, "rb") as fh:
            return cls.load_bytes(fh.read())


def extend_conditional(d: ToyMlpDenoiser, d_cond: int, d_txt: int = 0) -> ToyMlpDenoiser:
    """Add zero-initialized conditioning inputs to an unconditional model.

    The returned model accepts (z_t, cond_latent, t, text) and computes
    bit-identically to d at initialization for every conditioning value;
    training then moves the new blocks away from zero.
    """
    if d.d_cond or d.d_txt:
        raise ConfigError("model already has conditioning inputs")
    if d_cond < 1:
        raise ConfigError("extension needs at least one conditioning channel")
    ext = ToyMlpDenoiser(d.d_z, d_cond, d_txt, d.hidden, d.T,
                         init_seed=d.init_seed, spatial_mixing=d.spatial_mixing)
    ext.w_z = d.w_z.copy()
    ext.w_time = d.w_time.copy()
    ext.b1 = d.b1.copy()
    ext.w_cond = np.zeros((d_cond, d.hidden[0]))
    if d_txt:
        ext.w_text = np.zeros((d_txt, d.hidden[0]))
    ext.layers = [[w.copy(), b.copy()] for w, b in d.layers]
    return ext
