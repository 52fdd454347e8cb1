"""Engine configuration: strict JSON with defaults.

Unknown keys are rejected so typos fail loudly; CLI flags override the
file.  The GENMATTE_CONFIG environment variable supplies a default
config path.
"""

import json
import os
from dataclasses import asdict, dataclass, field

from genmatte.errors import ConfigError
from genmatte.hires import HiresParams

ENV_CONFIG_PATH = "GENMATTE_CONFIG"

DENOISER_KINDS = ("procedural", "gaussian", "mlp")


@dataclass(frozen=True)
class ScheduleConfig:
    T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    kind: str = "linear"


@dataclass(frozen=True)
class CodecConfig:
    f: int = 8
    matte_mix_seed: int | None = 1001
    image_mix_seed: int | None = 2002


@dataclass(frozen=True)
class SamplerSection:
    steps: int = 10
    eta: float = 1.0
    guidance_mode: str = "normalized"


@dataclass(frozen=True)
class DenoiserSection:
    kind: str = "procedural"
    target: str = "luminance_softstep"   # procedural oracle target function
    gaussian_mu: float = 0.5
    gaussian_s2: float = 0.04
    weights_path: str | None = None      # toy-MLP weight file
    d_txt: int = 16
    text_table_seed: int = 0x7E57AB1E

    def __post_init__(self):
        if self.kind not in DENOISER_KINDS:
            raise ConfigError(f"denoiser kind must be one of {DENOISER_KINDS}")
        if self.kind == "mlp" and not self.weights_path:
            raise ConfigError("denoiser kind 'mlp' requires weights_path")


@dataclass(frozen=True)
class EngineConfig:
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    codec: CodecConfig = field(default_factory=CodecConfig)
    sampler: SamplerSection = field(default_factory=SamplerSection)
    hires: HiresParams = field(default_factory=HiresParams)
    denoiser: DenoiserSection = field(default_factory=DenoiserSection)

    def to_dict(self) -> dict:
        return asdict(self)


# field name -> "int" | "num" | "str" | "bool", with "?" allowing null
_SCHEMAS = {
    "schedule": (ScheduleConfig, {
        "T": "int", "beta_start": "num", "beta_end": "num", "kind": "str"}),
    "codec": (CodecConfig, {
        "f": "int", "matte_mix_seed": "int?", "image_mix_seed": "int?"}),
    "sampler": (SamplerSection, {
        "steps": "int", "eta": "num", "guidance_mode": "str"}),
    "hires": (HiresParams, {
        "ensemble_size": "int", "tau_floor": "num", "tau_percentile": "num",
        "dilate_radius": "int", "patch_size": "int", "overlap": "int",
        "feather_width": "int", "lr_long_side": "int", "hr_eta": "num",
        "merge_weights": "str", "guide_upsample": "str"}),
    "denoiser": (DenoiserSection, {
        "kind": "str", "target": "str", "gaussian_mu": "num", "gaussian_s2": "num",
        "weights_path": "str?", "d_txt": "int", "text_table_seed": "int"}),
}


def _check(value, kind: str, path: str):
    if kind.endswith("?"):
        if value is None:
            return None
        kind = kind[:-1]
    elif value is None:
        raise ConfigError(f"{path}: null not allowed")
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected integer, got {value!r}")
        return value
    if kind == "num":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected number, got {value!r}")
        return float(value)
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected string, got {value!r}")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected boolean, got {value!r}")
        return value
    raise ConfigError(f"{path}: unhandled schema kind {kind}")


def _build_section(name: str, data) -> object:
    cls, schema = _SCHEMAS[name]
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected an object")
    unknown = set(data) - set(schema)
    if unknown:
        raise ConfigError(f"{name}: unknown keys {sorted(unknown)}")
    kwargs = {k: _check(v, schema[k], f"{name}.{k}") for k, v in data.items()}
    return cls(**kwargs)


def config_from_dict(data: dict) -> EngineConfig:
    """Validate a parsed JSON object into an EngineConfig."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    unknown = set(data) - set(_SCHEMAS)
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    return EngineConfig(**{name: _build_section(name, data[name]) for name in data})


def load_config(path: str | None = None) -> EngineConfig:
    """Load config from a path, GENMATTE_CONFIG, or built-in defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG_PATH)
    if path is None:
        return EngineConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")
    return config_from_dict(data)
