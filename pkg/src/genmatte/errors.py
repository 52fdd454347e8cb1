"""Exception types shared across the engine.

The CLI maps these onto process exit codes and the HTTP service onto
status codes, so raising the right class matters more than the message.
"""


class GenmatteError(Exception):
    """Base class for all engine errors."""


class ShapeError(GenmatteError):
    """Tensor dimensions do not satisfy an operation's contract."""


class BoundsError(GenmatteError):
    """A patch box reaches outside its canvas."""


class ConfigError(GenmatteError):
    """Invalid configuration value or file."""


class StepError(GenmatteError):
    """Diffusion step index out of range or mis-ordered."""


class EnsembleError(GenmatteError):
    """Ensemble too small for the requested statistic."""


class ValidationError(GenmatteError):
    """User-supplied guidance or request payload is invalid."""


class FormatError(GenmatteError):
    """Unsupported or corrupt image file format."""


class CapabilityError(GenmatteError):
    """Operation requires a capability this denoiser does not have."""


class TrainingError(GenmatteError):
    """Training diverged or could not proceed."""


class InternalError(GenmatteError):
    """An internal invariant failed; indicates a bug, not bad input."""
