"""Exception types shared across the package."""


class EffHamError(Exception):
    """Base class for all errors raised by effham."""


class HermiticityViolation(EffHamError):
    """An operator failed the Hermiticity check."""


class ZeroCoupling(EffHamError):
    """Requested a rotation for a coupling that is exactly zero.

    The rotation would be the identity; callers should skip the pair instead.
    """


class IndexOutOfRange(EffHamError, IndexError):
    """Rotation or coupling indices exceed the operator dimension."""


class OverlappingPairs(EffHamError):
    """Batched elimination received index pairs that share an index."""


class UnitarityDrift(EffHamError):
    """Accumulated unitary drifted too far from exact unitarity."""


class NonFinite(EffHamError):
    """Input matrix contains NaN or Inf entries."""


class GridMismatch(EffHamError):
    """Time grid is incompatible with the requested interval count."""


class DimensionMismatch(EffHamError):
    """Operators or vectors of different dimensions were combined."""


class NormDrift(EffHamError):
    """State norm drifted during evolution, signalling a misconfigured propagator."""


class TruncationTooSmall(EffHamError):
    """Cavity truncation is too small for the requested excitation block."""


class ChainTooLarge(EffHamError):
    """Spin chain length exceeds the configured dense-propagation limit."""


class ConfigError(EffHamError):
    """Experiment configuration failed validation."""


class BenchMemoryError(EffHamError):
    """A benchmark case ran out of memory; carries the failing size."""

    def __init__(self, size: int):
        super().__init__(f"out of memory while building benchmark case of size {size}")
        self.size = size
