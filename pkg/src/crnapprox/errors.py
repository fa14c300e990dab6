"""Exception hierarchy shared by every crnapprox module."""

from __future__ import annotations


class CrnApproxError(Exception):
    """Base class for all toolkit errors."""


class ModelError(CrnApproxError, ValueError):
    """Raised when a reaction network or model file is invalid."""


class ConfigurationError(CrnApproxError, ValueError):
    """Raised when an experiment request names unknown parameters or invalid values."""


class DomainError(CrnApproxError, ValueError):
    """Raised when a state lies outside the domain of a rate function."""


class LatticeError(CrnApproxError, ValueError):
    """Raised when KMT inputs violate the dyadic or lattice conditions."""


class SimulationError(CrnApproxError, RuntimeError):
    """Raised when a simulation cannot complete."""


class EventCapExceeded(SimulationError):
    """Raised when an SSA run fires more events than the configured cap."""

    def __init__(self, cap: int, time_reached: float) -> None:
        super().__init__(
            f"SSA event cap of {cap} events exceeded at t={time_reached:.6g}; "
            "reduce the horizon or the volume, or raise event_cap"
        )
        self.cap = cap
        self.time_reached = time_reached


class NonFiniteStateError(SimulationError):
    """Raised when an integrator produces NaN or infinite components."""


class NoiseHorizonExceeded(SimulationError):
    """Raised when a coupled run needs internal time beyond its pre-generated noise."""

    def __init__(self, channel: str, required: float, available: float) -> None:
        super().__init__(
            f"noise horizon exceeded on channel {channel!r}: required internal time "
            f"{required:.6g} but only {available:.6g} was generated; "
            "regenerate with a larger noise_safety_factor or set domain_upper_bounds"
        )
        self.channel = channel
        self.required = required
        self.available = available


class NoiseGridTooLarge(SimulationError):
    """Raised when a KMT noise grid would exceed max_noise_points."""

    def __init__(self, channel: str, points: int, limit: int) -> None:
        super().__init__(
            f"channel {channel!r} needs {points} KMT grid points (limit {limit}); "
            "increase kmt_step or max_noise_points"
        )
        self.channel = channel
        self.points = points
        self.limit = limit
