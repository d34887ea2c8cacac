"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all gobsim errors."""


class TotalInternalReflection(SimulationError, ValueError):
    """Refraction geometry outside the model's validity (radicand < 0)."""


class DegenerateTransform(SimulationError, ValueError):
    """Beam waist imaged at infinity by a pathological lens configuration."""


class IndexOutOfRange(SimulationError, IndexError):
    """Element or emitter index outside its valid 1-based range."""


class UnknownLayout(SimulationError, KeyError):
    """Requested a built-in clustering layout that does not exist."""


class ParseError(SimulationError, ValueError):
    """Malformed layout or configuration file."""


class NotAPartition(SimulationError, ValueError):
    """Cluster sets fail to partition the beam index set exactly."""


class EmptyCluster(SimulationError, ValueError):
    """Cluster gain requested for an empty beam set."""


class AllocationInvalid(SimulationError, ValueError):
    """OFDMA bandwidth/power fractions do not sum to one."""


class GridMismatch(SimulationError, ValueError):
    """Two fields compared on different grids."""


class ConfigError(SimulationError, ValueError):
    """Invalid or unresolvable configuration."""
