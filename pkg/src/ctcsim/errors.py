"""Exception hierarchy. ``kind`` is the machine-readable tag the CLI reports."""


class CtcSimError(Exception):
    kind = "error"


class DimensionError(CtcSimError, ValueError):
    kind = "dimension_mismatch"


class ValidationError(CtcSimError, ValueError):
    kind = "validation_failed"


class NonUnitaryError(ValidationError):
    kind = "non_unitary"


class SolverError(CtcSimError, RuntimeError):
    kind = "solver_failure"


class CapExceededError(CtcSimError, ValueError):
    kind = "cap_exceeded"


class ConfigError(CtcSimError, ValueError):
    kind = "config_invalid"
