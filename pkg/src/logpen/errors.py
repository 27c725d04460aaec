"""Exception types shared across the package."""


class LogpenError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(LogpenError):
    """Malformed or inconsistent problem configuration."""


class HypothesisViolation(ConfigError):
    """Potential fails a standing hypothesis (e.g. V + 1 not positive)."""


class ConeViolation(LogpenError):
    """Field carries no positive mass inside the rescaled well region."""


class BracketFailure(LogpenError):
    """Sign-change bracketing search exhausted its expansion budget."""


class ConeExit(LogpenError):
    """Iteration left the admissible cone; the run should be restarted."""


class AllRestartsFailed(LogpenError):
    """Every multi-start seed failed to converge."""


class InsufficientRows(LogpenError):
    """Too few converged sweep rows to build a trend report."""
