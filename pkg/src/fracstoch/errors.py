"""Exception types shared across the package."""


class FracstochError(Exception):
    """Base class for all package errors."""


class DomainError(FracstochError, ValueError):
    """A parameter lies outside its admissible domain."""


class ResolutionError(FracstochError, ValueError):
    """A quadrature resolution is below the required minimum."""


class OutOfRange(FracstochError, ValueError):
    """A time argument lies outside the recorded/admissible range."""


class DelayViolation(FracstochError, ValueError):
    """A delay evaluation would look forward in time."""


class ConfigError(FracstochError, ValueError):
    """A configuration object is incomplete or inconsistent."""


class AdaptednessError(FracstochError, ValueError):
    """A stochastic integrand was supplied on the wrong (anticipating) grid."""


class UnresolvedDelay(FracstochError, RuntimeError):
    """A history lookup requires path values at or beyond the evaluation time.

    Raised when the mild-solution formula is evaluated against a partial
    path; the Picard outer loop resolves this by supplying the previous
    full-horizon iterate.
    """

    def __init__(self, needed_time, horizon):
        self.needed_time = needed_time
        self.horizon = horizon
        super().__init__(
            f"history lookup at t={needed_time!r} exceeds recorded horizon {horizon!r}"
        )


class MaxIterations(FracstochError, RuntimeError):
    """Picard iteration failed to converge within the sweep budget.

    ``iter_history`` holds the successive-iterate squared distances so a
    divergence is diagnosable rather than silent.
    """

    def __init__(self, iter_history, tol):
        self.iter_history = list(iter_history)
        self.tol = tol
        super().__init__(
            f"no convergence after {len(self.iter_history)} sweeps "
            f"(tol={tol!r}, last distance={self.iter_history[-1]!r})"
        )


class EnsemblePathError(FracstochError, RuntimeError):
    """A per-path failure inside an ensemble run, annotated with the path index."""

    def __init__(self, path_index, cause):
        self.path_index = path_index
        self.cause = cause
        super().__init__(f"path {path_index} failed: {cause}")


class UnsupportedKernel(FracstochError, ValueError):
    """A kernel form outside the separable family was requested."""


class ParseError(FracstochError, ValueError):
    """A configuration file failed to parse; carries line information."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(prefix + message)


class ValidationError(FracstochError, ValueError):
    """A configuration parsed but violated invariants; lists every violation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
