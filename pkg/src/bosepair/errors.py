"""Exception hierarchy shared by all solvers."""


class BosePairError(Exception):
    """Base class for every error raised by this package."""


class InvalidSpectrumError(BosePairError, ValueError):
    pass


class InvalidSectorError(BosePairError, ValueError):
    pass


class InvalidParametersError(BosePairError, ValueError):
    pass


class DomainError(BosePairError, ValueError):
    """Argument outside the region where a formula is defined."""


class BasisTooLargeError(BosePairError):
    def __init__(self, dimension: int, cap: int):
        super().__init__(f"basis dimension {dimension} exceeds cap {cap}")
        self.dimension = dimension
        self.cap = cap


class DiagonalizationError(BosePairError):
    def __init__(self, message: str, iterations: int | None = None):
        super().__init__(message)
        self.iterations = iterations


class SingularConfigurationError(BosePairError):
    """Coincident roots, or a root sitting on a level."""


class StepRejected(BosePairError):
    """Newton step could not be taken (singular Jacobian or no descent)."""


class InitializationError(BosePairError):
    pass


class ContinuationStuckError(BosePairError):
    def __init__(self, message: str, last_good_g: float):
        super().__init__(f"{message} (last good g_eff = {last_good_g:.17g})")
        self.last_good_g = last_good_g


class InconsistentRootSetError(BosePairError):
    pass


class NoSolutionError(BosePairError):
    """The requested branch does not exist at these parameters."""


class ConvergenceError(BosePairError):
    def __init__(self, message: str, iterations: int | None = None):
        super().__init__(message)
        self.iterations = iterations


class BeyondValidityError(BosePairError):
    """Modified mean field would deplete more bosons than exist."""


class ConfigError(BosePairError, ValueError):
    pass
