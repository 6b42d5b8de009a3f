"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid model parameters, grids, or experiment configuration.

    The command line maps this to exit code 2.
    """


class EstimationError(RuntimeError):
    """Data-dependent failure of an estimation step.

    Raised, for example, when the empirical characteristic function is
    guarded everywhere or a confidence band degenerates. The command line
    maps this to exit code 3.
    """
