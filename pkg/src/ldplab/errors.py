"""Exception types shared across the package."""


class LdpLabError(Exception):
    """Base class for package-specific failures."""


class ConfigError(LdpLabError):
    """Raised when an experiment configuration is malformed or inconsistent.

    The message always names the offending section/key so the CLI can emit
    actionable diagnostics and exit with the dedicated config status.
    """


class ModelError(LdpLabError):
    """Invalid model construction, e.g. zero-mass conditioning."""


class BudgetExceededError(LdpLabError):
    """An exact computation grew past its configured state-space budget."""


class ConvergenceError(LdpLabError):
    """Iterative solver (power iteration) failed to converge in budget."""


class ImproperFunctionError(LdpLabError):
    """Grid function is not proper (no finite value, or -inf present)."""
