"""Exception types shared across the toolkit."""


class MedenError(Exception):
    """Base class for all toolkit errors."""


class DomainError(MedenError):
    """Argument lies outside the (open) domain of a divergence or its conjugate."""


class NonFiniteMoment(MedenError):
    """The moment map produced NaN or infinity at the probed (x, theta)."""


class UnknownModel(MedenError):
    """No built-in model registered under the requested name."""


class UnknownDivergence(MedenError):
    """No divergence registered under the requested name."""


class NonSmoothModel(MedenError):
    """Operation requires a theta-differentiable moment map."""


class NonAdditiveGroup(MedenError):
    """The correction is only defined for additive-group models."""


class SingularFisher(MedenError):
    """Empirical Fisher matrix too ill-conditioned to invert."""


class ConfigError(MedenError):
    """Invalid simulation configuration."""
