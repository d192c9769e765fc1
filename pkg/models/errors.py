class XosError(Exception):
    """Base class for all engine errors."""


class InvalidXosStructure(XosError):
    """Cross-ownership fractions or face values out of range."""


class InvalidScenario(XosError):
    """Negative exogenous asset values."""


class NonConvergence(XosError):
    """Fixed-point iteration exceeded its iteration budget."""


class WrongXosType(XosError):
    """Operation requires a different cross-ownership type."""


class InvalidCovariance(XosError):
    """Log-scale covariance matrix is not positive semi-definite."""


class InvalidMoments(XosError):
    """Moments do not describe a distribution with positive finite variance."""


class DegenerateVariance(XosError):
    """Sample of firm values has zero variance."""


class NoRoot(XosError):
    """Bracketed root search found no sign change."""


class InfeasibleGeometry(XosError):
    """Required level set does not meet the asset quadrant."""


class ConfigError(XosError):
    """Invalid configuration file, environment value or command-line argument."""
