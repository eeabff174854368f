"""Exception hierarchy shared by all mdplab modules."""


class MDPLabError(Exception):
    """Base class for every error raised by mdplab."""


class ValidationError(MDPLabError, ValueError):
    """Input fails a structural precondition (shape, symmetry, range)."""


class NotPSDError(MDPLabError, ValueError):
    """A matrix that must be positive semidefinite has a negative eigenvalue."""


class DegenerateModelError(MDPLabError, ValueError):
    """The coefficient Gram matrix sum(a_j a_j^T) is singular."""


class ResolutionError(MDPLabError, ValueError):
    """Spectral grid too coarse for the requested coefficient halfwidth."""


class SpectralError(MDPLabError, ValueError):
    """Spectral density values violate positivity."""


class SubsamplingExhausted(MDPLabError):
    """No subsampling factor up to ``m_max`` satisfies the minorization.

    Attributes
    ----------
    best_m : int
        Factor with the largest worst-case eigenvalue among those tried.
    worst_eigenvalue : float
        Minimum eigenvalue over the grid for ``best_m``.
    """

    def __init__(self, best_m, worst_eigenvalue, target):
        self.best_m = best_m
        self.worst_eigenvalue = worst_eigenvalue
        self.target = target
        super().__init__(
            f"no m <= m_max reaches min eigenvalue {target:.6g}; "
            f"best m={best_m} with {worst_eigenvalue:.6g}"
        )


class ConfigError(MDPLabError, ValueError):
    """Experiment configuration is invalid."""
