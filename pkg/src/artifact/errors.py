"""Error and warning taxonomy shared by all solver modules.

Exceptions signal contract violations that make a result meaningless.
Warnings signal degraded accuracy that is still reported honestly.
"""


class ArtifactError(Exception):
    """Base class for all solver errors."""


class BranchCutViolation(ArtifactError):
    """Spectral point too close to the branch segment i[-1,1]."""


class ZeroCountMismatch(ArtifactError):
    """Newton refinement found fewer roots than the winding count."""


class InvalidTruncation(ArtifactError):
    """Contour truncation does not clear the contour radius."""


class DivergentTransform(ArtifactError):
    """Half-line transform requested where the integrand grows."""


class MissingBoundaryTrace(ArtifactError):
    """Forcing transform needs boundary traces that were not supplied."""


class IncompatibleData(ArtifactError):
    """Corner compatibility residual exceeds tolerance for the stated s."""


class SupportViolation(ArtifactError):
    """Reduced-problem boundary data not supported inside (0, T)."""


class MethodMismatch(ArtifactError):
    """Two supposedly equivalent evaluation methods disagree."""


class NonContraction(ArtifactError):
    """Picard ratios >= 1 for three consecutive iterations."""


class GridTooCoarse(ArtifactError):
    """Finite-difference stencil does not fit in the grid interior."""


class AsymptoteViolation(ArtifactError):
    """Lambda asymptote left the admissible band (1.9, 3]."""


class ConditioningWarning(UserWarning):
    """Arc growth budget a^2*T exceeded; double precision degrades."""


class TruncationAudit(UserWarning):
    """Tail of a truncated contour integral above the audit threshold."""


class TailAudit(UserWarning):
    """Transform tail decays too slowly for the requested norm order."""
