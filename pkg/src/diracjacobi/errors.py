"""Exception types shared across the package.

Every error raised on purpose derives from DiracJacobiError so callers (in
particular the CLI) can distinguish "the input is bad / the math said no"
from genuine bugs.
"""


class DiracJacobiError(Exception):
    """Base class for all deliberate errors."""


class PoleAtPoint(DiracJacobiError):
    """A rational function was evaluated where its denominator vanishes.

    Callers that sample points catch this and pick another point.
    """


class DimensionMismatch(DiracJacobiError):
    """Two objects that must share an ambient dimension do not."""


class ModelMismatch(DiracJacobiError):
    """Two fiber-level objects built over different fiber models were mixed."""


class ChartMismatch(DiracJacobiError):
    """Two chart-level objects built over different charts were mixed."""


class NotLagrangian(DiracJacobiError):
    """A subspace that must be maximally isotropic is not."""


class NonSkew(DiracJacobiError):
    """A matrix that must be skew-symmetric is not."""


class NonCleanIntersection(DiracJacobiError):
    """A sampled constant-rank hypothesis failed: two witness points disagree."""

    def __init__(self, message, witnesses=None):
        super().__init__(message)
        self.witnesses = witnesses or []


class NonConstantRank(NonCleanIntersection):
    """Same failure shape as NonCleanIntersection, raised by the star-sum test."""


class NotComposableInChart(DiracJacobiError):
    """A fiber product was requested but the base maps are not coordinate
    projections in the supplied charts, so no polynomial chart realizes it."""


class TransversalityFailed(DiracJacobiError):
    """A morphism declared transversal to a structure fails the sum-rank test."""

    def __init__(self, message, witness_point=None):
        super().__init__(message)
        self.witness_point = witness_point


class SubmersivityFailed(DiracJacobiError):
    """A base map declared submersive has a rank-deficient Jacobian somewhere."""

    def __init__(self, message, witness_point=None):
        super().__init__(message)
        self.witness_point = witness_point


class SchemaError(DiracJacobiError):
    """A JSON document does not match the expected shape."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class UnresolvedReference(SchemaError):
    """A document refers to a chart/structure/morphism key that does not exist."""


class InvariantViolation(SchemaError):
    """A loaded object fails one of its declared invariants."""
