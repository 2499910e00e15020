"""Shared exception types.

Everything raised for bad user input derives from InputError so the service
layer can map it to a 400 response uniformly; InternalCheckError marks a
disagreement between two redundant computation paths and is never the
caller's fault.
"""

from __future__ import annotations


class InputError(ValueError):
    """Invalid user-supplied data (documents, points, parameters)."""


class ModelFormatError(InputError):
    pass


class DomainEvaluationError(InputError):
    """A model body evaluated to a non-finite value at the requested point."""


class DeformationFormatError(InputError):
    pass


class DegeneratePointError(InputError):
    """Point where coinciding f values make the requested operation singular."""


class SingularPivotError(InputError):
    """Reversible-component solve attempted with f_pivot equal to the mean."""


class ZeroMeanFitnessError(InputError):
    """Replicator step with vanishing mean fitness."""


class GraphBalanceError(InputError):
    """Weighted graph violates the node/edge balancing condition."""


class PotentialInputError(InputError):
    pass


class PolylogDomainError(InputError):
    """li2/li3 evaluated outside x <= 0."""


class RegionFormatError(InputError):
    pass


class DegenerateRegionError(InputError):
    """Cone region whose two sheets cross or whose body is unbounded."""


class InternalCheckError(RuntimeError):
    """Two redundant computation paths disagreed beyond tolerance."""


class QuadratureBudgetError(RuntimeError):
    """Adaptive quadrature ran out of evaluations; carries the best estimate."""

    def __init__(self, message: str, best):
        super().__init__(message)
        self.best = best
