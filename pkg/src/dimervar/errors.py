"""Exception hierarchy shared by all modules.

Two families: `InputError` covers malformed or inconsistent inputs
(CLI exit code 2), `NumericError` covers failures of the numerics
themselves (CLI exit code 3).
"""


class DimerError(Exception):
    pass


class InputError(DimerError):
    pass


class NumericError(DimerError):
    pass


class RegionError(InputError):
    """Region fails a structural invariant (connectivity, holes, base vertex)."""


class InvalidHeight(InputError):
    """A height function violates a local step rule."""


class NotExtendable(InputError):
    """Boundary heights admit no complete extension."""


class BaseMismatch(InputError):
    """Lattice operation on height functions with incompatible base heights."""


class CapExceeded(InputError):
    """Region too large for an exhaustive oracle."""


class TiltOutOfRange(InputError):
    """Tilt outside |s| + |t| <= 2 (or on the boundary where forbidden)."""


class DegenerateWeights(InputError):
    """Weight pattern admits neither a cyclic quadrilateral nor a dominant edge."""


class ConfigOverlap(InputError):
    """Dominos in a colored configuration share a cell."""


class InfeasibleBoundary(InputError):
    """Boundary data admits no 2-Lipschitz extension."""


class NumericOverflow(NumericError):
    """Result magnitude exceeds floating-point range; use log-domain output."""


class QuadratureFailure(NumericError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class NonConvergence(NumericError):
    """Iterative maximizer hit its iteration cap before the tolerance."""


class NonCoalescence(NumericError):
    """Coupled chains failed to coalesce within the epoch cap."""
