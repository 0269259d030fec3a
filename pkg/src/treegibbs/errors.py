"""Exception types shared across the package."""


class TreeGibbsError(Exception):
    """Base class for all treegibbs errors."""


class BoundTooSmall(TreeGibbsError, ValueError):
    """Degree/branching bound below the minimum for the ensemble kind."""


class BadEnergyTable(TreeGibbsError, ValueError):
    """Energy table has the wrong length or a non-finite entry."""


class KindMismatch(TreeGibbsError, ValueError):
    """Operation applied to the wrong ensemble kind."""


class SumMismatch(TreeGibbsError, ValueError):
    """Count vector entries do not sum to the stated total."""


class SizeOverflow(TreeGibbsError, ValueError):
    """Requested DP table exceeds the configured memory budget."""


class NoFeasibleTree(TreeGibbsError, ValueError):
    """No tree satisfies the ensemble constraints at this size."""


class LatticeTooLarge(TreeGibbsError, ValueError):
    """Profile lattice or grid enumeration exceeds the configured cap."""


class OffManifold(TreeGibbsError, ValueError):
    """Frequency vector violates the manifold constraints."""


class BadLabel(TreeGibbsError, ValueError):
    """Code entry outside the valid vertex label range."""


class NotATree(TreeGibbsError, ValueError):
    """Edge list is not a tree (wrong edge count, cycle, or disconnected)."""


class BadStepSum(TreeGibbsError, ValueError):
    """Step word does not sum to -1."""


class TooLarge(TreeGibbsError, ValueError):
    """Exhaustive enumeration requested beyond the supported size."""


class DegreeBoundExceeded(TreeGibbsError, ValueError):
    """Tree contains a vertex whose degree/branching exceeds the bound."""
