"""Exception types shared across the package."""


class TreeswapError(Exception):
    """Base class for package-specific failures."""


class InvalidMatchingError(TreeswapError, ValueError):
    """A matching violates the ranked-tree-shape invariants."""


class CapExceeded(TreeswapError):
    """A requested computation exceeds the configured size budget."""


class DegenerateSizeError(TreeswapError, ValueError):
    """The chain is undefined for this n (no swappable index exists)."""


class InvalidParamError(TreeswapError, ValueError):
    """A numeric parameter is outside its admissible range."""


class NotReversibleError(TreeswapError):
    """Detailed balance fails beyond tolerance for the given law."""


class InvalidStateError(TreeswapError):
    """Stored coupled-state bookkeeping disagrees with recomputation."""


class PhaseError(TreeswapError):
    """Leaf-phase coupling requested before interior labels are matched."""
