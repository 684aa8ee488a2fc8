"""Exception types raised across the package."""


class WHLabError(Exception):
    """Base class for all package errors."""


class NonElliptic(WHLabError):
    """The symbol vanishes (numerically) somewhere on the compactified line."""

    def __init__(self, margin: float, where: float | None = None):
        self.margin = margin
        self.where = where
        loc = "" if where is None else f" near xi={where:.6g}"
        super().__init__(f"symbol is not elliptic: min |a| = {margin:.3e}{loc}")


class NonClosing(WHLabError):
    """Accumulated argument is not an integer multiple of 2*pi."""


class LogBranchFailure(WHLabError):
    """A continuous logarithm could not be certified along the curve."""


class InfiniteVariation(WHLabError):
    pass


class AliasWarning(UserWarning):
    """The discretization does not resolve the symbol."""


class DivergentTail(WHLabError):
    pass


class BracketFailure(WHLabError):
    pass


class Unsupported(WHLabError):
    pass


class SingularPoint(WHLabError):
    pass


class CrossValidationFailure(WHLabError):
    pass


class PathEllipticityFailure(WHLabError):
    def __init__(self, t: float, margin: float):
        self.t = t
        self.margin = margin
        super().__init__(f"homotopy leaves the elliptic set at t={t:.4g} (margin {margin:.3e})")


class TransversalityFailure(WHLabError):
    pass


class SchemaError(WHLabError):
    """Invalid job, symbol, or space description."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
