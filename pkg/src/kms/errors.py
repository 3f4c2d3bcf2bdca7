"""Exception types shared across the package."""


class KmsError(Exception):
    """Base class for all library errors."""


class DomainError(KmsError):
    """Evaluation requested outside the domain of a symbol or potential."""


class SingularSymbolError(KmsError):
    """|a(x, t)| vanishes on the evaluation grid, so log a is undefined."""


class WindingError(KmsError):
    """a(x, .) winds around the origin, so no continuous log branch exists."""

    def __init__(self, winding, x=None):
        self.winding = int(winding)
        self.x = x
        where = "" if x is None else f" at x = {x}"
        super().__init__(f"symbol has winding number {self.winding}{where}; "
                         "log requires winding 0")


class SchemeError(KmsError):
    """Indexing scheme invalid for the requested matrix size."""


class ShapeError(KmsError):
    """Operands have incompatible shapes."""


class SizeCapError(KmsError):
    """Matrix dimension exceeds the configured solver cap."""


class SolverError(KmsError):
    """An iterative solver failed to converge."""


class BranchError(KmsError):
    """Test function hit a branch cut (log of a nonpositive real value)."""


class ConfigError(KmsError):
    """Invalid experiment configuration."""


class ExprParseError(ConfigError):
    """Expression text failed to parse; carries a 1-based column."""

    def __init__(self, message, column):
        self.column = int(column)
        super().__init__(f"{message} (column {self.column})")
