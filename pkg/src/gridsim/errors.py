"""Exception types raised across the simulator."""


class GridSimError(Exception):
    """Base class for all simulator errors."""


class InvalidTopology(GridSimError, ValueError):
    """Feeder branches do not form a tree rooted at the source."""


class NonConvergence(GridSimError, RuntimeError):
    """Power-flow sweep hit its iteration cap without converging."""

    def __init__(self, message, iterations=None, mismatch=None, context=None):
        super().__init__(message)
        self.iterations = iterations
        self.mismatch = mismatch
        self.context = dict(context or {})

    def with_context(self, **context):
        return NonConvergence(self.args[0], self.iterations, self.mismatch, {**self.context, **context})

    def __reduce__(self):
        return (NonConvergence, (self.args[0], self.iterations, self.mismatch, self.context))

    def __str__(self):
        base = super().__str__()
        if not self.context:
            return base
        ctx = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{base} [{ctx}]"


class DomainError(GridSimError, ValueError):
    """Argument outside the mathematical domain of a formula."""


class ResolutionError(GridSimError, ValueError):
    """Time resolution does not divide the 24 h day."""


class StabilityError(GridSimError, ValueError):
    """Integration step violates the stability bound of the chosen scheme."""


class RangeError(GridSimError, ValueError):
    """Requested window lies outside the available series."""


class DegenerateError(GridSimError, ValueError):
    """Lifetime is undefined because no wear was observed."""

    def __init__(self, message, fallback=None):
        super().__init__(message)
        self.fallback = fallback


class ConfigError(GridSimError, ValueError):
    """Run configuration failed validation; carries every violation found."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))
