"""Exception types shared across the package."""


class ExBmdpError(Exception):
    """Base class for all package errors."""


class SchemaError(ExBmdpError):
    """Environment document violates the JSON schema; carries the field path."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class NonStochasticRow(ExBmdpError):
    def __init__(self, row, total):
        self.row = row
        self.total = total
        super().__init__(f"row {row} sums to {total!r}, expected 1 within 1e-12")


class EmissionNotClosed(ExBmdpError):
    """Emission domain is not closed under the dynamics.

    ``violations`` lists offending (s, e, action, e_next) tuples.
    """

    def __init__(self, violations):
        self.violations = tuple(violations)
        first = self.violations[0]
        super().__init__(
            f"domain not closed under dynamics: (s={first[0]}, e={first[1]}) "
            f"under action {first[2]} reaches exogenous state {first[3]} but "
            f"the successor pair is not in the domain "
            f"({len(self.violations)} violation(s) total)"
        )


class InitialOffSupport(ExBmdpError):
    pass


class NotIrreducible(ExBmdpError):
    """Endogenous dynamics are not irreducible; carries an unreachable pair."""

    def __init__(self, source, target):
        self.pair = (source, target)
        super().__init__(f"state {target} is not reachable from state {source}")


class OpenComponent(ExBmdpError):
    """A strongly connected component of the observation graph has an exit edge.

    Signals a modeling bug: reachability on a valid environment is symmetric,
    so every component must be closed.
    """

    def __init__(self, component, exit_edge):
        self.component = tuple(component)
        self.exit_edge = exit_edge
        super().__init__(
            f"component {sorted(component)} leaks through edge {exit_edge}"
        )


class UnknownEntry(ExBmdpError):
    pass


class BadParams(ExBmdpError):
    pass


class RequirementUnsatisfiable(ExBmdpError):
    pass


class LengthTooShort(ExBmdpError):
    pass


class TooFewTrajectories(ExBmdpError):
    pass


class KMaxTooLarge(ExBmdpError):
    pass


class TooManyObservations(ExBmdpError):
    pass


class TooLarge(ExBmdpError):
    pass


class ConfigMismatch(ExBmdpError):
    pass


class EmptyStream(ExBmdpError):
    pass
