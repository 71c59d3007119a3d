"""Shared exception types for the fluidrelay package."""


class NumericalError(RuntimeError):
    """A numerical procedure failed beyond its built-in recovery options."""


class InfeasibleError(Exception):
    """A constraint system cannot be satisfied.

    ``reason`` carries a stable machine-readable constraint name
    (e.g. ``INFEASIBLE_POWER``, ``INFEASIBLE_BANDWIDTH``) so callers can
    report which constraint failed without parsing the message.
    """

    def __init__(self, reason: str, detail: str):
        super().__init__(f"{reason}: {detail}")
        self.reason = reason
        self.detail = detail
