"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class ViralAppError(Exception):
    """Base class for every error raised by this package."""


class DuplicateName(ViralAppError, ValueError):
    def __init__(self, field: str, name: str):
        super().__init__(f"duplicate name {name!r} in {field}")
        self.field = field
        self.name = name


class DuplicateResource(DuplicateName):
    def __init__(self, name: str):
        super().__init__("resources", name)


class UnresolvedResource(ViralAppError):
    def __init__(self, name: str, unit: str | None = None):
        where = f" (referenced by {unit!r})" if unit else ""
        super().__init__(f"unresolved resource {name!r}{where}")
        self.name = name
        self.unit = unit


class EmptyMerge(ViralAppError, ValueError):
    pass


class GenomeMismatch(ViralAppError):
    pass


class InvalidOp(ViralAppError, ValueError):
    def __init__(self, op: object, reason: str):
        super().__init__(f"invalid mutation {op!r}: {reason}")
        self.op = op
        self.reason = reason


class UnknownStrain(ViralAppError, KeyError):
    def __str__(self) -> str:
        return f"unknown strain {self.args[0]!r}"


class UnknownPair(ViralAppError, KeyError):
    def __init__(self, sender: str, receiver: str):
        super().__init__((sender, receiver))
        self.sender = sender
        self.receiver = receiver

    def __str__(self) -> str:
        return f"no transfer rate for pair {self.sender} -> {self.receiver}"


class NonPositiveRate(ViralAppError, ValueError):
    pass


class UnknownRegion(ViralAppError, KeyError):
    def __str__(self) -> str:
        return f"unknown region {self.args[0]!r}"


class BudgetExhausted(ViralAppError):
    pass


class DuplicateLabel(ViralAppError, ValueError):
    pass


class ConstraintError(ViralAppError, ValueError):
    pass


class ParseError(ViralAppError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{loc}")
        self.line = line
        self.column = column


class ValidationError(ViralAppError):
    """Raised with every problem found in a scenario, not just the first."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


class IncompatibleTraces(ViralAppError):
    pass
