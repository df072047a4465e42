"""Exception hierarchy shared by all evflow modules."""


class EvflowError(Exception):
    """Base class for every error raised by this package."""


class DatasetError(EvflowError):
    """Base class for dataset construction and validation failures."""


class ParseError(DatasetError):
    """A file violates its schema (bad header, bad token, bad number)."""

    def __init__(self, file: str, line: int, reason: str):
        self.file = file
        self.line = line
        self.reason = reason
        super().__init__(f"{file}:{line}: {reason}")


class NodeReferenceError(DatasetError):
    """A table, link, manufacturer, or sales row references an unknown node."""


class ProbabilityError(DatasetError):
    """Choice probabilities are negative or sum outside the accepted band."""


class CoverageError(DatasetError):
    """A conditional table is missing a row for a reachable upstream node."""


class MissingLinkError(EvflowError):
    """No transport link exists and the fallback policy forbids synthesis."""


class MissingMassError(EvflowError):
    """A chemistry has no mass entry for the requested mineral."""


class ModeMissingError(EvflowError):
    """A positive transport distance has no vessel or vehicle assigned."""


class EmptyChoiceError(EvflowError):
    """A choice table has no options to sample from."""


class EmptyError(EvflowError):
    """An aggregation was asked to summarize zero records."""


class InfeasibleError(EvflowError):
    """The hub instance admits no feasible solution (fewer hubs than p)."""
