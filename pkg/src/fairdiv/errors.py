"""Exception hierarchy shared across the package.

Two roots on purpose: ``FairdivError`` covers everything the caller can fix
(bad files, bad parameters, oversized instances), while ``InvariantError``
signals that a mathematical invariant the code is supposed to maintain was
observed to fail at runtime.  The CLI maps the former to exit code 1 and the
latter to exit code 2 so automation can tell "bad input" from "broken math".
"""


class FairdivError(Exception):
    """Base class for recoverable, input-related errors."""


class ParseError(FairdivError):
    """A file or literal could not be parsed into the expected exact form."""


class DomainError(FairdivError):
    """A parameter is outside the range an operation accepts."""


class PredictionContractError(DomainError):
    """A valuation exceeded the bound promised by the MIV predictions."""


class InstanceTooLargeError(FairdivError):
    """An exhaustive-search oracle refused an instance above its size guard."""


class InvariantError(Exception):
    """An exact runtime assertion on a maintained invariant failed.

    Raised, for example, if the potential of the MIV allocator ever increases,
    or if an adaptive adversary observes an allocator choice different from
    the one its construction forces.  Deliberately not a ``FairdivError``:
    blanket input-error handlers must never swallow it.
    """
