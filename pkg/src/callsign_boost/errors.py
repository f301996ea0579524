"""Exception types shared across the toolkit.

The CLI maps these onto its exit codes; library callers can catch
ToolkitError to handle everything in one place.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ParseError(ToolkitError):
    """Input text does not match the expected grammar."""


class UnknownAirline(ToolkitError):
    """Callsign designator not present in the airline table."""

    def __init__(self, raw: str, designator: str):
        super().__init__(f"unknown airline designator {designator!r} in callsign {raw!r}")
        self.raw = raw
        self.designator = designator


class SchemaError(ToolkitError):
    """Structured input (JSONL, CSV, FST text) violates its schema."""


class SymbolTableMismatch(ToolkitError):
    """Two FSTs disagree about the symbol universe they share."""


class NegativeCycleError(ToolkitError):
    """Shortest path requested on a machine with a negative-cost cycle."""


class EmptyLattice(ToolkitError):
    """A lattice with no complete hypothesis path."""


class EmptyRescore(ToolkitError):
    """Composition with a biasing FST produced an empty machine.

    The self-loop construction guarantees non-emptiness whenever the bias
    vocabulary covers the lattice, so this signals a vocabulary mismatch.
    """
