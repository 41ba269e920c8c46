"""Exception types shared across the package."""


class MalformedInput(ValueError):
    """The input document or a record in it does not follow the history format."""


class DuplicateId(MalformedInput):
    """Two operations in one history carry the same identifier."""


class DuplicateWrite(MalformedInput):
    """Two writes on the same variable carry the same value.

    Histories must be differentiated: every value is written at most once per
    variable, which is what makes the write-read matching derivable from the
    values alone.
    """


class NotExecuted(ValueError):
    """A read without a return value reached a component that needs one."""


class TooLarge(ValueError):
    """The brute-force oracle was asked to check a history beyond its size guard."""


class CannotInject(RuntimeError):
    """The base history cannot host the requested violation pattern."""


class EngineDisagreement(RuntimeError):
    """Native and Datalog engines returned different verdicts for one input.

    This always signals an implementation bug, never a property of the input.
    """


class IllFormedProgram(ValueError):
    """A Datalog program violates well-formedness (range restriction, arity, groundness)."""
