"""Exception types shared across the toolkit."""


class RevlocError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(RevlocError):
    """A configuration value or referenced file is missing or invalid."""


class FormatError(RevlocError):
    """An input file yielded no usable records."""


class ConstraintInconsistencyError(RevlocError):
    """A document pair ended up both must-linked and cannot-linked."""

    def __init__(self, pair):
        self.pair = tuple(pair)
        super().__init__(
            f"constraint set is inconsistent: {self.pair[0]!r} and {self.pair[1]!r} "
            "are both must-linked and cannot-linked"
        )


class InfeasibleAssignmentError(RevlocError):
    """No cluster can take a point without violating a constraint."""

    def __init__(self, doc_id, attempts):
        self.doc_id = doc_id
        self.attempts = attempts
        what = f"point {doc_id!r}" if doc_id is not None else "the constraint set"
        super().__init__(
            f"no feasible cluster assignment for {what} after {attempts} attempt(s)"
        )
