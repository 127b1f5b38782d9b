"""Exception types shared across the package."""


class EigenFpcaError(Exception):
    """Base class for all package errors."""


class ParseError(EigenFpcaError):
    """Malformed input file. Carries the 1-based line number when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)


class DimensionMismatchError(EigenFpcaError):
    """Covariate or array dimensions disagree. Names the offending subject."""

    def __init__(self, message, subject_id=None):
        self.subject_id = subject_id
        super().__init__(message)


class InsufficientLocalDataError(EigenFpcaError):
    """Too few samples with positive kernel weight near a query point."""

    def __init__(self, query, needed, found):
        self.query = tuple(float(q) for q in query)
        self.needed = int(needed)
        self.found = int(found)
        super().__init__(
            f"insufficient local data at query {self.query}: "
            f"{self.found} weighted sample(s), need at least {self.needed}; "
            "consider a larger bandwidth"
        )


class EmptyNeighborhoodError(EigenFpcaError):
    """No subject carries positive kernel weight at a covariate query."""

    def __init__(self, z):
        self.z = tuple(float(v) for v in z)
        super().__init__(
            f"empty neighborhood: no subject within kernel support at z={self.z}; "
            "consider a larger bandwidth"
        )


class SingularSystemError(EigenFpcaError):
    """A linear system remained singular even after the ridge fallback."""
