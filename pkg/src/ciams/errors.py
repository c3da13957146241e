"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad user input: malformed files, violated preconditions, wrong shapes."""


class SchemaMismatchError(ValidationError):
    """Index-vector schema does not match the one a bundle was trained with."""


class BundleFormatError(ValidationError):
    """Persisted bundle is unreadable: bad magic, version, or checksum."""


class ClusteringFailure(RuntimeError):
    """A clustering method failed to produce a partition (e.g. eigensolver)."""
