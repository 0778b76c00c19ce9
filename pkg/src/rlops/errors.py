"""Typed errors raised across the toolkit.

Every error is a subclass of :class:`RlopsError`, so callers can catch the
whole family with one clause.  CLI exit-code mapping lives in ``rlops.cli``.
"""


class RlopsError(Exception):
    """Base class for all rlops errors."""


# --- model ------------------------------------------------------------

class MissingFile(RlopsError):
    pass


class MalformedTable(RlopsError):
    pass


class DuplicateEnv(RlopsError):
    pass


class DegenerateReference(RlopsError):
    """human_score equals random_score; normalization would divide by zero."""


class EmptyRunId(RlopsError):
    pass


class MalformedConfigKey(RlopsError):
    pass


class NonMonotonicSeries(RlopsError):
    """Metric points are not sorted by global step / wall time."""


# --- filter DSL -------------------------------------------------------

class FilterDslError(RlopsError):
    """Base for query/spec parse errors; maps to CLI exit code 2."""


class MissingQueryPrefix(FilterDslError):
    pass


class MissingRequiredKey(FilterDslError):
    pass


class EmptyValue(FilterDslError):
    pass


class UnknownKey(FilterDslError):
    pass


class EmptyName(FilterDslError):
    pass


# --- ingest -----------------------------------------------------------

class SourceUnreachable(RlopsError):
    """Remote tracking service cannot be reached; maps to CLI exit code 4."""


class ProjectNotFound(RlopsError):
    pass


class NoRunsFound(RlopsError):
    """No runs matched a (spec, env) pair; maps to CLI exit code 3."""


class RunNotFound(RlopsError):
    pass


class MetricNotFound(RlopsError):
    pass


class MalformedArchive(RlopsError):
    pass


# --- curves -----------------------------------------------------------

class TooFewPoints(RlopsError):
    pass


class NonPositiveWindow(RlopsError):
    pass


class EmptyInput(RlopsError):
    pass


class NoOverlap(RlopsError):
    """The shared x-range of the runs is empty."""


# --- scores / stats ---------------------------------------------------

class EnvNotInTable(RlopsError):
    pass


class EmptyTask(RlopsError):
    pass


class EmptyMatrix(RlopsError):
    pass


class GridMismatch(RlopsError):
    pass


class IndexOutOfRange(RlopsError):
    pass


# --- render / cli -----------------------------------------------------

class EmptyFigure(RlopsError):
    pass


class IncompleteProvenance(RlopsError):
    """A run record lacks fields needed to generate a reproduction script.

    ``missing`` lists the absent field names.
    """

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"missing provenance fields: {', '.join(self.missing)}")
