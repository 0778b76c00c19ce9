"""rlops: fetch tracked RL runs, align curves, and compute bootstrap statistics."""

from . import (  # noqa: F401
    cli,
    curves,
    errors,
    estimators,
    filterdsl,
    ingest,
    model,
    render,
    rlstats,
    scores,
)

__version__ = "0.1.0"
