"""Parser and renderer for the command-line filter-query DSL.

A filter query looks like::

    ?we=openrlbenchmark&wpn=sfujim-TD3&ceik=env&cen=policy&metric=charts/episodic_return

Values are the literal bytes between ``=`` and ``&``; there is no percent
escaping (metric keys contain ``/`` unescaped).  An experiment spec looks
like ``TD3?cl=Official TD3``: everything before the first ``?`` is the
experiment name, ``cl`` overrides the plot label, and unrecognized keys are
kept as extra config filters.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

from .errors import (
    EmptyName,
    EmptyValue,
    MissingQueryPrefix,
    MissingRequiredKey,
    UnknownKey,
)

DEFAULT_ENV_ID_KEY = "env"
DEFAULT_EXP_NAME_KEY = "exp_name"

_SCALAR_KEYS = ("we", "wpn", "ceik", "cen", "metric")
_KNOWN_KEYS = _SCALAR_KEYS + ("metrics",)


class FilterDslWarning(UserWarning):
    """Non-fatal oddity in a query or spec string (lenient mode)."""


@dataclass(frozen=True)
class FilterQuery:
    """Selects a project and the metric keys to fetch."""

    entity: str
    project: str
    env_id_key: str = DEFAULT_ENV_ID_KEY
    exp_name_key: str = DEFAULT_EXP_NAME_KEY
    metrics: tuple[str, ...] = ()
    multi_metric: bool = False  # True when the plural `metrics=` key was used

    def __post_init__(self):
        object.__setattr__(self, "metrics", tuple(self.metrics))
        if not self.entity:
            raise MissingRequiredKey("entity (we) must be non-empty")
        if not self.project:
            raise MissingRequiredKey("project (wpn) must be non-empty")
        if not self.metrics:
            raise MissingRequiredKey("at least one metric is required")


@dataclass(frozen=True)
class ExperimentSpec:
    """Selects one experiment by name and labels it for the plots."""

    name: str
    label: str = ""
    extra_filters: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.name:
            raise EmptyName("experiment name must be non-empty")
        if not self.label:
            object.__setattr__(self, "label", self.name)
        object.__setattr__(self, "extra_filters", dict(self.extra_filters))


@dataclass(frozen=True)
class FilterGroup:
    """One unit of comparison: a query, its specs, and an env-id list."""

    query: FilterQuery
    specs: tuple[ExperimentSpec, ...]
    env_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        object.__setattr__(self, "env_ids", tuple(self.env_ids))
        if not self.specs:
            raise EmptyName("a filter group needs at least one experiment spec")
        if not self.env_ids:
            raise EmptyValue("a filter group needs at least one env id")


def _split_pairs(body: str, context: str) -> list[tuple[str, str]]:
    pairs = []
    for token in body.split("&"):
        if not token:
            raise EmptyValue(f"{context}: empty key=value pair")
        key, sep, value = token.partition("=")
        if not sep:
            raise EmptyValue(f"{context}: token {token!r} is not key=value")
        if not key:
            raise EmptyValue(f"{context}: empty key in {token!r}")
        if not value:
            raise EmptyValue(f"{context}: empty value for key {key!r}")
        pairs.append((key, value))
    return pairs


def parse_filter_query(text: str, strict: bool = False) -> FilterQuery:
    """Parse a ``?we=...&wpn=...`` query string.

    Unknown keys raise :class:`UnknownKey` in strict mode and warn otherwise.
    A repeated scalar key keeps the last value, with a warning.
    """
    if not text.startswith("?"):
        raise MissingQueryPrefix(f"query must start with '?': {text!r}")
    scalars: dict[str, str] = {}
    metrics: list[str] = []
    multi_metric = False
    for key, value in _split_pairs(text[1:], "query"):
        if key == "metrics":
            multi_metric = True
            metrics.append(value)
        elif key in _SCALAR_KEYS:
            if key in scalars:
                warnings.warn(
                    f"duplicate key {key!r}: last value wins", FilterDslWarning,
                    stacklevel=2,
                )
            scalars[key] = value
        elif strict:
            raise UnknownKey(f"unknown query key {key!r}")
        else:
            warnings.warn(f"ignoring unknown query key {key!r}", FilterDslWarning,
                          stacklevel=2)
    if "we" not in scalars:
        raise MissingRequiredKey("query is missing required key 'we'")
    if "wpn" not in scalars:
        raise MissingRequiredKey("query is missing required key 'wpn'")
    if "metric" in scalars:
        metrics.insert(0, scalars["metric"])
    if not metrics:
        raise MissingRequiredKey("query is missing 'metric=' or 'metrics='")
    return FilterQuery(
        entity=scalars["we"],
        project=scalars["wpn"],
        env_id_key=scalars.get("ceik", DEFAULT_ENV_ID_KEY),
        exp_name_key=scalars.get("cen", DEFAULT_EXP_NAME_KEY),
        metrics=tuple(metrics),
        multi_metric=multi_metric,
    )


def parse_experiment_spec(text: str) -> ExperimentSpec:
    """Parse an experiment spec token such as ``TD3?cl=Official TD3``.

    The name (which may contain spaces) is everything before the first
    ``?``; without a ``?`` the label defaults to the name.
    """
    name, sep, rest = text.partition("?")
    if not name:
        raise EmptyName(f"experiment spec has no name: {text!r}")
    label = ""
    extra: dict[str, str] = {}
    if sep:
        for key, value in _split_pairs(rest, "spec"):
            if key == "cl":
                if label:
                    warnings.warn("duplicate key 'cl': last value wins",
                                  FilterDslWarning, stacklevel=2)
                label = value
            else:
                if key in extra:
                    warnings.warn(f"duplicate key {key!r}: last value wins",
                                  FilterDslWarning, stacklevel=2)
                extra[key] = value
    return ExperimentSpec(name=name, label=label or name, extra_filters=extra)


def render_filter_query(query: FilterQuery) -> str:
    """Render the canonical query string; inverse of :func:`parse_filter_query`.

    Canonical order is we, wpn, ceik, cen, then the metrics.  Default
    ceik/cen are emitted explicitly.  A single metric is rendered with the
    key used at parse time (``metric=`` unless the plural form was used).
    """
    parts = [
        f"we={query.entity}",
        f"wpn={query.project}",
        f"ceik={query.env_id_key}",
        f"cen={query.exp_name_key}",
    ]
    plural = query.multi_metric or len(query.metrics) > 1
    key = "metrics" if plural else "metric"
    parts.extend(f"{key}={m}" for m in query.metrics)
    return "?" + "&".join(parts)


def render_experiment_spec(spec: ExperimentSpec) -> str:
    """Render a spec token; inverse of :func:`parse_experiment_spec`."""
    parts = [f"cl={spec.label}"]
    parts.extend(f"{k}={v}" for k, v in spec.extra_filters.items())
    return f"{spec.name}?" + "&".join(parts)
