"""Event-history datasets: records, parsing, counting processes, risk sets.

A record is one observation spell ``(entry, exit]`` for a subject, ending in
an event (positive code) or censoring (code 0).  Subjects may contribute
several consecutive spells (recurrent events).  The at-risk convention is
left-continuous: a subject is at risk at time ``t`` when ``entry < t <= exit``,
so it counts as at risk at its own event time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DataError
from .paths import StepPath

__all__ = [
    "EventRecord",
    "EventDataset",
    "parse_dataset",
    "write_dataset",
    "counting_path",
    "at_risk",
]

_NO_GROUP = np.iinfo(np.int64).min


@dataclass(frozen=True)
class EventRecord:
    """One observation spell of one subject."""

    subject_id: str
    entry_time: float
    exit_time: float
    event_code: int
    group: int | None = None
    covariates: tuple[float, ...] = ()


@dataclass(frozen=True)
class EventDataset:
    """Validated collection of event records over a window ``[0, horizon]``."""

    records: tuple[EventRecord, ...]
    horizon: float

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "horizon", float(self.horizon))
        if not self.horizon > 0:
            raise DataError("horizon must be positive")
        bad_order = []
        cov_dim = None
        for rec in self.records:
            if rec.entry_time < 0:
                raise DataError(f"subject {rec.subject_id!r}: negative entry_time")
            if not rec.entry_time < rec.exit_time:
                bad_order.append(rec.subject_id)
            if rec.event_code < 0:
                raise DataError(f"subject {rec.subject_id!r}: negative event code")
            if cov_dim is None:
                cov_dim = len(rec.covariates)
            elif len(rec.covariates) != cov_dim:
                raise DataError(
                    f"subject {rec.subject_id!r}: inconsistent covariate count"
                )
        if bad_order:
            raise DataError(
                "entry_time >= exit_time for subject(s): "
                + ", ".join(sorted(set(bad_order)))
            )

    @property
    def n_subjects(self) -> int:
        return len({rec.subject_id for rec in self.records})

    @property
    def covariate_dim(self) -> int:
        return len(self.records[0].covariates) if self.records else 0

    @cached_property
    def group_labels(self) -> tuple[int, ...]:
        return tuple(sorted({r.group for r in self.records if r.group is not None}))

    # Cached column arrays for vectorized risk-set and counting queries.
    @cached_property
    def _entry(self) -> np.ndarray:
        return np.array([r.entry_time for r in self.records], dtype=float)

    @cached_property
    def _exit(self) -> np.ndarray:
        return np.array([r.exit_time for r in self.records], dtype=float)

    @cached_property
    def _code(self) -> np.ndarray:
        return np.array([r.event_code for r in self.records], dtype=np.int64)

    @cached_property
    def _group(self) -> np.ndarray:
        return np.array(
            [_NO_GROUP if r.group is None else r.group for r in self.records],
            dtype=np.int64,
        )

    @cached_property
    def _covariates(self) -> np.ndarray:
        return np.array([r.covariates for r in self.records], dtype=float).reshape(
            len(self.records), self.covariate_dim
        )

    def _group_mask(self, group: int | None) -> np.ndarray:
        if group is None:
            return np.ones(len(self.records), dtype=bool)
        if group not in self.group_labels:
            raise ValueError(f"unknown group label: {group!r}")
        return self._group == group

    def subjects_in_group(self, group: int | None) -> int:
        """Distinct subjects contributing records to the given group."""
        if group is None:
            return self.n_subjects
        mask = self._group_mask(group)
        return len({self.records[i].subject_id for i in np.flatnonzero(mask)})


def at_risk(dataset: EventDataset, t: float, group: int | None = None) -> int:
    """Number of subjects under observation just before ``t``.

    Uses the left-continuous convention ``entry < t <= exit``; a subject is in
    the risk set at its own event time.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    mask = (dataset._entry < t) & (t <= dataset._exit) & dataset._group_mask(group)
    return int(np.count_nonzero(mask))


def counting_path(
    dataset: EventDataset, cause: int, group: int | None = None
) -> StepPath:
    """Aggregated counting process ``N_t`` for one event cause.

    Tied event times become a single jump of integer size.  Events after the
    dataset horizon are not counted.
    """
    if cause < 1:
        raise ValueError("cause must be a positive event code")
    mask = (
        (dataset._code == cause)
        & (dataset._exit <= dataset.horizon)
        & dataset._group_mask(group)
    )
    times, counts = np.unique(dataset._exit[mask], return_counts=True)
    return StepPath(
        times=times,
        increments=counts.astype(float).reshape(-1, 1),
        origin_value=np.zeros(1),
        horizon=dataset.horizon,
    )


_REQUIRED = ("id", "entry", "exit", "event")


def _default_schema(header: list[str]) -> dict:
    """Column mapping inferred from a header: id/entry/exit/event, optional
    group, covariates x1..xp in numeric-suffix order."""
    schema = {name: name for name in _REQUIRED}
    if "group" in header:
        schema["group"] = "group"
    covs = []
    for col in header:
        if len(col) > 1 and col[0] == "x" and col[1:].isdigit():
            covs.append((int(col[1:]), col))
    schema["covariates"] = [col for _, col in sorted(covs)]
    return schema


def parse_dataset(source, schema: dict | None = None, horizon: float | None = None):
    """Read an :class:`EventDataset` from delimited text.

    Parameters
    ----------
    source : path-like or readable text stream
    schema : dict, optional
        Column mapping with keys ``id, entry, exit, event`` and optionally
        ``group`` and ``covariates`` (list of column names).  By default the
        header names above are used and covariates are auto-detected as
        ``x1..xp``.
    horizon : float, optional
        Observation-window end; defaults to the largest exit time.

    Raises
    ------
    DataError
        Malformed rows (with their line number), missing columns, or records
        with ``entry >= exit`` (listing offending subject ids).
    """
    if hasattr(source, "read"):
        fh = source
        close = False
    else:
        fh = open(source, newline="")
        close = True
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty input: no header row") from None
        header = [h.strip() for h in header]
        if schema is None:
            schema = _default_schema(header)
        missing = [c for c in _REQUIRED if schema.get(c) not in header]
        if missing:
            raise DataError(f"missing required column(s): {', '.join(missing)}")
        col = {name: header.index(schema[name]) for name in _REQUIRED}
        group_col = None
        if schema.get("group") is not None and schema["group"] in header:
            group_col = header.index(schema["group"])
        cov_cols = [header.index(c) for c in schema.get("covariates", [])]

        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rec = EventRecord(
                    subject_id=row[col["id"]].strip(),
                    entry_time=float(row[col["entry"]]),
                    exit_time=float(row[col["exit"]]),
                    event_code=int(row[col["event"]]),
                    group=int(row[group_col]) if group_col is not None else None,
                    covariates=tuple(float(row[c]) for c in cov_cols),
                )
            except (ValueError, IndexError) as exc:
                raise DataError(f"line {lineno}: malformed row ({exc})") from None
            records.append(rec)
    finally:
        if close:
            fh.close()

    if horizon is None:
        horizon = max((r.exit_time for r in records), default=1.0)
    return EventDataset(records=tuple(records), horizon=horizon)


def write_dataset(dataset: EventDataset, path) -> None:
    """Write a dataset as CSV with columns id, entry, exit, event[, group][, x1..]."""
    has_group = any(r.group is not None for r in dataset.records)
    p = dataset.covariate_dim
    header = ["id", "entry", "exit", "event"]
    if has_group:
        header.append("group")
    header += [f"x{j + 1}" for j in range(p)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in dataset.records:
            row = [r.subject_id, repr(r.entry_time), repr(r.exit_time), str(r.event_code)]
            if has_group:
                row.append("" if r.group is None else str(r.group))
            row += [repr(v) for v in r.covariates]
            writer.writerow(row)
