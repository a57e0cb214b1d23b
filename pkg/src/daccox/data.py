"""Survival data containers, validation, CSV I/O and subject-level sharding.

Time-independent data is the special case of counting-process data where every
subject has a single row starting at 0, so one container serves both.  Rows are
kept sorted by stop time descending (events before censorings at tied times);
the partial likelihood sweep relies on that order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "SurvivalRecord",
    "SurvivalDataset",
    "ShardPlan",
    "validate_dataset",
    "make_shard_plan",
    "shard_dataset",
    "split_dataset",
    "read_csv",
    "write_csv",
]


@dataclass(frozen=True)
class SurvivalRecord:
    """One (start, stop] interval of one subject."""

    subject_id: int
    start: float
    stop: float
    event: bool
    covariates: tuple[float, ...]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class SurvivalDataset:
    """Columnar, immutable survival data sorted by stop time descending.

    Use :meth:`from_arrays` or :func:`validate_dataset` to build one; both
    validate and sort.  Attributes are read-only numpy arrays.
    """

    __slots__ = (
        "subject_id",
        "start",
        "stop",
        "event",
        "z",
        "n_subjects",
        "d0",
        "counting_process",
        "_tie_end",
        "_start_order",
        "_neg_start_sorted",
        "_event_idx",
    )

    def __init__(self, subject_id, start, stop, event, z, n_subjects):
        # Trusted constructor: inputs must already be validated and sorted.
        self.subject_id = _readonly(subject_id)
        self.start = _readonly(start)
        self.stop = _readonly(stop)
        self.event = _readonly(event)
        self.z = _readonly(z)
        self.n_subjects = int(n_subjects)
        self.d0 = int(np.count_nonzero(event))
        self.counting_process = bool(np.any(self.start != 0.0))

        neg_stop = -self.stop
        # last storage index whose stop >= stop[i]: end of i's risk-set prefix
        self._tie_end = _readonly(np.searchsorted(neg_stop, neg_stop, side="right") - 1)
        order = np.argsort(-self.start, kind="stable")
        self._start_order = _readonly(order)
        self._neg_start_sorted = _readonly(-self.start[order])
        self._event_idx = _readonly(np.flatnonzero(self.event))

    @classmethod
    def from_arrays(cls, subject_id, start, stop, event, z) -> "SurvivalDataset":
        subject_id = np.asarray(subject_id)
        stop = np.asarray(stop, dtype=float)
        n = stop.shape[0]
        if n == 0:
            raise DataError("dataset has no records")
        start = np.zeros(n) if start is None else np.asarray(start, dtype=float)
        event = np.asarray(event)
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        if z.ndim != 2 or z.shape[0] != n:
            raise DataError("covariate dimension mismatch across rows")
        if subject_id.shape != (n,) or start.shape != (n,) or event.shape != (n,):
            raise DataError("column lengths differ")
        if not np.issubdtype(subject_id.dtype, np.integer):
            if not np.all(np.asarray(subject_id, dtype=float) == np.floor(subject_id)):
                raise DataError("subject ids must be integers")
            subject_id = subject_id.astype(np.int64)
        subject_id = subject_id.astype(np.int64)
        if np.any(subject_id < 0):
            raise DataError("subject ids must be nonnegative")
        if event.dtype != bool:
            if not np.all(np.isin(event, (0, 1))):
                raise DataError("event indicators must be 0 or 1")
            event = event.astype(bool)
        if z.shape[1] < 1:
            raise DataError("need at least one covariate")
        if not (np.all(np.isfinite(start)) and np.all(np.isfinite(stop)) and np.all(np.isfinite(z))):
            raise DataError("non-finite values in data")
        if np.any(start < 0):
            raise DataError("start times must be nonnegative")
        if np.any(start >= stop):
            raise DataError("start >= stop")

        by_subject = np.lexsort((start, subject_id))
        sid, st, sp, ev = subject_id[by_subject], start[by_subject], stop[by_subject], event[by_subject]
        same = sid[1:] == sid[:-1]
        if np.any(same & (st[1:] < sp[:-1])):
            raise DataError("overlapping intervals for a subject")
        if np.any(same & (st[1:] > sp[:-1])):
            raise DataError("non-contiguous intervals for a subject")
        if np.any(same & ev[:-1]):
            raise DataError("event on non-final interval")
        n_subjects = int(np.count_nonzero(~same)) + 1
        if n_subjects < 2:
            raise DataError("need at least two subjects")

        # subject id and start break remaining ties so the order is canonical
        order = np.lexsort((start, subject_id, ~event, -stop))
        return cls(subject_id[order], start[order], stop[order], event[order], z[order], n_subjects)

    @property
    def p(self) -> int:
        return self.z.shape[1]

    @property
    def n_rows(self) -> int:
        return self.stop.shape[0]

    def to_records(self) -> list[SurvivalRecord]:
        return [
            SurvivalRecord(int(i), float(a), float(b), bool(e), tuple(float(x) for x in row))
            for i, a, b, e, row in zip(self.subject_id, self.start, self.stop, self.event, self.z)
        ]

    def subset_rows(self, mask: np.ndarray) -> "SurvivalDataset":
        """Rows selected by a boolean mask; whole subjects must be selected together."""
        ids = self.subject_id[mask]
        return SurvivalDataset(
            ids, self.start[mask], self.stop[mask], self.event[mask], self.z[mask],
            np.unique(ids).shape[0],
        )

    def __eq__(self, other):
        if not isinstance(other, SurvivalDataset):
            return NotImplemented
        return (
            self.n_subjects == other.n_subjects
            and np.array_equal(self.subject_id, other.subject_id)
            and np.array_equal(self.start, other.start)
            and np.array_equal(self.stop, other.stop)
            and np.array_equal(self.event, other.event)
            and np.array_equal(self.z, other.z)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"SurvivalDataset(n_rows={self.n_rows}, n_subjects={self.n_subjects}, "
            f"p={self.p}, d0={self.d0}, counting_process={self.counting_process})"
        )


def validate_dataset(records: Sequence[SurvivalRecord]) -> SurvivalDataset:
    """Validate and sort a list of records into a :class:`SurvivalDataset`."""
    if len(records) == 0:
        raise DataError("dataset has no records")
    p = len(records[0].covariates)
    if any(len(r.covariates) != p for r in records):
        raise DataError("covariate dimension mismatch across rows")
    return SurvivalDataset.from_arrays(
        np.array([r.subject_id for r in records], dtype=np.int64),
        np.array([r.start for r in records], dtype=float),
        np.array([r.stop for r in records], dtype=float),
        np.array([bool(r.event) for r in records]),
        np.array([r.covariates for r in records], dtype=float).reshape(len(records), p),
    )


@dataclass(frozen=True)
class ShardPlan:
    """Assignment of subjects to ``k_shards`` disjoint subsets.

    ``subject_ids`` is sorted; ``shard_of[i]`` is the shard of ``subject_ids[i]``.
    """

    k_shards: int
    subject_ids: np.ndarray
    shard_of: np.ndarray

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.shard_of, minlength=self.k_shards)

    @property
    def assignment(self) -> dict[int, int]:
        return dict(zip(self.subject_ids.tolist(), self.shard_of.tolist()))

    def row_shards(self, dataset: SurvivalDataset) -> np.ndarray:
        pos = np.searchsorted(self.subject_ids, dataset.subject_id)
        if np.any(pos >= self.subject_ids.shape[0]) or np.any(self.subject_ids[pos] != dataset.subject_id):
            raise DataError("dataset contains subjects missing from the shard plan")
        return self.shard_of[pos]

    def __eq__(self, other):
        if not isinstance(other, ShardPlan):
            return NotImplemented
        return (
            self.k_shards == other.k_shards
            and np.array_equal(self.subject_ids, other.subject_ids)
            and np.array_equal(self.shard_of, other.shard_of)
        )

    __hash__ = None


def make_shard_plan(dataset: SurvivalDataset, k_shards: int, seed: int) -> ShardPlan:
    """Uniformly random balanced partition of subjects, reproducible from ``seed``."""
    n = dataset.n_subjects
    if not 1 <= k_shards <= n:
        raise DataError(f"k_shards must be in [1, {n}], got {k_shards}")
    ids = np.unique(dataset.subject_id)
    perm = np.random.default_rng(seed).permutation(n)
    shard_of = np.empty(n, dtype=np.int64)
    # position i of the permutation goes to shard i % K, so sizes differ by <= 1
    shard_of[perm] = np.arange(n) % k_shards
    return ShardPlan(k_shards, _readonly(ids), _readonly(shard_of))


def shard_dataset(dataset: SurvivalDataset, plan: ShardPlan, k: int) -> SurvivalDataset:
    if not 0 <= k < plan.k_shards:
        raise DataError(f"shard index {k} out of range")
    return dataset.subset_rows(plan.row_shards(dataset) == k)


def split_dataset(dataset: SurvivalDataset, plan: ShardPlan) -> list[SurvivalDataset]:
    rows = plan.row_shards(dataset)
    return [dataset.subset_rows(rows == k) for k in range(plan.k_shards)]


def read_csv(path: str | Path) -> SurvivalDataset:
    """Read ``id,[start,]stop,event,z1,...,zp`` CSV into a dataset."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if not header:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in header]
    cols = {name: i for i, name in enumerate(header)}
    for required in ("id", "stop", "event"):
        if required not in cols:
            raise DataError(f"{path}: missing column {required!r}")
    zcols = [c for c in header if c.startswith("z")]
    try:
        zcols.sort(key=lambda c: int(c[1:]))
    except ValueError as exc:
        raise DataError(f"{path}: bad covariate column name") from exc
    if [int(c[1:]) for c in zcols] != list(range(1, len(zcols) + 1)):
        raise DataError(f"{path}: covariate columns must be z1..zp")
    try:
        body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, encoding="utf-8")
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if body.shape[0] == 0:
        raise DataError(f"{path}: no data rows")
    if body.shape[1] != len(header):
        raise DataError(f"{path}: row width does not match header")
    start = body[:, cols["start"]] if "start" in cols else None
    return SurvivalDataset.from_arrays(
        body[:, cols["id"]],
        start,
        body[:, cols["stop"]],
        body[:, cols["event"]],
        body[:, [cols[c] for c in zcols]],
    )


def write_csv(dataset: SurvivalDataset, path: str | Path, include_start: bool | None = None) -> None:
    """Write a dataset as CSV; ``start`` is omitted for time-independent data by default."""
    if include_start is None:
        include_start = dataset.counting_process
    header = ["id"] + (["start"] if include_start else []) + ["stop", "event"]
    header += [f"z{j + 1}" for j in range(dataset.p)]
    # subject order is the natural reading order for a file
    order = np.lexsort((dataset.start, dataset.subject_id))
    cols: list[np.ndarray] = [dataset.subject_id[order].astype(float)]
    if include_start:
        cols.append(dataset.start[order])
    cols += [dataset.stop[order], dataset.event[order].astype(float)]
    body = np.column_stack(cols + [dataset.z[order]])
    fmt = ["%d"] + (["%.17g"] if include_start else []) + ["%.17g", "%d"] + ["%.17g"] * dataset.p
    np.savetxt(Path(path), body, fmt=fmt, delimiter=",", header=",".join(header), comments="", encoding="utf-8")


def records_from_rows(rows: Iterable[tuple]) -> list[SurvivalRecord]:
    """Convenience: ``(id, start, stop, event, covariates)`` tuples to records."""
    return [SurvivalRecord(int(i), float(a), float(b), bool(e), tuple(map(float, z))) for i, a, b, e, z in rows]
