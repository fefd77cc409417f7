"""Low-discrepancy +1/-1 colorings and their certificates."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .gram import FeatureSet
from .kernels import Dataset, KernelSpec, kernel_sums
from .lattice import QuerySet
from .walk import gram_schmidt_walk


@dataclass(frozen=True)
class Coloring:
    """Signs aligned with ``ids``; ``flipped_ids`` lists balance() flips."""

    ids: np.ndarray
    signs: np.ndarray
    seed: int
    flipped_ids: tuple[int, ...] = ()

    def __post_init__(self):
        ids = np.array(self.ids, dtype=np.int64)
        signs = np.array(self.signs, dtype=np.int8)
        if ids.shape != signs.shape or ids.ndim != 1:
            raise InputError("ids and signs must be matching 1-d arrays")
        if not np.all(np.abs(signs) == 1):
            raise InputError("signs must be +1 or -1")
        ids.flags.writeable = False
        signs.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "flipped_ids", tuple(int(i) for i in self.flipped_ids))

    @property
    def n(self) -> int:
        return self.ids.size

    @property
    def plus_count(self) -> int:
        return int(np.count_nonzero(self.signs > 0))

    @property
    def imbalance(self) -> int:
        return abs(2 * self.plus_count - self.n)

    def as_dict(self) -> dict[int, int]:
        return {int(i): int(s) for i, s in zip(self.ids, self.signs)}

    def aligned(self, dataset: Dataset) -> np.ndarray:
        """Signs reordered to follow ``dataset.ids``."""
        order = np.argsort(self.ids)
        loc = np.searchsorted(self.ids, dataset.ids, sorter=order)
        loc = np.clip(loc, 0, self.n - 1)
        pos = order[loc]
        if not np.array_equal(self.ids[pos], dataset.ids):
            raise InputError("coloring does not cover the dataset ids")
        return self.signs[pos].astype(float)


@dataclass(frozen=True)
class DiscrepancyCertificate:
    """Largest |sum_p chi(p) K(x, p)| seen over a query set."""

    max_observed: float
    query_source: str
    queries_evaluated: int
    argmax_query: tuple[float, ...] = ()
    count_slack: float | None = None

    @property
    def lower_bound(self) -> bool:
        return self.query_source != "lattice"

    def to_dict(self) -> dict:
        return {
            "max_observed": self.max_observed,
            "query_source": self.query_source,
            "queries_evaluated": self.queries_evaluated,
            "argmax_query": list(self.argmax_query),
            "count_slack": self.count_slack,
            "lower_bound": self.lower_bound,
        }


def color(features: FeatureSet, seed: int, backend: str | None = None) -> Coloring:
    """Gram-Schmidt walk coloring of the feature rows (deterministic per seed)."""
    norms = features.norms()
    if np.max(np.abs(norms - 1.0)) > 1e-6:
        raise InputError("feature vectors must have unit norm")
    signs = gram_schmidt_walk(features.vectors, seed, backend=backend)
    return Coloring(features.point_ids, signs, seed)


def balance(coloring: Coloring, seed: int) -> Coloring:
    """Flip floor(imbalance/2) uniformly chosen majority points."""
    flips = coloring.imbalance // 2
    if flips == 0:
        return Coloring(coloring.ids, coloring.signs, coloring.seed, coloring.flipped_ids)
    majority = 1 if coloring.plus_count * 2 > coloring.n else -1
    cand = np.flatnonzero(coloring.signs == majority)
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(cand, size=flips, replace=False))
    signs = coloring.signs.copy()
    signs[chosen] = -majority
    flipped = tuple(coloring.flipped_ids) + tuple(int(i) for i in coloring.ids[chosen])
    return Coloring(coloring.ids, signs, coloring.seed, flipped)


def random_coloring(ids, seed: int) -> Coloring:
    """Independent fair signs, the baseline the walk is measured against."""
    ids = np.asarray(ids, dtype=np.int64)
    rng = np.random.default_rng(seed)
    return Coloring(ids, np.where(rng.random(ids.size) < 0.5, 1, -1), seed)


def signed_sums(coloring: Coloring, kernel: KernelSpec, dataset: Dataset, queries) -> np.ndarray:
    pts = queries.points if isinstance(queries, QuerySet) else queries
    return kernel_sums(kernel, pts, dataset.points, coloring.aligned(dataset))


def certify(
    coloring: Coloring, kernel: KernelSpec, dataset: Dataset, queries: QuerySet
) -> DiscrepancyCertificate:
    """Maximum absolute signed kernel sum over ``queries``."""
    vals = np.abs(signed_sums(coloring, kernel, dataset, queries))
    i = int(np.argmax(vals))
    return DiscrepancyCertificate(
        max_observed=float(vals[i]),
        query_source=queries.source,
        queries_evaluated=queries.size,
        argmax_query=tuple(float(v) for v in queries.points[i]),
        count_slack=queries.count_slack,
    )


def write_coloring(path, coloring: Coloring) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "sign"])
        for i, s in zip(coloring.ids, coloring.signs):
            w.writerow([int(i), int(s)])


def read_coloring(path, seed: int = 0) -> Coloring:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    body = rows[1:] if rows and rows[0] and rows[0][0] == "id" else rows
    ids = [int(r[0]) for r in body if r]
    signs = [int(r[1]) for r in body if r]
    return Coloring(np.array(ids), np.array(signs), seed)
