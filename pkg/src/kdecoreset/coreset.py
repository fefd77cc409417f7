"""Recursive halving and merge-reduce streaming.

One halving colors the points with the Gram-Schmidt walk, evens out the
two color classes, and keeps one class. Repeating it k times turns n
points into about n/2^k points whose KDE stays close to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .discrepancy import Coloring, DiscrepancyCertificate, balance, color
from .errors import InputError
from .formats import write_csv, write_json
from .gram import decompose, gram_matrix
from .kernels import Dataset, Domain, KernelSpec

FEATURE_TOLERANCE = 1e-8
# above this size the O(n^2 r) exact residual check is replaced by its bound
EXACT_ERROR_LIMIT = 2048


@dataclass(frozen=True)
class Coreset:
    """A weighted subset of a parent dataset, with provenance."""

    subset: Dataset
    weights: np.ndarray
    method: str
    halving_depth: int = 0
    seed: int = 0
    parent_size: int | None = None
    certificates: tuple[DiscrepancyCertificate, ...] = ()
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ("halving", "merge_reduce", "random", "herding"):
            raise InputError(f"unknown coreset method {self.method!r}")
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.subset.n,):
            raise InputError("one weight per coreset point is required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InputError("weights must be nonnegative and sum to 1")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.subset.n

    @property
    def ids(self) -> np.ndarray:
        return self.subset.ids

    def provenance(self) -> dict:
        return {
            "method": self.method,
            "size": self.size,
            "halving_depth": self.halving_depth,
            "seed": self.seed,
            "parent_size": self.parent_size,
            "certificates": [c.to_dict() for c in self.certificates],
            **self.info,
        }

    def write(self, path) -> None:
        """CSV of (id, coordinates, weight) plus a ``.json`` provenance sidecar."""
        write_csv(path, self.subset.points, self.subset.ids, self.weights)
        write_json(str(path) + ".json", self.provenance())


def uniform(subset: Dataset, method: str, **kw) -> Coreset:
    return Coreset(subset, np.full(subset.n, 1.0 / subset.n), method, **kw)


def level_seed(seed: int, level: int) -> int:
    """Seed of halving level ``level``; independent of the target size."""
    return int(np.random.SeedSequence([int(seed), int(level)]).generate_state(1)[0])


@dataclass(frozen=True)
class HalvingStep:
    kept: Dataset
    coloring: Coloring
    certificate: DiscrepancyCertificate
    rank: int


def _halve(kernel: KernelSpec, dataset: Dataset, seed: int, backend: str | None = None) -> HalvingStep:
    n = dataset.n
    if n < 2:
        raise InputError("halving needs at least two points")
    color_seed, balance_seed, coin_seed = (
        int(s.generate_state(1)[0]) for s in np.random.SeedSequence(int(seed)).spawn(3)
    )
    if n % 2:
        carry = int(np.argmin(dataset.ids))
        rest = np.delete(np.arange(n), carry)
    else:
        carry = None
        rest = np.arange(n)
    part = dataset.take(rest)
    G = gram_matrix(kernel, part)
    method = "cholesky" if part.n > 256 else "eigh"
    feats = decompose(
        G, FEATURE_TOLERANCE, method=method, point_ids=part.ids,
        exact_error=part.n <= EXACT_ERROR_LIMIT,
    )
    col = balance(color(feats, color_seed, backend=backend), balance_seed)
    chi = col.signs.astype(float)
    signed = np.abs(G @ chi)
    i = int(np.argmax(signed))
    cert = DiscrepancyCertificate(
        max_observed=float(signed[i]),
        query_source="sampled",
        queries_evaluated=part.n,
        argmax_query=tuple(float(v) for v in part.points[i]),
    )
    keep_sign = 1 if np.random.default_rng(coin_seed).random() < 0.5 else -1
    kept_pos = rest[col.signs == keep_sign]
    if carry is not None:
        kept_pos = np.sort(np.append(kept_pos, carry))
    return HalvingStep(dataset.take(kept_pos), col, cert, feats.rank)


def halve(kernel: KernelSpec, dataset: Dataset, seed: int, backend: str | None = None):
    """One halving step; returns ``(kept, coloring)``.

    With odd n the lowest-id point sits out the coloring and is always kept.
    """
    step = _halve(kernel, dataset, seed, backend)
    return step.kept, step.coloring


def halving_levels(
    kernel: KernelSpec, dataset: Dataset, seed: int, target_size: int = 1, backend: str | None = None
) -> Iterator[HalvingStep]:
    """Yield successive halvings while the current set exceeds ``target_size``."""
    current = dataset
    level = 0
    while current.n > target_size and current.n >= 2:
        step = _halve(kernel, current, level_seed(seed, level), backend)
        yield step
        current = step.kept
        level += 1


def build(
    kernel: KernelSpec, dataset: Dataset, target_size: int, seed: int, backend: str | None = None
) -> Coreset:
    """Halve until the kept set has at most ``target_size`` points."""
    if not 1 <= target_size <= dataset.n:
        raise InputError(f"target_size must lie in [1, {dataset.n}], got {target_size}")
    kept = dataset
    certs = []
    ranks = []
    for step in halving_levels(kernel, dataset, seed, target_size, backend):
        kept = step.kept
        certs.append(step.certificate)
        ranks.append(step.rank)
    return uniform(
        kept, "halving", halving_depth=len(certs), seed=seed, parent_size=dataset.n,
        certificates=tuple(certs), info={"feature_ranks": ranks},
    )


def target_for_epsilon(epsilon: float, d: int) -> int:
    """Coreset size (sqrt(d)/eps) * sqrt(max(1, ln(1/eps))), rounded up."""
    if not 0 < epsilon < 1:
        raise InputError("epsilon must lie in (0, 1)")
    raw = (np.sqrt(d) / epsilon) * np.sqrt(max(1.0, np.log(1.0 / epsilon)))
    return int(np.ceil(raw - 1e-9))


# -- streaming ---------------------------------------------------------------


def _as_stream(stream, domain: Domain | None) -> Iterator[tuple[np.ndarray, int]]:
    if isinstance(stream, Dataset):
        for p, i in zip(stream.points, stream.ids):
            yield p, int(i)
        return
    for i, p in enumerate(stream):
        yield np.asarray(p, dtype=float), i


class MergeReduce:
    """Binary-counter merge-reduce over fixed-size blocks.

    Live blocks are keyed by level; a level-l block summarizes
    block_size * 2^l stream points. Two blocks at equal level are united
    and halved into one block of the next level.
    """

    def __init__(self, kernel: KernelSpec, block_size: int, target_size: int, seed: int,
                 backend: str | None = None):
        if target_size < 1 or block_size < 2 * target_size:
            raise InputError("block_size must be at least twice target_size")
        self.kernel = kernel
        self.block_size = block_size
        self.target_size = target_size
        self.seed = seed
        self.backend = backend
        self.levels: dict[int, Dataset] = {}
        self.merge_events = 0
        self.seen = 0
        self._buf_pts: list[np.ndarray] = []
        self._buf_ids: list[int] = []

    def _merge_seed(self) -> int:
        return int(np.random.SeedSequence([int(self.seed), 1, self.merge_events]).generate_state(1)[0])

    def _reduce(self, block: Dataset) -> Dataset:
        kept, _ = halve(self.kernel, block, self._merge_seed(), self.backend)
        self.merge_events += 1
        return kept

    def _carry(self, block: Dataset, level: int) -> None:
        while level in self.levels:
            block = self._reduce(self.levels.pop(level).concat(block))
            level += 1
        self.levels[level] = block

    def push(self, point: np.ndarray, pid: int, domain: Domain) -> None:
        self._buf_pts.append(point)
        self._buf_ids.append(pid)
        self.seen += 1
        if len(self._buf_pts) == self.block_size:
            self._carry(Dataset(np.array(self._buf_pts), domain, np.array(self._buf_ids)), 0)
            self._buf_pts, self._buf_ids = [], []

    def live_points(self) -> int:
        return sum(b.n for b in self.levels.values()) + len(self._buf_pts)

    def finish(self, domain: Domain) -> Coreset:
        events_before_flush = self.merge_events
        blocks = dict(self.levels)
        if self._buf_pts:
            tail = Dataset(np.array(self._buf_pts), domain, np.array(self._buf_ids))
            if 0 in blocks:
                blocks[0] = blocks[0].concat(tail)
            else:
                blocks[0] = tail
        if not blocks:
            raise InputError("empty stream")
        # promote lower levels by halving until they meet the next level
        order = sorted(blocks)
        acc, lvl = blocks[order[0]], order[0]
        for nxt in order[1:]:
            while lvl < nxt and acc.n >= 2:
                acc = self._reduce(acc)
                lvl += 1
            acc = self._reduce(blocks[nxt].concat(acc))
            lvl = nxt + 1
        final = build(self.kernel, acc, min(self.target_size, acc.n), self.seed, self.backend)
        return Coreset(
            final.subset, final.weights, "merge_reduce",
            halving_depth=final.halving_depth, seed=self.seed, parent_size=self.seen,
            certificates=final.certificates,
            info={
                "block_size": self.block_size,
                "merge_events": events_before_flush,
                "flush_events": self.merge_events - events_before_flush,
                "top_level": lvl,
            },
        )


def build_streaming(
    kernel: KernelSpec,
    stream,
    block_size: int,
    target_size: int,
    seed: int,
    domain: Domain | None = None,
    backend: str | None = None,
) -> Coreset:
    """Merge-reduce coreset of a point stream (a Dataset or iterable of points).

    A stream of exactly one block reduces to ``build`` on that block.
    """
    domain = domain or (stream.domain if isinstance(stream, Dataset) else kernel.domain)
    mr = MergeReduce(kernel, block_size, target_size, seed, backend)
    for p, pid in _as_stream(stream, domain):
        mr.push(p, pid, domain)
    return mr.finish(domain)
