"""Finite query sets on which KDE errors and discrepancies are measured.

A lattice query set certifies the supremum over the whole domain up to a
recorded additive slack. A sampled query set only yields a lower bound and
is labeled as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceededError, InputError
from .formats import write_csv, write_json
from .kernels import Dataset, KernelSpec, influence_box

DEFAULT_BUDGET = 10_000_000
PERTURBATION_SCALES = (0.1, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class QuerySet:
    """Query locations plus how they were produced.

    For lattices, ``count_slack`` bounds how much the supremum of a signed
    kernel sum with unit coefficients (a coloring discrepancy) can exceed
    its lattice maximum inside the influence box, and ``additive_slack``
    does the same for a difference of two KDEs (kde units). Outside the box
    both are below ``outside_bound`` per unit of total weight.
    """

    points: np.ndarray
    source: str
    spacing: float | None = None
    count: int | None = None
    seed: int | None = None
    additive_slack: float | None = None
    count_slack: float | None = None
    outside_bound: float | None = None
    shape: tuple = field(default=())

    def __post_init__(self):
        if self.source not in ("lattice", "sampled", "witnesses"):
            raise InputError(f"unknown query source {self.source!r}")
        P = np.array(self.points, dtype=float, ndmin=2)
        if P.shape[0] == 0:
            raise InputError("a query set needs at least one point")
        P.flags.writeable = False
        object.__setattr__(self, "points", P)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def lower_bound(self) -> bool:
        """True when the maximum over these queries only bounds the supremum from below."""
        return self.source != "lattice"

    def describe(self) -> dict:
        return {
            "source": self.source,
            "size": self.size,
            "spacing": self.spacing,
            "seed": self.seed,
            "additive_slack": self.additive_slack,
            "count_slack": self.count_slack,
            "outside_bound": self.outside_bound,
            "lower_bound": self.lower_bound,
        }

    @classmethod
    def from_points(cls, points, source: str = "witnesses") -> QuerySet:
        return cls(points=points, source=source, count=len(points))


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    cells = max(0, math.ceil((hi - lo) / step - 1e-12))
    if cells == 0:
        return np.array([0.5 * (lo + hi)])
    return np.linspace(lo, hi, cells + 1)


def lattice_axes(lower, upper, spacing: float, refine: int = 1) -> list[np.ndarray]:
    """Per-axis coordinates covering [lower, upper] with step <= spacing.

    ``refine`` subdivides every cell, so refined axes contain the coarse ones.
    """
    axes = []
    for lo, hi in zip(lower, upper):
        base = _axis(float(lo), float(hi), spacing)
        if refine > 1 and base.size > 1:
            base = np.linspace(base[0], base[-1], (base.size - 1) * refine + 1)
        axes.append(base)
    return axes


def _grid(axes: list[np.ndarray]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def build_lattice(
    kernel: KernelSpec,
    dataset: Dataset,
    delta: float,
    budget: int = DEFAULT_BUDGET,
    refine: int = 1,
) -> QuerySet:
    """Axis-aligned lattice over the influence box with certified slack.

    Lipschitz kernels use spacing ``1/(sqrt(D) n C_K)``: every box point is
    within half a diagonal of a lattice point, so a signed sum of n unit
    terms moves by at most 1/2 and a KDE difference by at most 1/n.
    Hölder-1/2 kernels on the simplex lay the lattice in the chart of the
    first d coordinates with spacing ``1/(4 d n^2 C_H^2)`` and round down,
    which gives the same two slacks. Sphere lattices keep ambient points
    within one cell of the sphere and project them onto it.

    ``refine`` > 1 builds the same lattice subdivided ``refine`` times per
    cell, for brute-force comparisons.
    """
    n = dataset.n
    dom = kernel.domain
    D = dom.ambient_dim
    if kernel.family in ("jensen_shannon", "hellinger"):
        d = dom.d
        spacing = 1.0 / (4.0 * d * n * n * kernel.holder ** 2)
        reach = kernel.holder * math.sqrt(d * spacing)
        count_slack, kde_slack = n * reach, 2.0 * reach
        step = spacing / refine
        cells = math.ceil(1.0 / step)
        est = math.comb(cells + d, d)
        if est > budget:
            raise BudgetExceededError(est, budget)
        axis = np.arange(cells + 1) * step
        axis[-1] = min(axis[-1], 1.0)
        chart = _simplex_chart(axis, d)
        pts = np.hstack([chart, np.clip(1.0 - chart.sum(axis=1, keepdims=True), 0.0, None)])
        pts = dom.project(pts)
        shape = (pts.shape[0],)
        outside = 0.0
    elif dom.kind == "sphere":
        spacing = 1.0 / (math.sqrt(D) * n * kernel.lipschitz)
        reach = kernel.lipschitz * spacing * math.sqrt(D) / 2.0
        count_slack, kde_slack = n * reach, 2.0 * reach
        band = spacing * math.sqrt(D)
        step = spacing / refine
        shell = (2 * math.pi ** (D / 2) / math.gamma(D / 2)) * 2.0 * band
        est = int(shell / step ** D) + 1
        if est > budget:
            raise BudgetExceededError(est, budget)
        axes = lattice_axes(-np.ones(D) - step, np.ones(D) + step, step)
        pts = _shell_points(axes, band)
        pts = dom.project(pts)
        shape = (pts.shape[0],)
        outside = 0.0
    else:
        box = influence_box(kernel, dataset, delta)
        spacing = 1.0 / (math.sqrt(D) * n * kernel.lipschitz)
        reach = kernel.lipschitz * spacing * math.sqrt(D) / 2.0
        count_slack, kde_slack = n * reach, 2.0 * reach
        sizes = [
            max(1, math.ceil((hi - lo) / spacing - 1e-12) * refine + 1)
            for lo, hi in zip(box.lower, box.upper)
        ]
        est = math.prod(sizes)
        if est > budget:
            raise BudgetExceededError(est, budget)
        axes = lattice_axes(box.lower, box.upper, spacing, refine)
        pts = _grid(axes)
        shape = tuple(a.size for a in axes)
        outside = delta
    return QuerySet(
        points=pts,
        source="lattice",
        spacing=spacing,
        count=pts.shape[0],
        additive_slack=kde_slack,
        count_slack=count_slack,
        outside_bound=outside,
        shape=shape,
    )


def _simplex_chart(axis: np.ndarray, d: int) -> np.ndarray:
    # lattice points of [0,1]^d with coordinate sum <= 1
    pts = axis[:, None]
    for _ in range(d - 1):
        left = np.repeat(pts, axis.size, axis=0)
        right = np.tile(axis, pts.shape[0])[:, None]
        pts = np.hstack([left, right])
        pts = pts[pts.sum(axis=1) <= 1.0 + 1e-12]
    return pts[pts.sum(axis=1) <= 1.0 + 1e-12]


def _shell_points(axes: list[np.ndarray], band: float) -> np.ndarray:
    # slab by slab along the first axis to keep memory bounded
    rest = _grid(axes[1:]) if len(axes) > 1 else np.zeros((1, 0))
    rest_sq = (rest * rest).sum(axis=1)
    out = []
    for a in axes[0]:
        r = np.sqrt(a * a + rest_sq)
        keep = np.abs(r - 1.0) <= band
        if keep.any():
            out.append(np.hstack([np.full((keep.sum(), 1), a), rest[keep]]))
    return np.vstack(out)


def sample_queries(kernel: KernelSpec, dataset: Dataset, count: int, seed: int) -> QuerySet:
    """Seeded query sample: data points, midpoints of random pairs, and
    Gaussian perturbations of data points at several multiples of 1/alpha.

    All points are projected onto the domain. Maxima over this set are
    lower bounds on the supremum.
    """
    if count < 1:
        raise InputError("count must be at least 1")
    rng = np.random.default_rng(seed)
    P = dataset.points
    n = P.shape[0]
    dom = kernel.domain
    if count <= n:
        pick = np.sort(rng.choice(n, size=count, replace=False)) if count < n else np.arange(n)
        return QuerySet(P[pick], "sampled", count=count, seed=seed)
    extra = count - n
    n_mid = extra // 5
    n_pert = extra - n_mid
    a = rng.integers(0, n, size=n_mid)
    b = rng.integers(0, n, size=n_mid)
    mids = 0.5 * (P[a] + P[b])
    base = P[rng.integers(0, n, size=n_pert)]
    scales = np.asarray(PERTURBATION_SCALES)[np.arange(n_pert) % len(PERTURBATION_SCALES)]
    pert = base + rng.normal(size=base.shape) * (scales / kernel.alpha)[:, None]
    Q = np.vstack([P, mids, pert])
    if dom.kind != "euclidean":
        Q[n:] = dom.project(Q[n:])
    return QuerySet(Q, "sampled", count=count, seed=seed)


def write_queries(path, queries: QuerySet) -> None:
    """CSV of query points plus a JSON sidecar describing their source."""
    write_csv(path, queries.points, np.arange(queries.size))
    write_json(str(path) + ".json", queries.describe())
