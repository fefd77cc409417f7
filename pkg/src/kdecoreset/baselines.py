"""Comparison methods: uniform random sampling and greedy kernel herding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coreset import Coreset, uniform
from .errors import InputError
from .kernels import Dataset, KernelSpec, kernel_sums


def random_sample(dataset: Dataset, size: int, seed: int) -> Coreset:
    """Uniform sample without replacement, uniform weights."""
    if not 1 <= size <= dataset.n:
        raise InputError(f"size must lie in [1, {dataset.n}], got {size}")
    rng = np.random.default_rng(seed)
    pick = rng.choice(dataset.n, size=size, replace=False)
    return uniform(dataset.take(pick), "random", seed=seed, parent_size=dataset.n)


@dataclass(frozen=True)
class HerdingPath:
    """Selection order (row positions) and the kernel distance after each step."""

    selected: np.ndarray
    distances: np.ndarray


def herding_path(kernel: KernelSpec, dataset: Dataset, steps: int) -> HerdingPath:
    """Greedy herding over the points of ``dataset``, with replacement.

    Step t+1 picks the point q maximizing kde_P(q) - (S(q) + 1/2)/(t+1),
    where S(q) is the running sum of K(q, .) over earlier picks; this is the
    exact minimizer of the squared kernel distance after adding q. Ties go
    to the lowest id.
    """
    if steps < 1:
        raise InputError("steps must be at least 1")
    P = dataset.points
    n = dataset.n
    order = np.argsort(dataset.ids, kind="stable")
    Ps = P[order]
    kde_p = kernel_sums(kernel, Ps, Ps, np.full(n, 1.0 / n))
    kappa_pp = float(kde_p.mean())
    running = np.zeros(n)
    sel = np.empty(steps, dtype=np.int64)
    dist = np.empty(steps)
    sum_kde = 0.0
    sum_kk = 0.0
    for t in range(steps):
        score = kde_p - (running + 0.5) / (t + 1)
        j = int(np.argmax(score))
        sel[t] = j
        sum_kde += kde_p[j]
        sum_kk += 2.0 * running[j] + 1.0
        running += kernel.matrix(Ps, Ps[j:j + 1])[:, 0]
        m = t + 1
        dist[t] = np.sqrt(max(kappa_pp - 2.0 * sum_kde / m + sum_kk / (m * m), 0.0))
    return HerdingPath(order[sel], dist)


def herd(kernel: KernelSpec, dataset: Dataset, size: int, seed: int = 0) -> Coreset:
    """Herding for ``size`` steps; repeated picks become larger weights.

    The method is deterministic; ``seed`` is only recorded.
    """
    if not 1 <= size <= dataset.n:
        raise InputError(f"size must lie in [1, {dataset.n}], got {size}")
    return herd_from_path(dataset, herding_path(kernel, dataset, size), size, seed)


def herd_from_path(dataset: Dataset, path: HerdingPath, steps: int, seed: int = 0) -> Coreset:
    """Coreset after the first ``steps`` picks of a precomputed path."""
    if not 1 <= steps <= path.selected.size:
        raise InputError(f"steps must lie in [1, {path.selected.size}], got {steps}")
    pos, counts = np.unique(path.selected[:steps], return_counts=True)
    return Coreset(
        dataset.take(pos), counts / counts.sum(), "herding", seed=seed, parent_size=dataset.n,
        info={"steps": steps, "kernel_distance_path": path.distances[:steps].tolist()},
    )
