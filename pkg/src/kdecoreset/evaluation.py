"""KDE evaluation, L-infinity errors, and kernel (MMD) distances."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError
from .kernels import Dataset, KernelSpec, kernel_sums
from .lattice import QuerySet

FAIL_TOL = 1e-9


def weighted_points(obj) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(points, weights, ids) of a Dataset (uniform weights) or a Coreset."""
    if isinstance(obj, Dataset):
        return obj.points, np.full(obj.n, 1.0 / obj.n), obj.ids
    subset = getattr(obj, "subset", None)
    if isinstance(subset, Dataset):
        return subset.points, np.asarray(obj.weights, dtype=float), subset.ids
    raise InputError(f"expected a Dataset or Coreset, got {type(obj).__name__}")


def _domain_of(obj):
    return obj.domain if isinstance(obj, Dataset) else obj.subset.domain


def kde(kernel: KernelSpec, weighted_set, x) -> float:
    """sum_p w_p K(x, p) at a single point ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    kernel.domain.check(x)
    P, w, _ = weighted_points(weighted_set)
    return float(kernel_sums(kernel, x[None, :], P, w)[0])


mean_embedding_dot = kde


def kde_many(kernel: KernelSpec, weighted_set, X) -> np.ndarray:
    """Vectorized :func:`kde` over the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    kernel.domain.check(X)
    P, w, _ = weighted_points(weighted_set)
    return kernel_sums(kernel, X, P, w)


def _kappa(kernel: KernelSpec, A, wa, B, wb) -> float:
    return float(wa @ kernel_sums(kernel, A, B, wb))


def _distance_from_terms(kpp: float, kqq: float, kpq: float) -> float:
    rad = kpp + kqq - 2.0 * kpq
    if rad < -FAIL_TOL:
        raise NumericalError(f"kernel distance radicand {rad:.3e} is negative")
    # radicands in [-FAIL_TOL, 0) are rounding noise around a zero distance
    return math.sqrt(max(rad, 0.0))


def kernel_distance(kernel: KernelSpec, A, B) -> float:
    """sqrt(kappa(A,A) + kappa(B,B) - 2 kappa(A,B)) with weights."""
    PA, wa, _ = weighted_points(A)
    PB, wb, _ = weighted_points(B)
    for w in (wa, wb):
        if abs(w.sum() - 1.0) > 1e-9:
            raise InputError("weights must sum to 1")
    return _distance_from_terms(
        _kappa(kernel, PA, wa, PA, wa), _kappa(kernel, PB, wb, PB, wb), _kappa(kernel, PA, wa, PB, wb)
    )


@dataclass(frozen=True)
class ErrorReport:
    """Max |kde_P - kde_Q| over a query set plus the kernel distance.

    When ``lower_bound`` is true the queries were sampled and ``linf_error``
    only bounds the true supremum from below.
    """

    linf_error: float
    argmax_query: tuple[float, ...]
    query_source: str
    lower_bound: bool
    kernel_distance: float
    koksma_hlawka_gap: float
    queries_evaluated: int
    additive_slack: float | None = None
    runtime_ms: float = 0.0

    def to_dict(self) -> dict:
        return {
            "linf_error": self.linf_error,
            "argmax_query": list(self.argmax_query),
            "query_source": self.query_source,
            "lower_bound": self.lower_bound,
            "kernel_distance": self.kernel_distance,
            "koksma_hlawka_gap": self.koksma_hlawka_gap,
            "queries_evaluated": self.queries_evaluated,
            "additive_slack": self.additive_slack,
            "runtime_ms": self.runtime_ms,
        }


class ReferenceEvaluator:
    """Caches everything about a reference set P that error reports reuse:
    kde_P at the queries, kde_P at the data points, and kappa(P, P).

    ``gram`` may be passed when the Gram matrix of P is already at hand.
    """

    def __init__(self, kernel: KernelSpec, reference: Dataset, queries: QuerySet, gram=None):
        self.kernel = kernel
        self.reference = reference
        self.queries = queries
        n = reference.n
        w = np.full(n, 1.0 / n)
        self._ref_at_queries = kernel_sums(kernel, queries.points, reference.points, w)
        if gram is not None:
            self._ref_at_data = np.asarray(gram).mean(axis=1)
        else:
            self._ref_at_data = kernel_sums(kernel, reference.points, reference.points, w)
        self.kappa_pp = float(self._ref_at_data.mean())
        self._order = np.argsort(reference.ids)

    def _ref_kde_at(self, points, ids) -> np.ndarray:
        loc = np.clip(np.searchsorted(self.reference.ids, ids, sorter=self._order), 0, self.reference.n - 1)
        pos = self._order[loc]
        if np.array_equal(self.reference.ids[pos], ids) and np.array_equal(self.reference.points[pos], points):
            return self._ref_at_data[pos]
        w = np.full(self.reference.n, 1.0 / self.reference.n)
        return kernel_sums(self.kernel, points, self.reference.points, w)

    def kernel_distance(self, approx) -> float:
        Q, wq, ids = weighted_points(approx)
        if abs(wq.sum() - 1.0) > 1e-9:
            raise InputError("weights must sum to 1")
        kpq = float(wq @ self._ref_kde_at(Q, ids))
        kqq = _kappa(self.kernel, Q, wq, Q, wq)
        return _distance_from_terms(self.kappa_pp, kqq, kpq)

    def report(self, approx) -> ErrorReport:
        t0 = time.perf_counter()
        Q, wq, _ = weighted_points(approx)
        diff = np.abs(self._ref_at_queries - kernel_sums(self.kernel, self.queries.points, Q, wq))
        i = int(np.argmax(diff))
        dk = self.kernel_distance(approx)
        linf = float(diff[i])
        return ErrorReport(
            linf_error=linf,
            argmax_query=tuple(float(v) for v in self.queries.points[i]),
            query_source=self.queries.source,
            lower_bound=self.queries.lower_bound,
            kernel_distance=dk,
            koksma_hlawka_gap=dk - linf,
            queries_evaluated=self.queries.size,
            additive_slack=self.queries.additive_slack,
            runtime_ms=(time.perf_counter() - t0) * 1e3,
        )


def linf_error(kernel: KernelSpec, reference: Dataset, approx, queries: QuerySet) -> ErrorReport:
    """Max |kde_P - kde_Q| over ``queries``, with the kernel distance."""
    if _domain_of(approx) != reference.domain:
        raise InputError("reference and approximation live on different domains")
    t0 = time.perf_counter()
    rep = ReferenceEvaluator(kernel, reference, queries).report(approx)
    return ErrorReport(**{**rep.__dict__, "runtime_ms": (time.perf_counter() - t0) * 1e3})
