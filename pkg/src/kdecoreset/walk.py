"""Gram-Schmidt walk over unit feature vectors.

The walk keeps a fractional coloring in [-1, 1]^n. Each step moves along
the direction that cancels the pivot vector against the other alive
vectors as well as possible (a ridge-regularized least-squares
projection), by a random mean-zero amount that freezes at least one more
coordinate at +1 or -1. The pivot is always the alive point with the
largest index.

An all-ones coordinate is appended to every vector so the signed sum also
controls the color imbalance. The hot loop lives in the compiled
``_walk`` extension; ``_walk_py`` is a drop-in fallback selected when the
extension is missing or ``KDECORESET_BACKEND=python`` is set.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.linalg import cholesky

from . import _walk_py

try:
    from . import _walk as _walk_ext
except ImportError:  # pragma: no cover - depends on the build
    _walk_ext = None

DEFAULT_RIDGE = 1e-12
FREEZE_TOL = 1e-12

_BACKENDS = {"python": _walk_py.run_walk}
if _walk_ext is not None:
    _BACKENDS["compiled"] = _walk_ext.run_walk


def available_backends() -> tuple[str, ...]:
    return tuple(_BACKENDS)


def default_backend() -> str:
    forced = os.environ.get("KDECORESET_BACKEND", "").strip().lower()
    if forced:
        if forced not in _BACKENDS:
            raise RuntimeError(f"walk backend {forced!r} is not available")
        return forced
    return "compiled" if "compiled" in _BACKENDS else "python"


def _factor(V: np.ndarray, k: int, ppos: int, ridge: float) -> np.ndarray:
    """Upper factor Lt of ridge*I + sum over alive non-pivot rows."""
    rows = np.delete(V[:k], ppos, axis=0)
    C = rows.T @ rows
    C[np.diag_indices_from(C)] += ridge
    return np.ascontiguousarray(cholesky(C, lower=False))


def gram_schmidt_walk(
    vectors: np.ndarray,
    seed: int,
    ridge: float = DEFAULT_RIDGE,
    balance_row: bool = True,
    backend: str | None = None,
    return_stats: bool = False,
):
    """Color the rows of ``vectors`` with +1/-1.

    ``seed`` drives the random step sizes only; the start point is the
    all-zeros coloring and the pivot order is fixed by index, so equal
    inputs and seeds give equal colorings on every backend.

    Returns an int8 array of signs (and a stats dict if requested).
    """
    V = np.asarray(vectors, dtype=float)
    if V.ndim != 2 or V.shape[0] == 0:
        raise ValueError("vectors must be a non-empty 2-d array")
    n = V.shape[0]
    if balance_row:
        V = np.hstack([V, np.ones((n, 1))]) / np.sqrt(2.0)
    V = np.ascontiguousarray(V, dtype=float)
    run = _BACKENDS[backend or default_backend()]

    x = np.zeros(n)
    perm = np.arange(n, dtype=np.int64)
    uniforms = np.random.default_rng(seed).random(n)
    k, ppos, step = n, n - 1, 0
    refactors = 0
    Lt = _factor(V, k, ppos, ridge)
    while k > 0:
        status, k, ppos, step = run(V, x, perm, Lt, k, ppos, uniforms, step, ridge, FREEZE_TOL)
        if status:
            refactors += 1
            Lt = _factor(V, k, ppos, ridge)
    signs = np.empty(n, dtype=np.int8)
    signs[perm] = np.where(x > 0, 1, -1)
    if return_stats:
        return signs, {"steps": step, "refactors": refactors, "dim": V.shape[1]}
    return signs
