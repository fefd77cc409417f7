"""Gram matrices and their factorization into unit feature vectors.

For a positive-definite kernel the Gram matrix over P factors as
``G = V V^T`` with unit rows ``v_p``; these rows are all the discrepancy
walk needs. Points outside P never go through a FeatureSet.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import eigh

from .errors import InputError, NotPSDError
from .kernels import Dataset, KernelSpec

MAGIC = b"KDEFVEC1"


@dataclass(frozen=True)
class FeatureSet:
    """Row ``vectors[i]`` is the unit feature vector of point ``point_ids[i]``.

    ``reconstruction_error`` is the measured max |<v_p, v_q> - G[p, q]|.
    """

    vectors: np.ndarray
    point_ids: np.ndarray
    reconstruction_error: float
    tolerance: float
    method: str = "eigh"

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)


def gram_matrix(kernel: KernelSpec, dataset: Dataset) -> np.ndarray:
    G = kernel.matrix(dataset.points, dataset.points)
    np.fill_diagonal(G, 1.0)
    return G


def _max_abs_residual(V: np.ndarray, G: np.ndarray, block: int = 1024) -> float:
    worst = 0.0
    for s in range(0, V.shape[0], block):
        R = V[s:s + block] @ V.T
        R -= G[s:s + block]
        worst = max(worst, float(np.max(np.abs(R))))
    return worst


def decompose(
    gram: np.ndarray,
    tolerance: float = 1e-8,
    method: str = "eigh",
    point_ids=None,
    exact_error: bool = True,
) -> FeatureSet:
    """Factor ``gram`` into unit feature rows within ``tolerance``.

    ``method="eigh"`` clips eigenvalues at zero and drops the trailing
    eigen-directions whose total mass stays below ``tolerance / 4``.
    ``method="cholesky"`` runs a diagonally pivoted Cholesky that stops
    once every residual diagonal is below ``tolerance / 2``; it is much
    faster when the numerical rank is far below n. Either way the rows are
    rescaled to exactly unit norm and the realized error is measured.

    With ``exact_error=False`` and the Cholesky method the O(n^2 r)
    measurement is replaced by a certified bound: the Cholesky residual is
    PSD, so its entries are bounded by its largest diagonal, and unit
    rescaling moves each inner product by at most |1 - |a_p| |a_q||.

    Raises NotPSDError when an eigenvalue (or residual diagonal) falls
    below ``-tolerance``.
    """
    G = np.asarray(gram, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] == 0:
        raise InputError("gram must be a non-empty square matrix")
    if not np.allclose(G, G.T, rtol=0, atol=1e-12):
        raise InputError("gram must be symmetric")
    if np.max(np.abs(np.diag(G) - 1.0)) > 1e-12:
        raise InputError("gram must have a unit diagonal")
    n = G.shape[0]
    ids = np.arange(n) if point_ids is None else np.asarray(point_ids, dtype=np.int64)

    if method == "eigh":
        w, Q = eigh(G)
        if w[0] < -tolerance:
            raise NotPSDError(f"minimum eigenvalue {w[0]:.3e} is below -{tolerance:g}")
        w = np.clip(w, 0.0, None)
        # eigenvalues ascend; drop the smallest while their mass is negligible
        dropped = np.cumsum(w)
        keep = max(1, n - int(np.searchsorted(dropped, tolerance / 4.0, side="right")))
        V = Q[:, n - keep:] * np.sqrt(w[n - keep:])
    elif method == "cholesky":
        V = _pivoted_cholesky(G, tolerance / 2.0, tolerance)
    else:
        raise InputError(f"unknown decomposition method {method!r}")

    norms = np.linalg.norm(V, axis=1)
    if np.any(norms == 0):
        raise NotPSDError("a feature vector vanished; the Gram matrix is degenerate")
    V = np.ascontiguousarray(V / norms[:, None])
    if exact_error or method != "cholesky":
        err = _max_abs_residual(V, G)
    else:
        sq = norms * norms
        lo, hi = float(sq.min()), float(sq.max())
        err = float(np.max(1.0 - sq)) + max(abs(1.0 - lo), abs(hi - 1.0)) + 1e-15 * n
    return FeatureSet(V, ids, err, tolerance, method)


def _pivoted_cholesky(G: np.ndarray, stop: float, tolerance: float) -> np.ndarray:
    n = G.shape[0]
    resid = np.diag(G).copy()
    L = np.zeros((n, min(n, 64)))
    for k in range(n):
        j = int(np.argmax(resid))
        if resid[j] <= stop:
            return L[:, :k]
        if np.min(resid) < -tolerance:
            raise NotPSDError(f"residual diagonal {np.min(resid):.3e} is below -{tolerance:g}")
        if k == L.shape[1]:
            L = np.hstack([L, np.zeros((n, min(n, 2 * k) - k))])
        col = G[:, j] - L[:, :k] @ L[j, :k]
        col /= np.sqrt(resid[j])
        L[:, k] = col
        resid -= col * col
        resid[j] = 0.0
    return L[:, :n]


def write_features(path, features: FeatureSet) -> None:
    """Binary dump: magic, n and r as little-endian uint64, then n*r float64."""
    V = np.ascontiguousarray(features.vectors, dtype="<f8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", *V.shape))
        fh.write(V.tobytes(order="C"))


def read_features(path) -> np.ndarray:
    """Read the vectors written by :func:`write_features`."""
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise InputError(f"{path} is not a feature dump")
    n, r = struct.unpack("<QQ", data[8:24])
    if len(data) != 24 + 8 * n * r:
        raise InputError(f"{path} is truncated")
    return np.frombuffer(data, dtype="<f8", offset=24).reshape(n, r).astype(float)
