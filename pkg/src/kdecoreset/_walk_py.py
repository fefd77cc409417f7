"""Pure-Python walk loop, used when the compiled extension is unavailable.

Same state layout, BLAS calls and floating-point operation order as the
compiled ``_walk.run_walk``, so both produce identical colorings.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg.blas import dgemv, dtrsv


def _downdate(Lt: np.ndarray, v: np.ndarray, floor: float) -> int:
    m = Lt.shape[0]
    for j in range(m):
        ljj = Lt[j, j]
        vj = v[j]
        arg = (ljj - vj) * (ljj + vj)
        if arg <= floor:
            return 1
        r = np.sqrt(arg)
        c = r / ljj
        s = vj / ljj
        ic = 1.0 / c
        Lt[j, j] = r
        row = (Lt[j, j + 1:] - s * v[j + 1:]) * ic
        Lt[j, j + 1:] = row
        v[j + 1:] = c * v[j + 1:] - s * row
    return 0


def _swap(V, x, perm, a, b):
    if a != b:
        V[[a, b]] = V[[b, a]]
        x[[a, b]] = x[[b, a]]
        perm[[a, b]] = perm[[b, a]]


def run_walk(V, x, perm, Lt, k, ppos, uniforms, step, ridge, tol):
    floor = 0.5 * ridge
    status = 0
    L = Lt.T  # Fortran-ordered lower factor, shares memory with Lt
    while k > 0:
        if step >= uniforms.shape[0]:
            raise RuntimeError("walk exceeded its step budget")
        y = dtrsv(L, V[ppos].copy(), lower=1, trans=0, diag=0)
        y = dtrsv(L, y, lower=1, trans=1, diag=0)
        u = -dgemv(1.0, V[:k].T, y, trans=1)
        u[ppos] = 1.0

        xs = x[:k]
        pos = u > 0
        neg = u < 0
        dplus = min(
            np.min((1.0 - xs[pos]) / u[pos], initial=1e300),
            np.min((-1.0 - xs[neg]) / u[neg], initial=1e300),
        )
        dminus = min(
            np.min((1.0 + xs[pos]) / u[pos], initial=1e300),
            np.min((xs[neg] - 1.0) / u[neg], initial=1e300),
        )
        delta = dplus if uniforms[step] * (dplus + dminus) < dminus else -dminus
        step += 1
        x[:k] = xs + delta * u

        frozen = np.abs(x[:k]) >= 1.0 - tol
        pivot_frozen = False
        i = 0
        while True:
            hits = np.flatnonzero(frozen[i:k])
            if hits.size == 0:
                break
            i += int(hits[0])
            x[i] = 1.0 if x[i] > 0.0 else -1.0
            if i == ppos:
                pivot_frozen = True
            elif status == 0:
                status = _downdate(Lt, V[i].copy(), floor)
            k -= 1
            _swap(V, x, perm, i, k)
            frozen[i] = frozen[k]
            if ppos == k:
                ppos = i
            elif pivot_frozen and ppos == i:
                ppos = k
        if pivot_frozen and k > 0:
            ppos = int(np.argmax(perm[:k]))
            if status == 0:
                status = _downdate(Lt, V[ppos].copy(), floor)
        if status:
            break
    return status, k, ppos, step
