# Compiled inner loop of the Gram-Schmidt walk.
#
# State layout (shared with _walk_py.run_walk):
#   V      n x m rows, alive rows compacted into V[:k]
#   x      fractional coloring, same order as V
#   perm   original index of each row
#   Lt     m x m, row-major upper factor with C = Lt^T Lt,
#          C = ridge*I + sum of alive non-pivot rows' outer products
#   ppos   row position of the pivot
# Returns (status, k, ppos, step); status 1 asks the caller to refactor C.

from libc.math cimport sqrt, fabs
from scipy.linalg.cython_blas cimport dgemv, dtrsv


cdef inline void _swap(double[:, ::1] V, double[::1] x, long long[::1] perm,
                       Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    cdef Py_ssize_t j
    cdef double t
    cdef long long ti
    if a == b:
        return
    for j in range(V.shape[1]):
        t = V[a, j]
        V[a, j] = V[b, j]
        V[b, j] = t
    t = x[a]
    x[a] = x[b]
    x[b] = t
    ti = perm[a]
    perm[a] = perm[b]
    perm[b] = ti


cdef int _downdate(double[:, ::1] Lt, double[::1] v, double floor) noexcept nogil:
    # In place: Lt^T Lt - v v^T. Returns 1 if the result is not safely PD.
    cdef Py_ssize_t m = Lt.shape[0]
    cdef Py_ssize_t i, j
    cdef double ljj, vj, arg, r, c, s, ic
    for j in range(m):
        ljj = Lt[j, j]
        vj = v[j]
        arg = (ljj - vj) * (ljj + vj)
        if arg <= floor:
            return 1
        r = sqrt(arg)
        c = r / ljj
        s = vj / ljj
        ic = 1.0 / c
        Lt[j, j] = r
        for i in range(j + 1, m):
            Lt[j, i] = (Lt[j, i] - s * v[i]) * ic
            v[i] = c * v[i] - s * Lt[j, i]
    return 0


def run_walk(double[:, ::1] V, double[::1] x, long long[::1] perm,
             double[:, ::1] Lt, Py_ssize_t k, Py_ssize_t ppos,
             double[::1] uniforms, Py_ssize_t step, double ridge, double tol):
    cdef Py_ssize_t m = V.shape[1]
    cdef Py_ssize_t i, j, best
    cdef int inc = 1, mi = <int> m, ki
    cdef double one = 1.0, zero = 0.0
    cdef double dplus, dminus, ui, xi, t, delta
    cdef int status = 0, pivot_frozen
    cdef double floor = 0.5 * ridge
    cdef char lower = b'L', notrans = b'N', trans = b'T', nonunit = b'N'

    y_buf = bytearray(8 * m)
    w_buf = bytearray(8 * m)
    u_buf = bytearray(8 * max(k, 1))
    cdef double[::1] y = memoryview(y_buf).cast('d')
    cdef double[::1] w = memoryview(w_buf).cast('d')
    cdef double[::1] u = memoryview(u_buf).cast('d')

    with nogil:
        while k > 0:
            if step >= uniforms.shape[0]:
                with gil:
                    raise RuntimeError("walk exceeded its step budget")
            # y = C^{-1} v_pivot
            for j in range(m):
                y[j] = V[ppos, j]
            dtrsv(&lower, &notrans, &nonunit, &mi, &Lt[0, 0], &mi, &y[0], &inc)
            dtrsv(&lower, &trans, &nonunit, &mi, &Lt[0, 0], &mi, &y[0], &inc)
            # u = -V[:k] y, pivot coordinate fixed at 1
            ki = <int> k
            dgemv(&trans, &mi, &ki, &one, &V[0, 0], &mi, &y[0], &inc, &zero, &u[0], &inc)
            for i in range(k):
                u[i] = -u[i]
            u[ppos] = 1.0

            dplus = 1e300
            dminus = 1e300
            for i in range(k):
                ui = u[i]
                if ui > 0.0:
                    t = (1.0 - x[i]) / ui
                    if t < dplus:
                        dplus = t
                    t = (1.0 + x[i]) / ui
                    if t < dminus:
                        dminus = t
                elif ui < 0.0:
                    t = (-1.0 - x[i]) / ui
                    if t < dplus:
                        dplus = t
                    t = (x[i] - 1.0) / ui
                    if t < dminus:
                        dminus = t
            # mean-zero step: +dplus with probability dminus/(dplus+dminus)
            if uniforms[step] * (dplus + dminus) < dminus:
                delta = dplus
            else:
                delta = -dminus
            step += 1
            for i in range(k):
                x[i] = x[i] + delta * u[i]

            # freeze coordinates that reached the boundary
            pivot_frozen = 0
            i = 0
            while i < k:
                xi = x[i]
                if fabs(xi) < 1.0 - tol:
                    i += 1
                    continue
                x[i] = 1.0 if xi > 0.0 else -1.0
                if i == ppos:
                    pivot_frozen = 1
                elif status == 0:
                    for j in range(m):
                        w[j] = V[i, j]
                    status = _downdate(Lt, w, floor)
                k -= 1
                _swap(V, x, perm, i, k)
                if ppos == k:
                    ppos = i
                elif pivot_frozen and ppos == i:
                    ppos = k
            if pivot_frozen and k > 0:
                best = 0
                for i in range(1, k):
                    if perm[i] > perm[best]:
                        best = i
                ppos = best
                if status == 0:
                    for j in range(m):
                        w[j] = V[ppos, j]
                    status = _downdate(Lt, w, floor)
            if status:
                break
    return status, k, ppos, step
