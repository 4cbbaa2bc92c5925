# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled permanent kernels.

Signatures match :mod:`bosonwalk.permanent._fallback` exactly; the package
picks whichever is importable.
"""

import numpy as np


cdef inline int _ctz(unsigned long long k) nogil:
    cdef int c = 0
    while (k & 1) == 0:
        k >>= 1
        c += 1
    return c


cdef inline double complex _cmul(double complex x, double complex y) nogil:
    # avoids the inf/nan recovery path of the C99 complex multiply
    cdef double complex out
    out.real = x.real * y.real - x.imag * y.imag
    out.imag = x.real * y.imag + x.imag * y.real
    return out


def glynn(double complex[:, ::1] a):
    """Glynn permanent in Gray-code order with compensated summation.

    Returns ``(value, ops)`` where ``ops`` counts row-sum products formed.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, row
    cdef unsigned long long k, nterms
    cdef double pre, pim, tr, d
    cdef double sre = 0.0, sim = 0.0, cre = 0.0, cim = 0.0, y, t
    cdef int sign = 1
    if n == 0:
        return 1.0 + 0j, 0
    if n == 1:
        return complex(a[0, 0]), 1
    # split storage keeps the inner loops in plain real arithmetic
    are_arr = np.ascontiguousarray(np.asarray(a).real)
    aim_arr = np.ascontiguousarray(np.asarray(a).imag)
    sre_arr = are_arr.sum(axis=0)
    sim_arr = aim_arr.sum(axis=0)
    delta_arr = np.ones(n, dtype=np.int8)
    cdef double[:, ::1] ar = are_arr
    cdef double[:, ::1] ai = aim_arr
    cdef double[::1] xr = sre_arr
    cdef double[::1] xi = sim_arr
    cdef signed char[::1] delta = delta_arr
    nterms = (<unsigned long long>1) << (n - 1)
    with nogil:
        k = 0
        while True:
            pre = 1.0
            pim = 0.0
            for j in range(n):
                tr = pre * xr[j] - pim * xi[j]
                pim = pre * xi[j] + pim * xr[j]
                pre = tr
            if sign < 0:
                pre = -pre
                pim = -pim
            # Kahan on real and imaginary parts separately
            y = pre - cre
            t = sre + y
            cre = (t - sre) - y
            sre = t
            y = pim - cim
            t = sim + y
            cim = (t - sim) - y
            sim = t
            k += 1
            if k == nterms:
                break
            row = _ctz(k) + 1
            delta[row] = -delta[row]
            sign = -sign
            d = 2.0 * delta[row]
            for j in range(n):
                xr[j] += d * ar[row, j]
                xi[j] += d * ai[row, j]
    return complex(sre, sim) / float(nterms), int(nterms * n)


def band_dp(double complex[:, ::1] w, unsigned char[::1] blocked, int band):
    """Column-sweep subset DP over a sliding window of ``band`` rows.

    ``w[j, k]`` is the weight of assigning column ``j`` to window row ``k``
    (unrolled row ``j - upper + k``); ``blocked[r]`` marks unrolled row
    ``r - upper`` as unavailable. Returns ``(value, state_visits)``.
    """
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t nstates = (<Py_ssize_t>1) << band
    cdef Py_ssize_t j, m, full, m2, k
    cdef double complex amp, wk
    cdef Py_ssize_t init = 0
    cdef long long visits = 0
    for k in range(band):
        if blocked[k]:
            init |= (<Py_ssize_t>1) << k
    cur_arr = np.zeros(nstates, dtype=np.complex128)
    nxt_arr = np.zeros(nstates, dtype=np.complex128)
    cdef double complex[::1] cur = cur_arr
    cdef double complex[::1] nxt = nxt_arr
    cdef double complex[::1] tmp
    cur[init] = 1.0
    with nogil:
        for j in range(n):
            for m in range(nstates):
                nxt[m] = 0.0
            full = (<Py_ssize_t>blocked[j + band]) << band
            for m in range(nstates):
                amp = cur[m]
                visits += 1
                if amp == 0:
                    continue
                for k in range(band + 1):
                    if (m | full) & ((<Py_ssize_t>1) << k):
                        continue
                    wk = w[j, k]
                    if wk == 0:
                        continue
                    m2 = m | full | ((<Py_ssize_t>1) << k)
                    if m2 & 1:
                        nxt[m2 >> 1] = nxt[m2 >> 1] + _cmul(amp, wk)
            tmp = cur
            cur = nxt
            nxt = tmp
    return complex(cur[nstates - 1]), int(visits)
