"""Permanents of banded and cyclically banded matrices.

Columns are swept left to right. Each column ``j`` may take a row from the
window ``j - upper .. j + lower``; the DP state is the subset of the ``B``
oldest window rows already taken. A row leaving the window must have been
taken, so each surviving path is a permutation. Cost is ``O(N 2^B B)``.

For a cyclic band the rows near both ends have two aliases in the unrolled
window (``p`` and ``p +/- N``). Every one of the ``2^B`` alias assignments is
run through the same DP with the unused alias blocked, which gives
``O(N 4^B B)`` overall.

When the matrix is also circulant the interior columns share one transfer
matrix, so the sweep collapses to a matrix power by repeated squaring.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..lattice import measure_band
from . import _backend
from .dense import PermanentError, PermanentResult, permanent_dense

MAX_BAND = 14


@dataclass(frozen=True)
class BandedMatrix:
    """Square matrix whose nonzeros satisfy ``-upper <= i - j <= lower`` (mod ``n`` if cyclic).

    ``weights[j, k]`` stores ``A[j - upper + k, j]`` (row taken mod ``n`` when
    cyclic, zero when out of range otherwise).
    """

    n: int
    lower: int
    upper: int
    cyclic: bool
    weights: np.ndarray

    @property
    def band(self):
        return self.lower + self.upper

    @classmethod
    def from_dense(cls, a, lower=None, upper=None, cyclic=False):
        a = np.asarray(a, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise PermanentError("banded matrix must be square")
        n = a.shape[0]
        if lower is None or upper is None:
            lo, up, wraps = measure_band(a)
            if wraps and not cyclic:
                lo, up = _plain_band(a)
            lower = lo if lower is None else lower
            upper = up if upper is None else upper
        if lower < 0 or upper < 0:
            raise PermanentError("band half-widths must be non-negative")
        mask = band_mask(n, lower, upper, cyclic)
        outside = np.abs(a[~mask])
        if outside.size and outside.max() != 0:
            raise PermanentError("matrix has nonzero entries outside the declared band")
        b = lower + upper
        j = np.arange(n)[:, None]
        rows = j - upper + np.arange(b + 1)[None, :]
        if cyclic:
            w = a[rows % n, np.broadcast_to(j, rows.shape)]
        else:
            inside = (rows >= 0) & (rows < n)
            w = np.where(inside, a[np.clip(rows, 0, n - 1), np.broadcast_to(j, rows.shape)], 0)
        return cls(n, int(lower), int(upper), bool(cyclic), np.ascontiguousarray(w))

    def to_dense(self):
        a = np.zeros((self.n, self.n), dtype=complex)
        for j in range(self.n):
            for k in range(self.band + 1):
                r = j - self.upper + k
                if self.cyclic:
                    a[r % self.n, j] = self.weights[j, k]
                elif 0 <= r < self.n:
                    a[r, j] = self.weights[j, k]
        return a


def _plain_band(a):
    rows, cols = np.nonzero(a)
    if rows.size == 0:
        return 0, 0
    diff = rows - cols
    return max(int(diff.max()), 0), max(int(-diff.min()), 0)


def band_mask(n, lower, upper, cyclic=False):
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    if not cyclic:
        return (i - j <= lower) & (j - i <= upper)
    off = (i - j) % n
    return (off <= lower) | (off >= n - upper)


def _plain_blocked(n, lower, upper):
    r = np.arange(-upper, n + lower)
    return ((r < 0) | (r >= n)).astype(np.uint8)


def _alias_blocked(n, lower, upper, low_wrap, high_wrap):
    """Blocked unrolled rows for one alias assignment.

    ``low_wrap`` holds rows ``p < lower`` taken through alias ``p + n``;
    ``high_wrap`` holds rows ``p >= n - upper`` taken through alias ``p - n``.
    """
    blocked = np.zeros(n + lower + upper, dtype=np.uint8)
    for r in range(-upper, n + lower):
        if r < 0:
            b = (r + n) not in high_wrap
        elif r >= n:
            b = (r - n) not in low_wrap
        else:
            b = r in low_wrap or r in high_wrap
        blocked[r + upper] = b
    return blocked


def _subsets(items):
    items = list(items)
    for mask in range(1 << len(items)):
        yield {items[i] for i in range(len(items)) if mask >> i & 1}


def _check_band(bm):
    if bm.band > MAX_BAND:
        raise PermanentError(f"band B={bm.band} exceeds guard {MAX_BAND} (state space 2^(2B))")


def permanent_banded(a, backend=None):
    """Exact permanent of a (cyclically) banded matrix by subset DP.

    Parameters
    ----------
    a : BandedMatrix or array_like
        Dense input is treated as cyclically banded with its measured band.
    backend : module, optional
        Kernel module; defaults to the one selected at import.

    Returns
    -------
    PermanentResult
        ``method`` is ``"banded_dp"`` or ``"cyclic_dp"``; ``cost_estimate``
        counts DP state visits.
    """
    bm = a if isinstance(a, BandedMatrix) else BandedMatrix.from_dense(a, cyclic=True)
    _check_band(bm)
    kern = backend or _backend.kernels
    n, lo, up, b = bm.n, bm.lower, bm.upper, bm.band
    if n == 0:
        return PermanentResult(1.0 + 0j, "banded_dp", 0)
    if not bm.cyclic:
        value, visits = kern.band_dp(bm.weights, _plain_blocked(n, lo, up), b)
        return PermanentResult(complex(value), "banded_dp", int(visits))
    if b + 1 > n:
        # window would alias onto itself; the matrix is effectively dense
        return permanent_dense(bm.to_dense(), backend=backend)
    total = 0j
    visits = 0
    for low_wrap in _subsets(range(lo)):
        for high_wrap in _subsets(range(n - up, n)):
            blocked = _alias_blocked(n, lo, up, low_wrap, high_wrap)
            value, v = kern.band_dp(bm.weights, blocked, b)
            total += value
            visits += v
    return PermanentResult(complex(total), "cyclic_dp", int(visits))


def _step_matrix(coeffs, band, entering_blocked):
    """Linear map of one DP column with constant weights ``coeffs[k]``."""
    nstates = 1 << band
    t = np.zeros((nstates, nstates), dtype=complex)
    for m in range(nstates):
        full = m | (int(entering_blocked) << band)
        for k in range(band + 1):
            bit = 1 << k
            if full & bit or coeffs[k] == 0:
                continue
            m2 = full | bit
            if m2 & 1:
                t[m2 >> 1, m] += coeffs[k]
    return t


def _matrix_power(t, e):
    """``t**e`` by binary exponentiation, kept as ``mantissa * exp(log_scale)``.

    Returns the mantissa, the log scale and the matmul count. Rescaling after
    every product keeps long powers inside double range.
    """
    result = np.eye(t.shape[0], dtype=complex)
    r_log = 0.0
    base = t.copy()
    b_log = 0.0
    products = 0
    first = True
    while e:
        if e & 1:
            if first:
                result, r_log = base.copy(), b_log
                first = False
            else:
                result, r_log = _rescale(result @ base, r_log + b_log)
                products += 1
        e >>= 1
        if e:
            base, b_log = _rescale(base @ base, 2 * b_log)
            products += 1
    return result, r_log, products


def _rescale(m, log_scale):
    peak = np.max(np.abs(m))
    if peak == 0 or not np.isfinite(peak):
        return m, log_scale
    return m / peak, log_scale + np.log(peak)


def circulant_coefficients(a, tol=0.0):
    """First column of `a` if `a` is circulant within `tol`, else raise."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    c = a[:, 0]
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    if np.max(np.abs(a - c[idx]), initial=0.0) > tol:
        raise PermanentError("matrix is not circulant")
    return c


def permanent_circulant_banded(a):
    """Permanent of a circulant, cyclically banded matrix via a transfer-matrix power.

    The ``N - B`` interior columns all apply the same ``2^B x 2^B`` transfer
    matrix, raised to that power by repeated squaring. Each alias assignment
    of the wrap-around rows then contributes one column of the power pushed
    through the ``B`` closing columns.

    Returns
    -------
    PermanentResult
        ``cost_estimate`` is the matmul count times ``8^B`` plus the
        closing-column state visits.
    """
    if isinstance(a, BandedMatrix):
        if not a.cyclic:
            raise PermanentError("transfer-power method needs a cyclic band")
        dense = a.to_dense()
        lo, up = a.lower, a.upper
    else:
        dense = np.asarray(a, dtype=complex)
        lo, up, _ = measure_band(dense)
    c = circulant_coefficients(dense)
    n = dense.shape[0]
    b = lo + up
    if b > MAX_BAND:
        raise PermanentError(f"band B={b} exceeds guard {MAX_BAND}")
    if b + 1 > n:
        return permanent_dense(dense)
    coeffs = np.array([c[(k - up) % n] for k in range(b + 1)])
    t_open = _step_matrix(coeffs, b, 0)
    power, log_scale, products = _matrix_power(t_open, n - b)
    t_closed = _step_matrix(coeffs, b, 1)
    nstates = 1 << b
    total = 0j
    tail_visits = 0
    for low_wrap in _subsets(range(lo)):
        for high_wrap in _subsets(range(n - up, n)):
            blocked = _alias_blocked(n, lo, up, low_wrap, high_wrap)
            init = sum(1 << k for k in range(b) if blocked[k])
            v = power[:, init]
            for j in range(n - b, n):
                v = (t_closed if blocked[j + b] else t_open) @ v
                tail_visits += nstates
            total += v[nstates - 1]
    cost = products * nstates ** 3 + tail_visits
    if total != 0 and log_scale:
        log_mag = np.log(abs(total)) + log_scale
        if log_mag > np.log(np.finfo(float).max):
            raise PermanentError(f"permanent magnitude exp({log_mag:.1f}) exceeds double range")
        total = total / abs(total) * np.exp(log_mag)
    return PermanentResult(complex(total), "transfer_power", int(cost))


def permanent(a, method="auto", backend=None):
    """Dispatch to the cheapest applicable exact method."""
    if method == "dense":
        return permanent_dense(a, backend=backend)
    if method == "banded":
        return permanent_banded(a, backend=backend)
    if method == "circulant":
        return permanent_circulant_banded(a)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    lo, up, cyc = measure_band(a)
    b = lo + up
    if b <= MAX_BAND and b + 1 <= n and n * 4 ** b * (b + 1) < n << max(n - 1, 0):
        return permanent_banded(BandedMatrix.from_dense(a, lo, up, cyclic=cyc), backend=backend)
    return permanent_dense(a, backend=backend)
