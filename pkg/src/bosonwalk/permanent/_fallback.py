"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np

_LOW_BITS = 10


def glynn(a):
    """Glynn permanent, Gray-code row sums vectorised over blocks of low bits.

    The ``2**(n-1)`` sign vectors are split into a low block enumerated as a
    dense array and a high part walked in Gray-code order; block sums are
    combined with Kahan compensation. Returns ``(value, ops)``.
    """
    a = np.ascontiguousarray(a, dtype=complex)
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j, 0
    if n == 1:
        return complex(a[0, 0]), 1
    free = n - 1
    low = min(free, _LOW_BITS)
    high = free - low

    # delta_0 = +1 always; rows 1..low are enumerated, rows low+1..n-1 walked
    codes = np.arange(1 << low)
    bits = ((codes[:, None] >> np.arange(low)[None, :]) & 1).astype(float)
    low_delta = 1.0 - 2.0 * bits
    low_sign = np.prod(low_delta, axis=1)
    low_sums = low_delta @ a[1:low + 1]

    base = a[0] + a[low + 1:].sum(axis=0)
    hi_delta = np.ones(high)
    sign = 1.0
    total = 0j
    comp = 0j
    nblocks = 1 << high
    for k in range(nblocks):
        block = np.sum(low_sign * np.prod(base[None, :] + low_sums, axis=1)) * sign
        y = block - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if k + 1 == nblocks:
            break
        kk = k + 1
        bit = (kk & -kk).bit_length() - 1
        hi_delta[bit] = -hi_delta[bit]
        sign = -sign
        base = base + 2.0 * hi_delta[bit] * a[low + 1 + bit]
    nterms = 1 << free
    return complex(total) / nterms, nterms * n


def band_dp(w, blocked, band):
    """Same contract as the compiled ``band_dp``; vectorised over window states."""
    w = np.asarray(w, dtype=complex)
    blocked = np.asarray(blocked, dtype=np.uint8)
    n = w.shape[0]
    nstates = 1 << band
    masks = np.arange(nstates)
    init = int(sum(1 << k for k in range(band) if blocked[k]))
    cur = np.zeros(nstates, dtype=complex)
    cur[init] = 1.0
    for j in range(n):
        nxt = np.zeros(nstates, dtype=complex)
        full = masks | (int(blocked[j + band]) << band)
        for k in range(band + 1):
            wk = w[j, k]
            if wk == 0:
                continue
            bit = 1 << k
            ok = ((full & bit) == 0) & (((full | bit) & 1) == 1)
            # m -> (m | bit) >> 1 is injective on masks with that bit clear
            nxt[(full[ok] | bit) >> 1] += cur[ok] * wk
        cur = nxt
    return complex(cur[nstates - 1]), n * nstates
