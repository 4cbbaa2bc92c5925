from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _backend

MAX_DENSE_N = 24


class PermanentError(ValueError):
    pass


@dataclass(frozen=True)
class PermanentResult:
    value: complex
    method: str
    cost_estimate: int

    def __complex__(self):
        return complex(self.value)


def _square(a):
    a = np.ascontiguousarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PermanentError(f"permanent needs a square matrix, got shape {a.shape}")
    return a


def permanent_dense(a, backend=None):
    """Exact permanent by Glynn's formula in Gray-code order, ``O(2^N N)``.

    Parameters
    ----------
    a : (N, N) array_like
        Square complex matrix with ``N <= 24``.
    backend : module, optional
        Kernel module to use; defaults to the one selected at import.

    Returns
    -------
    PermanentResult
    """
    a = _square(a)
    n = a.shape[0]
    if n > MAX_DENSE_N:
        raise PermanentError(
            f"N={n} exceeds dense guard {MAX_DENSE_N}; use permanent_banded for banded input")
    kern = backend or _backend.kernels
    value, ops = kern.glynn(a)
    return PermanentResult(complex(value), "ryser", int(ops))


def permanent_naive(a):
    """Sum over all ``N!`` permutations. Test oracle only."""
    a = _square(a)
    n = a.shape[0]
    rows = np.arange(n)
    total = 0j
    for perm in itertools.permutations(range(n)):
        total += np.prod(a[rows, perm])
    return complex(total)
