"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays. Functions that promise a unitary
result check it against ``UNITARY_TOL`` before returning.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10


class LinalgError(ValueError):
    """Raised when a matrix fails a structural precondition."""


def as_square(a, name="matrix"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise LinalgError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise LinalgError(f"{name} has non-finite entries")
    return a


def hermiticity_residual(h):
    h = np.asarray(h)
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def unitarity_residual(u):
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def check_unitary(u, tol=UNITARY_TOL, name="matrix"):
    """Return ``u`` as a complex array, raising if ``U^dag U != I`` within `tol`."""
    u = as_square(u, name)
    res = unitarity_residual(u)
    if res > tol:
        raise LinalgError(f"{name} is not unitary (residual {res:.3e} > {tol:.0e})")
    return u


def hermitian_eig(h):
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    h : (d, d) array_like
        Hermitian matrix, ``max|h - h^dag| <= 1e-10``.

    Returns
    -------
    w : (d,) ndarray
        Eigenvalues in ascending order.
    v : (d, d) ndarray
        Unitary matrix whose columns are the eigenvectors.
    """
    h = as_square(h)
    res = hermiticity_residual(h)
    if res > HERMITIAN_TOL:
        raise LinalgError(f"not Hermitian (residual {res:.3e})")
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        # LAPACK heevd reports the failing iteration in its message
        raise LinalgError(f"eigensolver failed to converge: {exc}") from exc
    return w, v


def expm_hermitian(h, t):
    """``exp(-i h t)`` through the eigendecomposition of ``h``."""
    w, v = hermitian_eig(h)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    return check_unitary(u, name="exp(-iht)")


def haar_unitary(d, rng):
    """Draw a Haar-random ``d x d`` unitary.

    QR of a complex Ginibre matrix, with column ``j`` multiplied by
    ``R_jj / |R_jj|`` so the result is distributed by Haar measure and not
    biased by LAPACK's sign convention.

    `rng` is an int seed or a ``numpy.random.Generator``.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    rng = np.random.default_rng(rng)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    q = q * (diag / np.abs(diag))
    return check_unitary(q, name="Haar draw")


def circulant_diagonalize(first_row):
    """Eigenvalues ``c_q = sum_l r_l exp(-2 pi i q l / M)`` of the circulant with first row `r`."""
    r = np.asarray(first_row, dtype=complex)
    if r.ndim != 1 or r.size < 1:
        raise ValueError("first_row must be a non-empty 1-D sequence")
    return np.fft.fft(r)


def circulant_from_row(first_row):
    """Dense circulant ``C[i, j] = r[(j - i) mod M]``."""
    r = np.asarray(first_row, dtype=complex)
    m = r.size
    idx = (np.arange(m)[None, :] - np.arange(m)[:, None]) % m
    return r[idx]


def circulant_from_column(first_col):
    """Dense circulant ``C[i, j] = c[(i - j) mod M]``."""
    c = np.asarray(first_col, dtype=complex)
    m = c.size
    idx = (np.arange(m)[:, None] - np.arange(m)[None, :]) % m
    return c[idx]


def expm_taylor(a, t=1.0, dtype=complex, order=30):
    """``exp(-i a t)`` by scaling and squaring a truncated Taylor series.

    Independent of :func:`expm_hermitian`; with ``dtype=numpy.clongdouble``
    it runs in extended precision and serves as a reference.
    """
    x = -1j * np.asarray(a, dtype=dtype) * t
    d = x.shape[0]
    norm = float(np.max(np.sum(np.abs(x), axis=1))) if d else 0.0
    squarings = max(0, int(np.ceil(np.log2(norm / 0.25)))) if norm > 0.25 else 0
    x = x / (2 ** squarings)
    eye = np.eye(d, dtype=dtype)
    out = eye.copy()
    term = eye.copy()
    for k in range(1, order + 1):
        term = term @ x / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out
