from __future__ import annotations

from math import factorial

import numpy as np

from .dense import PermanentError, permanent_dense

_FACTORIALS = [factorial(k) for k in range(64)]


class FockState(tuple):
    """Occupation numbers ``(n_1, ..., n_M)`` of ``M`` modes."""

    def __new__(cls, occupations):
        occ = tuple(int(n) for n in occupations)
        if len(occ) < 1:
            raise ValueError("Fock state needs at least one mode")
        if any(n < 0 for n in occ):
            raise ValueError(f"negative occupation in {occ}")
        return super().__new__(cls, occ)

    @property
    def M(self):
        return len(self)

    @property
    def N(self):
        return sum(self)

    @property
    def occupations(self):
        return tuple(self)

    def modes(self):
        """Mode index repeated by its occupation, e.g. ``(2, 0, 1) -> [0, 0, 2]``."""
        return [l for l, n in enumerate(self) for _ in range(n)]

    def label(self, sep="|"):
        return sep.join(str(n) for n in self)


def fiducial_input(M, N):
    """One boson in each of the first ``N`` of ``M`` modes."""
    if not 0 <= N <= M:
        raise ValueError("need 0 <= N <= M")
    return FockState([1] * N + [0] * (M - N))


def transition_submatrix(Lambda, n_in, n_out):
    """Rows of ``Lambda`` repeated by `n_out`, columns by `n_in`."""
    lam = np.asarray(Lambda, dtype=complex)
    n_in, n_out = FockState(n_in), FockState(n_out)
    m = lam.shape[0]
    if lam.shape != (m, m) or n_in.M != m or n_out.M != m:
        raise PermanentError(f"Fock states must have {m} modes to match Lambda")
    if n_in.N != n_out.N:
        raise PermanentError("particle number not conserved")
    return lam[np.ix_(n_out.modes(), n_in.modes())]


def occupation_factorials(n):
    out = 1
    for k in n:
        out *= _FACTORIALS[k]
    return out


def transition_probability(Lambda, n_in, n_out, backend=None):
    """``|Perm(Lambda[n_out | n_in])|^2 / (prod n_in! prod n_out!)``."""
    sub = transition_submatrix(Lambda, n_in, n_out)
    perm = permanent_dense(sub, backend=backend).value
    norm = occupation_factorials(n_in) * occupation_factorials(n_out)
    return float(abs(perm) ** 2 / norm)
