"""Fock-basis output distributions, sampling and distribution distances."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .permanent import FockState, transition_probability

MAX_BASIS = 10**6
DELTA_FLOOR = 1e-12
NORM_TOL = 1e-9


class BasisError(ValueError):
    pass


def basis_size(M, N):
    return comb(N + M - 1, N)


def enumerate_fock(M, N):
    """All occupations of ``N`` bosons in ``M`` modes, lexicographically descending.

    ``enumerate_fock(2, 1) == [(1, 0), (0, 1)]``.
    """
    if M < 1 or N < 0:
        raise ValueError("need M >= 1 and N >= 0")
    size = basis_size(M, N)
    if size > MAX_BASIS:
        raise BasisError(f"Fock basis has {size} states, above the {MAX_BASIS} guard")
    out = []

    def fill(prefix, left, slots):
        if slots == 1:
            out.append(FockState(prefix + [left]))
            return
        for n in range(left, -1, -1):
            fill(prefix + [n], left - n, slots - 1)

    fill([], N, M)
    return out


@dataclass
class FockDistribution:
    """Probabilities over the full ``(M, N)`` Fock basis in :func:`enumerate_fock` order.

    ``mass`` is the total weight before normalisation; it differs from one
    only for distributions built from a non-unitary matrix.
    """

    M: int
    N: int
    states: list
    probabilities: np.ndarray
    mass: float = 1.0

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if len(self.states) != p.size or p.size != basis_size(self.M, self.N):
            raise BasisError("probabilities do not cover the Fock basis")
        if p.min(initial=0.0) < -DELTA_FLOOR:
            raise ValueError(f"negative probability {p.min():.3e}")
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {p.sum():.12f}")
        self.probabilities = np.clip(p, 0.0, None)

    @property
    def mass_deficit(self):
        return 1.0 - self.mass

    def as_dict(self):
        return {s: float(p) for s, p in zip(self.states, self.probabilities)}

    def prob(self, state):
        return self.as_dict()[FockState(state)]


def _weights(Lambda, n_in, states, backend=None):
    return np.array([transition_probability(Lambda, n_in, s, backend=backend) for s in states])


def exact_distribution(Lambda, n_in, backend=None):
    """Output distribution of a unitary transition matrix for input `n_in`."""
    n_in = FockState(n_in)
    lam = np.asarray(Lambda, dtype=complex)
    states = enumerate_fock(n_in.M, n_in.N)
    p = _weights(lam, n_in, states, backend)
    return FockDistribution(n_in.M, n_in.N, states, p, mass=float(p.sum()))


def truncated_distribution(Lambda_prime, n_in, backend=None):
    """Permanent weights of a sub-unitary matrix, renormalised to a distribution.

    The pre-normalisation total is kept in ``mass``.
    """
    n_in = FockState(n_in)
    states = enumerate_fock(n_in.M, n_in.N)
    w = _weights(np.asarray(Lambda_prime, dtype=complex), n_in, states, backend)
    total = float(w.sum())
    if total <= 0:
        raise ValueError("truncated matrix gives zero total weight")
    return FockDistribution(n_in.M, n_in.N, states, w / total, mass=total)


def sample(dist, k, rng):
    """``k`` i.i.d. draws from `dist` by inverse CDF."""
    rng = np.random.default_rng(rng)
    cdf = np.cumsum(dist.probabilities)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(k), side="right")
    return [dist.states[i] for i in idx]


def sample_counts(dist, k, rng):
    rng = np.random.default_rng(rng)
    cdf = np.cumsum(dist.probabilities)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(k), side="right")
    return np.bincount(idx, minlength=len(dist.states))


def _check_same_basis(P, Q):
    if P.M != Q.M or P.N != Q.N or list(P.states) != list(Q.states):
        raise BasisError("distributions are over different Fock bases")


def total_variation(P, Q):
    """Half the L1 distance between two distributions on the same basis."""
    _check_same_basis(P, Q)
    return 0.5 * float(np.sum(np.abs(P.probabilities - Q.probabilities)))


def multiplicative_gap(P, Q, floor=DELTA_FLOOR):
    """``max |P - Q| / P`` over events with ``P > floor``.

    Returns
    -------
    gap : float
    skipped : int
        Number of events at or below `floor`, excluded from the maximum.
    """
    _check_same_basis(P, Q)
    p, q = P.probabilities, Q.probabilities
    live = p > floor
    gap = float(np.max(np.abs(p[live] - q[live]) / p[live])) if live.any() else 0.0
    return gap, int(np.count_nonzero(~live))
