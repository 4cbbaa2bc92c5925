"""Single-particle Hamiltonians and propagators for 1D lattice walkers.

Three families are supported:

* :class:`UniformRing` -- static nearest-neighbour hopping on a ring,
* :class:`SpinorLatticeModel` -- two state-dependent sublattices coupled by
  microwave-driven hops, controlled by the displacement angle ``theta`` and the
  microwave phase ``phi``,
* :class:`GasMicroscopeModel` -- an open chain with individually addressable
  bond (``hx``) and site (``hz``) controls.

Spinor basis ordering is fixed here and reused everywhere else: index ``l``
(0-based site) is ``(l, down)`` and index ``M + l`` is ``(l, up)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import as_square, circulant_from_column, check_unitary


@dataclass(frozen=True)
class UniformRing:
    M: int
    J: float = 1.0

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("ring needs M >= 2")
        if not self.J > 0:
            raise ValueError("hopping rate J must be positive")

    @property
    def dim(self):
        return self.M


@dataclass(frozen=True)
class SpinorLatticeModel:
    """Spinor lattice with ``M`` sites per spin state (``d = 2M``).

    ``shift_per_radian`` sets the up-sublattice potential centre,
    ``(M + 1)/2 + shift_per_radian * theta``. The default ``1/(2 pi)`` is the
    main-text convention; ``-1/pi`` reproduces the displacement assumed by the
    commutator chain in :mod:`bosonwalk.controllability`.
    """

    M: int
    Omega0: float = 1.0
    eta: float = 0.4
    V0: float | None = None
    shift_per_radian: float = 1.0 / (2.0 * np.pi)

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("spinor lattice needs M >= 2")
        if not self.Omega0 > 0:
            raise ValueError("Omega0 must be positive")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if self.V0 is None:
            object.__setattr__(self, "V0", 0.1 * self.Omega0)
        if self.V0 < 0:
            raise ValueError("V0 must be non-negative")

    @property
    def dim(self):
        return 2 * self.M

    def omega_left(self, theta):
        return self.Omega0 * np.exp(-((theta / (2 * self.eta)) ** 2))

    def omega_right(self, theta):
        return self.Omega0 * np.exp(-(((theta - np.pi) / (2 * self.eta)) ** 2))

    def up_center(self, theta):
        return (self.M + 1) / 2 + self.shift_per_radian * theta


@dataclass(frozen=True)
class GasMicroscopeModel:
    M: int
    h0: float = 1.0
    hx_bounds: tuple = (-10.0, 10.0)
    hz_bounds: tuple = (-10.0, 10.0)

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("microscope chain needs M >= 2")
        if not self.h0 > 0:
            raise ValueError("h0 must be positive")
        for name in ("hx_bounds", "hz_bounds"):
            lo, hi = getattr(self, name)
            if not lo <= 0 <= hi:
                raise ValueError(f"{name} must contain 0, got {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))

    @property
    def dim(self):
        return self.M


@dataclass(frozen=True)
class BandSpec:
    """Result of thresholding a transition matrix.

    ``lower``/``upper`` are the half-widths of the smallest band holding every
    surviving entry, ``band = lower + upper``. ``cyclic`` is true when the
    wrap-around band is narrower than the ordinary one, in which case the
    half-widths refer to offsets ``(i - j) mod M``.
    """

    epsilon: float
    lower: int
    upper: int
    cyclic: bool
    norm: str = "max"
    threshold: float = 0.0
    dropped: int = 0
    band: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "band", self.lower + self.upper)


# -- uniform ring -------------------------------------------------------------

def ring_hamiltonian(model):
    col = np.zeros(model.M, dtype=complex)
    col[1] -= model.J
    col[-1] -= model.J
    return circulant_from_column(col)


def ring_energies(model):
    q = np.arange(model.M)
    return -2.0 * model.J * np.cos(2 * np.pi * q / model.M)


def ring_propagator_column(model, t):
    """First column ``u[l, 0](t)``; the propagator is the circulant it generates."""
    return np.fft.ifft(np.exp(-1j * ring_energies(model) * t))


def ring_propagator(model, t):
    """``exp(-i h t)`` for the uniform ring, via the Bloch-basis DFT."""
    if t < 0:
        raise ValueError("t must be non-negative")
    u = circulant_from_column(ring_propagator_column(model, t))
    return check_unitary(u, tol=1e-9, name="ring propagator")


def ring_profile(model, t):
    """Offsets ``l - l'`` centred on zero and the matching ``|u|^2``."""
    col = ring_propagator_column(model, t)
    m = model.M
    offsets = np.arange(-((m - 1) // 2), m // 2 + 1)
    return offsets, np.abs(col[offsets % m]) ** 2


# -- banding ------------------------------------------------------------------

def matrix_norm(a, norm="max"):
    if norm == "max":
        return float(np.max(np.abs(a)))
    if norm == "fro":
        return float(np.linalg.norm(a))
    raise ValueError(f"unknown norm {norm!r}; use 'max' or 'fro'")


def measure_band(a):
    """Half-widths ``(lower, upper, cyclic)`` of the tightest band holding the nonzeros of `a`."""
    a = np.asarray(a)
    n = a.shape[0]
    rows, cols = np.nonzero(a)
    if rows.size == 0:
        return 0, 0, False
    diff = rows - cols
    lower, upper = max(int(diff.max()), 0), max(int(-diff.min()), 0)

    offsets = np.unique(np.concatenate([[0], diff % n]))
    # the cyclic band is the complement of the largest gap between occupied offsets
    nxt = np.append(offsets[1:], n)
    gaps = nxt - offsets
    a_idx = int(np.argmax(gaps))
    c_lower = int(offsets[a_idx])
    c_upper = 0 if a_idx == offsets.size - 1 else int(n - offsets[a_idx + 1])
    if c_lower + c_upper < lower + upper:
        return c_lower, c_upper, True
    return lower, upper, False


def band_truncate(Lambda, epsilon, norm="max"):
    """Zero every entry with ``|Lambda_ij| < epsilon * ||Lambda||``.

    The truncated matrix is returned as is, without re-unitarising.

    Returns
    -------
    Lambda_prime : ndarray
    spec : BandSpec
    """
    a = as_square(Lambda, "Lambda")
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must lie in [0, 1)")
    thr = epsilon * matrix_norm(a, norm)
    keep = np.abs(a) >= thr
    out = np.where(keep, a, 0)
    lower, upper, cyclic = measure_band(out)
    spec = BandSpec(
        epsilon=float(epsilon), lower=lower, upper=upper, cyclic=cyclic,
        norm=norm, threshold=thr, dropped=int(np.count_nonzero(a) - np.count_nonzero(out)),
    )
    return out, spec


# -- spinor lattice -------------------------------------------------------------

def _spinor_hop_pattern(M, dtype=complex):
    """Unit-amplitude ``sum_l |l,up><l,down|`` and ``sum_l |l,up><l+1,down|`` (periodic)."""
    d = 2 * M
    left = np.zeros((d, d), dtype=dtype)
    right = np.zeros((d, d), dtype=dtype)
    for l in range(M):
        left[M + l, l] = 1.0
        right[M + l, (l + 1) % M] = 1.0
    return left, right


def spinor_terms(model, theta, phi, dtype=complex):
    """The three pieces ``(H0, HL, HR)`` of the spinor control Hamiltonian.

    `dtype` may be ``numpy.clongdouble`` for extended-precision checks.
    """
    real = np.finfo(dtype).dtype
    theta, phi = real.type(theta), real.type(phi)
    M = model.M
    sites = np.arange(1, M + 1, dtype=real)
    center = (M + 1) / 2
    diag = np.concatenate([
        model.V0 * (sites - center) ** 2,
        model.V0 * (sites - model.up_center(theta)) ** 2,
    ])
    h0 = np.diag(diag).astype(dtype)
    left, right = _spinor_hop_pattern(M, dtype)
    ph = np.exp(1j * phi)
    hl = 0.5 * model.omega_left(theta) * ph * left
    hr = 0.5 * model.omega_right(theta) * ph * right
    return h0, hl + hl.conj().T, hr + hr.conj().T


def spinor_hamiltonian(model, theta, phi):
    """``H0 + HL + HR`` at control values ``(theta, phi)``, both wrapped into ``[0, 2 pi)``."""
    theta = float(np.mod(theta, 2 * np.pi))
    phi = float(np.mod(phi, 2 * np.pi))
    h0, hl, hr = spinor_terms(model, theta, phi)
    return h0 + hl + hr


def spinor_derivatives(model, theta, phi):
    """``dH/dtheta`` and ``dH/dphi`` at wrapped ``(theta, phi)``."""
    theta = float(np.mod(theta, 2 * np.pi))
    phi = float(np.mod(phi, 2 * np.pi))
    M = model.M
    sites = np.arange(1, M + 1)
    d_up = -2.0 * model.V0 * model.shift_per_radian * (sites - model.up_center(theta))
    dtheta = np.diag(np.concatenate([np.zeros(M), d_up])).astype(complex)

    eta2 = 2 * model.eta ** 2
    wl, wr = model.omega_left(theta), model.omega_right(theta)
    dwl, dwr = -wl * theta / eta2, -wr * (theta - np.pi) / eta2
    left, right = _spinor_hop_pattern(M)
    ph = np.exp(1j * phi)
    a = 0.5 * ph * (dwl * left + dwr * right)
    dtheta += a + a.conj().T
    b = 0.5j * ph * (wl * left + wr * right)
    dphi = b + b.conj().T
    return dtheta, dphi


# -- quantum gas microscope -----------------------------------------------------

class ControlBoundsError(ValueError):
    pass


def _check_bounds(values, bounds, prefix, step):
    lo, hi = bounds
    for i, v in enumerate(values):
        if not lo <= v <= hi:
            where = "" if step is None else f" at step {step}"
            raise ControlBoundsError(
                f"control {prefix}_{i + 1}={v:g}{where} outside bounds [{lo:g}, {hi:g}]")


def microscope_hamiltonian(model, hx, hz, step=None):
    """Open-chain Hamiltonian with bond amplitudes `hx` (``M - 1``) and site energies `hz` (``M``)."""
    M = model.M
    hx = np.asarray(hx, dtype=float)
    hz = np.asarray(hz, dtype=float)
    if hx.shape != (M - 1,) or hz.shape != (M,):
        raise ValueError(f"expected hx of length {M - 1} and hz of length {M}")
    _check_bounds(hx, model.hx_bounds, "hx", step)
    _check_bounds(hz, model.hz_bounds, "hz", step)
    h = np.diag(hz).astype(complex)
    idx = np.arange(M - 1)
    h[idx, idx + 1] = hx
    h[idx + 1, idx] = hx
    return h
