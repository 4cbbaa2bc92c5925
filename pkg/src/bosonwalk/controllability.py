"""Numerical controllability certificates.

The dynamical Lie algebra of a control system is the real span of ``i H`` for
the available Hamiltonians, closed under commutators. It is represented here
by Hermitian matrices ``H`` (standing for ``i H``); the bracket of two such
elements is ``i [A, B]``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .lattice import (
    GasMicroscopeModel,
    SpinorLatticeModel,
    microscope_hamiltonian,
    spinor_hamiltonian,
    spinor_terms,
)
from .linalg import hermiticity_residual

RANK_TOL = 1e-8
DEDUP_TOL = 1e-10
MAX_ALGEBRA_DIM = 4096


@dataclass
class GeneratorSet:
    generators: list
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.generators = [np.asarray(g, dtype=complex) for g in self.generators]
        if not self.labels:
            self.labels = [f"g{i}" for i in range(len(self.generators))]
        if len(self.labels) != len(self.generators):
            raise ValueError("one label per generator")
        dims = {g.shape for g in self.generators}
        if len(dims) > 1:
            raise ValueError(f"generators have mixed shapes {sorted(dims)}")
        for g, lab in zip(self.generators, self.labels):
            if hermiticity_residual(g) > 1e-10:
                raise ValueError(f"generator {lab} is not Hermitian")

    @property
    def dim(self):
        return self.generators[0].shape[0] if self.generators else 0

    def __len__(self):
        return len(self.generators)


class GellMannBasis:
    """Generalised Gell-Mann matrices in ``M`` dimensions (sites labelled ``1..M``)."""

    def __init__(self, M):
        if M < 2:
            raise ValueError("need M >= 2")
        self.M = M

    def _ket_bra(self, j, k):
        out = np.zeros((self.M, self.M), dtype=complex)
        out[j - 1, k - 1] = 1.0
        return out

    def phased(self, j, k, phi):
        """``e^{i phi} |j><k| + e^{-i phi} |k><j|``."""
        a = np.exp(1j * phi) * self._ket_bra(j, k)
        return a + a.conj().T

    def sym(self, j, k):
        return self.phased(j, k, 0.0)

    def antisym(self, j, k):
        """``-i |j><k| + i |k><j|``."""
        return self.phased(j, k, -np.pi / 2)

    def diag(self, l):
        out = np.zeros((self.M, self.M), dtype=complex)
        out[np.arange(l), np.arange(l)] = 1.0
        out[l, l] = -l
        return out

    def elements(self):
        out = []
        for j in range(1, self.M + 1):
            for k in range(j + 1, self.M + 1):
                out.append(self.sym(j, k))
                out.append(self.antisym(j, k))
        out.extend(self.diag(l) for l in range(1, self.M))
        return out

    def __len__(self):
        return self.M ** 2 - 1


def _dedup(mats, labels, tol=DEDUP_TOL):
    keep, keep_labels = [], []
    for m, lab in zip(mats, labels):
        if any(np.linalg.norm(m - k, ord="nuc") <= tol for k in keep):
            continue
        keep.append(m)
        keep_labels.append(lab)
    return keep, keep_labels


SPINOR_GRID = [(t, p) for t in (0.0, np.pi / 2, np.pi) for p in (0.0, np.pi / 2)]


def microscope_canonical_grid(M):
    """Unit control on one bond or one site at a time."""
    grid = []
    for l in range(M - 1):
        hx = np.zeros(M - 1)
        hx[l] = 1.0
        grid.append((hx, np.zeros(M)))
    for l in range(M):
        hz = np.zeros(M)
        hz[l] = 1.0
        grid.append((np.zeros(M - 1), hz))
    return grid


def sample_generators(model, control_samples=None):
    """Evaluate the model Hamiltonian on a grid of control values.

    Spinor grids are ``(theta, phi)`` pairs, microscope grids ``(hx, hz)``
    pairs. Duplicates within trace-norm ``1e-10`` are dropped.
    """
    if isinstance(model, SpinorLatticeModel):
        grid = SPINOR_GRID if control_samples is None else list(control_samples)
        mats = [spinor_hamiltonian(model, t, p) for t, p in grid]
        labels = [f"H(theta={t:.4g},phi={p:.4g})" for t, p in grid]
    elif isinstance(model, GasMicroscopeModel):
        grid = microscope_canonical_grid(model.M) if control_samples is None else list(control_samples)
        mats = [microscope_hamiltonian(model, hx, hz) for hx, hz in grid]
        labels = [f"H(hx={list(np.round(hx, 4))},hz={list(np.round(hz, 4))})" for hx, hz in grid]
    else:
        raise TypeError(f"no control grid for {type(model).__name__}")
    if not mats:
        raise ValueError("control grid is empty")
    mats, labels = _dedup(mats, labels)
    return GeneratorSet(mats, labels)


class ClosureResult(NamedTuple):
    dimension: int
    saturated: bool
    growth: list
    contains_identity: bool


def _vec(h):
    return np.concatenate([h.real.ravel(), h.imag.ravel()])


def _unvec(v, d):
    n = d * d
    return (v[:n] + 1j * v[n:]).reshape(d, d)


def lie_closure_dimension(gens, max_dim=None, tol=RANK_TOL):
    """Dimension of the real Lie algebra generated by ``{i H : H in gens}``.

    Elements are orthonormalised under the trace inner product; each newly
    found direction is bracketed with every generator, breadth first, until
    no bracket leaves the span (or `max_dim` is reached).

    Returns
    -------
    ClosureResult
        ``growth[r]`` is the span dimension after round ``r``; ``saturated``
        means the span is all of ``u(d)``, or ``su(d)`` for a traceless set.
    """
    if isinstance(gens, GeneratorSet):
        mats = gens.generators
    else:
        mats = [np.asarray(g, dtype=complex) for g in gens]
    if not mats:
        return ClosureResult(0, False, [0], False)
    d = mats[0].shape[0]
    if d * d > MAX_ALGEBRA_DIM:
        raise ValueError(f"d^2 = {d * d} exceeds the {MAX_ALGEBRA_DIM} guard")
    cap = d * d if max_dim is None else min(max_dim, d * d)

    basis = np.zeros((0, 2 * d * d))

    def add(h):
        nonlocal basis
        v = _vec(h)
        norm = np.linalg.norm(v)
        if norm == 0:
            return None
        v = v / norm
        for _ in range(2):
            v = v - basis.T @ (basis @ v)
        r = np.linalg.norm(v)
        if r <= tol:
            return None
        v = v / r
        basis = np.vstack([basis, v])
        return _unvec(v, d)

    gen_units = []
    frontier = []
    for g in mats:
        n = np.linalg.norm(g)
        if n > 0:
            gen_units.append(g / n)
        new = add(g)
        if new is not None:
            frontier.append(new)
    growth = [basis.shape[0]]
    while frontier and basis.shape[0] < cap:
        nxt = []
        for x in frontier:
            for g in gen_units:
                c = 1j * (g @ x - x @ g)
                new = add(c)
                if new is not None:
                    nxt.append(new)
                if basis.shape[0] >= cap:
                    break
            if basis.shape[0] >= cap:
                break
        frontier = nxt
        growth.append(basis.shape[0])

    dim = basis.shape[0]
    eye = _vec(np.eye(d, dtype=complex)) / np.sqrt(d)
    has_identity = bool(np.linalg.norm(basis @ eye) > 1 - 1e-8)
    traces = np.array([np.trace(_unvec(v, d)).real for v in basis])
    traceless = bool(np.all(np.abs(traces) < 1e-8))
    saturated = dim == d * d or (dim == d * d - 1 and traceless)
    return ClosureResult(dim, saturated, growth, has_identity)


# -- commutator identities for the spinor and microscope models -------------------

@dataclass
class IdentityCheck:
    name: str
    residual: float
    coefficients: list
    passed: bool
    note: str = ""


def _commutator(a, b):
    return a @ b - b @ a


def _fit(c, claimed, tol):
    """Least-squares fit of `c` onto the complex span of `claimed`.

    With two claimed operators ``X, Y`` the claim is ``c ~ cos(psi) X + sin(psi) Y``
    for a single real ``psi``, so the two coefficients must share a phase.
    """
    cn = np.linalg.norm(c)
    if cn < 1e-13:
        return 0.0, [0.0] * len(claimed), "commutator vanishes"
    a = np.stack([b.ravel() for b in claimed], axis=1)
    coef, *_ = np.linalg.lstsq(a, c.ravel(), rcond=None)
    resid = float(np.linalg.norm(c.ravel() - a @ coef) / cn)
    note = ""
    if len(coef) == 2 and abs(coef[0]) > 1e-12 and abs(coef[1]) > 1e-12:
        mismatch = abs(np.imag(coef[0] * np.conj(coef[1]))) / (abs(coef[0]) * abs(coef[1]))
        resid = max(resid, float(mismatch))
    if len(coef) == 2:
        psi = float(np.arctan2(abs(coef[1]), abs(coef[0])))
        note = f"fitted phase psi={psi:.6f}"
    return resid, [[float(z.real), float(z.imag)] for z in coef], note


def _wrap_coefficients(M, theta):
    """Bond weights left by ``[HL, [HR, H0]]`` when the up sublattice sits ``theta/pi`` sites over.

    Bulk bond ``(l, l+1)``: ``(1 - x)(2l + x - M)``; wrap bond ``(M, 1)``:
    ``-x (M + x - 1)``, with ``x = theta / pi``.
    """
    x = theta / np.pi
    bulk = [(1 - x) * (2 * l + x - M) for l in range(1, M)]
    return bulk, -x * (M + x - 1)


def verify_appendix_identities(M, shift_per_radian=-1.0 / np.pi, tol=1e-8, theta_generic=0.7):
    """Evaluate the spinor and microscope commutator chain numerically.

    Each commutator is compared, after normalisation, with the operator form
    it should be proportional to. The fitted proportionality constants are
    reported. `shift_per_radian` is the up-sublattice displacement
    convention; the chain assumes ``-1/pi`` (one full site at ``theta = pi``).

    Returns
    -------
    list of IdentityCheck
    """
    if not 2 <= M <= 6:
        raise ValueError("identity checks support 2 <= M <= 6")
    model = SpinorLatticeModel(M=M, Omega0=1.0, V0=1.0, shift_per_radian=shift_per_radian)
    gm = GellMannBasis(M)
    sz = np.diag([1.0, -1.0]).astype(complex)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    one = np.eye(2, dtype=complex)
    p_down = np.diag([1.0, 0.0]).astype(complex)

    def on_site(spin, site):
        return np.kron(spin, site)

    def ring_bonds(phi, weights=None, wrap=None):
        # sum over bonds (l, l+1) including the wrap bond (M, 1)
        out = np.zeros((M, M), dtype=complex)
        for l in range(1, M):
            out += (1.0 if weights is None else weights[l - 1]) * gm.phased(l, l + 1, phi)
        out += (1.0 if wrap is None else wrap) * gm.phased(M, 1, phi)
        return out

    checks = []

    def record(name, c, claimed, note=""):
        resid, coef, fit_note = _fit(c, claimed, tol)
        checks.append(IdentityCheck(name, resid, coef, resid <= tol, "; ".join(x for x in (note, fit_note) if x)))

    # [HL, HR] -> sum_l G_phi^{l+1,l} (x) sigma_z
    _, hl, hr = spinor_terms(model, np.pi / 2, 0.3)
    record("[HL,HR] ~ sum_l G_phi^{l,l+1} (x) sz", _commutator(hl, hr),
           [on_site(sz, ring_bonds(0.0)), on_site(sz, ring_bonds(np.pi / 2))])

    # [HL(phi=0), HL(phi=pi/2)] -> 1 (x) sigma_z
    _, hl0, _ = spinor_terms(model, 0.0, 0.0)
    _, hl1, _ = spinor_terms(model, 0.0, np.pi / 2)
    record("[HL(phi=0),HL(phi=pi/2)] ~ sz (x) 1", _commutator(hl0, hl1), [on_site(sz, np.eye(M))])

    # [HL, [HR, H0]] at generic theta and at theta = pi
    for theta, label in ((theta_generic, f"theta={theta_generic:g}"), (np.pi, "theta=pi")):
        h0, hl, hr = spinor_terms(model, theta, 0.3)
        c = _commutator(hl, _commutator(hr, h0))
        if theta == np.pi:
            claimed = [on_site(sz, gm.phased(M, 1, 0.0)), on_site(sz, gm.phased(M, 1, np.pi / 2))]
            name = "[HL,[HR,H0]](theta=pi) ~ G_phi^{M,1} (x) sz"
        else:
            bulk, wrap = _wrap_coefficients(M, theta)
            claimed = [on_site(sz, ring_bonds(0.0, bulk, wrap)), on_site(sz, ring_bonds(np.pi / 2, bulk, wrap))]
            name = f"[HL,[HR,H0]]({label}) ~ sum_l c_l G_phi^{{l,l+1}} (x) sz"
        record(name, c, claimed)

    # [[Z (x) |down><down|, 1 (x) sx], 1 (x) sx] -> Z (x) sz
    z = np.diag(np.arange(1, M + 1) - (M + 1) / 2 + 0.25).astype(complex)
    zd = on_site(p_down, z)
    record("[[Z (x) P_down, sx],sx] ~ Z (x) sz",
           _commutator(_commutator(zd, on_site(sx, np.eye(M))), on_site(sx, np.eye(M))),
           [on_site(sz, z)])

    # [G_x^{M,1} (x) sz, G_y^{M,1} (x) sz] -> |1><1| - |M><M|
    proj = np.zeros((M, M), dtype=complex)
    proj[0, 0], proj[M - 1, M - 1] = 1.0, -1.0
    record("[G_x^{M,1} (x) sz, G_y^{M,1} (x) sz] ~ (|1><1|-|M><M|) (x) 1",
           _commutator(on_site(sz, gm.sym(M, 1)), on_site(sz, gm.antisym(M, 1))),
           [on_site(one, proj)])

    # microscope: [G_x^{l,l+1}, |l><l|] -> G_y^{l,l+1}
    for l in range(1, M):
        site = np.zeros((M, M), dtype=complex)
        site[l - 1, l - 1] = 1.0
        record(f"[G_x^{{{l},{l + 1}}}, |{l}><{l}|] ~ G_y^{{{l},{l + 1}}}",
               _commutator(gm.sym(l, l + 1), site), [gm.antisym(l, l + 1)])
    return checks


def identity_report(checks):
    return [asdict(c) for c in checks]
