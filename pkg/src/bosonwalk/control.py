"""Gradient-ascent synthesis of piecewise-constant control waveforms.

The propagator of a waveform with ``K`` steps is ``U = U_K ... U_1`` with
``U_k = exp(-i H(lambda_k) dt)``. The fidelity against a target ``W`` is
``|Tr(W^dag U)|^2 / d^2``; its gradient is exact, using the divided-difference
form of the derivative of ``exp`` in each step's eigenbasis.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .lattice import (
    GasMicroscopeModel,
    SpinorLatticeModel,
    microscope_hamiltonian,
    spinor_derivatives,
    spinor_hamiltonian,
    spinor_terms,
)
from .linalg import check_unitary, expm_taylor, haar_unitary

log = logging.getLogger(__name__)

TWO_PI = 2 * np.pi


class GrapeError(RuntimeError):
    pass


class ChannelMismatch(ValueError):
    pass


@dataclass
class ControlWaveform:
    """Piecewise-constant controls: ``channels[name]`` holds one value per step."""

    channels: dict
    dt: float

    def __post_init__(self):
        if not self.channels:
            raise ValueError("waveform needs at least one channel")
        self.channels = {k: np.asarray(v, dtype=float).copy() for k, v in self.channels.items()}
        lengths = {v.size for v in self.channels.values()}
        if len(lengths) != 1:
            raise ValueError(f"channels have different lengths {sorted(lengths)}")
        if self.K < 1:
            raise ValueError("waveform needs K >= 1 steps")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def K(self):
        return next(iter(self.channels.values())).size

    @property
    def names(self):
        return list(self.channels)

    @property
    def duration(self):
        return self.K * self.dt

    def as_array(self):
        return np.stack([self.channels[k] for k in self.channels])

    @classmethod
    def from_array(cls, names, values, dt):
        values = np.asarray(values, dtype=float)
        return cls(dict(zip(names, values)), dt)


def channel_names(model):
    if isinstance(model, SpinorLatticeModel):
        return ["theta", "phi"]
    if isinstance(model, GasMicroscopeModel):
        return [f"hx_{l}" for l in range(1, model.M)] + [f"hz_{l}" for l in range(1, model.M + 1)]
    raise TypeError(f"no control channels for {type(model).__name__}")


def default_steps(model):
    """Steps per channel: ``d^2`` for the spinor lattice, ``M`` for the microscope."""
    if isinstance(model, SpinorLatticeModel):
        return model.dim ** 2
    return model.M


def default_dt(model):
    """Step duration with ``Omega0 dt = 2 pi`` or ``h0 dt = 2 pi``."""
    if isinstance(model, SpinorLatticeModel):
        return TWO_PI / model.Omega0
    return TWO_PI / model.h0


def constant_waveform(model, values=None, steps=None, dt=None):
    """Waveform holding every channel constant.

    `values` maps a channel name, or the prefix ``"hx"``/``"hz"``, to its value.
    """
    names = channel_names(model)
    steps = steps or default_steps(model)
    dt = dt or default_dt(model)
    if values is None:
        values = default_initial_values(model)
    chans = {}
    for n in names:
        v = values.get(n, values.get(n.split("_")[0], 0.0))
        chans[n] = np.full(steps, float(v))
    return ControlWaveform(chans, dt)


def default_initial_values(model):
    if isinstance(model, SpinorLatticeModel):
        return {"theta": np.pi / 2, "phi": 0.0}
    return {"hx": 0.5 * model.h0, "hz": 0.0}


def _check_channels(model, wf):
    expected = channel_names(model)
    if wf.names != expected:
        raise ChannelMismatch(f"waveform channels {wf.names} do not match model channels {expected}")


def step_hamiltonians(model, params, check_bounds=True):
    """Hamiltonian of every step, shape ``(K, d, d)``; `params` has shape ``(C, K)``."""
    K = params.shape[1]
    if isinstance(model, SpinorLatticeModel):
        return np.stack([spinor_hamiltonian(model, params[0, k], params[1, k]) for k in range(K)])
    M = model.M
    if check_bounds:
        return np.stack([
            microscope_hamiltonian(model, params[:M - 1, k], params[M - 1:, k], step=k + 1)
            for k in range(K)
        ])
    h = np.zeros((K, M, M), dtype=complex)
    idx = np.arange(M - 1)
    h[:, idx, idx + 1] = params[:M - 1].T
    h[:, idx + 1, idx] = params[:M - 1].T
    h[:, np.arange(M), np.arange(M)] = params[M - 1:].T
    return h


def _projected_derivatives(model, params, v):
    """``V^dag (dH/dlambda_c) V`` for each step and channel, shape ``(K, C, d, d)``."""
    vc = v.conj()
    if isinstance(model, SpinorLatticeModel):
        K = params.shape[1]
        dh = np.empty((K, 2) + v.shape[1:], dtype=complex)
        for k in range(K):
            dh[k] = spinor_derivatives(model, params[0, k], params[1, k])
        return np.einsum("kia,kcij,kjb->kcab", vc, dh, v, optimize=True)
    # site projector |l><l| -> conj(V[l, a]) V[l, b]
    site = np.einsum("kla,klb->klab", vc, v)
    bond = (np.einsum("kla,klb->klab", vc[:, :-1], v[:, 1:])
            + np.einsum("kla,klb->klab", vc[:, 1:], v[:, :-1]))
    return np.concatenate([bond, site], axis=1)


def _propagators(model, params, dt, check_bounds=True):
    h = step_hamiltonians(model, params, check_bounds)
    w, v = np.linalg.eigh(h)
    e = np.exp(-1j * w * dt)
    u = np.einsum("kab,kb,kcb->kac", v, e, v.conj())
    return w, v, e, u


def propagate(model, wf):
    """Time-ordered product ``U_K ... U_2 U_1`` of the step propagators."""
    _check_channels(model, wf)
    _, _, _, u = _propagators(model, wf.as_array(), wf.dt)
    out = np.eye(model.dim, dtype=complex)
    for uk in u:
        out = uk @ out
    return check_unitary(out, tol=1e-9, name="waveform propagator")


def fidelity(U, U_tar):
    """``|Tr(U_tar^dag U)|^2 / d^2``."""
    U = np.asarray(U)
    U_tar = np.asarray(U_tar)
    if U.shape != U_tar.shape or U.ndim != 2:
        raise ValueError(f"dimension mismatch {U.shape} vs {U_tar.shape}")
    d = U.shape[0]
    return float(abs(np.vdot(U_tar, U)) ** 2 / d ** 2)


def _fidelity_and_gradient(model, params, dt, target, want_grad=True, check_bounds=False):
    d = model.dim
    w, v, e, u = _propagators(model, params, dt, check_bounds)
    K = u.shape[0]
    fwd = np.empty((K + 1, d, d), dtype=complex)
    fwd[0] = np.eye(d)
    for k in range(K):
        fwd[k + 1] = u[k] @ fwd[k]
    wdag = target.conj().T
    g = np.trace(wdag @ fwd[K])
    fid = float(abs(g) ** 2 / d ** 2)
    if not want_grad:
        return fid, None, fwd[K]

    # bwd[k] = W^dag U_K ... U_{k+2}, the factor to the left of step k (0-based)
    bwd = np.empty((K, d, d), dtype=complex)
    bwd[K - 1] = wdag
    for k in range(K - 1, 0, -1):
        bwd[k - 1] = bwd[k] @ u[k]
    vh = np.conj(np.swapaxes(v, 1, 2))
    m = vh @ fwd[:K] @ bwd @ v
    half = 0.5 * (w[:, :, None] + w[:, None, :]) * dt
    diff = 0.5 * (w[:, :, None] - w[:, None, :]) * dt
    gmat = -1j * dt * np.exp(-1j * half) * np.sinc(diff / np.pi)
    dproj = _projected_derivatives(model, params, v)
    dg = np.einsum("kba,kcab,kab->ck", m, dproj, gmat, optimize=True)
    grad = 2.0 * np.real(np.conj(g) * dg) / d ** 2
    return fid, grad, fwd[K]


def _step_hamiltonian_extended(model, column):
    dtype = np.clongdouble
    if isinstance(model, SpinorLatticeModel):
        theta = np.mod(column[0], 2 * np.pi)
        phi = np.mod(column[1], 2 * np.pi)
        return sum(spinor_terms(model, theta, phi, dtype=dtype))
    M = model.M
    h = np.diag(column[M - 1:]).astype(dtype)
    idx = np.arange(M - 1)
    h[idx, idx + 1] = column[:M - 1]
    h[idx + 1, idx] = column[:M - 1]
    return h


def _finite_difference_gradient(model, params, dt, target, step):
    """Central differences with every propagator in long-double precision.

    Only the perturbed step is re-exponentiated; the products of the other
    steps on either side are computed once.
    """
    dtype = np.clongdouble
    p = params.astype(np.longdouble)
    C, K = p.shape
    d = model.dim
    u = [expm_taylor(_step_hamiltonian_extended(model, p[:, k]), dt, dtype) for k in range(K)]
    before = [np.eye(d, dtype=dtype)]
    for k in range(K):
        before.append(u[k] @ before[-1])
    after = [np.eye(d, dtype=dtype)] * K
    acc = np.conj(np.asarray(target, dtype=dtype)).T
    for k in range(K - 1, -1, -1):
        after[k] = acc
        acc = acc @ u[k]
    h = np.longdouble(step)
    grad = np.zeros((C, K))
    for k in range(K):
        env = before[k] @ after[k]
        for c in range(C):
            vals = []
            for sgn in (1, -1):
                col = p[:, k].copy()
                col[c] += sgn * h
                uk = expm_taylor(_step_hamiltonian_extended(model, col), dt, dtype)
                vals.append(abs(np.sum(env.T * uk)) ** 2 / d ** 2)
            grad[c, k] = float((vals[0] - vals[1]) / (2 * h))
    return grad


def fidelity_gradient(model, wf, U_tar, method="analytic", step=1e-6):
    """``dF/dlambda`` for every channel value, shape ``(C, K)``.

    ``method="finite_difference"`` uses central differences with `step`,
    evaluated with long-double Taylor propagators so that rounding stays far
    below the differencing error.
    """
    _check_channels(model, wf)
    target = np.asarray(U_tar, dtype=complex)
    params = wf.as_array()
    if method == "analytic":
        return _fidelity_and_gradient(model, params, wf.dt, target, check_bounds=True)[1]
    if method != "finite_difference":
        raise ValueError(f"unknown gradient method {method!r}")
    if isinstance(model, GasMicroscopeModel):
        step_hamiltonians(model, params)  # bounds check
    return _finite_difference_gradient(model, params, wf.dt, target, step)


@dataclass
class GrapeConfig:
    """Optimiser settings.

    ``direction="lbfgs"`` uses limited-memory BFGS search directions;
    ``"steepest"`` follows the raw gradient. Either way every step passes an
    Armijo backtracking test, so the fidelity trace never decreases.
    """

    max_iterations: int = 3000
    initial_step: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 40
    gradient: str = "analytic"
    direction: str = "lbfgs"
    memory: int = 20
    gradient_tol: float = 1e-10
    target_infidelity: float = 1e-5
    seed: int = 0
    perturbation: float = 1e-2
    initial_values: dict | None = None
    steps: int | None = None
    dt: float | None = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        for name in ("initial_step", "gradient_tol", "target_infidelity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.gradient not in ("analytic", "finite_difference"):
            raise ValueError(f"unknown gradient method {self.gradient!r}")
        if self.direction not in ("lbfgs", "steepest"):
            raise ValueError(f"unknown direction {self.direction!r}")


@dataclass
class GrapeResult:
    waveform: ControlWaveform
    fidelity_trace: list
    infidelity: float
    unitary: np.ndarray
    iterations: int
    converged: bool
    reason: str
    wall_time: float = field(default=0.0, compare=False)


def initial_waveform(model, config):
    """Constant guess plus a seeded uniform perturbation of amplitude ``config.perturbation``."""
    wf = constant_waveform(model, config.initial_values, config.steps, config.dt)
    if config.perturbation:
        rng = np.random.default_rng(config.seed)
        arr = wf.as_array()
        arr = arr + config.perturbation * rng.uniform(-1, 1, arr.shape)
        wf = ControlWaveform.from_array(wf.names, arr, wf.dt)
    return wf


def _lbfgs_direction(grad, s_hist, y_hist):
    # two-loop recursion on the minimisation of -F
    q = -grad.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        alphas.append((rho, a))
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += s * (a - b)
    return -q


def _project(model, x, shape):
    if isinstance(model, GasMicroscopeModel):
        p = x.reshape(shape)
        M = model.M
        np.clip(p[:M - 1], *model.hx_bounds, out=p[:M - 1])
        np.clip(p[M - 1:], *model.hz_bounds, out=p[M - 1:])
        return p.ravel()
    return x


def grape_optimize(model, U_tar, config=None, initial=None):
    """Maximise the fidelity to `U_tar` over piecewise-constant controls.

    Parameters
    ----------
    model : SpinorLatticeModel or GasMicroscopeModel
    U_tar : (d, d) array_like
        Target unitary.
    config : GrapeConfig, optional
    initial : ControlWaveform, optional
        Starting waveform; defaults to :func:`initial_waveform`.

    Returns
    -------
    GrapeResult
    """
    config = config or GrapeConfig()
    target = check_unitary(U_tar, name="target")
    if target.shape[0] != model.dim:
        raise ValueError(f"target dimension {target.shape[0]} != model dimension {model.dim}")
    wf0 = initial if initial is not None else initial_waveform(model, config)
    _check_channels(model, wf0)
    names, dt, shape = wf0.names, wf0.dt, wf0.as_array().shape
    t0 = time.perf_counter()

    def evaluate(x, it):
        params = x.reshape(shape)
        if config.gradient == "analytic":
            f, g, u = _fidelity_and_gradient(model, params, dt, target)
        else:
            f, _, u = _fidelity_and_gradient(model, params, dt, target, want_grad=False)
            g = fidelity_gradient(model, ControlWaveform.from_array(names, params, dt), target,
                                  method="finite_difference")
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            raise GrapeError(f"non-finite fidelity at iteration {it}")
        return f, g.ravel(), u

    x = _project(model, wf0.as_array().ravel().copy(), shape)
    f, g, u = evaluate(x, 0)
    trace = [f]
    s_hist, y_hist = [], []
    step = config.initial_step
    reason = "max_iterations"
    it = 0
    while True:
        if 1.0 - f <= config.target_infidelity:
            reason = "target"
            break
        if np.linalg.norm(g) < config.gradient_tol:
            reason = "gradient"
            break
        if it >= config.max_iterations:
            break
        it += 1
        direction = g if config.direction == "steepest" else _lbfgs_direction(g, s_hist, y_hist)
        slope = float(np.dot(g, direction))
        if slope <= 0:
            direction, slope = g, float(np.dot(g, g))
            s_hist.clear()
            y_hist.clear()
        alpha = step if config.direction == "steepest" else 1.0
        accepted = False
        for _ in range(config.max_backtracks):
            x_new = _project(model, x + alpha * direction, shape)
            f_new, g_new, u_new = evaluate(x_new, it)
            if f_new >= f + config.armijo * alpha * slope:
                accepted = True
                break
            alpha *= config.backtrack
        if not accepted:
            reason = "line_search"
            it -= 1
            break
        s, y = x_new - x, g - g_new
        if np.dot(s, y) > 1e-16:
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > config.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        x, f, g, u = x_new, f_new, g_new, u_new
        trace.append(f)
        step = alpha * 2.0
        if it % 100 == 0:
            log.debug("iteration %d infidelity %.3e", it, 1 - f)

    wf = ControlWaveform.from_array(names, x.reshape(shape), dt)
    return GrapeResult(
        waveform=wf,
        fidelity_trace=trace,
        infidelity=max(1.0 - f, 0.0),
        unitary=u,
        iterations=it,
        converged=reason == "target",
        reason=reason,
        wall_time=time.perf_counter() - t0,
    )


def make_model(family, dim, **params):
    """Model of the requested family with Hilbert-space dimension `dim`."""
    if family == "spinor":
        if dim % 2:
            raise ValueError("spinor dimension d = 2M must be even")
        return SpinorLatticeModel(M=dim // 2, **params)
    if family == "microscope":
        return GasMicroscopeModel(M=dim, **params)
    raise ValueError(f"unknown family {family!r}; use 'spinor' or 'microscope'")


def target_seed(seed, dim, index):
    return np.random.SeedSequence([seed, dim, index])


def infidelity_scan(family, dims, targets_per_dim, config=None, seed=0, model_params=None,
                    budget=None):
    """Run GRAPE against Haar targets for each dimension.

    Returns
    -------
    runs : list of dict
        One row per ``(dim, target)``.
    summary : list of dict
        Per-dimension mean, median, spread and extremes of the final infidelity.
    complete : bool
        False when `budget` seconds ran out before all runs finished.
    """
    config = config or GrapeConfig()
    model_params = model_params or {}
    runs = []
    t0 = time.perf_counter()
    complete = True
    for dim in dims:
        model = make_model(family, dim, **model_params)
        for i in range(targets_per_dim):
            if budget is not None and time.perf_counter() - t0 > budget:
                complete = False
                break
            target = haar_unitary(dim, np.random.default_rng(target_seed(seed, dim, i)))
            res = grape_optimize(model, target, config)
            runs.append({
                "dim": dim, "target": i, "infidelity": res.infidelity,
                "iterations": res.iterations, "converged": res.converged,
            })
        if not complete:
            break
    summary = []
    for dim in dims:
        vals = np.array([r["infidelity"] for r in runs if r["dim"] == dim])
        if vals.size == 0:
            continue
        summary.append({
            "dim": dim, "targets": int(vals.size), "mean": float(vals.mean()),
            "median": float(np.median(vals)), "std": float(vals.std()),
            "min": float(vals.min()), "max": float(vals.max()),
        })
    return runs, summary, complete
