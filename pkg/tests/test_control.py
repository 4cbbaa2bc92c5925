import numpy as np
import pytest

from bosonwalk.control import (
    ChannelMismatch,
    ControlWaveform,
    GrapeConfig,
    channel_names,
    constant_waveform,
    default_dt,
    default_steps,
    fidelity,
    fidelity_gradient,
    grape_optimize,
    infidelity_scan,
    initial_waveform,
    make_model,
    propagate,
)
from bosonwalk.lattice import GasMicroscopeModel, SpinorLatticeModel, microscope_hamiltonian, spinor_hamiltonian
from bosonwalk.linalg import expm_hermitian, haar_unitary, unitarity_residual


def random_waveform(model, rng, steps=None):
    names = channel_names(model)
    K = steps or default_steps(model)
    if isinstance(model, SpinorLatticeModel):
        vals = rng.uniform(0, 2 * np.pi, (2, K))
    else:
        vals = rng.uniform(-1.5, 1.5, (len(names), K))
    return ControlWaveform.from_array(names, vals, default_dt(model))


# -- waveforms and propagation ----------------------------------------------------------

def test_waveform_validation():
    with pytest.raises(ValueError):
        ControlWaveform({"a": [1, 2], "b": [1]}, 1.0)
    with pytest.raises(ValueError):
        ControlWaveform({"a": [1, 2]}, 0.0)
    wf = ControlWaveform({"a": [1, 2, 3]}, 0.5)
    assert (wf.K, wf.duration) == (3, 1.5)


def test_defaults():
    s = SpinorLatticeModel(4, Omega0=2.0)
    m = GasMicroscopeModel(5, h0=0.5)
    assert default_steps(s) == 64 and default_dt(s) == pytest.approx(np.pi)
    assert default_steps(m) == 5 and default_dt(m) == pytest.approx(4 * np.pi)
    assert channel_names(m) == ["hx_1", "hx_2", "hx_3", "hx_4", "hz_1", "hz_2", "hz_3", "hz_4", "hz_5"]
    assert len(channel_names(m)) * default_steps(m) == 2 * 5 ** 2 - 5


def test_zero_controls_identity():
    m = GasMicroscopeModel(4)
    wf = constant_waveform(m, {"hx": 0.0, "hz": 0.0}, steps=1)
    assert np.allclose(propagate(m, wf), np.eye(4))


def test_two_equal_steps_compose():
    m = GasMicroscopeModel(3)
    one = constant_waveform(m, {"hx": 0.7, "hz": 0.2}, steps=1, dt=0.6)
    two = constant_waveform(m, {"hx": 0.7, "hz": 0.2}, steps=2, dt=0.3)
    assert np.max(np.abs(propagate(m, one) - propagate(m, two))) < 1e-12


def test_spinor_propagator_unitary(rng):
    m = SpinorLatticeModel(3)
    assert unitarity_residual(propagate(m, random_waveform(m, rng, steps=12))) <= 1e-9


@pytest.mark.parametrize("family", ["spinor", "microscope"])
def test_propagation_order(rng, family):
    m = make_model(family, 4)
    wf = random_waveform(m, rng, steps=5)
    arr = wf.as_array()
    u = np.eye(4, dtype=complex)
    for k in range(wf.K):
        if family == "spinor":
            h = spinor_hamiltonian(m, arr[0, k], arr[1, k])
        else:
            h = microscope_hamiltonian(m, arr[:3, k], arr[3:, k])
        u = expm_hermitian(h, wf.dt) @ u
    assert np.max(np.abs(propagate(m, wf) - u)) <= 1e-10


def test_channel_mismatch():
    m = GasMicroscopeModel(3)
    with pytest.raises(ChannelMismatch):
        propagate(m, ControlWaveform({"theta": [0.1], "phi": [0.2]}, 1.0))


# -- fidelity -----------------------------------------------------------------------------

def test_fidelity_values():
    u = haar_unitary(5, 1)
    assert fidelity(u, u) == pytest.approx(1.0)
    assert fidelity(np.exp(0.7j) * u, u) == pytest.approx(1.0)
    assert fidelity(np.eye(2), np.array([[0, 1], [1, 0]])) == 0.0
    with pytest.raises(ValueError):
        fidelity(np.eye(2), np.eye(3))


# -- gradients ------------------------------------------------------------------------------

@pytest.mark.parametrize("family,dim,steps", [("spinor", 4, 6), ("microscope", 4, 4), ("spinor", 6, 5),
                                              ("microscope", 7, 3)])
def test_gradient_matches_finite_difference(rng, family, dim, steps):
    m = make_model(family, dim)
    wf = random_waveform(m, rng, steps=steps)
    target = haar_unitary(dim, rng)
    ga = fidelity_gradient(m, wf, target)
    gf = fidelity_gradient(m, wf, target, method="finite_difference")
    assert ga.shape == (len(channel_names(m)), steps)
    rel = np.abs(ga - gf) / np.maximum(np.abs(gf), 1e-300)
    assert rel.max() <= 1e-5


@pytest.mark.parametrize("family", ["spinor", "microscope"])
def test_gradient_vanishes_at_optimum(rng, family):
    m = make_model(family, 4)
    wf = random_waveform(m, rng, steps=4)
    target = propagate(m, wf)
    assert np.linalg.norm(fidelity_gradient(m, wf, target)) <= 1e-8


def test_gradient_duplicated_step_splits():
    # one step of 2 dt versus two identical steps of dt: the per-step gradients sum to the single one
    m = GasMicroscopeModel(3)
    rng = np.random.default_rng(4)
    vals = rng.uniform(-1, 1, (5, 1))
    target = haar_unitary(3, 9)
    one = ControlWaveform.from_array(channel_names(m), vals, 0.8)
    two = ControlWaveform.from_array(channel_names(m), np.repeat(vals, 2, axis=1), 0.4)
    g1 = fidelity_gradient(m, one, target)[:, 0]
    g2 = fidelity_gradient(m, two, target)
    assert np.allclose(g2.sum(axis=1), g1, atol=1e-12)


def test_unknown_gradient_method(rng):
    m = GasMicroscopeModel(3)
    with pytest.raises(ValueError):
        fidelity_gradient(m, random_waveform(m, rng), np.eye(3), method="adjoint")


# -- optimisation ---------------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        GrapeConfig(max_iterations=0)
    with pytest.raises(ValueError):
        GrapeConfig(backtrack=1.5)
    with pytest.raises(ValueError):
        GrapeConfig(direction="newton")


def test_start_at_optimum():
    m = SpinorLatticeModel(2)
    cfg = GrapeConfig(seed=3)
    wf0 = initial_waveform(m, cfg)
    res = grape_optimize(m, propagate(m, wf0), cfg)
    assert res.iterations == 0
    assert res.converged and res.infidelity <= 1e-12


def test_initial_waveform_perturbation():
    m = SpinorLatticeModel(2)
    base = constant_waveform(m).as_array()
    pert = initial_waveform(m, GrapeConfig(seed=1)).as_array()
    assert 0 < np.abs(pert - base).max() <= 1e-2
    flat = initial_waveform(m, GrapeConfig(perturbation=0.0)).as_array()
    assert np.array_equal(flat, base)


@pytest.mark.parametrize("direction", ["lbfgs", "steepest"])
def test_microscope_converges_monotone(direction):
    m = GasMicroscopeModel(4)
    target = haar_unitary(4, 21)
    res = grape_optimize(m, target, GrapeConfig(direction=direction, max_iterations=4000))
    assert res.converged, res.reason
    assert res.infidelity <= 1e-5
    assert np.all(np.diff(res.fidelity_trace) >= -1e-12)
    assert fidelity(res.unitary, target) == pytest.approx(1 - res.infidelity, abs=1e-12)


def test_spinor_small_converges():
    m = SpinorLatticeModel(2)
    res = grape_optimize(m, haar_unitary(4, 5), GrapeConfig(max_iterations=2000))
    assert np.all(np.diff(res.fidelity_trace) >= -1e-12)
    assert res.infidelity <= 1e-3


def test_finite_difference_mode_runs():
    m = GasMicroscopeModel(3)
    res = grape_optimize(m, haar_unitary(3, 2), GrapeConfig(gradient="finite_difference", max_iterations=5))
    assert res.iterations <= 5
    assert np.all(np.diff(res.fidelity_trace) >= -1e-12)


def test_global_phase_invariance():
    m = GasMicroscopeModel(4)
    target = haar_unitary(4, 13)
    cfg = GrapeConfig(max_iterations=60, seed=2)
    a = grape_optimize(m, target, cfg)
    b = grape_optimize(m, np.exp(1.234j) * target, cfg)
    assert a.iterations == b.iterations
    assert np.max(np.abs(np.array(a.fidelity_trace) - np.array(b.fidelity_trace))) <= 1e-12


def test_microscope_bounds_respected():
    m = GasMicroscopeModel(3, hx_bounds=(-0.3, 0.3), hz_bounds=(-0.3, 0.3))
    res = grape_optimize(m, haar_unitary(3, 8), GrapeConfig(max_iterations=50))
    arr = res.waveform.as_array()
    assert arr.min() >= -0.3 and arr.max() <= 0.3


def test_target_dimension_checked():
    with pytest.raises(ValueError):
        grape_optimize(SpinorLatticeModel(2), np.eye(6))


def test_resume_from_result():
    m = GasMicroscopeModel(3)
    target = haar_unitary(3, 4)
    res = grape_optimize(m, target)
    again = grape_optimize(m, target, initial=res.waveform)
    assert again.iterations == 0
    assert again.infidelity == pytest.approx(res.infidelity)


# -- scans ------------------------------------------------------------------------------------

def test_scan_single_row():
    runs, summary, complete = infidelity_scan("microscope", (4,), 1)
    assert complete and len(runs) == 1 and len(summary) == 1
    assert summary[0]["median"] == runs[0]["infidelity"]


def test_scan_deterministic():
    cfg = GrapeConfig(max_iterations=30)
    a = infidelity_scan("microscope", (3, 4), 2, cfg, seed=5)
    b = infidelity_scan("microscope", (3, 4), 2, cfg, seed=5)
    assert a == b


def test_scan_budget_partial():
    runs, _, complete = infidelity_scan("microscope", (3, 4), 3, GrapeConfig(max_iterations=30), budget=0.0)
    assert not complete
    assert len(runs) < 6


def test_make_model_errors():
    with pytest.raises(ValueError):
        make_model("spinor", 5)
    with pytest.raises(ValueError):
        make_model("ion-trap", 4)
