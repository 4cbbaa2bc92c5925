import numpy as np
import pytest

from bosonwalk.linalg import (
    LinalgError,
    check_unitary,
    circulant_diagonalize,
    circulant_from_row,
    expm_hermitian,
    expm_taylor,
    haar_unitary,
    hermitian_eig,
    unitarity_residual,
)


def random_hermitian(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def test_eig_diagonal():
    w, v = hermitian_eig(np.diag([1.0, 2.0, 3.0]))
    assert np.allclose(w, [1, 2, 3])
    assert np.allclose(np.abs(v), np.eye(3))


def test_eig_pauli_x():
    w, _ = hermitian_eig(np.array([[0, 1], [1, 0]]))
    assert np.allclose(w, [-1, 1])


def test_eig_reconstruction(rng):
    h = random_hermitian(rng, 8)
    w, v = hermitian_eig(h)
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - h)) < 1e-9 * np.max(np.abs(h))


def test_eig_rejects_non_hermitian():
    with pytest.raises(LinalgError, match="not Hermitian"):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_expm_zero_time(rng):
    assert np.allclose(expm_hermitian(random_hermitian(rng, 5), 0.0), np.eye(5), atol=1e-14)


def test_expm_two_level_closed_form():
    J, t = 0.7, 1.3
    h = -J * np.array([[0, 1], [1, 0]])
    expect = np.array([[np.cos(J * t), 1j * np.sin(J * t)], [1j * np.sin(J * t), np.cos(J * t)]])
    assert np.allclose(expm_hermitian(h, t), expect, atol=1e-12)
    assert np.allclose(expm_taylor(h, t), expect, atol=1e-12)


def test_expm_group_property(rng):
    h = random_hermitian(rng, 6)
    lhs = expm_hermitian(h, 0.4 + 1.1)
    rhs = expm_hermitian(h, 0.4) @ expm_hermitian(h, 1.1)
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_expm_matches_taylor(rng):
    h = random_hermitian(rng, 7)
    assert np.max(np.abs(expm_hermitian(h, 2.3) - expm_taylor(h, 2.3))) < 1e-10


def test_expm_spectral_identity(rng):
    h = random_hermitian(rng, 6)
    w, _ = hermitian_eig(h)
    u = expm_hermitian(h, 0.9)
    ev = np.linalg.eigvals(u)
    expect = np.exp(-1j * w * 0.9)
    # match each eigenvalue to its nearest counterpart
    dist = np.abs(ev[:, None] - expect[None, :]).min(axis=1)
    assert dist.max() < 1e-10


def test_check_unitary_rejects():
    with pytest.raises(LinalgError, match="not unitary"):
        check_unitary(np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_haar_d1_is_phase():
    u = haar_unitary(1, 3)
    assert abs(abs(u[0, 0]) - 1) < 1e-14


def test_haar_deterministic():
    assert np.array_equal(haar_unitary(8, 42), haar_unitary(8, 42))
    assert not np.array_equal(haar_unitary(8, 42), haar_unitary(8, 43))


def test_haar_unitarity(rng):
    for d in (2, 5, 16):
        assert unitarity_residual(haar_unitary(d, rng)) <= 1e-10


def test_haar_eigenphase_histogram():
    # Haar eigenphases are uniform on the circle; 16 bins, each within 5 sigma
    rng = np.random.default_rng(5)
    d, draws, bins = 16, 2000, 16
    angles = np.concatenate([np.angle(np.linalg.eigvals(haar_unitary(d, rng))) for _ in range(draws)])
    counts, _ = np.histogram(angles, bins=bins, range=(-np.pi, np.pi))
    n, p = angles.size, 1 / bins
    sigma = np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) <= 5 * sigma), counts


def test_haar_left_invariance_moments():
    # E|Tr U|^2 = 1 and E|Tr U|^4 = 2 for Haar U (d >= 2); V U must match
    rng = np.random.default_rng(11)
    d, draws = 6, 2000
    v = np.fft.fft(np.eye(d)) / np.sqrt(d)
    plain = np.array([abs(np.trace(haar_unitary(d, rng))) ** 2 for _ in range(draws)])
    shifted = np.array([abs(np.trace(v @ haar_unitary(d, rng))) ** 2 for _ in range(draws)])
    for x in (plain, shifted):
        for k, expect in ((1, 1.0), (2, 2.0)):
            m = x ** k
            assert abs(m.mean() - expect) <= 3 * m.std() / np.sqrt(draws)
    diff = plain.mean() - shifted.mean()
    assert abs(diff) <= 3 * np.sqrt(plain.var() / draws + shifted.var() / draws)


def test_circulant_scalar():
    assert np.allclose(circulant_diagonalize([2.5, 0, 0, 0]), 2.5)


def test_circulant_ring_row():
    ev = circulant_diagonalize([0, 1, 0, 1])
    assert np.allclose(ev, 2 * np.cos(2 * np.pi * np.arange(4) / 4))


@pytest.mark.parametrize("m", [5, 16, 64])
def test_circulant_matches_dense(rng, m):
    row = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    ev = circulant_diagonalize(row)
    dense = np.linalg.eigvals(circulant_from_row(row))
    dist = np.abs(ev[:, None] - dense[None, :]).min(axis=1)
    assert dist.max() < 1e-9


def test_circulant_large_ring_spot_check():
    m = 500
    row = np.zeros(m)
    row[1] = row[-1] = 1.0
    ev = circulant_diagonalize(row)
    q = np.arange(m)
    assert np.max(np.abs(ev - 2 * np.cos(2 * np.pi * q / m))) < 1e-9
