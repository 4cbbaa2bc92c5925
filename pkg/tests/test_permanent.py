import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosonwalk.linalg import haar_unitary
from bosonwalk.permanent import (
    BandedMatrix,
    FockState,
    PermanentError,
    band_mask,
    fiducial_input,
    permanent,
    permanent_banded,
    permanent_circulant_banded,
    permanent_dense,
    permanent_naive,
    transition_probability,
    transition_submatrix,
)
from bosonwalk.sampling import enumerate_fock

from oracles import brute_permanent, expanded_submatrix, random_complex


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def random_banded_dense(rng, n, lower, upper, cyclic):
    a = random_complex(rng, n) * band_mask(n, lower, upper, cyclic)
    return a


# -- dense -----------------------------------------------------------------------------

@pytest.mark.parametrize("n", [0, 1, 2, 5, 9])
def test_dense_identity(backend, n):
    res = permanent_dense(np.eye(n), backend=backend)
    assert res.value == pytest.approx(1.0)
    assert res.method == "ryser"


def test_dense_all_ones_2x2(backend):
    assert permanent_dense(np.ones((2, 2)), backend=backend).value == pytest.approx(2.0)


def test_dense_hom_null(backend):
    bs = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert abs(permanent_dense(bs, backend=backend).value) < 1e-15


def test_dense_all_ones_factorial(backend):
    assert permanent_dense(np.ones((6, 6)), backend=backend).value == pytest.approx(720.0)


@pytest.mark.parametrize("n", range(1, 8))
def test_dense_matches_brute_force(backend, rng, n):
    a = random_complex(rng, n)
    ref = brute_permanent(a)
    assert abs(permanent_dense(a, backend=backend).value - ref) <= 1e-10 * max(abs(ref), 1.0)


def test_naive_matches_brute_force(rng):
    a = random_complex(rng, 6)
    assert permanent_naive(a) == pytest.approx(brute_permanent(a), rel=1e-12)


def test_backends_agree_at_n14():
    from conftest import BACKENDS
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    a = random_complex(np.random.default_rng(3), 14)
    vals = [permanent_dense(a, backend=b).value for b in BACKENDS.values()]
    assert rel_err(vals[0], vals[1]) < 1e-12


def test_dense_guard():
    with pytest.raises(PermanentError, match="banded"):
        permanent_dense(np.eye(25))


def test_dense_rejects_non_square():
    with pytest.raises(PermanentError):
        permanent_dense(np.ones((2, 3)))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 7), seed=st.integers(0, 2**31 - 1))
def test_permutation_invariance(n, seed):
    rng = np.random.default_rng(seed)
    a = random_complex(rng, n)
    p = np.eye(n)[rng.permutation(n)]
    q = np.eye(n)[rng.permutation(n)]
    assert rel_err(permanent_dense(p @ a @ q).value, permanent_dense(a).value) < 1e-10


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 7), row=st.integers(0, 6), seed=st.integers(0, 2**31 - 1),
       c=st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_row_multilinearity(n, row, seed, c):
    rng = np.random.default_rng(seed)
    a = random_complex(rng, n)
    b = a.copy()
    b[row % n] *= c
    assert rel_err(permanent_dense(b).value, c * permanent_dense(a).value) < 1e-10


# -- banded ---------------------------------------------------------------------------

def test_banded_diagonal(backend):
    d = np.array([1.5, -2.0, 0.5j, 3.0])
    res = permanent_banded(BandedMatrix.from_dense(np.diag(d), 0, 0), backend=backend)
    assert res.value == pytest.approx(np.prod(d))


def test_banded_tridiagonal_ones(backend):
    a = band_mask(5, 1, 1).astype(complex)
    res = permanent_banded(BandedMatrix.from_dense(a, 1, 1), backend=backend)
    assert res.method == "banded_dp"
    assert res.value == pytest.approx(permanent_dense(a).value)
    # tridiagonal all-ones permanent counts Fibonacci tilings
    assert res.value == pytest.approx(8.0)


@pytest.mark.parametrize("lower,upper", [(0, 1), (1, 0), (1, 1), (2, 1), (0, 3), (2, 2), (3, 1)])
def test_banded_matches_dense(backend, rng, lower, upper):
    for n in (4, 7, 10):
        a = random_banded_dense(rng, n, lower, upper, False)
        res = permanent_banded(BandedMatrix.from_dense(a, lower, upper), backend=backend)
        assert rel_err(res.value, permanent_dense(a).value) < 1e-9


@pytest.mark.parametrize("lower,upper", [(1, 1), (2, 1), (1, 2), (0, 2), (3, 0)])
def test_cyclic_matches_dense(backend, rng, lower, upper):
    for n in (5, 9, 14):
        a = random_banded_dense(rng, n, lower, upper, True)
        res = permanent_banded(BandedMatrix.from_dense(a, lower, upper, cyclic=True), backend=backend)
        assert res.method == "cyclic_dp"
        assert rel_err(res.value, permanent_dense(a).value) < 1e-9


def test_cyclic_n14_b3(backend, rng):
    a = random_banded_dense(rng, 14, 2, 1, True)
    res = permanent_banded(BandedMatrix.from_dense(a, 2, 1, cyclic=True), backend=backend)
    assert rel_err(res.value, permanent_dense(a).value) < 1e-9


def test_banded_rejects_entries_outside_band(rng):
    a = random_complex(rng, 5)
    with pytest.raises(PermanentError, match="outside"):
        BandedMatrix.from_dense(a, 1, 1)


def test_banded_guard():
    bm = BandedMatrix(40, 8, 7, False, np.ones((40, 16), dtype=complex))
    with pytest.raises(PermanentError):
        permanent_banded(bm)


def test_banded_roundtrip(rng):
    a = random_banded_dense(rng, 9, 2, 1, True)
    assert np.array_equal(BandedMatrix.from_dense(a, 2, 1, cyclic=True).to_dense(), a)


@pytest.mark.parametrize("b", [1, 2, 3])
def test_banded_cost_scaling(b):
    rng = np.random.default_rng(b)
    ratios = []
    for n in (50, 100, 200):
        w = rng.standard_normal((n, 2 * b + 1)) + 0j
        res = permanent_banded(BandedMatrix(n, b, b, False, w))
        ratios.append(res.cost_estimate / (n * 4 ** b))
    assert max(ratios) / min(ratios) <= 2
    assert 0.5 <= min(ratios) and max(ratios) <= 2


# -- circulant transfer power ----------------------------------------------------------

def circulant_band(rng, n, lower, upper):
    c = np.zeros(n, dtype=complex)
    for k in range(-upper, lower + 1):
        c[k % n] = rng.standard_normal() + 1j * rng.standard_normal()
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return c[idx]


def test_circulant_identity():
    res = permanent_circulant_banded(BandedMatrix.from_dense(np.eye(6), 0, 0, cyclic=True))
    assert res.value == pytest.approx(1.0)


def test_ring_adjacency_n6():
    a = (np.roll(np.eye(6), 1, axis=0) + np.roll(np.eye(6), -1, axis=0)).astype(complex)
    res = permanent_circulant_banded(a)
    assert res.method == "transfer_power"
    assert res.value == pytest.approx(permanent_dense(a).value)


@pytest.mark.parametrize("n", [7, 12, 16])
def test_circulant_matches_dense(rng, n):
    a = circulant_band(rng, n, 1, 1)
    assert rel_err(permanent_circulant_banded(a).value, permanent_dense(a).value) < 1e-9


@pytest.mark.parametrize("n", [50, 200])
def test_circulant_matches_cyclic_dp(rng, n):
    a = circulant_band(rng, n, 1, 1)
    bm = BandedMatrix.from_dense(a, 1, 1, cyclic=True)
    assert rel_err(permanent_circulant_banded(bm).value, permanent_banded(bm).value) < 1e-8


def test_circulant_rejects_non_circulant(rng):
    a = random_banded_dense(rng, 8, 1, 1, True)
    with pytest.raises(PermanentError, match="not circulant"):
        permanent_circulant_banded(a)


def test_circulant_cost_logarithmic(rng):
    costs = {}
    for n in (50, 100, 200, 400, 800):
        a = circulant_band(rng, n, 1, 1)
        costs[n] = permanent_circulant_banded(a).cost_estimate / np.log2(n)
    vals = list(costs.values())
    assert max(vals) / min(vals) <= 2


def test_auto_dispatch(rng):
    a = random_banded_dense(rng, 20, 1, 1, False)
    res = permanent(a)
    assert res.method == "banded_dp"
    assert rel_err(res.value, permanent_dense(a).value) < 1e-9
    assert permanent(random_complex(rng, 5)).method == "ryser"
    with pytest.raises(ValueError):
        permanent(a, method="magic")


# -- Fock states and transitions ---------------------------------------------------------

def test_fockstate_validation():
    s = FockState([2, 0, 1])
    assert (s.M, s.N) == (3, 3)
    assert s.label() == "2|0|1"
    with pytest.raises(ValueError):
        FockState([1, -1])


def test_submatrix_all_ones_is_lambda(rng):
    lam = random_complex(rng, 4)
    ones = (1, 1, 1, 1)
    assert np.array_equal(transition_submatrix(lam, ones, ones), lam)


def test_submatrix_repeated_row(rng):
    lam = random_complex(rng, 2)
    sub = transition_submatrix(lam, (1, 1), (2, 0))
    assert np.array_equal(sub, [[lam[0, 0], lam[0, 1]], [lam[0, 0], lam[0, 1]]])


def test_submatrix_matches_index_expansion(rng):
    lam = random_complex(rng, 3)
    for n_in, n_out in (((2, 0, 1), (0, 1, 2)), ((1, 1, 1), (3, 0, 0)), ((0, 3, 0), (1, 1, 1))):
        assert np.array_equal(transition_submatrix(lam, n_in, n_out), expanded_submatrix(lam, n_in, n_out))


def test_submatrix_conservation_error(rng):
    with pytest.raises(ValueError, match="particle number not conserved"):
        transition_submatrix(random_complex(rng, 3), (1, 1, 0), (1, 0, 0))


def test_identity_transitions():
    lam = np.eye(3)
    n = (2, 1, 0)
    for out in enumerate_fock(3, 3):
        expect = 1.0 if tuple(out) == n else 0.0
        assert transition_probability(lam, n, out) == pytest.approx(expect, abs=1e-15)


def test_hom_probabilities(backend):
    bs = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert transition_probability(bs, (1, 1), (1, 1), backend=backend) <= 1e-12
    assert transition_probability(bs, (1, 1), (2, 0), backend=backend) == pytest.approx(0.5, abs=1e-12)
    assert transition_probability(bs, (1, 1), (0, 2), backend=backend) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("M,N", [(4, 2), (5, 3), (3, 4), (8, 2), (6, 4)])
def test_probability_normalisation(M, N):
    lam = haar_unitary(M, M * 10 + N)
    rng = np.random.default_rng(N)
    n_in = FockState(np.bincount(rng.integers(0, M, N), minlength=M))
    total = sum(transition_probability(lam, n_in, s) for s in enumerate_fock(M, N))
    assert abs(total - 1) <= 1e-9


def test_fiducial_input():
    assert fiducial_input(5, 2) == (1, 1, 0, 0, 0)
    with pytest.raises(ValueError):
        fiducial_input(2, 3)


def test_circulant_long_power_stays_finite():
    # entries of size 0.6 keep the permanent near 1 while raw powers would underflow
    a = 0.6 * (np.eye(400) + np.roll(np.eye(400), 1, axis=0)).astype(complex)
    res = permanent_circulant_banded(a)
    # permanent of c0 I + c1 P (one cycle) is c0^n + c1^n
    assert res.value == pytest.approx(2 * 0.6 ** 400, rel=1e-9)


def test_circulant_overflow_reported(rng):
    with pytest.raises(PermanentError, match="double range"):
        permanent_circulant_banded(circulant_band(rng, 1600, 1, 1) * 50)
