"""Matrix utilities against scipy references and closed forms."""

from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg

from photherm import linalg


def random_hermitian(m, rng):
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return 0.5 * (a + a.conj().T)


def test_is_unitary_and_hermitian_flags():
    rng = np.random.default_rng(3)
    u = linalg.haar_random(4, 3)
    assert linalg.is_unitary(u)
    assert not linalg.is_unitary(u + 1e-6)
    h = random_hermitian(4, rng)
    assert linalg.is_hermitian(h)
    assert not linalg.is_hermitian(h + 1e-6 * 1j * np.eye(4))


def test_square_input_required():
    with pytest.raises(ValueError):
        linalg.is_unitary(np.ones((2, 3)))
    with pytest.raises(ValueError):
        linalg.expm_hermitian(np.ones((2, 3)))


def test_expm_hermitian_matches_scipy():
    rng = np.random.default_rng(11)
    for k in range(20):
        m = int(rng.integers(2, 7))
        h = random_hermitian(m, rng)
        t = float(rng.uniform(-3.0, 3.0))
        ref = scipy.linalg.expm(-1j * t * h)
        assert np.max(np.abs(linalg.expm_hermitian(h, t) - ref)) < 1e-10


def test_expm_hermitian_is_unitary_for_large_t():
    # eigh route stays unitary even where a series would have drifted
    rng = np.random.default_rng(12)
    h = random_hermitian(5, rng)
    u = linalg.expm_hermitian(h, 1e4)
    assert linalg.is_unitary(u, tol=1e-10)


def test_expm_rejects_non_hermitian():
    with pytest.raises(ValueError):
        linalg.expm_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_logm_roundtrip_haar():
    for k in range(25):
        u = linalg.haar_random(4, (21, k))
        h = linalg.logm_unitary(u)
        assert linalg.is_hermitian(h, tol=1e-12)
        assert np.max(np.abs(linalg.expm_hermitian(h, 1.0) - u)) < 1e-12


def test_logm_eigenphases_principal_branch():
    for k in range(25):
        u = linalg.haar_random(5, (22, k))
        w = np.linalg.eigvalsh(linalg.logm_unitary(u))
        assert np.all(w > -np.pi - 1e-12)
        assert np.all(w <= np.pi + 1e-12)


def test_logm_degenerate_eigenvalues():
    """A reflection has a doubly degenerate eigenvalue; the Schur basis must stay orthonormal."""
    u = np.diag([1.0, -1.0, -1.0, 1.0]).astype(complex)
    h = linalg.logm_unitary(u)
    assert np.max(np.abs(linalg.expm_hermitian(h) - u)) < 1e-12


def test_logm_rejects_non_unitary():
    with pytest.raises(ValueError):
        linalg.logm_unitary(2.0 * np.eye(3))


def test_haar_reproducible_and_unitary():
    a = linalg.haar_random(6, 42)
    b = linalg.haar_random(6, 42)
    c = linalg.haar_random(6, 43)
    assert np.array_equal(a, b)
    assert np.max(np.abs(a - c)) > 1e-3
    assert linalg.is_unitary(a, tol=1e-12)


def test_haar_first_moment():
    # mean |u_ij|^2 over Haar is 1/m
    m, reps = 3, 400
    acc = np.zeros((m, m))
    for k in range(reps):
        acc += np.abs(linalg.haar_random(m, (5, k))) ** 2
    assert np.max(np.abs(acc / reps - 1.0 / m)) < 0.05


def test_fourier_block_and_embedding():
    f = linalg.fourier(3, 4)
    assert linalg.is_unitary(f, tol=1e-12)
    w = np.exp(2j * np.pi / 3)
    assert abs(f[1, 1] - w / np.sqrt(3)) < 1e-14
    assert abs(f[1, 2] - w**2 / np.sqrt(3)) < 1e-14
    assert np.allclose(f[:, 0][:3], 1.0 / np.sqrt(3))
    assert f[3, 3] == 1.0
    assert np.max(np.abs(f[3, :3])) == 0.0
    assert np.array_equal(linalg.fourier(3), linalg.fourier(3, 3))
    with pytest.raises(ValueError):
        linalg.fourier(4, 3)


def test_amplitude_fidelity_extremes():
    eye = np.eye(2, dtype=complex)
    assert linalg.amplitude_fidelity(eye, eye) == 1.0
    bs = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    assert abs(linalg.amplitude_fidelity(eye, bs) - 1.0 / np.sqrt(2.0)) < 1e-14
    # invariant under pure phase noise
    phases = np.diag(np.exp(1j * np.array([0.3, -1.2])))
    assert abs(linalg.amplitude_fidelity(bs, phases @ bs) - 1.0) < 1e-14
