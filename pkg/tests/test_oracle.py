import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from biortho.errors import DimensionError, ValidationError
from biortho.flow import coupled_rhs
from biortho.linalg import inner
from biortho.matrices import E1_EIGENVALUES, from_spectrum, random_complex
from biortho.oracle import closed_form_flow, eig_2x2, hessenberg_reduce, qr_eigenvalues, qr_spectrum
from conftest import seeds
from flow_helpers import coefficients, integrate_coupled
from reference_values import COMPANION, COMPANION_EIGS, E1_LAPACK


def test_diagonal_exact():
    d = np.array([3.0, -1.0 + 2j, 0.5])
    spec = qr_spectrum(np.diag(d))
    assert np.allclose(sorted(spec.eigenvalues, key=abs), sorted(d, key=abs), atol=1e-14)


def test_e1_against_reference_and_lapack(e1):
    spec = qr_spectrum(e1)
    assert spec.converged
    assert np.max(np.abs(spec.eigenvalues - np.array(E1_EIGENVALUES))) < 1e-3
    assert np.max(np.abs(spec.eigenvalues - np.array(E1_LAPACK))) < 1e-12
    assert np.all(np.diff(spec.eigenvalues.real) < 0)


def test_companion_roots():
    spec = qr_spectrum(COMPANION)
    assert np.allclose(spec.eigenvalues, COMPANION_EIGS, atol=1e-12)


def test_eig_2x2_rotation_and_jordan():
    rot = eig_2x2([[0, 1], [-1, 0]])
    assert np.allclose(sorted(rot.eigenvalues, key=lambda z: z.imag), [-1j, 1j])
    jordan = eig_2x2([[1, 1], [0, 1]])
    assert np.allclose(jordan.eigenvalues, [1, 1])
    assert all(f["defective"] for f in jordan.flags)
    with pytest.raises(DimensionError):
        eig_2x2(np.eye(3))


@given(seeds)
def test_eig_2x2_agrees_with_qr(seed):
    A = random_complex(2, seed)
    a = np.sort_complex(eig_2x2(A).eigenvalues)
    b = np.sort_complex(qr_spectrum(A).eigenvalues)
    assert np.max(np.abs(a - b)) < 1e-10


@given(seeds, st.integers(2, 8))
def test_trace_determinant_biorthogonality(seed, n):
    A = random_complex(n, seed)
    spec = qr_spectrum(A)
    lam = spec.eigenvalues
    assert abs(lam.sum() - np.trace(A)) <= 1e-8 * max(1.0, abs(np.trace(A)))
    det = np.linalg.det(A)
    assert abs(np.prod(lam) - det) <= 1e-8 * max(1.0, abs(det))
    if min(f["condition"] for f in spec.flags) < 1e4 and not any(f["clustered"] for f in spec.flags):
        G = spec.left.conj().T @ spec.right
        assert np.max(np.abs(G - np.eye(n))) < 1e-8
        for i in range(n):
            l, r, p = spec.pair(i)
            assert np.linalg.norm(A @ r - l * r) < 1e-8


def test_hessenberg_reduce_keeps_spectrum(e1):
    H = hessenberg_reduce(e1)
    assert np.all(np.abs(np.tril(H, -2)) < 1e-14)
    eig, ok, _ = qr_eigenvalues(H)
    assert ok
    assert np.max(np.abs(np.sort_complex(eig) - np.sort_complex(np.array(E1_LAPACK)))) < 1e-12


def test_closed_form_initial_condition(e1):
    spec = qr_spectrum(e1)
    c0 = np.linspace(0.2, 1.0, 7) * np.exp(1j * np.arange(7))
    assert np.allclose(closed_form_flow(spec, c0, 0.0), spec.right @ c0, atol=1e-14)


def test_closed_form_hermitian_limit():
    spec = qr_spectrum(np.diag([3.0, 1.0]))
    x = closed_form_flow(spec, [0.6, 0.8], 50.0)
    assert np.allclose(np.abs(x), [1.0, 0.0], atol=1e-12)


def test_closed_form_no_overflow(e1):
    spec = qr_spectrum(e1)
    x = closed_form_flow(spec, np.ones(7), 1e4)
    assert np.all(np.isfinite(x))


def test_closed_form_validation(e1):
    spec = qr_spectrum(e1)
    with pytest.raises(DimensionError):
        closed_form_flow(spec, np.ones(3), 1.0)
    with pytest.raises(ValidationError):
        closed_form_flow(spec, np.zeros(7), 1.0)
    with pytest.raises(ValidationError):
        closed_form_flow(spec, np.ones(7), 1.0, which="left")


@pytest.mark.parametrize("t", [0.3, 1.0, 2.5])
def test_closed_form_satisfies_the_flow(e1, t):
    spec = qr_spectrum(e1)
    rng = np.random.default_rng(1)
    c0 = rng.normal(size=7) + 1j * rng.normal(size=7)
    d0 = rng.normal(size=7) + 1j * rng.normal(size=7)
    h = 1e-5
    xp, yp = closed_form_flow(spec, c0, t + h, d0, which="both")
    xm, ym = closed_form_flow(spec, c0, t - h, d0, which="both")
    x, y = closed_form_flow(spec, c0, t, d0, which="both")
    chi = inner(spec.left @ d0, spec.right @ c0)
    r_phi, r_psi = coupled_rhs(e1, x, y, chi)
    assert np.linalg.norm((xp - xm) / (2 * h) - r_phi) < 1e-4
    assert np.linalg.norm((yp - ym) / (2 * h) - r_psi) < 1e-4


def test_closed_form_matches_integration_on_e1(e1):
    spec = qr_spectrum(e1)
    rng = np.random.default_rng(7)
    x0 = rng.uniform(-1, 1, 7) + 1j * rng.uniform(-1, 1, 7)
    c0, d0 = coefficients(spec, x0, x0)
    for t in (0.5, 1.0, 2.0):
        x, y, _ = integrate_coupled(e1, x0, x0, t)
        cx, cy = closed_form_flow(spec, c0, t, d0, which="both")
        assert np.max(np.abs(x - cx)) < 1e-5
        assert np.max(np.abs(y - cy)) < 1e-5


def test_from_spectrum_is_oracle_known():
    lam = np.array([2.0, 1j, -0.5, 0.1 + 0.1j])
    spec = qr_spectrum(from_spectrum(lam, 3))
    assert np.max(np.abs(np.sort_complex(spec.eigenvalues) - np.sort_complex(lam))) < 1e-12
