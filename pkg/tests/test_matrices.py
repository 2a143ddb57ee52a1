import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from biortho.errors import ValidationError
from biortho.linalg import is_hermitian
from biortho.matrices import (
    SWANSON_REFERENCE,
    AlphaKind,
    AlphaSequence,
    SwansonParams,
    _sig_fig_match,
    e1_fixture,
    hessenberg,
    is_upper_hessenberg,
    oscillator_levels,
    random_complex,
    select_convention,
    shift_matrix,
    swanson,
    swanson_checkerboard,
)
from biortho.oracle import qr_spectrum
from conftest import seeds
from reference_values import HESS_EXP_K2_TOP3, HESS_FACT_K2_TOP3, SWANSON_N7


def test_e1_reference_entries():
    R, T, A = e1_fixture()
    assert A[0, 0] == 0.445 + 0.959j
    assert A[6, 6] == -0.907 + 0.196j
    assert np.array_equal(A, R + 1j * T)


def test_random_complex_determinism_and_range():
    assert np.array_equal(random_complex(4, 42), random_complex(4, 42))
    z = random_complex(1, 0)
    assert z.shape == (1, 1)
    assert abs(z[0, 0].real) <= 1 and abs(z[0, 0].imag) <= 1
    assert not any(is_hermitian(random_complex(5, s)) for s in range(100))
    with pytest.raises(ValidationError):
        random_complex(0, 1)


def test_zero_alpha_gives_shift_matrix():
    assert np.array_equal(hessenberg(np.zeros(6), 6), shift_matrix(6))


@pytest.mark.parametrize("kind", [k for k in AlphaKind if k is not AlphaKind.CUSTOM])
def test_hessenberg_structure(kind):
    D = hessenberg(AlphaSequence(kind), 15)
    assert is_upper_hessenberg(D)
    sub = np.diag(D, -1)
    assert np.all(sub.imag == 0) and np.all(sub.real > 0) and np.all(sub.real <= 1)


@given(st.lists(st.complex_numbers(max_magnitude=0.99, allow_nan=False), min_size=5, max_size=5))
def test_hessenberg_custom_subdiagonal(alpha):
    D = hessenberg(AlphaSequence(AlphaKind.CUSTOM, values=tuple(alpha)), 5)
    expected = np.sqrt(1 - np.abs(np.array(alpha[:4])) ** 2)
    assert np.allclose(np.diag(D, -1), expected, rtol=1e-12, atol=0)
    assert is_upper_hessenberg(D)


def test_faster_decay_is_closer_to_shift():
    S = shift_matrix(15)
    d_exp = np.linalg.norm(hessenberg(AlphaSequence(AlphaKind.EXP_MINUS_K_SQUARED), 15) - S)
    d_geo = np.linalg.norm(hessenberg(AlphaSequence(AlphaKind.GEOMETRIC_HALF), 15) - S)
    assert d_exp < d_geo


def test_hessenberg_spectra_match_lapack_values():
    for kind, ref in [
        (AlphaKind.EXP_MINUS_K_SQUARED, HESS_EXP_K2_TOP3),
        (AlphaKind.INVERSE_FACTORIAL_K_SQUARED, HESS_FACT_K2_TOP3),
    ]:
        spec = qr_spectrum(hessenberg(AlphaSequence(kind), 15))
        top = spec.eigenvalues[spec.by_modulus()][:3]
        assert np.allclose(top, ref, rtol=1e-6, atol=0)


def test_alpha_validation():
    with pytest.raises(ValidationError):
        hessenberg(np.array([0.5, 1.0, 0.1]), 3)
    with pytest.raises(ValidationError):
        AlphaSequence(AlphaKind.CUSTOM)
    with pytest.raises(ValidationError):
        AlphaSequence(AlphaKind.INVERSE_FACTORIAL_SQUARED, start=1).take(3)
    with pytest.raises(ValidationError):
        hessenberg(np.zeros(1), 1)


def test_swanson_reference_entries(swanson7):
    assert _sig_fig_match(swanson7, SWANSON_REFERENCE)
    assert swanson7[0, 2] == pytest.approx(-0.510541j, abs=1e-5)
    assert swanson7[6, 6] == pytest.approx(9.8266, abs=1e-3)
    assert swanson7[0, 0] == pytest.approx(0.348126, abs=1e-3)


def test_swanson_convention_recorded():
    conv = select_convention()
    _, meta = swanson(SwansonParams(7, 0.4))
    assert meta["ladder"] == "sqrt(k-1)" and meta["generator_scale"] == conv.scale == -0.5


def test_swanson_spectrum_is_real(swanson7):
    spec = qr_spectrum(swanson7)
    assert np.max(np.abs(spec.eigenvalues.imag)) < 1e-8
    assert np.allclose(np.sort(spec.eigenvalues.real), SWANSON_N7, atol=1e-8)
    assert not is_hermitian(swanson7)


def test_swanson_small_theta_near_diagonal():
    H, _ = swanson(SwansonParams(7, 1e-3))
    assert np.max(np.abs(H - np.diag(oscillator_levels(7)))) < 1e-2


def test_checkerboard(e1, swanson7):
    assert swanson_checkerboard(SWANSON_REFERENCE)
    assert swanson_checkerboard(swanson7)
    assert swanson_checkerboard(swanson(SwansonParams(5, 0.2))[0])
    assert not swanson_checkerboard(e1)


def test_swanson_parameter_domain():
    for theta in (0.0, np.pi / 4, -1.0):
        with pytest.raises(ValidationError):
            SwansonParams(7, theta)
    with pytest.raises(ValidationError):
        SwansonParams(0, 0.4)


@given(st.integers(2, 9), st.floats(-0.7, 0.7).filter(lambda t: abs(t) > 1e-3))
def test_swanson_spectrum_any_size(N, theta):
    H, _ = swanson(SwansonParams(N, theta))
    eig = np.linalg.eigvals(H)
    scale = np.linalg.cond(np.linalg.eig(H)[1])
    assert np.allclose(np.sort(eig.real), oscillator_levels(N), atol=1e-10 * scale)
