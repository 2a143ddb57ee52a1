import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from biortho.errors import DeflationError, DegeneratePairingError, SingularMatrixError
from biortho.linalg import adjoint, canonical_phase, inner, norm2, rayleigh, v_norm
from biortho.matrices import from_spectrum, random_hermitian, shift_matrix
from biortho.oracle import qr_spectrum
from biortho.power import (
    adjoint_power_iterate,
    deflate_adjoint,
    deflate_vector,
    full_spectrum,
    gershgorin_disks,
    power_iterate,
    power_sweep,
    sample_gershgorin,
    schwartz_iterates,
    schwartz_quotient,
    shifted_inverse_power,
)
from biortho.structures import BiorthoPair, SolverConfig, Status
from conftest import seeds
from reference_values import E1_LAPACK, SWANSON_N7

E1_LAM2 = 0.9604 - 2.2206j


def _oracle_pair(A, i):
    return BiorthoPair(*qr_spectrum(A).pair(i))


def test_power_diagonal():
    res = power_iterate(np.diag([5.0, 1.0]), [1, 1])
    assert res.converged
    assert abs(res.pair.lam - 5) < 1e-12
    assert np.allclose(np.abs(res.pair.phi), [1, 0], atol=1e-8)


def test_power_e1_largest_modulus(e1):
    res = power_iterate(e1)
    assert res.converged
    assert abs(res.pair.lam - E1_LAM2) < 1e-3
    assert abs(res.pair.lam - E1_LAPACK[1]) < 1e-9
    assert abs(rayleigh(e1, res.pair.phi) - E1_LAM2) < 1e-3
    assert res.pair.check(e1, 1e-8)


def test_power_fixed_point(e1):
    # One more application of A only rescales the converged vector.
    p = power_iterate(e1, cfg=SolverConfig(delta_tol=1e-10)).pair
    assert norm2(e1 @ p.phi / p.lam - p.phi) < 1e-10 / abs(p.lam) * 10


def test_schwartz_hand_value():
    assert schwartz_quotient(np.diag([2.0, 1.0]), [1, 1], [1, 1], m=1) == pytest.approx(1.8, abs=1e-15)


def test_schwartz_exact_eigen_iterates(e1):
    lam, phi, psi = qr_spectrum(e1).pair(1)
    assert abs(schwartz_quotient(e1, phi, psi) - lam) < 1e-12


def test_schwartz_degenerate_denominator():
    with pytest.raises(DegeneratePairingError):
        schwartz_quotient(np.eye(2), [1, 0], [0, 1], pairing_floor=1e-12)


def test_schwartz_rate_on_e1(e1):
    spec = qr_spectrum(e1)
    lam = spec.eigenvalues[spec.by_modulus()]
    x = np.random.default_rng(0).normal(size=7) + 0j
    _, g = schwartz_iterates(e1, x, x, 30)
    m = np.arange(1, 31)
    err = np.abs(g - lam[0])
    rate = np.exp(np.polyfit(m[4:30], np.log(err[4:30]), 1)[0])
    target = abs(lam[1] / lam[0]) ** 2
    assert abs(rate - target) <= 0.25 * target


def test_adjoint_power_hermitian_matches_right():
    A = random_hermitian(5, 1)
    r = power_iterate(A, cfg=SolverConfig(seed=2)).pair
    l = adjoint_power_iterate(A, cfg=SolverConfig(seed=2)).pair
    assert abs(r.lam - l.lam) < 1e-8
    assert abs(abs(inner(r.phi, l.psi)) - 1) < 1e-7


def test_adjoint_power_e1(e1):
    res = adjoint_power_iterate(e1)
    lam = res.pair.lam
    assert abs(lam - E1_LAPACK[1]) < 1e-8
    assert norm2(adjoint(e1) @ res.pair.psi - np.conj(lam) * res.pair.psi) / norm2(res.pair.psi) < 1e-8
    spec = qr_spectrum(e1)
    for j in range(7):
        if j == 1:
            continue
        phi_j = spec.right[:, j]
        assert abs(inner(res.pair.psi, phi_j)) / norm2(res.pair.psi) < 1e-6


def test_adjoint_power_with_given_phi(e1):
    phi = power_iterate(e1).pair.phi
    pair = adjoint_power_iterate(e1, phi=phi).pair
    assert abs(pair.pairing() - 1) < 1e-12
    assert max(pair.residuals(e1)) < 1e-7


def test_deflate_vector_cases(e1):
    x = np.arange(7) + 1j
    assert np.array_equal(deflate_vector(x, []), x)
    p = _oracle_pair(e1, 1)
    with pytest.raises(DeflationError):
        deflate_vector(p.phi, [p])
    with pytest.raises(DeflationError):
        deflate_adjoint(p.psi, [p])
    y = deflate_vector(x, [p])
    assert abs(inner(p.psi, y)) < 1e-12 * norm2(x) * norm2(p.psi)


def test_deflated_power_e1(e1):
    first = power_iterate(e1, cfg=SolverConfig(delta_tol=1e-11)).pair
    res = power_iterate(e1, found=[first], accept_tol=1e-8)
    assert res.converged
    assert abs(res.pair.lam - (0.8326 + 2.0418j)) < 1e-3


def test_inverse_power_diagonal():
    res = shifted_inverse_power(np.diag([1.0, 5.0]), 4.9, [1, 1])
    assert res.converged and abs(res.pair.lam - 5) < 1e-12


def test_inverse_power_e1_shifts(e1):
    res7 = shifted_inverse_power(e1, -1.3 + 1.3j)
    assert abs(res7.pair.lam - E1_LAPACK[6]) < 1e-9
    res5 = shifted_inverse_power(e1, -0.75 - 1.15j)
    assert abs(res5.pair.lam - E1_LAPACK[4]) < 1e-9


def test_inverse_power_swanson(swanson7):
    for mu in SWANSON_N7:
        res = shifted_inverse_power(swanson7, mu + 0.1 + 0.05j)
        assert abs(res.pair.lam - mu) < 1e-6
        assert abs(res.pair.lam.imag) < 1e-6


def test_inverse_power_shift_on_eigenvalue():
    with pytest.raises(SingularMatrixError, match="perturb"):
        shifted_inverse_power(np.diag([1.0, 2.0]), 2.0)


def test_shift_invariance(e1):
    a = shifted_inverse_power(e1, -1.3 + 1.3j).pair.lam
    b = shifted_inverse_power(e1, -1.2 + 1.2j).pair.lam
    assert abs(a - b) < 1e-8


def test_full_spectrum_diagonal():
    res = full_spectrum(np.diag([3.0, 2.0, 1.0]).astype(complex))
    assert res.complete
    assert np.allclose(res.eigenvalues, [3, 2, 1], atol=1e-10)
    for p, k in zip(res.pairs, range(3)):
        assert abs(abs(p.phi[k]) - 1) < 1e-8


def test_full_spectrum_e1(e1):
    res = full_spectrum(e1)
    assert res.complete
    found = sorted(res.eigenvalues, key=lambda z: -z.real)
    assert np.max(np.abs(np.array(found) - E1_LAPACK)) < 1e-8


def test_power_sweep_descending_modulus(e1):
    lams = [r.pair.lam for r in power_sweep(e1, count=3)]
    assert np.all(np.diff(np.abs(lams)) < 0)


def test_modulus_tie_is_reported():
    res = power_iterate(np.diag([1.0, -1.0, 0.3]))
    assert res.status is Status.DOMINANCE_TIE
    assert res.pair is not None


def test_periodic_tie_is_reported():
    # A^2 = -I: the iterate returns to itself every second step.
    res = power_iterate(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert res.status is Status.DOMINANCE_TIE


def test_nilpotent_breaks_down():
    res = power_iterate(shift_matrix(4))
    assert res.status is Status.BREAKDOWN


def test_gershgorin_samples_inside():
    A = np.array([[1.0, 0.5], [0.2, -3.0 + 1j]])
    c, r = gershgorin_disks(A)
    pts = sample_gershgorin(A, np.random.default_rng(0), 200)
    assert all(np.any(np.abs(z - c) <= r) for z in pts)


def _ratio_instance(seed):
    rng = np.random.default_rng(seed)
    lam1 = 2.0 * np.exp(2j * np.pi * rng.uniform())
    lam2 = 1.0 * np.exp(2j * np.pi * rng.uniform())
    rest = 0.4 * np.exp(2j * np.pi * rng.uniform(size=2)) * rng.uniform(0.2, 1, 2)
    return from_spectrum(np.concatenate(([lam1, lam2], rest)), seed)


@given(seeds)
def test_contraction_in_v_norm(seed):
    A = _ratio_instance(seed % 1000)
    spec = qr_spectrum(A)
    o = spec.by_modulus()
    lam, U, V = spec.eigenvalues[o], spec.right[:, o], spec.left[:, o]
    rng = np.random.default_rng(seed)
    x = rng.normal(size=4) + 1j * rng.normal(size=4)
    y = rng.normal(size=4) + 1j * rng.normal(size=4)
    y = y + (inner(V[:, 0], x) - inner(V[:, 0], y)) * U[:, 0]
    num = v_norm((A @ x - A @ y) / lam[0], V)
    assert num <= abs(lam[1] / lam[0]) * v_norm(x - y, V) + 1e-10


@pytest.mark.parametrize("seed", range(3))
def test_schwartz_map_tracks_power_map(seed):
    # Components of T^m x - S_m x_{m-1} outside u_1 decay monotonically after
    # five iterations; the u_1 component settles to a constant offset.
    A = from_spectrum([2 * np.exp(0.3j), 1j, -0.5, 0.25], seed)
    spec = qr_spectrum(A)
    o = spec.by_modulus()
    lam, V = spec.eigenvalues[o], spec.left[:, o]
    x = np.random.default_rng(seed).normal(size=4) + 1j
    xs, _ = schwartz_iterates(A, x, x, 30)
    y, tail, head = x.copy(), [], []
    for m in range(1, 31):
        y = A @ y / lam[0]
        c = np.abs(V.conj().T @ (y - xs[m]))
        head.append(c[0])
        tail.append(c[1:].max())
    tail = np.array(tail)
    assert np.all(np.diff(tail[5:]) <= 0)
    assert tail[-1] < 1e-6 * tail[5]
    assert abs(head[-1] - head[-2]) < 1e-10 * max(1.0, head[-1])


@given(st.floats(0, 2 * np.pi))
def test_phase_invariance(theta):
    A = _ratio_instance(3)
    x = np.random.default_rng(1).normal(size=4) + 0.5j
    a = power_iterate(A, x).pair.lam
    b = power_iterate(A, np.exp(1j * theta) * x).pair.lam
    assert abs(a - b) < 1e-10
    z = canonical_phase(np.exp(1j * theta) * x)
    assert np.allclose(z, canonical_phase(x), atol=1e-14)
