import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from biortho.errors import IntegrationError, ValidationError
from biortho.flow import hermitian_rhs
from biortho.ode import IntegratorConfig, Termination, integrate


def _at(t_end, **kw):
    return IntegratorConfig(max_time=t_end, **kw)


def test_exponential_decay():
    tr = integrate(lambda t, y: -y, [1.0], _at(1.0))
    assert tr.terminated_by is Termination.MAX_TIME
    assert tr.final_t == 1.0
    assert abs(tr.final_y[0] - np.exp(-1.0)) < 1e-8


def test_rotation_keeps_modulus():
    tr = integrate(lambda t, y: 1j * y, [1.0], _at(np.pi))
    assert abs(tr.final_y[0] + 1.0) < 1e-8
    mods = np.abs(np.array(tr.y)[:, 0])
    assert np.max(np.abs(mods - 1.0)) < 1e-8


def test_hermitian_flow_endpoint():
    A = np.diag([3.0, 1.0])
    tr = integrate(lambda t, y: hermitian_rhs(A, y), [0.6, 0.8], _at(30.0), store=False)
    assert np.allclose(tr.final_y, [1.0, 0.0], atol=1e-6)


def test_stop_predicate_is_honoured():
    tr = integrate(lambda t, y: -y, [1.0], _at(100.0), stop=lambda t, y: abs(y[0]) < 0.5)
    assert tr.terminated_by is Termination.STOP_PREDICATE
    assert abs(tr.final_y[0]) < 0.5
    assert tr.final_t < 1.0


def test_max_steps_cap():
    tr = integrate(lambda t, y: -y, [1.0], IntegratorConfig(max_steps=7))
    assert tr.terminated_by is Termination.MAX_STEPS
    assert len(tr) == 8


@pytest.mark.slow
def test_blowup_underflows_step():
    # Per-unit-step control near a pole needs h/(1 - t) to shrink with 1 - t,
    # so reaching the underflow takes a few hundred thousand evaluations.
    tr = integrate(lambda t, y: y**2, [1.0], _at(2.0))
    assert tr.terminated_by is Termination.STEP_UNDERFLOW
    assert tr.final_t < 1.0
    assert all(np.all(np.isfinite(y)) for y in tr.y)


def test_nan_rhs_is_an_error():
    with pytest.raises(IntegrationError):
        integrate(lambda t, y: np.full_like(y, np.nan), [1.0], _at(1.0))
    with pytest.raises(IntegrationError):
        integrate(lambda t, y: y, [np.inf], _at(1.0))


def test_config_validation():
    with pytest.raises(ValidationError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(ValidationError):
        IntegratorConfig(abs_tol=1.0, rel_tol=1e-8)
    with pytest.raises(ValidationError):
        IntegratorConfig(max_order=13)


def test_rhs_never_evaluated_past_the_end():
    seen = []

    def rhs(t, y):
        seen.append(t)
        return np.cos(t) * y

    tr = integrate(rhs, [1.0 + 1j], _at(5.0))
    last_h = tr.t[-1] - tr.t[-2]
    assert min(seen) >= 0.0
    assert max(seen) <= 5.0 + last_h


def test_determinism():
    A = np.array([[0.3, 1j], [0.5, -1.0 + 0.2j]])
    a = integrate(lambda t, y: A @ y, [1.0, 2j], _at(4.0))
    b = integrate(lambda t, y: A @ y, [1.0, 2j], _at(4.0))
    assert a.t == b.t
    assert all(np.array_equal(u, v) for u, v in zip(a.y, b.y))


def _rotation_errors(max_order, count=14):
    errs = []
    for k in range(count):
        r = 1e-4 * 2.0**-k
        cfg = IntegratorConfig(abs_tol=1e-2 * r, rel_tol=r, max_time=np.pi, max_order=max_order)
        tr = integrate(lambda t, y: 1j * y, [1.0], cfg, store=False)
        errs.append(abs(tr.final_y[0] + 1.0))
    return np.array(errs)


def test_halving_tolerance_at_fixed_order():
    e = _rotation_errors(4)
    assert np.all(e[:-1] / e[1:] >= 2.0)


def test_halving_tolerance_with_order_switching():
    # Order changes make single halvings noisy; the response is monotone and
    # at least 2x per halving on average.
    e = _rotation_errors(12)
    ratios = e[:-1] / e[1:]
    assert np.all(ratios > 1.5)
    assert np.exp(np.mean(np.log(ratios))) >= 2.0


@given(st.floats(-3, 3), st.floats(0.1, 5.0))
def test_times_increase_and_samples_finite(rate, t_end):
    tr = integrate(lambda t, y: rate * 1j * y - 0.1 * y, [1.0, -1j], _at(t_end))
    t = np.array(tr.t)
    assert np.all(np.diff(t) > 0)
    assert t[-1] == pytest.approx(t_end)
    assert all(np.all(np.isfinite(y)) for y in tr.y)
    expected = np.exp((rate * 1j - 0.1) * t_end)
    assert abs(tr.final_y[0] - expected) < 1e-6
