import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from commfloq.numerics import (NumericalOverflowError, QuadratureError, StepUnderflowError,
                               as_mat2, eig2, expm2, integrate, mat2, rk45, vec2)
from families import cossq_x1, cossq_x2, cossq_matrix

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
matrices = st.lists(finite, min_size=4, max_size=4).map(lambda v: np.array(v).reshape(2, 2))


def cond_scale(M):
    """||e^M|| ||e^-M||: the rounding amplification of products of exponentials."""
    return np.linalg.norm(expm2(M), 2) * np.linalg.norm(expm2(-M), 2)


# --- constructors ----------------------------------------------------------

def test_mat2_vec2_shapes():
    assert mat2(1, 2, 3, 4).shape == (2, 2)
    assert vec2(1, 2).tolist() == [1.0, 2.0]


@pytest.mark.parametrize("bad", [[[1, 2], [3, float("nan")]], [[1, 2, 3]], [1, 2, 3, 4]])
def test_as_mat2_rejects(bad):
    with pytest.raises(ValueError):
        as_mat2(bad)


def test_vec2_rejects_infinity():
    with pytest.raises(ValueError):
        vec2(1.0, math.inf)


# --- eig2 ------------------------------------------------------------------

def test_eig2_exchange_matrix():
    ep = eig2([[0, 1], [1, 0]])
    assert sorted(v.real for v in ep.values) == pytest.approx([-1, 1], abs=1e-15)


def test_eig2_generator_alpha2_beta2():
    alpha, beta = 2.0, 2.0
    ep = eig2([[-beta / 2, 1], [alpha, beta / 2]])
    # independent oracle: roots of the characteristic polynomial
    roots = np.roots([1, 0, -(alpha + beta ** 2 / 4)])
    assert sorted(v.real for v in ep.values) == pytest.approx(sorted(roots.real), abs=1e-14)
    assert max(abs(v.real) for v in ep.values) == pytest.approx(math.sqrt(3), abs=1e-14)


def test_eig2_identity_not_defective():
    ep = eig2(np.eye(2))
    assert ep.values == pytest.approx([1, 1])
    assert not ep.defective
    assert abs(np.linalg.det(ep.vectors)) == pytest.approx(1.0)


def test_eig2_jordan_block_defective():
    ep = eig2([[2.0, 1.0], [0.0, 2.0]])
    assert ep.defective
    assert ep.values == pytest.approx([2, 2])


def test_eig2_complex_pair():
    ep = eig2([[0, 1], [-1, 0]])
    assert sorted(ep.values, key=lambda z: z.imag) == pytest.approx([-1j, 1j])


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_eig2_reconstructs(M):
    ep = eig2(M)
    if ep.defective:
        return
    V = ep.vectors
    # only meaningful when the eigenbasis is well conditioned
    if np.linalg.cond(V) > 1e6:
        return
    R = V @ np.diag(ep.values) @ np.linalg.inv(V)
    assert np.abs(R - M).max() <= 1e-10 * np.linalg.cond(V) * (1 + np.abs(M).max())


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_eig2_residual(M):
    ep = eig2(M)
    for k in range(2):
        v = ep.vectors[:, k]
        r = M @ v - ep.values[k] * v
        assert np.abs(r).max() <= 1e-9 * (1 + np.abs(M).max())


# --- expm2 -----------------------------------------------------------------

def test_expm2_zero():
    assert np.array_equal(expm2(np.zeros((2, 2))), np.eye(2))


def test_expm2_diagonal():
    E = expm2(np.diag([1.0, -1.0]))
    assert E == pytest.approx(np.diag([2.718281828459045, 0.36787944117144233]), rel=1e-14)


def test_expm2_rotation_quarter_turn():
    theta = math.pi / 2
    E = expm2(theta * np.array([[0.0, 1.0], [-1.0, 0.0]]))
    expect = [[math.cos(theta), math.sin(theta)], [-math.sin(theta), math.cos(theta)]]
    assert np.abs(E - expect).max() < 1e-15


def test_expm2_overflow():
    with pytest.raises(NumericalOverflowError):
        expm2(np.diag([800.0, 0.0]))


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_expm2_inverse(M):
    P = expm2(M) @ expm2(-M)
    assert np.abs(P - np.eye(2)).max() <= 1e-10 * cond_scale(M)


@settings(max_examples=200, deadline=None)
@given(matrices, st.floats(-1, 1), st.floats(-1, 1))
def test_expm2_group(M, s, t):
    lhs = expm2(s * M) @ expm2(t * M)
    rhs = expm2((s + t) * M)
    scale = np.linalg.norm(expm2(s * M), 2) * np.linalg.norm(expm2(t * M), 2)
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(1.0, scale)


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_expm2_determinant(M):
    E = expm2(M)
    det = E[0, 0] * E[1, 1] - E[0, 1] * E[1, 0]
    # cancellation in the 2x2 determinant is bounded by ||E||^2
    assert abs(det - math.exp(np.trace(M))) <= 1e-10 * max(math.exp(np.trace(M)),
                                                           np.linalg.norm(E, 2) ** 2)


# --- integrate -------------------------------------------------------------

def test_integrate_cos_squared():
    assert integrate(lambda s: math.cos(s) ** 2, 0, math.pi) == pytest.approx(math.pi / 2,
                                                                            abs=1e-12)


def test_integrate_exp_square():
    # frozen: int_0^1 exp(s^2) ds, mpmath 30 digits
    assert integrate(lambda s: math.exp(s * s), 0, 1) == pytest.approx(1.4626517459071816,
                                                                      abs=1e-13)


def test_integrate_reports_failure():
    with pytest.raises(QuadratureError):
        integrate(lambda s: 1 / abs(s - 0.3), 0, 1, limit=5)


# --- rk45 ------------------------------------------------------------------

def test_rk45_exponential():
    tr = rk45(lambda t, x: x, 0.0, [1.0], 1.0)
    assert tr.end[0] == pytest.approx(math.e, rel=1e-9)


def test_rk45_harmonic_full_turn():
    tr = rk45(lambda t, x: np.array([x[1], -x[0]]), 0.0, [1.0, 0.0], 2 * math.pi)
    assert tr.end == pytest.approx([1.0, 0.0], abs=1e-9)


def test_rk45_cos_squared_system_at_one():
    tr = rk45(lambda t, x: cossq_matrix(t) @ x, 0.0, [0.0, 1.0], 1.0)
    assert tr.end[0] == pytest.approx(cossq_x1(1.0), abs=1e-9)
    assert tr.end[0] == pytest.approx(-0.2445932656609855, abs=1e-9)
    assert tr.end[1] == pytest.approx(cossq_x2(1.0), abs=1e-9)
    assert tr.end[1] == pytest.approx(0.5193830355395370, abs=1e-9)


def test_rk45_t_eval_and_dense_output():
    ts = np.linspace(0, 2, 11)
    tr = rk45(lambda t, x: -x, 0.0, [1.0], 2.0, t_eval=ts)
    got = {round(t, 12): y[0] for t, y in tr.samples}
    for t in ts:
        assert got[round(t, 12)] == pytest.approx(math.exp(-t), rel=1e-9)
    assert tr(0.123)[0] == pytest.approx(math.exp(-0.123), rel=1e-7)


def test_rk45_backward():
    tr = rk45(lambda t, x: x, 1.0, [math.e], 0.0)
    assert tr.end[0] == pytest.approx(1.0, rel=1e-9)


def test_rk45_matrix_state():
    A = np.array([[0.1, 1.0], [-2.0, -0.3]])
    tr = rk45(lambda t, P: A @ P, 0.0, np.eye(2), 1.5)
    assert np.abs(tr.end - expm2(1.5 * A)).max() < 1e-9


def test_rk45_step_underflow():
    with pytest.raises((StepUnderflowError, NumericalOverflowError)):
        rk45(lambda t, x: x * x, 0.0, [1.0], 2.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(0.1, 3),
       st.lists(st.floats(-1, 1), min_size=2, max_size=2))
def test_rk45_linear_constant(entries, t1, x0):
    A = np.array(entries).reshape(2, 2)
    x0 = np.array(x0)
    rel = 1e-8
    tr = rk45(lambda t, x: A @ x, 0.0, x0, t1, rel_tol=rel, abs_tol=1e-12)
    exact = expm2(A * t1) @ x0
    scale = np.linalg.norm(expm2(A * t1), 2) * (np.abs(x0).max() + 1e-3)
    assert np.abs(tr.end - exact).max() <= 10 * rel * max(scale, 1.0)
