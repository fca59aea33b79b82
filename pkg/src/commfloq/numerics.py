"""2x2 linear algebra, the matrix-exponential oracle, quadrature and an
adaptive Dormand-Prince 5(4) integrator.

Matrices and vectors are plain numpy arrays of shape (2, 2) and (2,).
Everything here is a pure function of its inputs.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.integrate
import scipy.linalg

DEFECTIVE_RTOL = 1e-8


class NumericalOverflowError(OverflowError):
    pass


class StepUnderflowError(RuntimeError):
    """The adaptive step fell below 1e-14 * |t1 - t0|."""


class QuadratureError(RuntimeError):
    pass


def mat2(m11, m12, m21, m22) -> np.ndarray:
    dtype = complex if any(isinstance(v, complex) for v in (m11, m12, m21, m22)) else float
    m = np.array([[m11, m12], [m21, m22]], dtype=dtype)
    if not np.all(np.isfinite(m)):
        raise ValueError(f"non-finite matrix entries: {m}")
    return m


def vec2(x1, x2) -> np.ndarray:
    dtype = complex if isinstance(x1, complex) or isinstance(x2, complex) else float
    v = np.array([x1, x2], dtype=dtype)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector entries: {v}")
    return v


def as_mat2(m) -> np.ndarray:
    m = np.asarray(m)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"non-finite matrix entries: {m}")
    return m


@dataclass(frozen=True)
class EigenPair2:
    """Eigenvalues and unit eigenvectors (columns of ``vectors``)."""

    values: np.ndarray
    vectors: np.ndarray
    defective: bool = False


def _eigvec(m: np.ndarray, nu: complex) -> np.ndarray:
    """Unit null vector of m - nu I; m is expected to be scaled to unit size."""
    c1 = np.array([m[0, 1], nu - m[0, 0]], dtype=complex)
    c2 = np.array([nu - m[1, 1], m[1, 0]], dtype=complex)
    v = c1 if np.linalg.norm(c1) >= np.linalg.norm(c2) else c2
    n = np.linalg.norm(v)
    if n == 0.0:
        # both rows vanish: m - nu I is zero, any vector will do
        return np.array([1.0, 0.0], dtype=complex)
    return v / n


def eig2(m) -> EigenPair2:
    """Eigen-decomposition of a 2x2 matrix from its characteristic polynomial.

    The discriminant is formed as ((m11 - m22)/2)^2 + m12*m21, which avoids the
    cancellation in tr^2/4 - det. A repeated eigenvalue on a non-scalar matrix
    sets ``defective`` and both reported vectors coincide.
    """
    m = as_mat2(m).astype(complex)
    half_tr = (m[0, 0] + m[1, 1]) / 2
    half_diff = (m[0, 0] - m[1, 1]) / 2
    d = np.sqrt(half_diff * half_diff + m[0, 1] * m[1, 0])
    nu1, nu2 = half_tr + d, half_tr - d

    scale = np.abs(m).max()
    off = abs(m[0, 1]) + abs(m[1, 0]) + abs(m[0, 0] - m[1, 1])
    scalar = off <= 1e-15 * scale or scale == 0.0
    if scalar:
        return EigenPair2(np.array([nu1, nu2]), np.eye(2, dtype=complex), False)

    repeated = abs(nu1 - nu2) <= DEFECTIVE_RTOL * (1 + abs(nu1) + abs(nu2))
    ms = m / scale
    if repeated:
        v = _eigvec(ms, (nu1 + nu2) / (2 * scale))
        return EigenPair2(np.array([nu1, nu2]), np.column_stack([v, v]), True)
    v1, v2 = _eigvec(ms, nu1 / scale), _eigvec(ms, nu2 / scale)
    return EigenPair2(np.array([nu1, nu2]), np.column_stack([v1, v2]), False)


def expm2(m) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with a degree-13 Pade kernel."""
    m = as_mat2(m)
    with np.errstate(over="ignore", invalid="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        out = scipy.linalg.expm(m)
    if not np.all(np.isfinite(out)):
        raise NumericalOverflowError(f"matrix exponential overflows for {m.tolist()}")
    return out


def integrate(func: Callable[[float], float], a: float, b: float,
              tol: float = 1e-10, limit: int = 500) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``func`` over [a, b]."""
    if a == b:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.integrate.IntegrationWarning)
        value, abserr, _, *message = scipy.integrate.quad(
            func, a, b, epsabs=tol, epsrel=tol, limit=limit, full_output=1)
    # quad appends a message only when it did not converge cleanly
    if message and abserr > 10 * tol * max(1.0, abs(value)):
        raise QuadratureError(f"quadrature on [{a}, {b}] failed: {message[0]}")
    if not math.isfinite(value):
        raise QuadratureError(f"quadrature on [{a}, {b}] is not finite")
    return value


# Dormand-Prince 5(4) tableau (Hairer, Norsett & Wanner, table II.5.2).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [np.array(row) for row in [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass(frozen=True)
class Trajectory:
    """Accepted RK nodes with cubic Hermite dense output."""

    t: np.ndarray
    y: np.ndarray
    dydt: np.ndarray
    n_rejected: int = 0

    @property
    def samples(self) -> list[tuple[float, np.ndarray]]:
        return [(float(t), y) for t, y in zip(self.t, self.y)]

    @property
    def end(self) -> np.ndarray:
        return self.y[-1]

    def __call__(self, t: float) -> np.ndarray:
        ts = self.t
        forward = ts[-1] >= ts[0]
        lo, hi = (ts[0], ts[-1]) if forward else (ts[-1], ts[0])
        if not lo - 1e-12 * (1 + abs(lo)) <= t <= hi + 1e-12 * (1 + abs(hi)):
            raise ValueError(f"t={t} outside integrated range [{lo}, {hi}]")
        if forward:
            i = int(np.searchsorted(ts, t, side="right")) - 1
        else:
            i = int(np.searchsorted(-ts, -t, side="right")) - 1
        i = min(max(i, 0), len(ts) - 2)
        t0, t1 = ts[i], ts[i + 1]
        h = t1 - t0
        if t == t0:
            return self.y[i]
        if t == t1:
            return self.y[i + 1]
        s = (t - t0) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return (h00 * self.y[i] + h10 * h * self.dydt[i]
                + h01 * self.y[i + 1] + h11 * h * self.dydt[i + 1])


def rk45(rhs: Callable[[float, np.ndarray], np.ndarray], t0: float, x0,
         t1: float, rel_tol: float = 1e-10, abs_tol: float = 1e-12,
         t_eval: Sequence[float] | None = None, max_steps: int = 1_000_000) -> Trajectory:
    """Integrate y' = rhs(t, y) from t0 to t1 with an embedded RK 5(4) pair.

    ``x0`` may be any array shape; ``rhs`` receives and returns that shape.
    Steps are clipped to land exactly on every time in ``t_eval``, so those
    samples are integrator nodes rather than interpolants.
    """
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("rel_tol and abs_tol must be positive")
    y = np.array(x0, dtype=float if np.isrealobj(x0) else complex)
    shape = y.shape
    y = y.ravel()

    def f(t, v):
        return np.asarray(rhs(t, v.reshape(shape)), dtype=y.dtype).ravel()

    span = t1 - t0
    if span == 0:
        d = f(t0, y)
        return Trajectory(np.array([t0]), y.reshape((1,) + shape), d.reshape((1,) + shape))
    direction = 1.0 if span > 0 else -1.0
    h_min = 1e-14 * abs(span)

    stops = [] if t_eval is None else sorted(
        (float(s) for s in t_eval if direction * (s - t0) > 0 and direction * (t1 - s) > 0),
        key=lambda s: direction * s)
    stops.append(t1)

    def err_norm(e, ya, yb):
        sc = abs_tol + rel_tol * np.maximum(np.abs(ya), np.abs(yb))
        return float(np.sqrt(np.mean(np.abs(e / sc) ** 2)))

    k0 = f(t0, y)
    # Hairer's starting-step heuristic.
    d0 = err_norm(y, y, y) if np.any(y) else 0.0
    d1 = err_norm(k0, y, y)
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, abs(span))
    y1 = y + direction * h * k0
    d2 = err_norm(f(t0 + direction * h, y1) - k0, y, y) / h
    h1 = max(1e-6, h * 1e-3) if max(d1, d2) <= 1e-15 else (0.01 / max(d1, d2)) ** 0.2
    h = min(100 * h, h1, abs(span))

    ts, ys, ds = [t0], [y.copy()], [k0.copy()]
    t = t0
    rejected = 0
    stop_i = 0
    k = np.empty((7, y.size), dtype=y.dtype)
    for _ in range(max_steps):
        target = stops[stop_i]
        remaining = abs(target - t)
        clipped = h >= remaining
        step = remaining if clipped else h
        if step < h_min and not clipped:
            raise StepUnderflowError(
                f"step {step:.3e} below {h_min:.3e} at t={t}; stiff or singular rhs")
        hs = direction * step
        k[0] = k0
        for i in range(1, 7):
            k[i] = f(t + _C[i] * hs, y + hs * (_A[i] @ k[:i]))
        y_new = y + hs * (_B5[:6] @ k[:6])
        if np.all(np.isfinite(k)) and np.all(np.isfinite(y_new)):
            err = err_norm(hs * (_E @ k), y, y_new)
        else:
            err = math.inf
        if err <= 1.0:
            t = target if clipped else t + hs
            y, k0 = y_new, k[6].copy()
            ts.append(t)
            ys.append(y.copy())
            ds.append(k0.copy())
            if clipped:
                stop_i += 1
                if stop_i == len(stops):
                    break
            factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            if not clipped or factor < 1:
                h = step * factor
        else:
            rejected += 1
            factor = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
            h = step * factor
            if h < h_min:
                raise StepUnderflowError(
                    f"step {h:.3e} below {h_min:.3e} at t={t}; stiff or singular rhs")
    else:
        raise RuntimeError(f"rk45 exceeded {max_steps} steps")

    return Trajectory(np.array(ts), np.array(ys).reshape((-1,) + shape),
                      np.array(ds).reshape((-1,) + shape), rejected)
