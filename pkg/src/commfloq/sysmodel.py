"""Coefficient functions and planar systems of the commuting class.

A system is in the commuting class when

    A(t) = [[a11(t),         a12(t)              ],
            [alpha * a12(t), a11(t) + beta * a12(t)]]

for constants alpha, beta. Then A(t), its derivative and its primitive
D(t) = int_{t0}^t A all lie in span{I, [[0, 1], [alpha, beta]]} and commute.
"""
from __future__ import annotations

import enum
import math
import threading
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .expr import DomainError, Expression
from .numerics import integrate

QUAD_TOL = 1e-10
COMMUTE_TOL = 1e-8


class NotCommutingClass(ValueError):
    pass


class DegenerateA12(ValueError):
    pass


class Limit(enum.Enum):
    """Long-time behaviour of a coefficient's primitive (user-declared)."""

    BOUNDED = "bounded"
    PLUS_INF = "+inf"
    MINUS_INF = "-inf"
    ZERO = "0"
    UNKNOWN = "unknown"


def chebyshev_grid(a: float, b: float, n: int = 33) -> np.ndarray:
    k = np.arange(n)
    x = np.cos(np.pi * (2 * k + 1) / (2 * n))[::-1]
    return 0.5 * (a + b) + 0.5 * (b - a) * x


def _probe_points(period: float | None) -> np.ndarray:
    return np.linspace(0.0, period if period else 2.0, 9)


@dataclass(frozen=True)
class CoefficientFunction:
    """A scalar coefficient a(t) with optional primitive and periodicity.

    ``antiderivative`` and ``period`` are spot-checked on a probe grid at
    construction. ``limit`` describes the primitive int_{t0}^t a(s) ds as
    t -> infinity and is only consulted by the asymptotic classifier.
    """

    value: Callable[[float], float]
    antiderivative: Callable[[float], float] | None = None
    period: float | None = None
    limit: Limit = Limit.UNKNOWN
    derivative: Callable[[float], float] | None = None
    source: str | None = None
    constant: bool = False

    def __post_init__(self):
        if self.period is not None and not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        probes = _probe_points(self.period)
        if self.antiderivative is not None:
            F = self.antiderivative
            for t in probes:
                h = 1e-5 * (1 + abs(t))
                try:
                    fd = (F(t + h) - F(t - h)) / (2 * h)
                    v = self.value(t)
                except (DomainError, ValueError, OverflowError):
                    continue
                if abs(fd - v) > 1e-6 * (1 + abs(v) + abs(F(t))):
                    raise ValueError(
                        f"antiderivative does not match the coefficient at t={t}: "
                        f"F'={fd!r}, a={v!r}")
        if self.period is not None:
            T = self.period
            for t in probes:
                try:
                    v0, v1 = self.value(t), self.value(t + T)
                except (DomainError, ValueError, OverflowError):
                    continue
                if abs(v1 - v0) > 1e-10 * (1 + abs(v0)):
                    raise ValueError(f"coefficient is not {T}-periodic at t={t}")

    def __call__(self, t: float) -> float:
        return self.value(t)

    @classmethod
    def from_expr(cls, source: str, antiderivative: str | None = None,
                  period: float | None = None, limit: Limit = Limit.UNKNOWN
                  ) -> "CoefficientFunction":
        e = Expression.parse(source)
        F = Expression.parse(antiderivative) if antiderivative else None
        return cls(e, F, period, limit, source=source, constant=e.is_constant)

    @classmethod
    def const(cls, c: float) -> "CoefficientFunction":
        c = float(c)
        return cls(lambda t: c, lambda t: c * t, None,
                   Limit.BOUNDED if c == 0 else (Limit.PLUS_INF if c > 0 else Limit.MINUS_INF),
                   derivative=lambda t: 0.0, source=repr(c), constant=True)

    def is_periodic_with(self, T: float) -> bool:
        if self.constant:
            return True
        if self.period is None:
            return False
        ratio = T / self.period
        return abs(ratio - round(ratio)) <= 1e-9 * max(1.0, ratio) and round(ratio) >= 1

    def integral(self, a: float, b: float, tol: float = QUAD_TOL) -> float:
        if self.antiderivative is not None:
            return self.antiderivative(b) - self.antiderivative(a)
        return integrate(self.value, a, b, tol)

    def diff(self, t: float) -> float:
        """Derivative, by 4th-order central differences when no closed form."""
        if self.derivative is not None:
            return self.derivative(t)
        if self.constant:
            return 0.0
        h = 1e-5 * (1 + abs(t))
        a = self.value
        return (-a(t + 2 * h) + 8 * a(t + h) - 8 * a(t - h) + a(t - 2 * h)) / (12 * h)


@dataclass(frozen=True)
class GeneralSystem:
    """Unrestricted planar system x' = A(t) x."""

    a11: CoefficientFunction
    a12: CoefficientFunction
    a21: CoefficientFunction
    a22: CoefficientFunction
    t0: float = 0.0

    def matrix(self, t: float) -> np.ndarray:
        return np.array([[self.a11(t), self.a12(t)], [self.a21(t), self.a22(t)]])

    def trace(self, t: float) -> float:
        return self.a11(t) + self.a22(t)

    def entries(self) -> tuple[CoefficientFunction, ...]:
        return (self.a11, self.a12, self.a21, self.a22)


@dataclass(frozen=True, eq=False)
class StructuredSystem:
    """Commuting-class system determined by a11, a12, alpha and beta."""

    a11: CoefficientFunction
    a12: CoefficientFunction
    alpha: float
    beta: float
    t0: float = 0.0
    _cache: dict = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    @property
    def generator(self) -> np.ndarray:
        return np.array([[0.0, 1.0], [self.alpha, self.beta]])

    def matrix(self, t: float) -> np.ndarray:
        a11, a12 = self.a11(t), self.a12(t)
        return np.array([[a11, a12], [self.alpha * a12, a11 + self.beta * a12]])

    def trace(self, t: float) -> float:
        return 2 * self.a11(t) + self.beta * self.a12(t)

    def derivative_matrix(self, t: float) -> np.ndarray:
        d11, d12 = self.a11.diff(t), self.a12.diff(t)
        return np.array([[d11, d12], [self.alpha * d12, d11 + self.beta * d12]])

    def _primitive(self, which: str, t: float) -> float:
        key = (which, float(t))
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        coeff = self.a11 if which == "f" else self.a12
        value = coeff.integral(self.t0, t)
        with self._lock:
            self._cache[key] = value
        return value

    def f(self, t: float) -> float:
        """int_{t0}^t a11."""
        return self._primitive("f", t)

    def g(self, t: float) -> float:
        """int_{t0}^t a12."""
        return self._primitive("g", t)

    def primitive_matrix(self, t: float) -> np.ndarray:
        f, g = self.f(t), self.g(t)
        return np.array([[f, g], [self.alpha * g, f + self.beta * g]])

    def commutation_residuals(self, grid: Sequence[float]) -> dict[str, float]:
        """Max relative ||[A, D]|| and ||[A, A']|| over ``grid``."""
        worst_d = worst_dot = 0.0
        for t in grid:
            A = self.matrix(t)
            D = self.primitive_matrix(t)
            Ad = self.derivative_matrix(t)
            nA = np.linalg.norm(A)
            worst_d = max(worst_d, np.linalg.norm(A @ D - D @ A) / (1 + nA * np.linalg.norm(D)))
            worst_dot = max(worst_dot,
                            np.linalg.norm(A @ Ad - Ad @ A) / (1 + nA * np.linalg.norm(Ad)))
        return {"A_D": float(worst_d), "A_Adot": float(worst_dot)}

    def as_general(self) -> GeneralSystem:
        alpha, beta, a11, a12 = self.alpha, self.beta, self.a11, self.a12
        a21 = CoefficientFunction(lambda t: alpha * a12(t), period=a12.period,
                                  constant=a12.constant)
        a22 = CoefficientFunction(lambda t: a11(t) + beta * a12(t),
                                  period=a11.period if a11.period == a12.period else None,
                                  constant=a11.constant and a12.constant)
        return GeneralSystem(a11, a12, a21, a22, self.t0)


def fit_structure(G: GeneralSystem, grid: Sequence[float] | None = None,
                  tol: float = COMMUTE_TOL) -> StructuredSystem:
    """Least-squares fit of alpha, beta so that a21 = alpha a12 and
    a22 = a11 + beta a12 on ``grid``; reject if the residual exceeds tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if grid is None:
        grid = chebyshev_grid(G.t0, G.t0 + 2 * math.pi)
    grid = np.asarray(grid, dtype=float)
    if grid.size < 8:
        raise ValueError("fit grid needs at least 8 points")
    a11 = np.array([G.a11(t) for t in grid])
    a12 = np.array([G.a12(t) for t in grid])
    a21 = np.array([G.a21(t) for t in grid])
    a22 = np.array([G.a22(t) for t in grid])

    scale = max(np.abs(a11).max(), np.abs(a21).max(), np.abs(a22).max(), 1.0)
    nz = np.abs(a12) > 1e-12 * scale
    if nz.sum() == 0:
        raise DegenerateA12("a12 vanishes on the whole grid; alpha and beta are unidentifiable")
    ss = float(a12 @ a12)
    alpha = float(a21 @ a12) / ss
    beta = float((a22 - a11) @ a12) / ss
    resid = max(np.abs(a21 - alpha * a12).max(), np.abs(a22 - a11 - beta * a12).max())
    bound = tol * (1 + np.abs(a12).max())
    if resid > bound:
        raise NotCommutingClass(
            f"max residual {resid:.3e} exceeds {bound:.3e}: a21/a12 or (a22-a11)/a12 "
            "is not constant")
    return StructuredSystem(G.a11, G.a12, alpha, beta, G.t0)


def f_of(S: StructuredSystem, t: float) -> float:
    return S.f(t)


def g_of(S: StructuredSystem, t: float) -> float:
    return S.g(t)


def average_matrix(S: StructuredSystem, T: float) -> np.ndarray:
    """Entrywise average of A over one period starting at t0: D(t0 + T) / T."""
    if not T > 0:
        raise ValueError(f"period must be positive, got {T}")
    for name, c in (("a11", S.a11), ("a12", S.a12)):
        if not c.is_periodic_with(T):
            warnings.warn(f"{name} is not declared {T}-periodic; the average is still "
                          "computed but Floquet interpretation may not apply", stacklevel=2)
    b11 = S.f(S.t0 + T) / T
    b12 = S.g(S.t0 + T) / T
    return np.array([[b11, b12], [S.alpha * b12, b11 + S.beta * b12]])
