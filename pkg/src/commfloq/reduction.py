"""Scalar second-order equations <-> planar systems.

For a commuting-class system the first component satisfies

    x'' + p x' + q x = 0,
    p = -(2 a11 + s),   q = a11^2 - alpha a12^2 - a11' + a11 s,
    s = beta a12 + a12' / a12,

obtained by differentiating x1' = a11 x1 + a12 x2 and eliminating x2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.special

from .fundamental import FundamentalMatrix
from .sysmodel import CoefficientFunction, GeneralSystem, StructuredSystem


class ZeroCrossing(ValueError):
    """a12 vanishes inside the window, so a12'/a12 is singular."""


@dataclass(frozen=True)
class SecondOrderEquation:
    """x'' + p(t) x' + q(t) x = 0."""

    p: CoefficientFunction
    q: CoefficientFunction

    def coefficients(self, times) -> np.ndarray:
        return np.array([[t, self.p(t), self.q(t)] for t in times])

    def constant_form(self, times, rtol: float = 1e-9) -> tuple[float, float] | None:
        """(p, q) if both are constant on ``times``, else None."""
        tab = self.coefficients(times)
        out = []
        for col in (1, 2):
            v = tab[:, col]
            if np.ptp(v) > rtol * (1 + np.abs(v).max()):
                return None
            out.append(float(np.mean(v)))
        return out[0], out[1]


def s_function(S: StructuredSystem):
    a12 = S.a12
    return lambda t: S.beta * a12(t) + a12.diff(t) / a12(t)


def check_no_zero_crossing(a12: CoefficientFunction, window: tuple[float, float],
                           n: int = 2001) -> None:
    """Raise ZeroCrossing if a12 changes sign or touches zero on ``window``.

    Sign changes are found on a uniform grid; every interior local minimum
    of |a12| is then refined so that double roots (a12 = cos(t)^2) are caught.
    """
    lo, hi = window
    ts = np.linspace(lo, hi, n)
    vals = np.array([a12(t) for t in ts])
    mags = np.abs(vals)
    scale = max(mags.max(), 1e-300)

    def fail(t):
        raise ZeroCrossing(f"a12 vanishes near t={t:.6g} in [{lo}, {hi}]")

    if np.any(mags <= 1e-12 * scale):
        fail(ts[np.argmin(mags)])
    flips = np.nonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0]
    if flips.size:
        fail(ts[flips[0]])
    for i in np.nonzero((mags[1:-1] <= mags[:-2]) & (mags[1:-1] <= mags[2:]))[0] + 1:
        res = scipy.optimize.minimize_scalar(lambda t: abs(a12(t)), bounds=(ts[i - 1], ts[i + 1]),
                                             method="bounded", options={"xatol": 1e-12})
        if res.fun <= 1e-12 * scale:
            fail(res.x)


def second_order_from_structured(S: StructuredSystem,
                                 window: tuple[float, float] = (0.0, 10.0)
                                 ) -> SecondOrderEquation:
    check_no_zero_crossing(S.a12, window)
    a11, a12, alpha = S.a11, S.a12, S.alpha
    s = s_function(S)

    def p(t):
        return -(2 * a11(t) + s(t))

    def q(t):
        v = a11(t)
        return v * v - alpha * a12(t) ** 2 - a11.diff(t) + v * s(t)

    const = a11.constant and a12.constant
    return SecondOrderEquation(CoefficientFunction(p, constant=const),
                               CoefficientFunction(q, constant=const))


def system_from_second_order(E: SecondOrderEquation, t0: float = 0.0) -> GeneralSystem:
    """Companion form x1' = x2, x2' = -q x1 - p x2."""
    p, q = E.p, E.q
    return GeneralSystem(
        CoefficientFunction.const(0.0),
        CoefficientFunction.const(1.0),
        CoefficientFunction(lambda t: -q(t), constant=q.constant),
        CoefficientFunction(lambda t: -p(t), constant=p.constant),
        t0,
    )


def state_from_scalar(S: StructuredSystem, x: float, dx: float) -> np.ndarray:
    """System state at t0 whose first component has value x and slope dx."""
    t0 = S.t0
    a12 = S.a12(t0)
    if a12 == 0:
        raise ZeroCrossing(f"a12 vanishes at t0={t0}; x2 is not determined by x'")
    return np.array([x, (dx - S.a11(t0) * x) / a12])


def format_equation(p: float, q: float, digits: int = 12) -> str:
    def term(c, var):
        sign = "-" if c < 0 else "+"
        return f" {sign} {abs(c):.{digits}g} {var}"
    return "x''" + term(p, "x'") + term(q, "x") + " = 0"


def damped_oscillator_system(nu: float, omega: float) -> StructuredSystem:
    """alpha = -1, beta = nu/omega, a12 = omega, a11 = -beta a12, which
    reduces to x'' + nu x' + omega^2 x = 0."""
    beta = nu / omega
    return StructuredSystem(CoefficientFunction.const(-beta * omega),
                            CoefficientFunction.const(omega), -1.0, beta)


def erfi_system(alpha: float, beta: float) -> StructuredSystem:
    """a12 = exp(t^2), a11 = -s/2 = -(beta exp(t^2) + 2 t)/2, whose primitive
    g = sqrt(pi)/2 erfi(t) has no elementary closed form."""
    half_sqrt_pi = math.sqrt(math.pi) / 2

    def G(t):
        return half_sqrt_pi * float(scipy.special.erfi(t))

    a12 = CoefficientFunction(lambda t: math.exp(t * t), G,
                              derivative=lambda t: 2 * t * math.exp(t * t),
                              source="exp(t^2)")
    a11 = CoefficientFunction(lambda t: -(beta * math.exp(t * t) + 2 * t) / 2,
                              lambda t: -beta / 2 * G(t) - t * t / 2,
                              source=f"-({beta!r}*exp(t^2) + 2*t)/2")
    return StructuredSystem(a11, a12, alpha, beta)


def erfi_example(t: float, alpha: float, beta: float, x0=(1.0, 0.0)) -> float:
    """First solution component of the erfi system at ``t``."""
    if abs(t) > 3:
        raise OverflowError("erfi example is limited to |t| <= 3")
    FM = FundamentalMatrix(erfi_system(alpha, beta))
    return float(FM.solve_ivp(np.asarray(x0, dtype=float), t)[0])
