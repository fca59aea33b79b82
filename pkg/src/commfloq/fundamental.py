"""Closed-form fundamental matrix of a commuting-class system.

With f = int a11, g = int a12 and M = [[-beta/2, 1], [alpha, beta/2]],

    Phi(t) = exp(f + beta g / 2) * exp(g M),

and since M @ M = gamma_sq * I with gamma_sq = alpha + beta**2 / 4,

    exp(g M) = cosh(gamma g) I + sinh(gamma g) / gamma * M.
"""
from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import NumericalOverflowError, rk45
from .sysmodel import Limit, StructuredSystem

EXP_LIMIT = 700.0
# |gamma_sq * g^2| below this uses the even/odd Taylor series
_SERIES_CUTOFF = 1e-2
_SERIES_TERMS = 10


class Branch(enum.Enum):
    REAL_POSITIVE = "RealPositive"
    ZERO = "Zero"
    IMAGINARY = "Imaginary"


@dataclass(frozen=True)
class GammaClass:
    gamma_sq: float
    branch: Branch

    @property
    def gamma(self) -> float:
        """sqrt(gamma_sq) on the real branch, else 0."""
        return math.sqrt(self.gamma_sq) if self.branch is Branch.REAL_POSITIVE else 0.0

    @property
    def omega(self) -> float:
        """sqrt(-gamma_sq) on the imaginary branch, else 0."""
        return math.sqrt(-self.gamma_sq) if self.branch is Branch.IMAGINARY else 0.0


def classify_gamma(alpha: float, beta: float) -> GammaClass:
    gamma_sq = alpha + beta * beta / 4
    if abs(gamma_sq) <= 1e-12 * (1 + abs(alpha) + beta * beta):
        return GammaClass(0.0, Branch.ZERO)
    return GammaClass(gamma_sq, Branch.REAL_POSITIVE if gamma_sq > 0 else Branch.IMAGINARY)


def s_generator(alpha: float, beta: float) -> np.ndarray:
    return np.array([[-beta / 2, 1.0], [alpha, beta / 2]])


def _cosh_sinhc(gamma_sq: float, g: float) -> tuple[float, float]:
    """(cosh(gamma g), sinh(gamma g) / gamma) for either sign of gamma_sq."""
    x = gamma_sq * g * g
    if abs(x) < _SERIES_CUTOFF:
        c = s = 0.0
        term_c, term_s = 1.0, g
        for k in range(_SERIES_TERMS):
            c += term_c
            s += term_s
            term_c *= x / ((2 * k + 1) * (2 * k + 2))
            term_s *= x / ((2 * k + 2) * (2 * k + 3))
        return c, s
    if gamma_sq > 0:
        r = math.sqrt(gamma_sq)
        if r * abs(g) > EXP_LIMIT:
            raise NumericalOverflowError(f"gamma*|g| = {r * abs(g):.1f} exceeds {EXP_LIMIT}")
        return math.cosh(r * g), math.sinh(r * g) / r
    w = math.sqrt(-gamma_sq)
    return math.cos(w * g), math.sin(w * g) / w


def exp_S(gc: GammaClass, alpha: float, beta: float, g: float) -> np.ndarray:
    """exp(g M) with M = [[-beta/2, 1], [alpha, beta/2]]."""
    M = s_generator(alpha, beta)
    if gc.branch is Branch.ZERO:
        return np.eye(2) + g * M
    c, s = _cosh_sinhc(gc.gamma_sq, g)
    return c * np.eye(2) + s * M


class Verdict(enum.Enum):
    NORM_DIVERGES = "NormDiverges"
    NORM_VANISHES = "NormVanishes"
    NORM_BOUNDED = "NormBounded"
    NORM_PERIODIC = "NormPeriodic"
    NORM_PERIODIC_OR_QUASIPERIODIC = "NormPeriodicOrQuasiperiodic"
    INCONCLUSIVE = "Inconclusive"


@dataclass(eq=False)
class FundamentalMatrix:
    """Phi(t) for a StructuredSystem, with Phi(t0) = I."""

    system: StructuredSystem
    gamma: GammaClass = field(init=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        self.gamma = classify_gamma(self.system.alpha, self.system.beta)

    def scalar_exponent(self, t: float) -> float:
        """f(t) + beta g(t) / 2."""
        return self.system.f(t) + self.system.beta / 2 * self.system.g(t)

    def phi(self, t: float) -> np.ndarray:
        t = float(t)
        with self._lock:
            hit = self._cache.get(t)
        if hit is not None:
            return hit.copy()
        S = self.system
        if t == S.t0:
            out = np.eye(2)
        else:
            h = self.scalar_exponent(t)
            if h > EXP_LIMIT:
                raise NumericalOverflowError(f"f + beta g/2 = {h:.1f} at t={t}")
            out = math.exp(h) * exp_S(self.gamma, S.alpha, S.beta, S.g(t))
        with self._lock:
            self._cache[t] = out
        return out.copy()

    __call__ = phi

    def phi_inv(self, t: float) -> np.ndarray:
        S = self.system
        h = -self.scalar_exponent(t)
        if h > EXP_LIMIT:
            raise NumericalOverflowError(f"Phi({t}) is numerically singular")
        return math.exp(h) * exp_S(self.gamma, S.alpha, S.beta, -S.g(t))

    def solve_ivp(self, x0, t: float) -> np.ndarray:
        return self.phi(t) @ np.asarray(x0, dtype=float)

    def trajectory(self, x0, times) -> np.ndarray:
        x0 = np.asarray(x0, dtype=float)
        return np.array([self.phi(t) @ x0 for t in times])


def phi(FM: FundamentalMatrix, t: float) -> np.ndarray:
    return FM.phi(t)


def solve_ivp(FM: FundamentalMatrix, x0, t: float) -> np.ndarray:
    return FM.solve_ivp(x0, t)


# --- asymptotic classification ---------------------------------------------

def probe_limit(F: Callable[[float], float], t0: float, length: float = 100.0,
                n: int = 201) -> Limit:
    """Guess the t -> infinity behaviour of F from samples on [t0, t0 + length].

    A least-squares line over the second half of the window is compared with
    the spread of the residuals; a drift well above the spread is read as
    divergence. This is a heuristic, not a proof.
    """
    ts = np.linspace(t0, t0 + length, n)
    try:
        vals = np.array([F(t) for t in ts])
    except OverflowError:
        return Limit.UNKNOWN
    except (ValueError, RuntimeError, ArithmeticError):
        return Limit.UNKNOWN
    if not np.all(np.isfinite(vals)):
        return Limit.UNKNOWN
    tail_t, tail_v = ts[n // 2:], vals[n // 2:]
    slope, icept = np.polyfit(tail_t, tail_v, 1)
    spread = float(np.std(tail_v - (slope * tail_t + icept)))
    drift = abs(slope) * (tail_t[-1] - tail_t[0])
    scale = 1 + float(np.abs(vals).max())
    if drift > 10 * spread + 1e-6 * scale:
        return Limit.PLUS_INF if slope > 0 else Limit.MINUS_INF
    if np.abs(tail_v).max() <= 1e-8 * scale:
        return Limit.ZERO
    return Limit.BOUNDED


def _bounded(lim: Limit) -> bool:
    return lim in (Limit.BOUNDED, Limit.ZERO)


def classify_asymptotics(FM: FundamentalMatrix, period: float | None = None,
                         window: float = 100.0) -> Verdict:
    """Limit behaviour of ||Phi(t)|| as t -> infinity from the shape of f, g.

    Rows are checked in a fixed order. ``period`` enables the
    "f + beta g / 2 is periodic" test on the imaginary branch.
    """
    S = FM.system
    lf = S.a11.limit if S.a11.limit is not Limit.UNKNOWN else probe_limit(S.f, S.t0, window)
    lg = S.a12.limit if S.a12.limit is not Limit.UNKNOWN else probe_limit(S.g, S.t0, window)
    branch = FM.gamma.branch

    if branch is Branch.REAL_POSITIVE:
        if S.beta > 0 and _bounded(lf) and lg is Limit.PLUS_INF:
            return Verdict.NORM_DIVERGES
        if lf is Limit.PLUS_INF and _bounded(lg):
            return Verdict.NORM_DIVERGES
        if lf is Limit.MINUS_INF and _bounded(lg):
            return Verdict.NORM_VANISHES
        return Verdict.INCONCLUSIVE

    if branch is Branch.IMAGINARY:
        L = period if period else window / 10
        ts = np.linspace(S.t0, S.t0 + L, 41)
        h = np.array([FM.scalar_exponent(t) for t in ts])
        scale = 1 + max(max(abs(S.f(t)), abs(S.g(t))) for t in ts)
        if np.abs(h).max() <= 1e-8 * scale:
            return Verdict.NORM_PERIODIC
        if period:
            h_shift = np.array([FM.scalar_exponent(t + period) for t in ts])
            if np.abs(h_shift - h).max() <= 1e-8 * scale:
                return Verdict.NORM_PERIODIC_OR_QUASIPERIODIC
        return Verdict.INCONCLUSIVE

    # Zero branch. A primitive tending to 0 is bounded, so that row is
    # subsumed by the bounded row (Phi -> I there, the norm does not vanish).
    if _bounded(lf) and _bounded(lg):
        return Verdict.NORM_BOUNDED
    if lf is Limit.PLUS_INF:
        return Verdict.NORM_DIVERGES
    if lf is Limit.MINUS_INF:
        return Verdict.NORM_VANISHES
    return Verdict.INCONCLUSIVE


# --- nonhomogeneous systems -------------------------------------------------

def nonhomogeneous_rhs(FM: FundamentalMatrix, forcing: Callable[[np.ndarray, float], np.ndarray]
                       ) -> Callable[[float, np.ndarray], np.ndarray]:
    """Right-hand side for y = Phi^{-1} x when x' = A(t) x + forcing(x, t):

        y' = Phi^{-1}(t) forcing(Phi(t) y, t),   y(t0) = x(t0).
    """
    def rhs(t, y):
        P = _phi_nocache(FM, t)
        Pinv = FM.phi_inv(t)
        if not np.all(np.isfinite(Pinv)):
            raise NumericalOverflowError(f"Phi({t}) is not invertible in floating point")
        return Pinv @ np.asarray(forcing(P @ y, t), dtype=float)
    return rhs


def _phi_nocache(FM: FundamentalMatrix, t: float) -> np.ndarray:
    S = FM.system
    h = FM.scalar_exponent(t)
    if h > EXP_LIMIT:
        raise NumericalOverflowError(f"f + beta g/2 = {h:.1f} at t={t}")
    return math.exp(h) * exp_S(FM.gamma, S.alpha, S.beta, S.g(t))


def solve_nonhomogeneous(FM: FundamentalMatrix, forcing, x0, t1: float,
                         rel_tol: float = 1e-11, abs_tol: float = 1e-13,
                         t_eval=None) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the transformed system and map back with x = Phi(t) y.

    Returns (times, x) at the integrator nodes (including every ``t_eval``).
    """
    t0 = FM.system.t0
    traj = rk45(nonhomogeneous_rhs(FM, forcing), t0, np.asarray(x0, dtype=float), t1,
                rel_tol, abs_tol, t_eval=t_eval)
    xs = np.array([_phi_nocache(FM, t) @ y for t, y in zip(traj.t, traj.y)])
    return traj.t, xs
