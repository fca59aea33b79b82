"""Floquet data for T-periodic planar systems.

Two independent routes:

* averages -- for the commuting class, B = D(T)/T is the entrywise mean of
  A over a period and the exponents are its eigenvalues;
* monodromy -- integrate Phi' = A Phi from I over one period with rk45 and
  take logarithms of the multipliers. Works for any planar system.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .fundamental import FundamentalMatrix, classify_gamma
from .numerics import eig2, expm2, integrate, rk45
from .sysmodel import GeneralSystem, StructuredSystem, average_matrix

AnySystem = Union[StructuredSystem, GeneralSystem]

CONSISTENCY_TOL = 1e-10
STABILITY_TOL = 1e-9


class FloquetConsistencyError(RuntimeError):
    pass


def principal(lam: complex, T: float) -> complex:
    """Representative of lam modulo 2*pi*i/T with Im in (-pi/T, pi/T]."""
    w = 2 * math.pi / T
    im = math.remainder(lam.imag, w)
    if im <= -math.pi / T:
        im += w
    return complex(lam.real, im)


def mod_distance(a: complex, b: complex, T: float) -> float:
    d = a - b
    w = 2 * math.pi / T
    return abs(complex(d.real, math.remainder(d.imag, w)))


def match_distance(xs, ys, T: float) -> float:
    """Largest pairwise distance (mod 2*pi*i/T) under the better of the two pairings."""
    straight = max(mod_distance(xs[0], ys[0], T), mod_distance(xs[1], ys[1], T))
    crossed = max(mod_distance(xs[0], ys[1], T), mod_distance(xs[1], ys[0], T))
    return min(straight, crossed)


@dataclass(frozen=True)
class FloquetData:
    B: np.ndarray
    exponents: tuple[complex, complex]
    multipliers: tuple[complex, complex]
    T: float
    raw_exponents: tuple[complex, complex]
    defective: bool = False
    source: str = "averages"

    @property
    def reduced(self) -> bool:
        """True when an exponent was shifted into the principal strip."""
        return any(abs(a - b) > 1e-12 * (1 + abs(a))
                   for a, b in zip(self.raw_exponents, self.exponents))

    @property
    def max_real(self) -> float:
        return max(lam.real for lam in self.exponents)


@dataclass(frozen=True)
class Monodromy:
    C: np.ndarray
    T: float
    rel_tol: float
    abs_tol: float


def _make(B, raw, T, defective, source) -> FloquetData:
    raw = (complex(raw[0]), complex(raw[1]))
    lam = (principal(raw[0], T), principal(raw[1], T))
    rho = (cmath.exp(lam[0] * T), cmath.exp(lam[1] * T))
    return FloquetData(np.asarray(B), lam, rho, T, raw, defective, source)


def floquet_from_averages(S: StructuredSystem, T: float) -> FloquetData:
    """Exponents as eigenvalues of the averaged matrix.

    The closed form mean +/- sqrt(alpha + beta^2/4) * mean(a12), with
    mean = mean(a11) + beta/2 * mean(a12), is cross-checked against eig2(B).
    """
    B = average_matrix(S, T)
    b11, b12 = B[0, 0], B[0, 1]
    centre = b11 + S.beta / 2 * b12
    root = cmath.sqrt(classify_gamma(S.alpha, S.beta).gamma_sq) * b12
    closed = (centre + root, centre - root)

    ep = eig2(B)
    scale = 1 + max(abs(closed[0]), abs(closed[1]))
    gap = min(max(abs(closed[0] - ep.values[0]), abs(closed[1] - ep.values[1])),
              max(abs(closed[0] - ep.values[1]), abs(closed[1] - ep.values[0])))
    if gap > CONSISTENCY_TOL * scale:
        raise FloquetConsistencyError(
            f"closed-form exponents {closed} disagree with eig2(B) {tuple(ep.values)}")
    return _make(B, closed, T, ep.defective, "averages")


def monodromy_numeric(system: AnySystem, T: float, rel_tol: float = 1e-10,
                      abs_tol: float = 1e-12) -> Monodromy:
    """C = Phi(t0 + T) from the matrix ODE Phi' = A Phi, Phi(t0) = I."""
    if not T > 0:
        raise ValueError(f"period must be positive, got {T}")
    t0 = system.t0
    traj = rk45(lambda t, P: system.matrix(t) @ P, t0, np.eye(2), t0 + T, rel_tol, abs_tol)
    return Monodromy(traj.end.copy(), T, rel_tol, abs_tol)


def exponents_from_monodromy(M: Monodromy) -> FloquetData:
    """Principal logarithms of the multipliers; B = log(C) / T.

    A defective C = rho (I + N), N nilpotent, gives log C = log(rho) I + N.
    """
    T = M.T
    ep = eig2(M.C)
    if any(abs(r) == 0 for r in ep.values):
        raise ValueError("monodromy matrix is singular")
    lam = [cmath.log(r) / T for r in ep.values]
    if ep.defective:
        rho = complex(sum(ep.values) / 2)
        N = M.C / rho - np.eye(2)
        B = (cmath.log(rho) * np.eye(2) + N) / T
    else:
        V = ep.vectors
        B = V @ np.diag(lam) @ np.linalg.inv(V)
    if np.all(np.abs(B.imag) <= 1e-12 * (1 + np.abs(B).max())):
        B = B.real
    return _make(B, lam, T, ep.defective, "monodromy")


def periodic_part(FM: FundamentalMatrix, FD: FloquetData, t: float) -> np.ndarray:
    """P(t) = Phi(t) exp(-B t); T-periodic when exp(B T) is the monodromy."""
    return FM.phi(t) @ expm2(-FD.B * (t - FM.system.t0))


@dataclass(frozen=True)
class TraceReport:
    mean_trace: float
    exponent_sum: complex
    multiplier_product: complex
    sum_residual: float
    product_residual: float


def trace_identities(system: AnySystem, T: float, data: FloquetData | None = None) -> TraceReport:
    """Residuals of sum(lambda) = mean tr A (mod 2 pi i / T) and
    prod(rho) = exp(int_0^T tr A), with tr A integrated independently."""
    if data is None:
        if isinstance(system, StructuredSystem):
            data = floquet_from_averages(system, T)
        else:
            data = exponents_from_monodromy(monodromy_numeric(system, T))
    t0 = system.t0
    int_tr = integrate(system.trace, t0, t0 + T)
    lam_sum = data.exponents[0] + data.exponents[1]
    rho_prod = data.multipliers[0] * data.multipliers[1]
    return TraceReport(
        mean_trace=int_tr / T,
        exponent_sum=lam_sum,
        multiplier_product=rho_prod,
        sum_residual=mod_distance(lam_sum, complex(int_tr / T), T),
        product_residual=abs(rho_prod - math.exp(int_tr)),
    )


class Stability(enum.Enum):
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    STABLE = "Stable"
    UNSTABLE = "Unstable"


def stability_verdict(FD: FloquetData, tol: float = STABILITY_TOL) -> Stability:
    m = FD.max_real
    if m < -tol:
        return Stability.ASYMPTOTICALLY_STABLE
    if m > tol:
        return Stability.UNSTABLE
    # Zero real part: bounded unless a Jordan block gives secular growth. That
    # needs a repeated eigenvalue of B itself (raw, before strip reduction) and
    # a nonzero nilpotent part B - lambda I.
    if all(abs(lam.real) <= tol for lam in FD.exponents):
        r1, r2 = FD.raw_exponents
        if abs(r1 - r2) <= tol:
            N = FD.B - (r1 + r2) / 2 * np.eye(2)
            if np.abs(N).max() > tol:
                return Stability.UNSTABLE
    return Stability.STABLE
