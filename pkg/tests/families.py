"""System builders shared by the tests: the damped cos^2 fixture and random
commuting-class families with closed-form primitives."""
import math

import numpy as np

from commfloq.sysmodel import CoefficientFunction, Limit, StructuredSystem


def cossq_system(sigma0=-1.0, sigma1=2.0, sigma2=1.0):
    """a11 = sigma0 - a, a12 = -sigma2 a, a = cos^2 t; alpha = -sigma1/sigma2,
    beta = -2/sigma2."""
    def a(t):
        return math.cos(t) ** 2

    def A(t):
        return (t + math.sin(t) * math.cos(t)) / 2

    a11 = CoefficientFunction(lambda t: sigma0 - a(t), lambda t: sigma0 * t - A(t), math.pi)
    a12 = CoefficientFunction(lambda t: -sigma2 * a(t), lambda t: -sigma2 * A(t), math.pi)
    return StructuredSystem(a11, a12, -sigma1 / sigma2, -2 / sigma2)


def cossq_matrix(t, sigma0=-1.0, sigma1=2.0, sigma2=1.0):
    a = math.cos(t) ** 2
    return np.array([[sigma0 - a, -sigma2 * a], [sigma1 * a, sigma0 + a]])


def cossq_x1(t):
    return -math.exp(-t) * math.sin(t / 2 + math.sin(t) * math.cos(t) / 2)


def cossq_x2(t):
    ph = t / 2 + math.sin(t) * math.cos(t) / 2
    return math.exp(-t) * (math.cos(ph) + math.sin(ph))


def _alpha_beta(rng, kind):
    beta = rng.uniform(-3, 3)
    if kind == "zero":
        return -beta * beta / 4, beta
    if kind == "near_zero":
        # |gamma_sq| in (0, 1e-9), either sign
        return -beta * beta / 4 + rng.choice([-1, 1]) * rng.uniform(1e-12, 1e-9), beta
    return rng.uniform(-3, 3), beta


def random_system(rng, kind="random"):
    """Polynomial + trigonometric coefficients; kind in {random, zero, near_zero}."""
    c0, c2 = rng.uniform(-1, 1, 2)
    c1 = rng.uniform(-0.3, 0.3)
    k1, k2 = rng.uniform(0.5, 3, 2)
    p1, p2 = rng.uniform(0, 2 * math.pi, 2)
    d0, d2 = rng.uniform(-0.3, 0.3, 2)
    d1 = rng.uniform(-0.03, 0.03)

    a11 = CoefficientFunction(
        lambda t: c0 + c1 * t + c2 * math.cos(k1 * t + p1),
        lambda t: c0 * t + c1 * t * t / 2 + c2 * (math.sin(k1 * t + p1) - math.sin(p1)) / k1)
    a12 = CoefficientFunction(
        lambda t: d0 + d1 * t * t + d2 * math.sin(k2 * t + p2),
        lambda t: d0 * t + d1 * t ** 3 / 3 + d2 * (math.cos(p2) - math.cos(k2 * t + p2)) / k2)
    alpha, beta = _alpha_beta(rng, kind)
    return StructuredSystem(a11, a12, alpha, beta)


def random_family(seed, n=100):
    """n systems: a third each on the zero branch, within 1e-9 of it, and random."""
    rng = np.random.default_rng(seed)
    kinds = ["zero", "near_zero", "random"]
    return [random_system(rng, kinds[i % 3]) for i in range(n)]


def random_periodic_system(rng):
    """T-periodic commuting-class system kept away from repeated exponents."""
    while True:
        w = rng.uniform(0.5, 2.0)
        T = 2 * math.pi / w
        c0, c1, c2 = rng.uniform(-0.5, 0.5, 3)
        d0 = rng.choice([-1, 1]) * rng.uniform(0.2, 0.6)
        d1 = rng.uniform(-0.3, 0.3)
        ph = rng.uniform(0, 2 * math.pi)
        alpha, beta = rng.uniform(-2, 2, 2)
        if abs(alpha + beta * beta / 4) < 0.05:
            continue
        a11 = CoefficientFunction(
            lambda t: c0 + c1 * math.cos(w * t) + c2 * math.sin(2 * w * t),
            lambda t: c0 * t + c1 * math.sin(w * t) / w + c2 * (1 - math.cos(2 * w * t)) / (2 * w),
            T)
        a12 = CoefficientFunction(
            lambda t: d0 + d1 * math.cos(w * t + ph),
            lambda t: d0 * t + d1 * (math.sin(w * t + ph) - math.sin(ph)) / w,
            T)
        return StructuredSystem(a11, a12, alpha, beta), T


def sign_definite_system(rng):
    """Random commuting system with a12 bounded away from zero."""
    d0 = rng.choice([-1, 1]) * rng.uniform(0.5, 1.0)
    d1 = rng.uniform(-0.3, 0.3)
    k = rng.uniform(0.5, 2)
    c0, c1 = rng.uniform(-0.5, 0.5, 2)
    a11 = CoefficientFunction(lambda t: c0 + c1 * math.sin(k * t),
                              derivative=lambda t: c1 * k * math.cos(k * t))
    a12 = CoefficientFunction(lambda t: d0 + d1 * math.cos(k * t),
                              derivative=lambda t: -d1 * k * math.sin(k * t))
    return StructuredSystem(a11, a12, rng.uniform(-2, 2), rng.uniform(-2, 2))


__all__ = ["cossq_system", "cossq_matrix", "cossq_x1", "cossq_x2", "random_system",
           "random_family", "random_periodic_system", "sign_definite_system", "Limit"]
