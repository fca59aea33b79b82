"""Sweep (sigma1, sigma2) for the damped cos^2 family and print the Floquet verdict.

a11 = sigma0 - cos^2 t, a12 = -sigma2 cos^2 t, a21 = sigma1 cos^2 t,
a22 = sigma0 + cos^2 t, period pi. Output: CSV on stdout.
"""
import argparse
import csv
import math
import sys
from dataclasses import dataclass

import numpy as np

from commfloq.floquet import floquet_from_averages, stability_verdict
from commfloq.sysmodel import CoefficientFunction, StructuredSystem


@dataclass
class SweepConfig:
    sigma0: float = -1.0
    lo: float = -4.0
    hi: float = 4.0
    n: int = 41


def cos_squared_system(sigma0, sigma1, sigma2):
    def prim(t):
        return (t + math.sin(t) * math.cos(t)) / 2
    a11 = CoefficientFunction(lambda t: sigma0 - math.cos(t) ** 2,
                              lambda t: sigma0 * t - prim(t), math.pi)
    a12 = CoefficientFunction(lambda t: -sigma2 * math.cos(t) ** 2,
                              lambda t: -sigma2 * prim(t), math.pi)
    return StructuredSystem(a11, a12, -sigma1 / sigma2, -2 / sigma2)


def sweep(cfg: SweepConfig, out=sys.stdout):
    w = csv.writer(out)
    w.writerow(["sigma1", "sigma2", "max_re_lambda", "verdict"])
    for s1 in np.linspace(cfg.lo, cfg.hi, cfg.n):
        for s2 in np.linspace(cfg.lo, cfg.hi, cfg.n):
            if s2 == 0:
                continue  # a12 vanishes identically
            fd = floquet_from_averages(cos_squared_system(cfg.sigma0, s1, s2), math.pi)
            w.writerow([f"{s1:.6g}", f"{s2:.6g}", f"{fd.max_real:.12g}",
                        stability_verdict(fd).value])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigma0", type=float, default=SweepConfig.sigma0)
    ap.add_argument("--lo", type=float, default=SweepConfig.lo)
    ap.add_argument("--hi", type=float, default=SweepConfig.hi)
    ap.add_argument("-n", type=int, default=SweepConfig.n)
    a = ap.parse_args()
    sweep(SweepConfig(a.sigma0, a.lo, a.hi, a.n))


if __name__ == "__main__":
    main()
