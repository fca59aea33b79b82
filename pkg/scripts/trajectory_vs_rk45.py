"""Closed-form trajectory of the damped cos^2 example next to rk45 and the
reference formula for x1. Output: CSV on stdout."""
import argparse
import csv
import math
import sys
from dataclasses import dataclass

import numpy as np

from commfloq.fundamental import FundamentalMatrix
from commfloq.numerics import rk45
from stability_region import cos_squared_system


@dataclass
class TrajectoryConfig:
    t_end: float = 5.0
    samples: int = 101
    x0: tuple = (0.0, 1.0)


def run(cfg: TrajectoryConfig, out=sys.stdout):
    S = cos_squared_system(-1.0, 2.0, 1.0)
    FM = FundamentalMatrix(S)
    times = np.linspace(0, cfg.t_end, cfg.samples)
    tr = rk45(lambda t, x: S.matrix(t) @ x, 0.0, np.array(cfg.x0), cfg.t_end, 1e-11, 1e-13,
              t_eval=times)
    w = csv.writer(out)
    w.writerow(["t", "x1", "x2", "x1_rk45", "x2_rk45", "x1_formula"])
    for t in times:
        x = FM.solve_ivp(cfg.x0, t)
        y = tr(t)
        # reference formula is only valid for x0 = (0, 1)
        ref = -math.exp(-t) * math.sin(t / 2 + math.sin(t) * math.cos(t) / 2)
        w.writerow([f"{v:.17g}" for v in (t, x[0], x[1], y[0], y[1], ref)])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=TrajectoryConfig.t_end)
    ap.add_argument("--samples", type=int, default=TrajectoryConfig.samples)
    a = ap.parse_args()
    run(TrajectoryConfig(a.t_end, a.samples))


if __name__ == "__main__":
    main()
