"""Sweep the BEG threshold beta0 and the sharp envelope over the gap D - J.

    python3 scripts/sweep_beta0.py --gaps 0.5 1 2 4 --lam 1.0
"""

import argparse
import csv
import sys
from dataclasses import dataclass, field

import numpy as np

from polymergas import beg


@dataclass
class SweepConfig:
    gaps: list[float] = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0])
    d: int = 2
    j1: float = 1.0
    lam: float = 1.0
    lam_prime: float = 1.5
    alpha: float = 0.5


def run(cfg: SweepConfig, out=sys.stdout):
    w = csv.writer(out)
    w.writerow(["gap", "J", "J2", "beta0", "residual", "beta_envelope", "exact_at_beta0"])
    for gap in cfg.gaps:
        p = beg.BegParams.from_gap(gap, d=cfg.d, j1=cfg.j1, lam=cfg.lam,
                                   lam_prime=cfg.lam_prime, c=0.0, beta=1.0)
        root = beg.beta0(p)
        sharp = beg.beta_envelope(p, cfg.alpha)
        exact = beg.convergence_envelope(p.replace(beta=root.beta), cfg.alpha)
        w.writerow([gap, p.J, beg.j2_constant(p), root.beta, root.residual, sharp.beta, exact.ok])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gaps", type=float, nargs="+", default=SweepConfig().gaps)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--j1", type=float, default=1.0)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--lam-prime", type=float, default=1.5)
    args = ap.parse_args()
    run(SweepConfig(list(np.asarray(args.gaps)), args.d, args.j1, args.lam, args.lam_prime))


if __name__ == "__main__":
    main()
