"""Compare both sides of the tree-graph identity on random finite potentials.

    python3 scripts/verify_identity.py --trials 200 --n 2 3 4
"""

import argparse
import time
from dataclasses import dataclass, field

import numpy as np

from polymergas.expansion import ursell_from_potential
from polymergas.treebound import tree_graph_rhs


@dataclass
class IdentityConfig:
    sizes: list[int] = field(default_factory=lambda: [2, 3, 4])
    trials: int = 200
    low: float = -2.0
    high: float = 2.0
    seed: int = 0


def run(cfg: IdentityConfig) -> dict[int, float]:
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    worst = {}
    for n in cfg.sizes:
        iu = np.triu_indices(n, 1)
        errs = []
        t0 = time.perf_counter()
        for _ in range(cfg.trials):
            V = np.zeros((n, n))
            V[iu] = rng.uniform(cfg.low, cfg.high, size=len(iu[0]))
            V = V + V.T
            errs.append(abs(tree_graph_rhs(V) - ursell_from_potential(V, "graphs")))
        worst[n] = max(errs)
        print(f"n={n}: max |rhs - lhs| = {worst[n]:.2e}, median {np.median(errs):.2e}, "
              f"{time.perf_counter() - t0:.2f}s")
    return worst


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    run(IdentityConfig(args.n, args.trials, seed=args.seed))


if __name__ == "__main__":
    main()
