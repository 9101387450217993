"""End-to-end BEG run: beta0, the spin/polymer bijection, and the criterion check.

Reads a parameter file (see fixtures/beg_d2.json) and scans beta around beta0.

    python3 scripts/beg_end_to_end.py fixtures/beg_d2.json --offsets -1 0 0.5 1 2
"""

import argparse
import json
from dataclasses import dataclass, field

from polymergas import beg


@dataclass
class EndToEndConfig:
    params_file: str
    offsets: list[float] = field(default_factory=lambda: [-1.0, 0.0, 0.5, 1.0, 2.0])
    bijection: bool = True


def run(cfg: EndToEndConfig):
    with open(cfg.params_file) as fh:
        sc = beg.scenario_from_dict(json.load(fh))
    p = sc.params
    b0 = beg.beta0(p).beta
    print(f"J = {p.J:.8g}, J2 = {beg.j2_constant(p):.8g}, beta0 = {b0:.10g}")
    if cfg.bijection:
        r = beg.spin_polymer_bijection_check(p.replace(beta=min(b0, 1.0)), sc.window)
        print(f"bijection on {len(sc.window)} sites: rel error {r.rel_error:.1e}, ok={r.ok}")
    print("offset  beta      min_log_margin  large_bound  pass")
    for off in cfg.offsets:
        q = p.replace(beta=max(b0 + off, 1e-3))
        res = beg.beg_check(q, sc.window, sc.n_max, sc.alpha)
        print(f"{off:+6.2f}  {q.beta:8.4f}  {res.report.log_margin.min():14.4f}  "
              f"{res.large_polymer_bound:11.4g}  {res.ok}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("params")
    ap.add_argument("--offsets", type=float, nargs="+", default=[-1.0, 0.0, 0.5, 1.0, 2.0])
    ap.add_argument("--no-bijection", action="store_true")
    args = ap.parse_args()
    run(EndToEndConfig(args.params, args.offsets, not args.no_bijection))


if __name__ == "__main__":
    main()
