"""Command-line scenario runner.

Every run writes line-delimited JSON records (to ``--output`` or stdout) and a
short human summary to stderr.  Exit status: 0 success, 1 a check failed,
2 usage, capacity or file-format error.

Random potentials come from numpy's PCG64 generator seeded with ``--seed``,
so trials reproduce across platforms.  The only nondeterministic record is
the trailing ``timing`` record, which ``--no-timing`` drops.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import beg
from .criterion import check_criterion, certified_pinned_bound, optimize_mu
from .errors import CapacityError, ModelFormatError
from .expansion import partition_function, ursell, ursell_from_potential
from .graphs import enumerate_trees
from .model import load_model
from .treebound import measure_mass, tree_graph_rhs, ursell_tree_bound

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


class Report:
    """Collects records and writes them as one JSON object per line."""

    def __init__(self):
        self.records = []
        self.summary = []

    def add(self, kind: str, **fields):
        self.records.append({"record": kind, **_jsonable(fields)})

    def say(self, line: str):
        self.summary.append(line)

    def write(self, out):
        for r in self.records:
            out.write(json.dumps(r, sort_keys=True) + "\n")


# --- helpers -------------------------------------------------------------


def _model(path):
    try:
        return load_model(path)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}")
    except ModelFormatError as exc:
        raise ModelFormatError(f"{path}: {exc}")


def _ids(space, text):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok not in space.ids:
            raise UsageError(f"unknown polymer id {tok!r}")
        out.append(space.index(tok))
    return out


def _mu_file(space, path):
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: {exc.msg}", exc.lineno, exc.colno)
    if not isinstance(raw, dict) or set(raw) - set(space.ids):
        raise ModelFormatError(f"{path}: mu must be an object keyed by polymer ids")
    return np.array([float(raw.get(k, 0.0)) for k in space.ids])


def _beg_scenario(path, beta=None):
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: {exc.msg}", exc.lineno, exc.colno)
    try:
        sc = beg.scenario_from_dict(raw)
        if beta is not None:
            sc.params = sc.params.replace(beta=beta)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: {exc!s}")
    return sc


def _params_record(p: beg.BegParams):
    return {"d": p.d, "D": p.D, "J1": p.j1, "lambda": p.lam, "lambda_prime": p.lam_prime,
            "c": p.c, "beta": p.beta, "j_amp": p.j_amp, "k_amp": p.k_amp}


def _constants(p: beg.BegParams):
    return {"J": p.J, "gap": p.gap, "J2": beg.j2_constant(p), "Jbeta": beg.jbeta(p),
            "x": 8 * p.d * math.exp(-p.beta * p.gap)}


# --- subcommands ---------------------------------------------------------


def cmd_ursell(args, rep):
    space = _model(args.model)
    cfg = _ids(space, args.config)
    phi = ursell(space, cfg, args.method)
    bound = ursell_tree_bound(space, cfg)
    rep.add("ursell", config=[space.ids[i] for i in cfg], phi=phi, tree_bound=bound)
    rep.say(f"phi^T = {phi:.12g}, tree-graph bound = {bound:.12g}")
    return EXIT_OK


def cmd_partition(args, rep):
    space = _model(args.model)
    vol = _ids(space, args.volume) if args.volume else None
    res = partition_function(space, vol, n_cap=args.n_cap)
    rep.add("partition", value=res.value, exact=res.exact, tail_bound=res.tail_bound,
            max_order=res.max_order, terms=res.terms, partial_sums=np.cumsum(res.terms))
    rep.say(f"Xi = {res.value:.12g} ({'exact' if res.exact else f'tail <= {res.tail_bound:.3g}'})")
    return EXIT_OK


def cmd_verify_identity(args, rep):
    n = args.n
    tol = args.tolerance if args.tolerance is not None else 1e-7
    rng = np.random.Generator(np.random.PCG64(args.seed))
    iu = np.triu_indices(n, 1)
    worst = 0.0
    for t in range(args.trials):
        V = np.zeros((n, n))
        V[iu] = rng.uniform(args.low, args.high, size=len(iu[0]))
        V = V + V.T
        lhs = ursell_from_potential(V, "graphs")
        rhs = tree_graph_rhs(V)
        worst = max(worst, abs(rhs - lhs))
    masses = [measure_mass(tr) for tr in enumerate_trees(n)]
    mass_err = max(abs(m - 1.0) for m in masses)
    ok = worst < tol and mass_err < 1e-9
    rep.add("verify_identity", n=n, trials=args.trials, low=args.low, high=args.high,
            max_residual=worst, tolerance=tol, trees=len(masses), max_mass_error=mass_err, passed=ok)
    rep.say(f"tree-graph identity n={n}: {args.trials} trials, max residual {worst:.3e} "
            f"(tol {tol:g}); measure mass error {mass_err:.1e} -> {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def _criterion_records(space, report, rep, pinned_order):
    rep.add("criterion", **report.as_dict(space.ids))
    if report.ok and pinned_order:
        for g in range(len(space)):
            cert = certified_pinned_bound(space, report.mu, g, check_order=pinned_order)
            rep.add("pinned", gamma0=space.ids[g], bound=cert.bound,
                    scaled_partial_sums=cert.scaled_partial_sums, consistent=cert.consistent)
            if not cert.consistent:
                rep.say(f"pinned partial sums exceed mu for {space.ids[g]}")
                return False
    return True


def cmd_check_criterion(args, rep):
    space = _model(args.model)
    if args.optimize_mu:
        search = optimize_mu(space)
        mu, sweeps = search.mu, search.sweeps
        rep.add("mu_search", sweeps=sweeps, history=search.history)
    elif args.mu:
        mu = _mu_file(space, args.mu)
    else:
        raise UsageError("check-criterion needs --mu FILE or --optimize-mu")
    report = check_criterion(space, mu)
    consistent = _criterion_records(space, report, rep, args.pinned_order)
    w = report.worst
    rep.say(f"certificate {'found' if report.ok else 'not found'}; "
            f"smallest log-margin {report.log_margin[w]:.6g} at {space.ids[w]}")
    return EXIT_OK if report.ok and consistent else EXIT_FAIL


def cmd_optimize_mu(args, rep):
    space = _model(args.model)
    search = optimize_mu(space, sweeps=args.sweeps)
    rep.add("mu_search", sweeps=search.sweeps, history=search.history,
            mu={k: float(v) for k, v in zip(space.ids, search.mu)})
    consistent = _criterion_records(space, search.report, rep, args.pinned_order)
    w = search.report.worst
    rep.say(f"best smallest log-margin {search.report.log_margin[w]:.6g} "
            f"({'certificate found' if search.report.ok else 'no certificate'})")
    return EXIT_OK if search.report.ok and consistent else EXIT_FAIL


def cmd_beg_beta0(args, rep):
    sc = _beg_scenario(args.params, args.beta)
    p = sc.params
    root = beg.beta0(p)
    sharp = beg.beta_envelope(p, 0.5)
    at0 = p.replace(beta=root.beta)
    env_chain = beg.chain_envelope(at0)
    env_exact = beg.convergence_envelope(at0, 0.5)
    rep.add("beg_params", **_params_record(p))
    rep.add("beg_constants", **_constants(at0))
    rep.add("beta0", beta0=root.beta, residual=root.residual, bracket=root.bracket,
            iterations=root.iterations, chain_envelope_at_beta0=env_chain.ok,
            exact_envelope_at_beta0=env_exact.ok, exact_envelope_margin=env_exact.margin,
            sharp_envelope_beta=sharp.beta)
    rep.say(f"J = {p.J:.10g}, J2 = {beg.j2_constant(p):.10g}, beta0 = {root.beta:.12g} "
            f"(residual {root.residual:.1e}); exact envelope holds from beta = {sharp.beta:.6g}")
    return EXIT_OK


def cmd_beg_check(args, rep):
    sc = _beg_scenario(args.params, args.beta)
    p = sc.params
    if sc.window is None:
        raise UsageError("beg-check needs a 'window' in the parameter file")
    root = beg.beta0(p)
    res = beg.beg_check(p, sc.window, sc.n_max, sc.alpha)
    r = res.report
    rep.add("beg_params", **_params_record(p))
    rep.add("beg_constants", **_constants(p), beta0=root.beta, alpha=sc.alpha, n_max=sc.n_max,
            window_sites=len(sc.window), polymers=res.constants["polymers"],
            max_tail=res.constants["max_tail"])
    w = r.worst
    rep.add("beg_check", truncated_ok=r.ok, min_log_margin=float(r.log_margin[w]),
            worst_polymer=res.space.ids[w],
            large_polymer_bound=res.large_polymer_bound, large_ok=res.large_ok, passed=res.ok)
    rep.say(f"beta = {p.beta:.6g} (beta0 = {root.beta:.6g}): truncated criterion "
            f"{'passes' if r.ok else 'fails'}, large-polymer bound {res.large_polymer_bound:.3g} "
            f"vs alpha {sc.alpha:g} -> {'PASS' if res.ok else 'FAIL'}")
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_bijection_check(args, rep):
    sc = _beg_scenario(args.params, args.beta)
    if sc.window is None:
        raise UsageError("bijection-check needs a 'window' in the parameter file")
    tol = args.tolerance if args.tolerance is not None else 1e-10
    b = beg.spin_polymer_bijection_check(sc.params, sc.window, tol)
    rep.add("beg_params", **_params_record(sc.params))
    rep.add("bijection", z_spin=b.z_spin, z_polymer=b.z_polymer, rel_error=b.rel_error,
            configurations=b.configurations, separated=b.separated, round_trip=b.round_trip,
            energy_max_error=b.energy_max_error, tolerance=tol, passed=b.ok)
    rep.say(f"Z spin = {b.z_spin:.12g}, Z polymer = {b.z_polymer:.12g}, "
            f"relative error {b.rel_error:.2e} -> {'PASS' if b.ok else 'FAIL'}")
    return EXIT_OK if b.ok else EXIT_FAIL


# --- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", type=Path, help="write JSON-lines records here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1,
                        help="recorded in the report; computations run on one thread")
    common.add_argument("--tolerance", type=float, default=None)
    common.add_argument("--no-timing", action="store_true", help="omit the timing record")

    parser = argparse.ArgumentParser(prog="polymergas", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ursell", parents=[common], help="Ursell coefficient and its tree-graph bound")
    p.add_argument("model")
    p.add_argument("--config", required=True, help="comma-separated polymer ids (repeats allowed)")
    p.add_argument("--method", choices=["auto", "graphs", "recursive"], default="auto")
    p.set_defaults(func=cmd_ursell)

    p = sub.add_parser("partition", parents=[common], help="finite-volume partition function")
    p.add_argument("model")
    p.add_argument("--volume", help="comma-separated polymer ids (default: all)")
    p.add_argument("--n-cap", type=int, default=None)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("verify-identity", parents=[common], help="tree-graph identity on random potentials")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--low", type=float, default=-2.0)
    p.add_argument("--high", type=float, default=2.0)
    p.set_defaults(func=cmd_verify_identity)

    p = sub.add_parser("check-criterion", parents=[common], help="check the convergence criterion")
    p.add_argument("model")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--mu", help="JSON object mapping polymer ids to mu")
    g.add_argument("--optimize-mu", action="store_true")
    p.add_argument("--pinned-order", type=int, default=0,
                   help="also compare rho * pinned partial sums to mu up to this order")
    p.set_defaults(func=cmd_check_criterion)

    p = sub.add_parser("optimize-mu", parents=[common], help="search for a certifying mu")
    p.add_argument("model")
    p.add_argument("--sweeps", type=int, default=60)
    p.add_argument("--pinned-order", type=int, default=0)
    p.set_defaults(func=cmd_optimize_mu)

    for name, func, text in [("beg-beta0", cmd_beg_beta0, "beta0 and derived constants"),
                             ("beg-check", cmd_beg_check, "criterion on the truncated BEG space"),
                             ("bijection-check", cmd_bijection_check, "spin sum vs polymer gas on a window")]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("params", help="JSON parameter file")
        p.add_argument("--beta", type=float, default=None, help="override beta")
        p.set_defaults(func=func)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        stderr.write("error: --threads must be >= 1\n")
        return EXIT_USAGE
    rep = Report()
    inputs = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
              if k not in ("func", "output", "no_timing")}
    rep.add("scenario", **inputs)
    t0 = time.perf_counter()
    try:
        code = args.func(args, rep)
    except (UsageError, CapacityError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ModelFormatError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    rep.add("status", exit_code=code)
    if not args.no_timing:
        rep.add("timing", wall_time=time.perf_counter() - t0,
                timestamp=datetime.now(timezone.utc).isoformat())
    if args.output:
        with open(args.output, "w") as fh:
            rep.write(fh)
    else:
        rep.write(stdout)
    for line in rep.summary:
        stderr.write(line + "\n")
    return code


def main():
    sys.exit(run())
