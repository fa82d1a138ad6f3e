"""``hybridsim`` command-line interface.

Exit codes: 0 ok, 1 config parse error, 2 validation error, 3 numerical
abort, 4 inadequate Fock truncation, 5 invalid density.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .bracket import (
    HybridObservable,
    bracket_analytic,
    bracket_numeric,
    homogenized,
    parallelogram_defect,
    quadraticity_test,
)
from .config import ConfigError, RunConfig, ValidationError, load_config, load_density
from .ensemble import estimate_observables, evolve_ensemble, sample
from .fullspace import TruncationError, run_verification
from .integrator import NumericalAbort, TrajectoryRecord, conservation_report, integrate
from .model import hamiltonian_value
from .potential import ClassicalPolynomial
from .quantum_ops import PAULI

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_TRUNCATION, EXIT_DENSITY = range(6)

log = logging.getLogger("hybridsim")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv_atomic(path: Path, header: list[str], rows) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trajectory_columns(cfg: RunConfig) -> list[str]:
    k, d = cfg.spec.n_dof, cfg.spec.quantum_dim
    cols = ["t"] + [f"q{i}" for i in range(k)] + [f"p{i}" for i in range(k)]
    cols += [f"re_omega{i}" for i in range(d)] + [f"im_omega{i}" for i in range(d)]
    return cols + ["H_t", "norm"] + list(cfg.observables)


def trajectory_rows(traj: TrajectoryRecord, names: list[str]):
    for i, (t, s) in enumerate(zip(traj.times, traj.states)):
        yield ([t, *s.q, *s.p, *s.omega.real, *s.omega.imag, traj.energies[i], traj.norms[i]]
               + [traj.observables[n][i] for n in names])


def _load(path) -> RunConfig:
    return load_config(path)


def cmd_run(args) -> int:
    cfg = _load(args.config)
    out = Path(args.out or cfg.output_path or "trajectory.csv")
    try:
        traj = integrate(cfg.spec, cfg.initial, cfg.integrator, dict(cfg.observables))
    except NumericalAbort as exc:
        print(f"numerical abort: {exc} (step {exc.step})", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    _write_csv_atomic(out, trajectory_columns(cfg), trajectory_rows(traj, list(cfg.observables)))
    rep = conservation_report(traj)
    log.info("wrote %s (%d rows); energy drift %.3e, norm drift %.3e",
             out, len(traj), rep.max_energy_drift, rep.max_norm_drift)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load(args.config)
    if not (cfg.spec.hbar > 0 and cfg.spec.oscillator.hbar > 0):
        print("verifier requires hbar>0", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        results = run_verification(cfg.spec, cfg.initial, args.levels, n_points=args.points,
                                   alpha2_max=args.alpha2_max, seed=args.seed,
                                   flip_coupling=args.flip_coupling)
    except TruncationError as exc:
        print(f"{exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.value:.3e} (tol {r.tolerance:.0e})")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


def cmd_bracket_demo(args) -> int:
    sz = PAULI["z"]
    q, p = ClassicalPolynomial.q(), ClassicalPolynomial.p()
    f1 = HybridObservable.expectation(sz, q)
    f2 = HybridObservable.expectation(sz, p)
    ev = bracket_analytic(f1, f2)
    ev_swapped = bracket_analytic(f2, f1)
    rng = np.random.default_rng(args.seed)
    print("{q<sz>, p<sz>} at sample states (analytic | numeric | swapped):")
    for _ in range(3):
        w = rng.normal(size=2) + 1j * rng.normal(size=2)
        w /= np.linalg.norm(w)
        st = (rng.normal(size=1), rng.normal(size=1), w)
        print(f"  {ev(*st):+.12f} | {bracket_numeric(f1, f2, st):+.12f} | {ev_swapped(*st):+.12f}")
    res = quadraticity_test(ev, 2, samples=64, seed=args.seed)
    print(f"quadraticity of {{q<sz>, p<sz>}}: {res.label} (max parallelogram defect {res.max_violation:.6g})")
    if res.witness is not None:
        w1, w2 = res.witness
        print(f"  witness w1 = {np.array2string(w1, precision=6)}")
        print(f"  witness w2 = {np.array2string(w2, precision=6)}")
    e = np.eye(2, dtype=complex)
    defect, _ = parallelogram_defect(homogenized(ev), np.zeros(1), np.zeros(1), e[0], e[1])
    print(f"  eigenvector pair (|0>, |1>): defect {defect:.6g}")
    control = bracket_analytic(HybridObservable.classical(q), HybridObservable.classical(p))
    c_res = quadraticity_test(control, 2, samples=16, seed=args.seed)
    print(f"control {{q, p}} = {control(*st):.12g}: {c_res.label}, constant")
    single = quadraticity_test(HybridObservable.expectation(PAULI["x"]), 2, samples=16, seed=args.seed)
    print(f"single expectation <sx>: {single.label}")
    return EXIT_OK if not res.quadratic else EXIT_VALIDATION


def cmd_ensemble(args) -> int:
    cfg = _load(args.config)
    try:
        density = load_density(args.density, cfg)
    except ValidationError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DENSITY
    if args.n < 1:
        raise ValidationError("--n must be >= 1")
    samples = sample(density, args.n, args.seed)
    k = cfg.spec.n_dof
    spec = cfg.spec
    observables = {f"q{i}": (lambda s, i=i: s.q[i]) for i in range(k)}
    observables.update({f"p{i}": (lambda s, i=i: s.p[i]) for i in range(k)})
    observables["H_t"] = lambda s: hamiltonian_value(spec, s)
    observables.update(cfg.observables)
    try:
        trajs = evolve_ensemble(cfg.spec, samples, cfg.integrator)
    except NumericalAbort as exc:
        print(f"numerical abort: {exc} (step {exc.step})", file=sys.stderr)
        return EXIT_NUMERICAL
    res = estimate_observables(trajs, observables)
    names = list(observables)
    header = ["t"] + [c for n in names for c in (f"{n}_mean", f"{n}_stderr")]
    rows = ([t] + [v for n in names for v in (res.means[n][i], res.stderrs[n][i])]
            for i, t in enumerate(res.times))
    out = Path(args.out or "ensemble.csv")
    _write_csv_atomic(out, header, rows)
    log.info("wrote %s (%d samples)", out, args.n)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridsim", description="Hybrid quantum-classical dynamics.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one trajectory and write a CSV")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="cross-check the reduced model in the full composite space")
    p.add_argument("config")
    p.add_argument("--levels", type=int, default=64, help="Fock truncation N")
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--alpha2-max", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--flip-coupling", type=int, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bracket-demo", help="show non-closure of quadratic observables under the bracket")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bracket_demo)

    p = sub.add_parser("ensemble", help="evolve a sampled density along characteristics")
    p.add_argument("config")
    p.add_argument("density")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ensemble)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
