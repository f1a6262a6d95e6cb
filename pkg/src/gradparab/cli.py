"""Command-line front end.

Subcommands: ``run`` (single solve + trajectory export), ``study``
(refinement study), ``check`` (all property suites) and ``indicators``
(quality-indicator table across levels).  Exit code 0 means every requested
assertion passed, 1 an assertion failed, 2 a configuration error; errors
are emitted as JSON records on stdout.
"""

import argparse
import json
import sys

import numpy as np

from . import analysis as _an
from . import flux as _flux
from . import nonlinearity as _nl
from .errors import ConfigError, GradparabError, PropertyViolation
from .study import StudyConfig, indicators_table, run_single, run_study

__all__ = ["main", "cli"]


def _load_config(path, overrides, min_levels=2):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return StudyConfig.from_dict(raw, min_levels=min_levels)


def _emit(record, fmt):
    if fmt == "json":
        print(json.dumps(record, default=float, sort_keys=True))
    else:
        if "rows" in record:
            for r in record["rows"]:
                print(
                    f"{r['experiment']},{r['level']},{r['h']},{r['dt']},"
                    f"{r['monitor']},{r['value']},{r['threshold']},{r['pass']}"
                )
        else:
            print(record)


def _cmd_run(args):
    config = _load_config(args.config, {"seed": args.seed, "out_dir": args.out_dir}, args.min_levels)
    out = run_single(config)
    _emit({"experiment": out["experiment"], "steps": len(out["nodes"]) - 1}, args.format)
    return 0


def _cmd_study(args):
    config = _load_config(args.config, {"seed": args.seed, "out_dir": args.out_dir}, args.min_levels)
    summary = run_study(config)
    if args.format == "json":
        print(json.dumps({"experiment": summary["experiment"], "pass": summary["pass"], "verdicts": summary["verdicts"]}, default=float, sort_keys=True))
    else:
        _emit(summary, args.format)
    return 0 if summary["pass"] else 1


def _cmd_check(args):
    samples = args.samples
    seed = args.seed if args.seed is not None else 0
    results = {}
    try:
        for name in _nl.PAIR_NAMES:
            rep = _nl.check_pair_inequalities(_nl.get_pair(name), samples, seed)
            results[f"pair[{name}]"] = min(rep.margins.values())
        for opname, op in (
            ("laplace", _flux.laplace()),
            ("p_laplace(3)", _flux.p_laplace(3.0)),
            ("p_laplace(4)", _flux.p_laplace(4.0)),
        ):
            rep = _flux.check_operator_hypotheses(op, samples, seed)
            results[f"operator[{opname}]"] = rep["coercivity_margin"]
        results["pcr_commutation"] = _check_pcr(seed)
        results["step_sum_identity"] = _check_step_sums(seed)
        results["metric_axioms"] = _check_metric(seed)
    except PropertyViolation as exc:
        print(json.dumps({"error": str(exc), "suite": "check", "code": 1}))
        return 1
    record = {"suites": {k: float(v) if not isinstance(v, bool) else v for k, v in results.items()}, "pass": True}
    print(json.dumps(record, default=float, sort_keys=True))
    return 0


def _check_pcr(seed):
    from .discretisation import apply_nonlinearity, reconstruct
    from .instances import Mesh1D, TriMesh2D, build_mass_lumped_p1_1d, build_mass_lumped_p1_2d

    rng = np.random.default_rng(seed)
    gds = [
        build_mass_lumped_p1_1d(Mesh1D.uniform(7)),
        build_mass_lumped_p1_2d(TriMesh2D.structured_square(4)),
    ]
    chis = [np.abs, np.sin, _nl.stefan_pair().zeta, _nl.doubly_degenerate_pair().beta]
    for gd in gds:
        for _ in range(50):
            u = rng.standard_normal(gd.dof_count) * rng.uniform(0.5, 3.0)
            chi = chis[int(rng.integers(len(chis)))]
            left = reconstruct(gd, apply_nonlinearity(u, chi))
            right = reconstruct(gd, u).apply(chi)
            if left != right:
                raise PropertyViolation("pcr_commutation", gd.gd_id, float("nan"))
    return True


def _check_step_sums(seed):
    rng = np.random.default_rng(seed)
    for i in range(100):
        n = int(rng.integers(2, 12))
        steps = rng.uniform(0.2, 1.5, n)
        a = np.where(rng.random(n) < 0.4, 0.0, rng.uniform(0.0, 2.0, n))
        tau = float(rng.uniform(0.05, 3.0))
        s = float(rng.uniform(-2.0, 2.0))
        out = _an.step_sum_identities(steps, a, tau, s)
        if abs(out["lhs1"] - out["rhs1"]) > 1e-12 * max(out["rhs1"], 1e-30):
            raise PropertyViolation("step_sum_equality", i, out["lhs1"] - out["rhs1"])
        if out["lhs2"] > out["rhs2"] + 1e-12:
            raise PropertyViolation("step_sum_bound", i, out["lhs2"] - out["rhs2"])
    return True


def _check_metric(seed):
    rng = np.random.default_rng(seed)
    fam = _an.SineFamily([(0.0, 1.0)])
    for i in range(200):
        a, b, c = rng.standard_normal((3, len(fam)))
        dab = _an.weak_metric(fam, a, b)
        dba = _an.weak_metric(fam, b, a)
        dac = _an.weak_metric(fam, a, c)
        dcb = _an.weak_metric(fam, c, b)
        if abs(dab - dba) > 1e-12:
            raise PropertyViolation("metric_symmetry", i, dab - dba)
        if dab > dac + dcb + 1e-12:
            raise PropertyViolation("metric_triangle", i, dab - dac - dcb)
        if dab > _an.weak_metric_bound(fam) + 1e-12:
            raise PropertyViolation("metric_bound", i, dab)
    return True


def _cmd_indicators(args):
    config = _load_config(args.config, {"seed": args.seed, "out_dir": args.out_dir}, args.min_levels)
    records = indicators_table(config)
    if args.format == "json":
        print(json.dumps(records, default=float, sort_keys=True))
    else:
        cols = [
            "level",
            "h",
            "coercivity_constant",
            "consistency_defect",
            "conformity_defect",
            "compactness_modulus",
            "interpolation_defect",
        ]
        print(",".join(cols))
        for r in records:
            print(",".join(repr(float(r[c])) if c != "level" else str(r[c]) for c in cols))
    return 0


def cli(argv=None):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out-dir", default=None)
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="gradparab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common], help="single solve with trajectory export")
    p_run.add_argument("config")
    p_run.set_defaults(func=_cmd_run, min_levels=1)

    p_study = sub.add_parser("study", parents=[common], help="refinement study")
    p_study.add_argument("config")
    p_study.set_defaults(func=_cmd_study, min_levels=2)

    p_check = sub.add_parser("check", parents=[common], help="run all property suites")
    p_check.add_argument("--samples", type=int, default=20000)
    p_check.set_defaults(func=_cmd_check, min_levels=1)

    p_ind = sub.add_parser("indicators", parents=[common], help="indicator table across levels")
    p_ind.add_argument("config")
    p_ind.set_defaults(func=_cmd_indicators, min_levels=1)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": str(exc), "code": 2}))
        return 2
    except PropertyViolation as exc:
        print(json.dumps({"error": str(exc), "code": 1}))
        return 1
    except GradparabError as exc:
        print(json.dumps({"error": str(exc), "code": 1}))
        return 1


def main():
    sys.exit(cli())
