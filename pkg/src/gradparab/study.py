"""Refinement studies: solve across levels, evaluate monitors, emit CSV/JSON.

The CSV is the machine contract (one row per level per monitor); the JSON
summary carries the same values plus pass/fail verdicts against the
configured thresholds.  Convergence *rates* are empirical regression
targets configured per study, never theoretical claims.
"""

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import analysis as _an
from . import harness as _h
from .discretisation import (
    compactness_modulus,
    consistency_defect,
    interpolate,
    limit_conformity_defect,
    norm_coercivity,
    reconstruct,
)
from .errors import ConfigError
from .instances import Mesh1D, TriMesh2D, build_mass_lumped_p1_1d, build_mass_lumped_p1_2d, refine
from .scheme import SolverConfig, solve

__all__ = ["StudyConfig", "run_study", "run_single", "indicators_table", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1

_DEFAULT_THRESHOLDS = {
    "note": "empirical regression thresholds, not claims from the theory",
    "order_min": {},
    "strict_decrease": ["error_uniform_nu", "error_gradient_zeta"],
    "energy_slack": 1e-8,
    "apriori_ratio_max": 2.0,
    "probe_final_ratio": 0.5,
    "indicator_ratio": 0.75,
}


@dataclass
class StudyConfig:
    experiment: str
    problem: str
    mesh_kind: str = "p1_1d"
    mesh_n: int = 8
    grading: float = None
    levels: int = 4
    dt0: float = None
    dt_rule: str = "h"
    theta: float = 1.0
    seed: int = 0
    monitors: tuple = (
        "error_uniform_nu",
        "error_gradient_zeta",
        "energy",
        "apriori",
        "translate",
        "weak_uniform",
        "comp_probe",
    )
    thresholds: dict = field(default_factory=dict)
    out_dir: str = "."

    @classmethod
    def from_dict(cls, raw, min_levels=2):
        try:
            mesh = raw.get("mesh", {})
            cfg = cls(
                experiment=raw["experiment"],
                problem=raw["problem"],
                mesh_kind=mesh.get("kind", "p1_1d"),
                mesh_n=int(mesh.get("n", 8)),
                grading=mesh.get("grading"),
                levels=int(raw.get("levels", 4)),
                dt0=raw.get("dt0"),
                dt_rule=raw.get("dt_rule", "h"),
                theta=float(raw.get("theta", 1.0)),
                seed=int(raw.get("seed", 0)),
                monitors=tuple(raw.get("monitors", cls.monitors)),
                thresholds=dict(raw.get("thresholds", {})),
                out_dir=raw.get("out_dir", "."),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad study config: {exc}")
        cfg.validate(min_levels=min_levels)
        return cfg

    def validate(self, min_levels=2):
        if self.levels < min_levels:
            raise ConfigError(f"levels >= {min_levels} required for a study")
        if self.dt_rule not in ("h", "h2"):
            raise ConfigError("dt_rule must be 'h' or 'h2'")
        if not 0.5 <= self.theta <= 1.0:
            raise ConfigError("theta must lie in [1/2, 1]")
        if self.mesh_kind not in ("p1_1d", "p1_2d"):
            raise ConfigError(f"unknown mesh kind {self.mesh_kind!r}")
        if self.problem not in _h.PROBLEM_NAMES:
            raise ConfigError(f"unknown problem {self.problem!r}")

    def merged_thresholds(self):
        out = dict(_DEFAULT_THRESHOLDS)
        out.update(self.thresholds)
        return out


def _base_mesh(config, problem):
    if config.mesh_kind == "p1_1d":
        if problem.dim != 1:
            raise ConfigError("p1_1d mesh needs a 1D problem")
        dom = tuple(problem.domain[0])
        if config.grading:
            return Mesh1D.graded(config.mesh_n, dom, config.grading)
        return Mesh1D.uniform(config.mesh_n, dom)
    if problem.dim != 2:
        raise ConfigError("p1_2d mesh needs a 2D problem")
    return TriMesh2D.structured_square(config.mesh_n, tuple(map(tuple, problem.domain)))


def _default_dt0(config, problem):
    if config.dt0 is not None:
        return float(config.dt0)
    h0 = (problem.domain[0][1] - problem.domain[0][0]) / config.mesh_n
    return 0.5 * h0


def run_levels(config):
    """Solve the refinement family; returns (problem, family, trajectories)."""
    problem = _h.get_problem(config.problem)
    base = _base_mesh(config, problem)
    family = refine(
        base,
        config.levels,
        T=problem.T,
        dt0=_default_dt0(config, problem),
        dt_rule=config.dt_rule,
        p=problem.op.p,
    )
    solver = SolverConfig(theta=config.theta)
    trajs = [solve(gd, tg, problem, solver) for _, gd, tg in family]
    return problem, family, trajs


def _observed_orders(errs):
    out = []
    for a, b in zip(errs[:-1], errs[1:]):
        if a > 0 and b > 0:
            out.append(math.log2(a / b))
        else:
            out.append(float("nan"))
    return out


def run_study(config, write=True):
    """Run the configured study and (optionally) write CSV + JSON.

    Returns the summary dict; every row of the CSV appears under
    ``summary["rows"]`` as (level, h, dt, monitor, value, threshold, pass).
    """
    problem, family, trajs = run_levels(config)
    thresholds = config.merged_thresholds()
    rows = []
    per_level = {}
    verdicts = {}

    def add_row(level, monitor, value, threshold="", ok=""):
        _, gd, tg = family[level]
        rows.append(
            {
                "experiment": config.experiment,
                "level": level,
                "h": gd.h,
                "dt": tg.dt_max,
                "monitor": monitor,
                "value": value,
                "threshold": threshold,
                "pass": ok,
            }
        )
        per_level.setdefault(monitor, {})[level] = value

    for lvl, ((_, gd, tg), traj) in enumerate(zip(family, trajs)):
        if "error_uniform_nu" in config.monitors:
            add_row(lvl, "error_uniform_nu", _h.error_uniform_nu(gd, tg, traj, problem))
        if "error_gradient_zeta" in config.monitors:
            add_row(lvl, "error_gradient_zeta", _h.error_gradient_zeta(gd, tg, traj, problem))
        if "energy" in config.monitors:
            ledger = _an.energy_ledger(gd, tg, problem, traj, theta=config.theta)
            slack = thresholds["energy_slack"]
            margins = [r["margin"] + slack * (1.0 + r["magnitudes"]) for r in ledger]
            add_row(
                lvl,
                "energy_margin_min",
                min(r["margin"] for r in ledger),
                threshold=-slack,
                ok=bool(min(margins) >= 0.0),
            )
        if "apriori" in config.monitors:
            pair = problem.pair
            pot = max(
                float(np.dot(gd.cell_meas, np.asarray(pair.big_b_of_beta(traj.dofs[n]))))
                for n in range(tg.n_steps + 1)
            )
            add_row(lvl, "apriori_potential_linf_l1", pot)
            gz = sum(
                tg.steps[n] * gd.grad_norm(np.asarray(pair.zeta(traj.dofs[n + 1]))) ** gd.p
                for n in range(tg.n_steps)
            ) ** (1.0 / gd.p)
            add_row(lvl, "apriori_grad_zeta_lp", gz)
            bl2 = max(
                reconstruct(gd, np.asarray(pair.beta(traj.dofs[n]))).lp_norm(2.0)
                for n in range(tg.n_steps + 1)
            )
            add_row(lvl, "apriori_beta_linf_l2", bl2)
            add_row(lvl, "dual_dt_integral", _an.dt_dual_estimate(gd, tg, traj, problem.pair))
        if "translate" in config.monitors:
            add_row(
                lvl,
                "translate_nu_quarter",
                _an.time_translate_norm(gd, tg, traj, problem.pair, problem.T / 4.0),
            )

    if "weak_uniform" in config.monitors:
        fam = _an.SineFamily(problem.domain)
        beta = problem.pair.beta
        for lvl, traj in enumerate(trajs):
            add_row(
                lvl,
                "weak_uniform_to_finest",
                _an.uniform_weak_distance(fam, traj, trajs[-1], chi=beta),
            )
    if "comp_probe" in config.monitors:
        probe = _an.compensated_product_probe(
            [(gd, tg, traj) for (_, gd, tg), traj in zip(family, trajs)],
            lambda pts, t: np.ones(len(pts)),
            problem.pair,
        )
        for lvl, v in enumerate(probe["values"]):
            add_row(lvl, "comp_probe_value", v)
        for lvl, gap in enumerate(probe["gaps"]):
            add_row(lvl, "comp_probe_gap", gap)
        gaps = probe["gaps"]
        verdicts["comp_probe"] = bool(
            all(b < a for a, b in zip(gaps[:-1], gaps[1:]))
            and gaps[-1] <= thresholds["probe_final_ratio"] * gaps[0]
        ) if len(gaps) >= 2 else None

    # verdicts against thresholds
    for monitor in thresholds.get("strict_decrease", []):
        if monitor in per_level:
            vals = [per_level[monitor][k] for k in sorted(per_level[monitor])]
            verdicts[f"strict_decrease[{monitor}]"] = bool(
                all(b < a for a, b in zip(vals[:-1], vals[1:]))
            )
            orders = _observed_orders(vals)
            for k, o in enumerate(orders):
                add_row(k + 1, f"order_{monitor}", o)
            minorder = thresholds.get("order_min", {}).get(monitor)
            if minorder is not None:
                verdicts[f"order_min[{monitor}]"] = bool(
                    all(o >= minorder for o in orders if not math.isnan(o))
                )
    if "energy" in config.monitors:
        verdicts["energy"] = all(
            r["pass"] for r in rows if r["monitor"] == "energy_margin_min"
        )
    if "apriori" in config.monitors:
        ok = True
        for monitor in (
            "apriori_potential_linf_l1",
            "apriori_grad_zeta_lp",
            "apriori_beta_linf_l2",
            "dual_dt_integral",
        ):
            vals = [per_level[monitor][k] for k in sorted(per_level[monitor])]
            if not all(np.isfinite(vals)):
                ok = False
            for a, b in zip(vals[:-1], vals[1:]):
                if b > thresholds["apriori_ratio_max"] * (a + 1e-300):
                    ok = False
        verdicts["apriori_bounded"] = ok

    summary = {
        "schema_version": SCHEMA_VERSION,
        "experiment": config.experiment,
        "problem": config.problem,
        "seed": config.seed,
        "thresholds": thresholds,
        "rows": rows,
        "verdicts": verdicts,
        "pass": all(v for v in verdicts.values() if v is not None),
    }
    if write:
        write_outputs(config, summary)
    return summary


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["experiment", "level", "h", "dt", "monitor", "value", "threshold", "pass"])
    for r in rows:
        writer.writerow(
            [
                r["experiment"],
                r["level"],
                repr(float(r["h"])),
                repr(float(r["dt"])),
                r["monitor"],
                repr(float(r["value"])),
                repr(float(r["threshold"])) if r["threshold"] != "" else "",
                r["pass"] if r["pass"] != "" else "",
            ]
        )
    return buf.getvalue()


def write_outputs(config, summary):
    os.makedirs(config.out_dir, exist_ok=True)
    csv_path = os.path.join(config.out_dir, f"{config.experiment}.csv")
    with open(csv_path, "w") as fh:
        fh.write(rows_to_csv(summary["rows"]))
    json_path = os.path.join(config.out_dir, f"{config.experiment}.json")
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=1, default=float, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def run_single(config, write=True):
    """Solve once at the base level and export the trajectory."""
    problem = _h.get_problem(config.problem)
    base = _base_mesh(config, problem)
    builder = build_mass_lumped_p1_1d if config.mesh_kind == "p1_1d" else build_mass_lumped_p1_2d
    gd = builder(base, p=problem.op.p)
    from .discretisation import TimeGrid

    dt = _default_dt0(config, problem)
    tg = TimeGrid.uniform(problem.T, max(1, int(round(problem.T / dt))))
    traj = solve(gd, tg, problem, SolverConfig(theta=config.theta))
    out = {
        "schema_version": SCHEMA_VERSION,
        "experiment": config.experiment,
        "problem": config.problem,
        "nodes": traj.timegrid.nodes.tolist(),
        "dofs": traj.dofs.tolist(),
        "telemetry": [
            {
                "iterations": t.iterations,
                "residual": t.residual_norm,
                "fallback": t.fallback_used,
            }
            for t in traj.telemetry
        ],
    }
    if write:
        os.makedirs(config.out_dir, exist_ok=True)
        path = os.path.join(config.out_dir, f"{config.experiment}_trajectory.json")
        with open(path, "w") as fh:
            json.dump(out, fh, default=float)
            fh.write("\n")
    return out


class _LinearField:
    """Simple divergence-carrying vector field for conformity checks."""

    def __init__(self, dim):
        self.dim = dim

    def value(self, pts):
        pts = np.atleast_2d(pts)
        out = np.zeros_like(pts)
        out[:, 0] = pts[:, 0]
        return out

    def div(self, pts):
        return np.ones(len(np.atleast_2d(pts)))


class _TrigField:
    def __init__(self, dim):
        self.dim = dim

    def value(self, pts):
        pts = np.atleast_2d(pts)
        out = np.zeros_like(pts)
        out[:, 0] = np.cos(np.pi * pts[:, 0])
        if self.dim > 1:
            out[:, 1] = np.sin(np.pi * pts[:, 1])
        return out

    def div(self, pts):
        pts = np.atleast_2d(pts)
        d = -np.pi * np.sin(np.pi * pts[:, 0])
        if self.dim > 1:
            d = d + np.pi * np.cos(np.pi * pts[:, 1])
        return d


def indicators_table(config, witnesses=3):
    """Coercivity, consistency, conformity, compactness and interpolation
    defect across refinement levels; returns JSON-ready records."""
    problem = _h.get_problem(config.problem)
    base = _base_mesh(config, problem)
    builder = build_mass_lumped_p1_1d if config.mesh_kind == "p1_1d" else build_mass_lumped_p1_2d
    fam = _an.SineFamily(problem.domain, count=max(witnesses, 3))
    records = []
    mesh = base
    for lvl in range(config.levels):
        gd = builder(mesh, p=problem.op.p)
        exact = gd.p == 2.0
        entry = {"level": lvl, "gd": gd.gd_id, "h": gd.h, "exact": exact}
        entry["coercivity_constant"] = norm_coercivity(gd)
        entry["consistency_defect"] = max(
            consistency_defect(gd, w) for w in fam.members[:witnesses]
        )
        entry["conformity_defect"] = max(
            limit_conformity_defect(gd, f) for f in (_LinearField(gd.dim), _TrigField(gd.dim))
        )
        xi = np.zeros(gd.dim)
        xi[0] = 0.5 * gd.h
        entry["compactness_modulus"] = compactness_modulus(gd, xi)
        defects = []
        for w in fam.members[:witnesses]:
            u = interpolate(gd, w.value)
            fld = reconstruct(gd, u)
            diff2 = float(
                np.dot(gd.qw, (fld.at_quadrature() - np.asarray(w.value(gd.qp))) ** 2)
            )
            defects.append(np.sqrt(diff2))
        entry["interpolation_defect"] = max(defects)
        records.append(entry)
        mesh = mesh.refined()
    return records
