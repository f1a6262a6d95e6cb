"""Implicit (and theta-weighted) time steps of the gradient scheme.

Each step solves, for the dual pairing against every basis dof, the lumped
mass balance of the time nonlinearity plus the flux assembled at the
theta-averaged state, against the source integrated over the step.  Newton
uses the exact Jacobian except on plateaus of the time nonlinearity, where
the derivative is floored inside the Jacobian only; the equations themselves
are never regularised.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretisation import Trajectory, interpolate
from .errors import NoConvergence

__all__ = ["ProblemSpec", "SolverConfig", "StepTelemetry", "residual", "step", "solve"]


class ProblemSpec:
    """Continuous problem data: nonlinear pair, flux operator, source,
    initial state and final time."""

    def __init__(self, pair, op, f, u_ini, T, name=None):
        self.pair = pair
        self.op = op
        self.f = f
        self.u_ini = u_ini
        self.T = float(T)
        self.name = name


@dataclass
class SolverConfig:
    theta: float = 1.0
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    line_search_factor: float = 0.5
    line_search_max: int = 20
    beta_prime_floor: float = 1e-10
    fallback_sweeps: int = 400

    def __post_init__(self):
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [1/2, 1]")


@dataclass
class StepTelemetry:
    iterations: int = 0
    residual_norm: float = np.inf
    backtracks: int = 0
    fallback_used: bool = False
    newton_residual: float = np.inf
    fallback_residual: float = None


def weighted_norm(gd, r):
    """Euclidean norm over dofs weighted by cell measures."""
    if r.size == 0:
        return 0.0
    return float(np.sqrt(np.dot(gd.cell_meas, r**2)))


def _flux_vector(gd, spec, u_state):
    """Dual vector of the flux term assembled at one dof state."""
    pair, op = spec.pair, spec.op
    nuvals = pair.nu(u_state)
    s_q = np.where(gd.q_owner >= 0, nuvals[np.clip(gd.q_owner, 0, None)], 0.0)
    g = gd.gradients(np.asarray(pair.zeta(u_state)))
    a_q = op(gd.qp, s_q, g[gd.q_cell])
    F = np.stack([gd.element_integrals(a_q[:, c]) for c in range(gd.dim)], axis=1)
    return gd.grad_matrix.T @ F.ravel(), g, s_q, a_q


def _source_cells(gd, spec, t_interval, theta):
    """Per-dof integrals of the source with the step's time rule.

    Fully implicit steps use the right endpoint; theta < 1 uses the interval
    average via two-point Gauss.
    """
    if spec.f is None:
        return np.zeros(gd.dof_count)
    t0, t1 = t_interval
    if theta == 1.0:
        vals = np.asarray(spec.f(gd.qp, t1), dtype=float)
    else:
        h = t1 - t0
        g1 = t0 + h * (0.5 - 0.5 / np.sqrt(3.0))
        g2 = t0 + h * (0.5 + 0.5 / np.sqrt(3.0))
        vals = 0.5 * (
            np.asarray(spec.f(gd.qp, g1), dtype=float)
            + np.asarray(spec.f(gd.qp, g2), dtype=float)
        )
    return gd.cell_integrals(vals)


def residual(gd, spec, u_prev, u_next, t_interval, theta=1.0, source_cells=None):
    """Dual-pairing residual of one time step.

    Component j is the lumped mass rate of the time nonlinearity plus the
    flux at the theta state paired against basis dof j, minus the source
    integral (divided by the step length).
    """
    u_prev = gd._check(u_prev)
    u_next = gd._check(u_next)
    dt = t_interval[1] - t_interval[0]
    pair = spec.pair
    mass = gd.cell_meas * (np.asarray(pair.beta(u_next)) - np.asarray(pair.beta(u_prev))) / dt
    u_theta = theta * u_next + (1.0 - theta) * u_prev
    flux, _, _, _ = _flux_vector(gd, spec, u_theta)
    if source_cells is None:
        source_cells = _source_cells(gd, spec, t_interval, theta)
    return mass + flux - source_cells


def _jacobian(gd, spec, u_prev, u_next, dt, theta, config):
    pair, op = spec.pair, spec.op
    n = gd.dof_count
    bprime = np.asarray(pair.beta.deriv(u_next), dtype=float)
    diag = gd.cell_meas * np.maximum(bprime, config.beta_prime_floor) / dt
    J = sp.diags(diag).tocsc()
    if op.jac_xi is None:
        return J
    u_theta = theta * u_next + (1.0 - theta) * u_prev
    nuvals = np.asarray(pair.nu(u_theta))
    s_q = np.where(gd.q_owner >= 0, nuvals[np.clip(gd.q_owner, 0, None)], 0.0)
    g = gd.gradients(np.asarray(pair.zeta(u_theta)))
    g_q = g[gd.q_cell]
    Ja = op.jac_xi(gd.qp, s_q, g_q)  # (Q, d, d)
    d = gd.dim
    m = gd.n_grad_cells
    JK = np.zeros((m, d, d))
    contrib = gd.qw[:, None, None] * Ja
    np.add.at(JK, gd.q_cell, contrib)
    rows = np.repeat(np.arange(m * d), d)
    cols = (np.repeat(np.arange(m) * d, d * d) + np.tile(np.arange(d), m * d)).ravel()
    B = sp.csr_matrix((JK.reshape(m, d * d).ravel(), (rows, cols)), shape=(m * d, m * d))
    dz = theta * np.asarray(pair.zeta.deriv(u_theta), dtype=float)
    J_xi = gd.grad_matrix.T @ B @ gd.grad_matrix @ sp.diags(dz)
    J = (J + J_xi).tocsc()
    if op.jac_s is not None:
        jas = op.jac_s(gd.qp, s_q, g_q)  # (Q, d)
        nud = theta * np.asarray(pair.nu_deriv(u_theta), dtype=float)
        keep = gd.q_owner >= 0
        owners = gd.q_owner[keep]
        rows_s = (gd.q_cell[keep][:, None] * d + np.arange(d)[None, :]).ravel()
        cols_s = np.repeat(owners, d)
        data_s = (gd.qw[keep, None] * jas[keep] * nud[owners, None]).ravel()
        S = sp.csr_matrix((data_s, (rows_s, cols_s)), shape=(m * d, n))
        J = (J + gd.grad_matrix.T @ S).tocsc()
    return J


def step(gd, spec, config, u_prev, t_interval):
    """Advance one time step; returns (u_next, telemetry).

    Newton with Armijo backtracking on the weighted residual norm; after the
    iteration cap a damped diagonal fixed-point sweep is tried before
    raising :class:`NoConvergence`.
    """
    u_prev = gd._check(u_prev)
    tele = StepTelemetry()
    if gd.dof_count == 0:
        tele.residual_norm = 0.0
        tele.newton_residual = 0.0
        return u_prev.copy(), tele
    dt = t_interval[1] - t_interval[0]
    theta = config.theta
    source_cells = _source_cells(gd, spec, t_interval, theta)
    u = u_prev.copy()
    r = residual(gd, spec, u_prev, u, t_interval, theta, source_cells)
    norm = weighted_norm(gd, r)
    for it in range(config.newton_max_iter):
        if norm <= config.newton_tol:
            break
        J = _jacobian(gd, spec, u_prev, u, dt, theta, config)
        try:
            delta = spla.splu(J).solve(-r)
        except RuntimeError:
            delta = -r / J.diagonal()
        lam = 1.0
        accepted = False
        for _ in range(config.line_search_max):
            u_try = u + lam * delta
            r_try = residual(gd, spec, u_prev, u_try, t_interval, theta, source_cells)
            norm_try = weighted_norm(gd, r_try)
            if norm_try <= (1.0 - 1e-4 * lam) * norm:
                u, r, norm = u_try, r_try, norm_try
                accepted = True
                break
            lam *= config.line_search_factor
            tele.backtracks += 1
        if not accepted:
            # keep the best strictly improving point if any, else bail out
            if norm_try < norm:
                u, r, norm = u_try, r_try, norm_try
            else:
                break
        tele.iterations = it + 1
    tele.newton_residual = norm
    if norm > config.newton_tol:
        u, norm = _fallback_sweep(gd, spec, config, u_prev, u, t_interval, source_cells)
        tele.fallback_used = True
        tele.fallback_residual = norm
        if norm > config.newton_tol:
            raise NoConvergence(
                f"step on {t_interval} stalled at residual {norm:.3e}",
                value=norm,
                iterate=u,
                residual=norm,
            )
    tele.residual_norm = norm
    return u, tele


def _fallback_sweep(gd, spec, config, u_prev, u, t_interval, source_cells):
    dt = t_interval[1] - t_interval[0]
    theta = config.theta
    u = u.copy()
    r = residual(gd, spec, u_prev, u, t_interval, theta, source_cells)
    norm = weighted_norm(gd, r)
    omega = 1.0
    for _ in range(config.fallback_sweeps):
        if norm <= config.newton_tol:
            break
        J = _jacobian(gd, spec, u_prev, u, dt, theta, config)
        diag = np.asarray(J.diagonal())
        diag = np.where(np.abs(diag) > 1e-300, diag, 1.0)
        u_try = u - omega * r / diag
        r_try = residual(gd, spec, u_prev, u_try, t_interval, theta, source_cells)
        norm_try = weighted_norm(gd, r_try)
        if norm_try < norm:
            u, r, norm = u_try, r_try, norm_try
            omega = min(1.0, omega * 1.2)
        else:
            omega *= 0.5
            if omega < 1e-8:
                break
    return u, norm


def solve(gd, timegrid, spec, config=None):
    """March the scheme over the whole grid from the interpolated initial
    state; returns the trajectory with per-step telemetry."""
    config = config or SolverConfig()
    n = gd.dof_count
    dofs = np.zeros((timegrid.n_steps + 1, n))
    dofs[0] = interpolate(gd, spec.u_ini) if n else np.zeros(0)
    telemetry = []
    for k in range(timegrid.n_steps):
        interval = (timegrid.nodes[k], timegrid.nodes[k + 1])
        try:
            u_next, tele = step(gd, spec, config, dofs[k], interval)
        except NoConvergence as exc:
            raise NoConvergence(
                f"no convergence at step {k + 1}/{timegrid.n_steps}: {exc}",
                value=exc.value,
                iterate=exc.iterate,
                residual=exc.residual,
            ) from exc
        dofs[k + 1] = u_next
        # re-check with a fresh residual evaluation, independent of the
        # solver's internal bookkeeping
        r = residual(gd, spec, dofs[k], u_next, interval, config.theta)
        tele.residual_norm = weighted_norm(gd, r)
        telemetry.append(tele)
    return Trajectory(gd, timegrid, dofs, telemetry)
