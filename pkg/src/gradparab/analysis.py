"""Runnable counterparts of the a priori estimates and compactness tools.

Everything here is a monitor: it evaluates both sides of an estimate on a
computed trajectory and reports margins; the test layer asserts.
"""

import numpy as np

from .scheme import _flux_vector, _source_cells

__all__ = [
    "SineFamily",
    "energy_ledger",
    "dt_dual_estimate",
    "time_translate_norm",
    "step_sum_identities",
    "weak_metric",
    "weak_metric_bound",
    "uniform_weak_distance",
    "compensated_product_probe",
    "minty_residual",
    "sum_function",
]


class _SineWitness:
    """Tensor sine vanishing on the boundary of a box, with closed-form
    gradient and divergence-ready components."""

    def __init__(self, modes, box):
        self.modes = np.asarray(modes, dtype=int)
        self.box = np.asarray(box, dtype=float)  # (d, 2)
        self.freq = np.pi * self.modes / (self.box[:, 1] - self.box[:, 0])

    def value(self, pts):
        pts = np.atleast_2d(pts)
        out = np.ones(pts.shape[0])
        for c in range(pts.shape[1]):
            out = out * np.sin(self.freq[c] * (pts[:, c] - self.box[c, 0]))
        return out

    def grad(self, pts):
        pts = np.atleast_2d(pts)
        d = pts.shape[1]
        comps = []
        for c in range(d):
            g = np.ones(pts.shape[0])
            for c2 in range(d):
                arg = self.freq[c2] * (pts[:, c2] - self.box[c2, 0])
                g = g * (self.freq[c2] * np.cos(arg) if c2 == c else np.sin(arg))
            comps.append(g)
        return np.stack(comps, axis=1)


class SineFamily:
    """Finite witness family (phi_l) of tensor sines with weights 2^-l.

    Truncation of the dense sequence used by the weak metric; the default
    keeps 16 members.  Moment vectors against reconstructions are cached
    per discretisation.
    """

    def __init__(self, box, count=16):
        box = np.atleast_2d(np.asarray(box, dtype=float))
        self.box = box
        d = box.shape[0]
        if d == 1:
            modes = [(l + 1,) for l in range(count)]
        else:
            cand = [(i, j) for i in range(1, count + 1) for j in range(1, count + 1)]
            cand.sort(key=lambda m: (m[0] ** 2 + m[1] ** 2, m))
            modes = cand[:count]
        self.members = [_SineWitness(m, box) for m in modes]
        self.weights = 0.5 ** np.arange(len(self.members))
        self._moment_cache = {}

    def __len__(self):
        return len(self.members)

    def moment_matrix(self, gd):
        """(K, n) matrix of per-dof-cell integrals of each witness."""
        key = id(gd)
        if key not in self._moment_cache:
            rows = [gd.cell_integrals(w.value(gd.qp)) for w in self.members]
            self._moment_cache[key] = np.asarray(rows)
        return self._moment_cache[key]

    def moments(self, gd, u):
        return self.moment_matrix(gd) @ np.asarray(u, dtype=float)

    def moments_fn(self, gd, fn):
        """Moments of an arbitrary function sampled on gd's quadrature."""
        vals = np.asarray(fn(gd.qp), dtype=float)
        return np.array([float(np.dot(gd.qw, vals * w.value(gd.qp))) for w in self.members])


def weak_metric(family, moments_a, moments_b):
    """Truncated weak metric from precomputed witness moments."""
    diff = np.abs(np.asarray(moments_a) - np.asarray(moments_b))
    return float(np.dot(family.weights, np.minimum(1.0, diff)))


def weak_metric_bound(family):
    """The metric never exceeds the geometric weight total."""
    return float(np.sum(family.weights))


def uniform_weak_distance(family, traj_a, traj_b, chi=None):
    """Sup over merged time nodes of the weak metric between trajectories.

    Piecewise-constant-in-time trajectories attain the sup at nodes of the
    merged grid.  ``chi`` is applied dof-wise first (e.g. the time
    nonlinearity).
    """
    chi = chi if chi is not None else (lambda v: v)
    ma = family.moment_matrix(traj_a.gd) @ chi(traj_a.dofs).T  # (K, N_a+1)
    mb = family.moment_matrix(traj_b.gd) @ chi(traj_b.dofs).T
    nodes = np.union1d(traj_a.timegrid.nodes, traj_b.timegrid.nodes)
    worst = 0.0
    for t in nodes:
        ia = traj_a.timegrid.index_at(t)
        ib = traj_b.timegrid.index_at(t)
        worst = max(worst, weak_metric(family, ma[:, ia], mb[:, ib]))
    return worst


def energy_ledger(gd, timegrid, spec, traj, theta=1.0):
    """Both sides of the discrete energy inequality at every time node.

    Each entry carries the potential at the node, the accumulated flux
    work, the initial potential, the accumulated source work and the margin
    (right side minus left side); the implicit scheme dissipates, so margins
    stay non-negative up to solver tolerance.
    """
    pair = spec.pair
    rows = []
    B0 = float(np.dot(gd.cell_meas, np.asarray(pair.big_b_of_beta(traj.dofs[0]))))
    flux_acc = 0.0
    source_acc = 0.0
    for n in range(timegrid.n_steps):
        dt = timegrid.steps[n]
        u_next = traj.dofs[n + 1]
        zeta_next = np.asarray(pair.zeta(u_next))
        flux_vec, _, _, _ = _flux_vector(gd, spec, u_next)
        flux_acc += dt * float(np.dot(flux_vec, zeta_next))
        fc = _source_cells(gd, spec, (timegrid.nodes[n], timegrid.nodes[n + 1]), theta)
        source_acc += dt * float(np.dot(fc, zeta_next))
        lhs_B = float(np.dot(gd.cell_meas, np.asarray(pair.big_b_of_beta(u_next))))
        magnitudes = abs(lhs_B) + abs(flux_acc) + abs(B0) + abs(source_acc)
        rows.append(
            {
                "t": float(timegrid.nodes[n + 1]),
                "lhs_B": lhs_B,
                "lhs_flux": flux_acc,
                "rhs_B0": B0,
                "rhs_f": source_acc,
                "margin": B0 + source_acc - lhs_B - flux_acc,
                "magnitudes": magnitudes,
            }
        )
    return rows


def dt_dual_estimate(gd, timegrid, traj, pair):
    """Step sum of the dual seminorm of the discrete time derivative of the
    time nonlinearity, raised to the conjugate exponent."""
    from .discretisation import dual_seminorm

    p = gd.p
    pprime = p / (p - 1.0)
    beta_dofs = np.asarray(pair.beta(traj.dofs))
    total = 0.0
    for n in range(timegrid.n_steps):
        dt = timegrid.steps[n]
        delta = (beta_dofs[n + 1] - beta_dofs[n]) / dt
        total += dt * dual_seminorm(gd, delta) ** pprime
    return float(total)


def time_translate_norm(gd, timegrid, traj, pair, tau):
    """Squared L2 space-time norm of the tau time translate of the composite
    nonlinearity, computed exactly by interval-overlap bookkeeping."""
    T = timegrid.T
    if tau >= T:
        return 0.0
    nu_dofs = np.asarray(pair.nu(traj.dofs))
    cuts = np.concatenate([timegrid.nodes, timegrid.nodes - tau])
    cuts = np.unique(np.clip(cuts, 0.0, T - tau))
    if cuts[0] > 0.0:
        cuts = np.concatenate([[0.0], cuts])
    if cuts[-1] < T - tau:
        cuts = np.concatenate([cuts, [T - tau]])
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        tm = 0.5 * (lo + hi)
        ia = timegrid.index_at(tm)
        ib = timegrid.index_at(tm + tau)
        diff = nu_dofs[ib] - nu_dofs[ia]
        total += (hi - lo) * float(np.dot(gd.cell_meas, diff**2))
    return total


def step_sum_identities(steps, a, tau, s=0.0):
    """Evaluate both sides of the two window-sum bounds for step families.

    The first is an identity (the time integral of the windowed step sum
    equals tau times the full sum); the second bounds the same window length
    paired against a shifted sample of the family by (tau + max step).  Both
    left sides are computed by exact piecewise-constant integration over the
    real line; the finite support of ``a`` keeps this finite.
    """
    steps = np.asarray(steps, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.any(steps <= 0) or np.any(a < 0) or tau <= 0:
        raise ValueError("need positive steps, tau > 0 and non-negative weights")
    nodes = np.concatenate([[0.0], np.cumsum(steps)])
    dt_bar = float(np.max(steps))
    pad = abs(s) + tau + 3.0 * dt_bar
    n_left = int(np.ceil(pad / dt_bar)) + 1
    n_right = int(np.ceil(pad / dt_bar)) + 1
    ext_nodes = np.concatenate(
        [
            nodes[0] - dt_bar * np.arange(n_left, 0, -1),
            nodes,
            nodes[-1] + dt_bar * np.arange(1, n_right + 1),
        ]
    )
    ext_dt = np.diff(ext_nodes)
    ext_a = np.concatenate([np.zeros(n_left), a, np.zeros(n_right)])
    pref_da = np.concatenate([[0.0], np.cumsum(ext_dt * ext_a)])
    pref_d = np.concatenate([[0.0], np.cumsum(ext_dt)])

    def window_sum(pref, t_lo, t_hi):
        i0 = np.searchsorted(ext_nodes, t_lo, side="left")
        i1 = np.searchsorted(ext_nodes, t_hi, side="left")
        i0 = np.clip(i0, 0, len(pref) - 1)
        i1 = np.clip(i1, 0, len(pref) - 1)
        return pref[i1] - pref[i0]

    cuts = np.unique(
        np.concatenate([ext_nodes, ext_nodes - tau, ext_nodes - s])
    )
    cuts = cuts[(cuts >= ext_nodes[0]) & (cuts <= ext_nodes[-1])]
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    lens = np.diff(cuts)

    w_da = np.array([window_sum(pref_da, t, t + tau) for t in mids])
    lhs1 = float(np.dot(lens, w_da))
    rhs1 = float(tau * np.dot(steps, a))

    w_d = np.array([window_sum(pref_d, t, t + tau) for t in mids])
    idx = np.searchsorted(ext_nodes, mids + s, side="left") - 1
    idx = np.clip(idx, 0, ext_a.size - 1)
    lhs2 = float(np.dot(lens, w_d * ext_a[idx]))
    rhs2 = float((tau + dt_bar) * np.dot(steps, a))
    return {"lhs1": lhs1, "rhs1": rhs1, "lhs2": lhs2, "rhs2": rhs2}


def compensated_product_probe(levels, phi, pair, time_quad=3):
    """Weighted space-time integral of the product of both reconstructions,
    per refinement level, against the finest level as reference.

    ``levels`` is a list of (gd, timegrid, trajectory); returns values, the
    reference value and the gap sequence over the non-reference levels.
    """
    from scipy.special import roots_legendre

    xg, wg = roots_legendre(time_quad)
    values = []
    for gd, timegrid, traj in levels:
        beta_d = np.asarray(pair.beta(traj.dofs))
        zeta_d = np.asarray(pair.zeta(traj.dofs))
        total = 0.0
        for n in range(timegrid.n_steps):
            t0, t1 = timegrid.nodes[n], timegrid.nodes[n + 1]
            prod = beta_d[n + 1] * zeta_d[n + 1]
            cell_phi = np.zeros(gd.dof_count)
            for x, w in zip(xg, wg):
                t = 0.5 * (t1 - t0) * x + 0.5 * (t0 + t1)
                cell_phi += 0.5 * (t1 - t0) * w * gd.cell_integrals(np.asarray(phi(gd.qp, t)))
            total += float(np.dot(prod, cell_phi))
        values.append(total)
    reference = values[-1]
    gaps = [abs(v - reference) for v in values[:-1]]
    return {"values": values, "reference": reference, "gaps": gaps}


def minty_residual(pair, w, beta_bar, zeta_bar, weights=None):
    """L2 norm of the half-difference mismatch between declared limits and
    the pair evaluated at the candidate state."""
    w = np.asarray(w, dtype=float)
    beta_bar = np.asarray(beta_bar, dtype=float)
    zeta_bar = np.asarray(zeta_bar, dtype=float)
    weights = np.ones_like(w) / w.size if weights is None else np.asarray(weights, dtype=float)
    mism = 0.5 * (beta_bar - zeta_bar) - 0.5 * (np.asarray(pair.beta(w)) - np.asarray(pair.zeta(w)))
    return float(np.sqrt(np.dot(weights, mism**2)))


def sum_function(pair):
    """The strictly increasing sum beta + zeta as a piecewise description,
    used to recover a state from the sum of declared limits."""
    from .nonlinearity import PiecewiseLinear, _merged_knots, _piece_reps

    if isinstance(pair.beta, PiecewiseLinear) and isinstance(pair.zeta, PiecewiseLinear):
        ks = _merged_knots(pair.beta, pair.zeta)
        reps = _piece_reps(ks)
        slopes = pair.beta.deriv(reps) + pair.zeta.deriv(reps)
        return PiecewiseLinear(ks, slopes, 0.0)
    raise TypeError("sum function needs piecewise-affine descriptions")
