"""Space-time gradient discretisations: reconstruction, discrete gradient,
interpolation, the dual seminorm and the four quality indicators.

A discretisation carries a finite dof set, one disjoint sub-domain per dof on
which the reconstruction is constant, a sparse linear map onto per-element
constant gradients, and a cell-averaging interpolation.  Regions not owned by
any dof (next to the Dirichlet boundary) reconstruct to zero.  All geometric
integrals run over one labelled quadrature point set: every point knows the
element it sits in and the dof (or -1) whose sub-domain covers it.
"""

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionMismatch, NoConvergence, QuadratureFailure, SolveFailure

__all__ = [
    "GradientDiscretisation",
    "TimeGrid",
    "Trajectory",
    "PiecewiseConstantField",
    "reconstruct",
    "apply_nonlinearity",
    "interpolate",
    "dual_seminorm",
    "norm_coercivity",
    "consistency_defect",
    "limit_conformity_defect",
    "compactness_modulus",
    "indicator_record",
]

_DENSE_LIMIT = 1500


class GradientDiscretisation:
    """Discrete space with piecewise-constant reconstruction.

    Built by the instance builders; fields:

    - ``dof_count``, ``dim``, ``p``
    - ``cell_meas``: (n,) measures of the per-dof sub-domains
    - ``boundary_meas``: measure of the zero-valued remainder of the domain
    - ``grad_matrix``: sparse ((m*d), n) map from dofs to element gradients
    - ``grad_meas``: (m,) element measures
    - ``qp, qw, q_cell, q_owner``: labelled quadrature point set covering
      the domain (owner -1 marks the zero-valued boundary region)
    - ``dof_points``: (n, d) nodal positions (used by p != 2 interpolants)
    - ``geometry``: mesh handle used for translation queries
    """

    def __init__(
        self,
        dim,
        p,
        cell_meas,
        grad_matrix,
        grad_meas,
        qp,
        qw,
        q_cell,
        q_owner,
        dof_points=None,
        geometry=None,
        h=None,
        gd_id=None,
    ):
        self.dim = int(dim)
        self.p = float(p)
        self.cell_meas = np.asarray(cell_meas, dtype=float)
        self.dof_count = self.cell_meas.size
        self.grad_matrix = sp.csr_matrix(grad_matrix)
        self.grad_meas = np.asarray(grad_meas, dtype=float)
        self.qp = np.asarray(qp, dtype=float)
        self.qw = np.asarray(qw, dtype=float)
        self.q_cell = np.asarray(q_cell, dtype=int)
        self.q_owner = np.asarray(q_owner, dtype=int)
        self.dof_points = None if dof_points is None else np.asarray(dof_points, dtype=float)
        self.geometry = geometry
        self.h = h
        self.gd_id = gd_id or f"gd(dim={dim})"
        self.boundary_meas = float(self.qw[self.q_owner < 0].sum())
        self._gram = None
        self._gram_lu = None

    # -- linear algebra helpers ------------------------------------------

    @property
    def n_grad_cells(self):
        return self.grad_meas.size

    def gradients(self, u):
        """Per-element constant gradients, shape (m, d)."""
        u = self._check(u)
        return (self.grad_matrix @ u).reshape(self.n_grad_cells, self.dim)

    def gram_matrix(self):
        """Gradient Gram matrix (the p = 2 stiffness)."""
        if self._gram is None:
            w = np.repeat(self.grad_meas, self.dim)
            self._gram = (self.grad_matrix.T @ sp.diags(w) @ self.grad_matrix).tocsc()
        return self._gram

    def solve_gram(self, b):
        if self.dof_count == 0:
            return np.zeros(0)
        if self._gram_lu is None:
            try:
                self._gram_lu = spla.splu(self.gram_matrix())
            except RuntimeError as exc:  # pragma: no cover - singular build
                raise SolveFailure(f"gradient Gram matrix is singular: {exc}")
        return self._gram_lu.solve(np.asarray(b, dtype=float))

    def _check(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dof_count,):
            raise DimensionMismatch(f"expected {self.dof_count} dofs, got {u.shape}")
        return u

    # -- norms -------------------------------------------------------------

    def pi_norm(self, u, p=None):
        """L^p norm of the reconstruction of u."""
        u = self._check(u)
        p = self.p if p is None else p
        return float(np.dot(self.cell_meas, np.abs(u) ** p) ** (1.0 / p))

    def grad_norm(self, u, p=None):
        """L^p norm of the reconstructed gradient of u."""
        p = self.p if p is None else p
        g = self.gradients(u)
        mags = np.linalg.norm(g, axis=1)
        return float(np.dot(self.grad_meas, mags**p) ** (1.0 / p))

    def cell_integrals(self, values_at_qp):
        """Per-dof integrals of a function sampled on the quadrature set."""
        contrib = self.qw * values_at_qp
        keep = self.q_owner >= 0
        return np.bincount(self.q_owner[keep], weights=contrib[keep], minlength=self.dof_count)

    def element_integrals(self, values_at_qp):
        contrib = self.qw * values_at_qp
        return np.bincount(self.q_cell, weights=contrib, minlength=self.n_grad_cells)

    def total_measure(self):
        return float(self.qw.sum())


class PiecewiseConstantField:
    """Reconstruction of a dof vector: constant per dof cell, a fixed
    background value on the remainder of the domain (0 for plain dof fields).
    """

    def __init__(self, gd, values, background=0.0):
        self.gd = gd
        self.values = np.asarray(values, dtype=float)
        self.background = float(background)

    def apply(self, chi):
        return PiecewiseConstantField(
            self.gd, chi(self.values), float(chi(np.asarray(self.background)))
        )

    def at_quadrature(self):
        vals = np.where(
            self.gd.q_owner >= 0,
            self.values[np.clip(self.gd.q_owner, 0, None)],
            self.background,
        )
        return vals

    def lp_norm(self, p=None):
        p = self.gd.p if p is None else p
        total = float(np.dot(self.gd.cell_meas, np.abs(self.values) ** p))
        total += self.gd.boundary_meas * abs(self.background) ** p
        return total ** (1.0 / p)

    def integrate_against(self, fn):
        """Integral of (field * fn) over the domain, fn vectorized on points."""
        vals = self.at_quadrature() * np.asarray(fn(self.gd.qp))
        return float(np.dot(self.gd.qw, vals))

    def __eq__(self, other):
        return (
            isinstance(other, PiecewiseConstantField)
            and self.gd is other.gd
            and self.background == other.background
            and np.array_equal(self.values, other.values)
        )


def reconstruct(gd, u):
    """Piecewise-constant reconstruction of a dof vector."""
    return PiecewiseConstantField(gd, gd._check(u), 0.0)


def apply_nonlinearity(u, chi):
    """Apply a scalar function dof-wise; commutes exactly with reconstruct."""
    return chi(np.asarray(u, dtype=float))


def interpolate(gd, g):
    """Cell-average interpolation of an integrable function."""
    if gd.dof_count == 0:
        return np.zeros(0)
    vals = np.asarray(g(gd.qp), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise QuadratureFailure("non-finite samples while interpolating")
    return gd.cell_integrals(vals) / gd.cell_meas


# -- the dual seminorm and indicator computations ---------------------------


def _sup_linear(gd, c, full_output=False):
    """sup of c.z over the unit sphere of the discrete gradient p-norm."""
    if gd.dof_count == 0 or not np.any(c):
        return (0.0, {"exact": True, "gap": 0.0}) if full_output else 0.0
    z = gd.solve_gram(c)
    val2 = float(np.dot(c, z))
    if val2 < 0:
        raise SolveFailure("gradient Gram matrix is not positive definite")
    if gd.p == 2.0:
        val = np.sqrt(val2)
        if full_output:
            ng = gd.grad_norm(z)
            info = {"exact": True, "gap": 0.0, "maximizer": z / ng if ng > 0 else z}
            return val, info
        return val
    val, info = _ratio_ascent(gd, lambda v: float(np.dot(c, v)), lambda v: c, z)
    info["exact"] = False
    return (val, info) if full_output else val


def _grad_pnorm_and_grad(gd, z):
    g = gd.gradients(z)
    mags = np.linalg.norm(g, axis=1)
    p = gd.p
    N = float(np.dot(gd.grad_meas, mags**p) ** (1.0 / p))
    safe = np.maximum(mags, 1e-300)
    coef = gd.grad_meas * safe ** (p - 2.0)
    dN = gd.grad_matrix.T @ (coef[:, None] * g).ravel()
    dN *= N ** (1.0 - p)
    return N, dN


def _ratio_ascent(gd, fval, fgrad, z0, tol=1e-8, cap=2000):
    """Maximize fval(z) / ||grad z||_p by normalized gradient ascent.

    Any feasible iterate certifies a lower bound; the reported gap is the
    last relative improvement plus a stationarity residual.
    """
    z = np.asarray(z0, dtype=float).copy()
    if fval(z) < 0:
        z = -z
    N, _ = _grad_pnorm_and_grad(gd, z)
    if N == 0:
        return 0.0, {"gap": 0.0, "iterations": 0}
    z /= N
    best = fval(z)
    step = 1.0
    last_improvement = np.inf
    it = 0
    for it in range(cap):
        N, dN = _grad_pnorm_and_grad(gd, z)
        grad = np.asarray(fgrad(z), dtype=float) - best * dN
        gnorm = np.linalg.norm(grad)
        if gnorm == 0.0:
            last_improvement = 0.0
            break
        improved = False
        t = step
        for _ in range(30):
            cand = z + t * grad / gnorm * max(np.linalg.norm(z), 1.0)
            Nc, _ = _grad_pnorm_and_grad(gd, cand)
            if Nc > 0:
                cand = cand / Nc
                v = fval(cand)
                if v > best:
                    last_improvement = (v - best) / max(abs(v), 1e-300)
                    z, best = cand, v
                    step = t * 1.5
                    improved = True
                    break
            t *= 0.5
        if not improved:
            last_improvement = 0.0
            break
        if last_improvement < tol:
            break
    N, dN = _grad_pnorm_and_grad(gd, z)
    stat = np.linalg.norm(np.asarray(fgrad(z), dtype=float) - best * dN)
    gap = float(last_improvement + stat * np.linalg.norm(z) / max(abs(best), 1e-300) * 1e-3)
    if it == cap - 1 and last_improvement > 1e-6:
        raise NoConvergence("ratio ascent hit the iteration cap", value=best, iterate=z)
    return float(best), {"gap": gap, "iterations": it + 1, "maximizer": z}


def dual_seminorm(gd, w, full_output=False):
    """Dual seminorm of a dof vector.

    The supremum of the mass pairing of w against z over all z with unit
    discrete-gradient p-norm.  For p = 2 this is one exact linear solve
    (the maximizer solves Gram z = Mass w); otherwise a certified lower
    bound from convex ascent with a reported gap.
    """
    w = gd._check(w)
    c = gd.cell_meas * w
    return _sup_linear(gd, c, full_output=full_output)


def norm_coercivity(gd, full_output=False, seed=0, starts=3):
    """Operator norm of the reconstruction against the gradient norm."""
    if gd.dof_count == 0:
        return (0.0, {"exact": True}) if full_output else 0.0
    if gd.p == 2.0:
        M = sp.diags(gd.cell_meas)
        A = gd.gram_matrix()
        if gd.dof_count <= _DENSE_LIMIT:
            lam = scipy.linalg.eigh(
                M.toarray(), A.toarray(), eigvals_only=True, subset_by_index=[gd.dof_count - 1, gd.dof_count - 1]
            )[0]
        else:
            lam = _power_iteration(gd, M)
        val = float(np.sqrt(max(lam, 0.0)))
        return (val, {"exact": True}) if full_output else val
    rng = np.random.default_rng(seed)
    p = gd.p

    def fval(v):
        return float(np.dot(gd.cell_meas, np.abs(v) ** p) ** (1.0 / p))

    def fgrad(v):
        f = fval(v)
        if f == 0:
            return np.zeros_like(v)
        return f ** (1.0 - p) * gd.cell_meas * np.abs(v) ** (p - 1.0) * np.sign(v)

    z0 = gd.solve_gram(gd.cell_meas)
    best, info = _ratio_ascent(gd, fval, fgrad, z0)
    for _ in range(starts):
        v, inf2 = _ratio_ascent(gd, fval, fgrad, rng.standard_normal(gd.dof_count))
        if v > best:
            best, info = v, inf2
    info["exact"] = False
    return (best, info) if full_output else best


def _power_iteration(gd, M, tol=1e-10, cap=20000):
    v = np.ones(gd.dof_count)
    lam = 0.0
    for _ in range(cap):
        w = gd.solve_gram(M @ v)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v_new = w / nrm
        lam_new = float(np.dot(v_new, M @ v_new) / np.dot(v_new, gd.gram_matrix() @ v_new))
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            return lam_new
        lam, v = lam_new, v_new
    raise NoConvergence("power iteration did not converge", value=lam)


def consistency_defect(gd, phi, full_output=False):
    """Best-approximation defect of a smooth boundary-zero function.

    Minimizes the sum of the reconstruction misfit in L^max(p,2) and the
    gradient misfit in L^p.  For p = 2 the convex objective is minimized by
    iteratively reweighted least squares to 1e-12 stagnation; otherwise the
    value at the nodal interpolant is returned (an upper bound).
    """
    phi_q = np.asarray(phi.value(gd.qp), dtype=float)
    grad_q = np.asarray(phi.grad(gd.qp), dtype=float)
    if gd.dof_count == 0:
        q1 = float(np.dot(gd.qw, phi_q**2))
        q2 = float(np.dot(gd.qw, np.sum(grad_q**2, axis=1)))
        val = np.sqrt(q1) + np.sqrt(q2)
        return (val, {"exact": True, "minimizer": np.zeros(0)}) if full_output else val
    if gd.p != 2.0:
        if gd.dof_points is not None:
            w = np.asarray(phi.value(gd.dof_points), dtype=float)
        else:
            w = interpolate(gd, phi.value)
        val = _defect_value(gd, w, phi_q, grad_q)
        return (val, {"exact": False, "minimizer": w}) if full_output else val

    b_phi = gd.cell_integrals(phi_q)
    const1 = float(np.dot(gd.qw, phi_q**2))
    # per-element integral of each gradient component
    r = np.stack(
        [gd.element_integrals(grad_q[:, c]) for c in range(gd.dim)], axis=1
    ).ravel()
    c_grad = gd.grad_matrix.T @ r
    const2 = float(np.dot(gd.qw, np.sum(grad_q**2, axis=1)))
    M = sp.diags(gd.cell_meas).tocsc()
    A = gd.gram_matrix()

    w = interpolate(gd, phi.value)
    val = None
    for _ in range(200):
        q1 = float(w @ (M @ w) - 2.0 * np.dot(w, b_phi) + const1)
        q2 = float(w @ (A @ w) - 2.0 * np.dot(w, c_grad) + const2)
        q1, q2 = max(q1, 0.0), max(q2, 0.0)
        f = np.sqrt(q1) + np.sqrt(q2)
        if val is not None and abs(val - f) <= 1e-12 * (1.0 + f):
            val = f
            break
        val = f
        if q1 < 1e-30 or q2 < 1e-30:
            break
        alpha, beta = 1.0 / np.sqrt(q1), 1.0 / np.sqrt(q2)
        lhs = (alpha * M + beta * A).tocsc()
        rhs = alpha * b_phi + beta * c_grad
        w = spla.spsolve(lhs, rhs)
    return (val, {"exact": True, "minimizer": w}) if full_output else val


def _defect_value(gd, w, phi_q, grad_q):
    q = max(gd.p, 2.0)
    field = PiecewiseConstantField(gd, w)
    misfit = np.abs(field.at_quadrature() - phi_q) ** q
    term1 = float(np.dot(gd.qw, misfit)) ** (1.0 / q)
    g = gd.gradients(w)
    gq = g[gd.q_cell] - grad_q
    term2 = float(np.dot(gd.qw, np.linalg.norm(gq, axis=1) ** gd.p)) ** (1.0 / gd.p)
    return term1 + term2


def limit_conformity_defect(gd, psi, full_output=False):
    """Defect in the discrete Stokes formula for a given vector field.

    The numerator pairs the discrete gradient against the field plus the
    reconstruction against its divergence; as a supremum over the unit
    gradient sphere it shares the dual-seminorm solver paths.
    """
    if gd.dof_count == 0:
        return (0.0, {"exact": True}) if full_output else 0.0
    psi_q = np.asarray(psi.value(gd.qp), dtype=float)
    div_q = np.asarray(psi.div(gd.qp), dtype=float)
    r = np.stack([gd.element_integrals(psi_q[:, c]) for c in range(gd.dim)], axis=1).ravel()
    a = gd.grad_matrix.T @ r + gd.cell_integrals(div_q)
    return _sup_linear(gd, a, full_output=full_output)


def compactness_modulus(gd, xi, full_output=False, seed=0, samples=8):
    """Translation modulus: worst L^p growth of translate differences.

    Reconstructions are extended by zero outside the domain; the pairwise
    overlap measures of translated against original cells reduce the p = 2
    case to a generalized eigenvalue problem, solved exactly.  For p != 2 a
    seeded sampled lower bound is returned.
    """
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if gd.dof_count == 0 or not np.any(xi):
        return (0.0, {"exact": True}) if full_output else 0.0
    C = gd.geometry.overlap_matrix(xi)
    M = np.diag(gd.cell_meas)
    T = 2.0 * M - C - C.T
    if gd.p == 2.0:
        A = gd.gram_matrix().toarray()
        lam = scipy.linalg.eigh(T, A, eigvals_only=True, subset_by_index=[gd.dof_count - 1, gd.dof_count - 1])[0]
        val = float(np.sqrt(max(lam, 0.0)))
        return (val, {"exact": True}) if full_output else val
    rng = np.random.default_rng(seed)
    A2 = gd.gram_matrix()
    z0 = None
    try:
        lam, vec = scipy.linalg.eigh(T, A2.toarray(), subset_by_index=[gd.dof_count - 1, gd.dof_count - 1])
        z0 = vec[:, 0]
    except Exception:
        pass
    leftover_i = gd.cell_meas - C.sum(axis=1)
    leftover_j = gd.cell_meas - C.sum(axis=0)

    def ratio(v):
        diff = np.abs(v[:, None] - v[None, :]) ** gd.p
        num = float(np.sum(C * diff) + np.dot(leftover_i, np.abs(v) ** gd.p) + np.dot(leftover_j, np.abs(v) ** gd.p))
        den = gd.grad_norm(v) ** gd.p
        return (num / den) ** (1.0 / gd.p) if den > 0 else 0.0

    cands = [z0] if z0 is not None else []
    cands.extend(rng.standard_normal((samples, gd.dof_count)))
    val = max(ratio(v) for v in cands)
    return (val, {"exact": False}) if full_output else val


def indicator_record(gd, name, value, exact):
    """JSON-ready record for one indicator evaluation."""
    return {
        "gd": gd.gd_id,
        "h": gd.h,
        "indicator": name,
        "value": float(value),
        "exact": bool(exact),
    }


# -- time grids and trajectories -------------------------------------------


class TimeGrid:
    """Strictly increasing time nodes from 0 to the final time."""

    def __init__(self, nodes):
        self.nodes = np.asarray(nodes, dtype=float)
        if self.nodes[0] != 0.0 or np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must start at 0 and strictly increase")
        self.steps = np.diff(self.nodes)
        self.dt_max = float(np.max(self.steps))

    @classmethod
    def uniform(cls, T, n_steps):
        return cls(np.linspace(0.0, float(T), int(n_steps) + 1))

    @property
    def T(self):
        return float(self.nodes[-1])

    @property
    def n_steps(self):
        return self.steps.size

    def index_at(self, t):
        """Index of the dof vector in force at time t (right-continuous
        convention: the value on an interval is the one at its right node)."""
        return int(np.searchsorted(self.nodes, t, side="left"))


class Trajectory:
    """Dof vectors over a time grid plus per-step solver telemetry."""

    def __init__(self, gd, timegrid, dofs, telemetry=None):
        self.gd = gd
        self.timegrid = timegrid
        self.dofs = np.asarray(dofs, dtype=float)
        if self.dofs.shape[0] != timegrid.n_steps + 1:
            raise DimensionMismatch("trajectory length must be n_steps + 1")
        self.telemetry = telemetry if telemetry is not None else []

    def at_time(self, t):
        return self.dofs[self.timegrid.index_at(t)]

    def apply(self, chi):
        return Trajectory(self.gd, self.timegrid, chi(self.dofs), self.telemetry)

    def delta(self, n):
        """Discrete time derivative on step n (difference over step size)."""
        return (self.dofs[n + 1] - self.dofs[n]) / self.timegrid.steps[n]
