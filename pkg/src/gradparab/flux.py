"""Leray-Lions flux operators with hypothesis checkers.

An operator maps (x, s, xi) to a d-vector and is declared with its exponent
p, a coercivity constant, a growth envelope and (optionally) Jacobians used
by the Newton solver.  The declared constants are validated by seeded
sampling, not derived.
"""

import numpy as np

from .errors import PropertyViolation

__all__ = [
    "LerayLionsOperator",
    "eval_flux",
    "check_operator_hypotheses",
    "laplace",
    "p_laplace",
    "scalar_diffusion",
    "get_operator",
]


class LerayLionsOperator:
    """Monotone coercive flux a(x, s, xi) with (p-1)-growth.

    Parameters
    ----------
    p : float
        Exponent in (1, inf) governing coercivity and growth.
    eval_fn : callable
        Vectorized map (x: (q, d), s: (q,), xi: (q, d)) -> (q, d).
    a_lower : float
        Coercivity constant: a(x, s, xi) . xi >= a_lower |xi|^p.
    mu : float
        Growth constant: |a(x, s, xi)| <= a_upper_fn(x) + mu |xi|^(p-1).
    a_upper_fn : callable, optional
        The x-dependent part of the growth envelope; defaults to 0.
    jac_xi : callable, optional
        Vectorized xi-Jacobian (x, s, xi) -> (q, d, d).
    jac_s : callable, optional
        Vectorized s-derivative (x, s, xi) -> (q, d); used by Newton when
        present.
    strictly_monotone : bool
        Declares strict monotonicity in xi.
    """

    def __init__(
        self,
        p,
        eval_fn,
        a_lower,
        mu,
        a_upper_fn=None,
        jac_xi=None,
        jac_s=None,
        strictly_monotone=False,
        name=None,
    ):
        if not p > 1.0:
            raise ValueError("p must exceed 1")
        self.p = float(p)
        self._eval = eval_fn
        self.a_lower = float(a_lower)
        self.mu = float(mu)
        self.a_upper_fn = a_upper_fn if a_upper_fn is not None else (lambda x: np.zeros(len(x)))
        self.jac_xi = jac_xi
        self.jac_s = jac_s
        self.strictly_monotone = bool(strictly_monotone)
        self.name = name

    def __call__(self, x, s, xi):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        s = np.broadcast_to(np.asarray(s, dtype=float), (x.shape[0],))
        return self._eval(x, s, xi)


def eval_flux(op, x, s, xi):
    """Evaluate the flux at one point; returns a d-vector."""
    out = op(np.asarray(x, dtype=float).reshape(1, -1), np.asarray([s], dtype=float), np.asarray(xi, dtype=float).reshape(1, -1))
    return np.asarray(out)[0]


def _fd_jac_xi(op, x, s, xi, h=1e-6):
    d = xi.shape[1]
    cols = []
    for c in range(d):
        e = np.zeros_like(xi)
        e[:, c] = h
        cols.append((op(x, s, xi + e) - op(x, s, xi - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def check_operator_hypotheses(op, samples, seed, dim=2, box=((0.0, 1.0),), s_range=(-5.0, 5.0), slack=1e-10):
    """Seeded sampling check of coercivity, monotonicity and growth.

    Draws (x, s, xi, chi) tuples, asserts the three declared inequalities
    with relative slack and, when the operator declares strict monotonicity,
    asserts a strictly positive monotonicity product for well-separated
    gradient pairs.  Raises :class:`PropertyViolation` with a witness index.
    """
    if samples < 1:
        raise ValueError("samples >= 1 required")
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box] * (dim if len(box) == 1 else 1))[:dim]
    hi = np.array([b[1] for b in box] * (dim if len(box) == 1 else 1))[:dim]
    x = rng.uniform(lo, hi, size=(samples, dim))
    s = rng.uniform(s_range[0], s_range[1], samples)
    scale = 10.0 ** rng.uniform(-2, 1, samples)
    xi = rng.standard_normal((samples, dim)) * scale[:, None]
    chi = rng.standard_normal((samples, dim)) * scale[:, None]

    a_xi = op(x, s, xi)
    a_chi = op(x, s, chi)
    norm_xi = np.linalg.norm(xi, axis=1)

    coer = np.einsum("qd,qd->q", a_xi, xi) - op.a_lower * norm_xi**op.p
    tol = slack * (1.0 + norm_xi**op.p)
    if np.any(coer < -tol):
        k = int(np.argmin(coer + tol))
        raise PropertyViolation("coercivity", (x[k], s[k], xi[k]), float(coer[k]))

    mono = np.einsum("qd,qd->q", a_xi - a_chi, xi - chi)
    tol = slack * (1.0 + norm_xi**op.p + np.linalg.norm(chi, axis=1) ** op.p)
    if np.any(mono < -tol):
        k = int(np.argmin(mono + tol))
        raise PropertyViolation("monotonicity", (x[k], s[k], xi[k], chi[k]), float(mono[k]))

    grow = op.a_upper_fn(x) + op.mu * norm_xi ** (op.p - 1.0) - np.linalg.norm(a_xi, axis=1)
    tol = slack * (1.0 + norm_xi ** (op.p - 1.0))
    if np.any(grow < -tol):
        k = int(np.argmin(grow + tol))
        raise PropertyViolation("growth", (x[k], s[k], xi[k]), float(grow[k]))

    report = {
        "coercivity_margin": float(np.min(coer)),
        "monotonicity_margin": float(np.min(mono)),
        "growth_margin": float(np.min(grow)),
        "samples": samples,
    }
    if op.strictly_monotone:
        sep = np.linalg.norm(xi - chi, axis=1) > 1e-6
        if np.any(mono[sep] <= 0.0):
            k = int(np.flatnonzero(sep)[np.argmin(mono[sep])])
            raise PropertyViolation("strict_monotonicity", (x[k], s[k], xi[k], chi[k]), float(np.min(mono[sep])))
        report["strict_monotonicity_min"] = float(np.min(mono[sep])) if np.any(sep) else 0.0
    return report


# -- named instances -------------------------------------------------------


def laplace():
    """a(x, s, xi) = xi (p = 2)."""

    def ev(x, s, xi):
        return xi

    def jxi(x, s, xi):
        q, d = xi.shape
        return np.broadcast_to(np.eye(d), (q, d, d)).copy()

    return LerayLionsOperator(2.0, ev, a_lower=1.0, mu=1.0, jac_xi=jxi, strictly_monotone=True, name="laplace")


def p_laplace(p):
    """a(x, s, xi) = |xi|^(p-2) xi, with an explicit zero branch at xi = 0."""
    p = float(p)

    def ev(x, s, xi):
        nrm = np.linalg.norm(xi, axis=1)
        out = np.zeros_like(xi)
        nz = nrm > 0.0
        out[nz] = (nrm[nz] ** (p - 2.0))[:, None] * xi[nz]
        return out

    def jxi(x, s, xi):
        q, d = xi.shape
        out = np.zeros((q, d, d))
        nrm = np.linalg.norm(xi, axis=1)
        nz = nrm > 0.0
        eye = np.eye(d)
        r = nrm[nz]
        u = xi[nz] / r[:, None]
        out[nz] = (r ** (p - 2.0))[:, None, None] * (
            eye[None, :, :] + (p - 2.0) * np.einsum("qi,qj->qij", u, u)
        )
        if p == 2.0:
            out[~nz] = eye
        elif p < 2.0:
            # no derivative at 0 for p < 2; bounded surrogate, the scheme
            # regularises anyway
            out[~nz] = eye
        return out

    return LerayLionsOperator(p, ev, a_lower=1.0, mu=1.0, jac_xi=jxi, strictly_monotone=True, name=f"p_laplace({p})")


def scalar_diffusion(k_fn, k_lower, k_upper, dk_ds=None):
    """a(x, s, xi) = K(x, s) xi with scalar K bounded in [k_lower, k_upper]."""

    def ev(x, s, xi):
        return k_fn(x, s)[:, None] * xi

    def jxi(x, s, xi):
        q, d = xi.shape
        return k_fn(x, s)[:, None, None] * np.broadcast_to(np.eye(d), (q, d, d))

    js = None
    if dk_ds is not None:

        def js(x, s, xi):
            return dk_ds(x, s)[:, None] * xi

    return LerayLionsOperator(
        2.0,
        ev,
        a_lower=k_lower,
        mu=k_upper,
        jac_xi=jxi,
        jac_s=js,
        strictly_monotone=True,
        name="scalar_diffusion",
    )


def get_operator(name, **params):
    if name == "laplace":
        return laplace()
    if name == "p_laplace":
        return p_laplace(params["p"])
    if name == "scalar_diffusion":
        return scalar_diffusion(
            params["k_fn"], params["k_lower"], params["k_upper"], params.get("dk_ds")
        )
    raise KeyError(f"unknown operator {name!r}")
