"""Monotone scalar nonlinearities and their derived objects.

The model couples two non-decreasing Lipschitz functions (the "time"
nonlinearity applied under the time derivative and the "space" nonlinearity
applied under the gradient).  From those two everything else is derived: the
composite function whose derivative is the product of the two derivatives,
the pseudo-inverse picking the root closest to zero, and the convex potential
driving the energy estimates.  For piecewise-affine descriptions all derived
objects are exact closed forms; otherwise adaptive quadrature to 1e-12 is
used.
"""

import math

import numpy as np
from scipy import integrate, optimize

from .errors import NotMonotone, OutOfRange, PropertyViolation

__all__ = [
    "PiecewiseLinear",
    "SmoothFunc",
    "NonlinearPair",
    "nu",
    "beta_r",
    "big_b",
    "big_b_of_beta",
    "pair_from_graph",
    "piecewise_from_triples",
    "check_pair_inequalities",
    "get_pair",
    "PAIR_NAMES",
]


def _integrate_slopes(knots, slopes, a, b):
    """Integral of the piecewise-constant slope function from a to b."""
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b = b, a
        sign = -1.0
    pts = np.concatenate(([a], knots[(knots > a) & (knots < b)], [b]))
    mids = 0.5 * (pts[:-1] + pts[1:])
    idx = np.searchsorted(knots, mids, side="right")
    return sign * float(np.dot(slopes[idx], np.diff(pts)))


class PiecewiseLinear:
    """Continuous piecewise-affine function on the real line.

    Parameters
    ----------
    knots : array_like
        Strictly increasing breakpoints (may be empty).
    slopes : array_like
        One slope per piece, ``len(knots) + 1`` values; piece ``j`` covers
        ``(knots[j-1], knots[j]]`` with the unbounded pieces at both ends.
    value_at_zero : float
        Function value at 0.
    """

    def __init__(self, knots, slopes, value_at_zero=0.0):
        self.knots = np.atleast_1d(np.asarray(knots, dtype=float))
        self.slopes = np.atleast_1d(np.asarray(slopes, dtype=float))
        if self.knots.size + 1 != self.slopes.size:
            raise ValueError("need len(knots) + 1 slopes")
        if self.knots.size > 1 and not np.all(np.diff(self.knots) > 0):
            raise ValueError("knots must be strictly increasing")
        self.value_at_zero = float(value_at_zero)
        if self.knots.size:
            vals = [
                self.value_at_zero + _integrate_slopes(self.knots, self.slopes, 0.0, k)
                for k in self.knots
            ]
            self.knot_values = np.array(vals)
        else:
            self.knot_values = np.zeros(0)

    @classmethod
    def from_point(cls, knots, slopes, x0, y0):
        """Build from a value anchored at an arbitrary point."""
        knots = np.atleast_1d(np.asarray(knots, dtype=float))
        slopes = np.atleast_1d(np.asarray(slopes, dtype=float))
        v0 = y0 - _integrate_slopes(knots, slopes, 0.0, float(x0))
        return cls(knots, slopes, v0)

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=float)
        if self.knots.size == 0:
            out = self.value_at_zero + self.slopes[0] * s_arr
        else:
            idx = np.searchsorted(self.knots, s_arr, side="right")
            aidx = np.maximum(idx - 1, 0)
            out = self.knot_values[aidx] + self.slopes[idx] * (s_arr - self.knots[aidx])
        return out if isinstance(s, np.ndarray) else float(out)

    def deriv(self, s):
        """Right-continuous derivative (slope of the piece to the right)."""
        s_arr = np.asarray(s, dtype=float)
        idx = np.searchsorted(self.knots, s_arr, side="right")
        out = self.slopes[idx]
        return out if isinstance(s, np.ndarray) else float(out)

    @property
    def is_monotone(self):
        return bool(np.all(self.slopes >= 0))

    @property
    def max_slope(self):
        return float(np.max(np.abs(self.slopes)))

    def range_bounds(self):
        """Closure of the range, as (lo, hi) with infinities when unbounded."""
        if self.knots.size == 0:
            if self.slopes[0] == 0.0:
                return self.value_at_zero, self.value_at_zero
            return -math.inf, math.inf
        lo = -math.inf if self.slopes[0] > 0 else self.knot_values[0]
        hi = math.inf if self.slopes[-1] > 0 else self.knot_values[-1]
        return lo, hi

    def pseudo_inverse(self, s):
        """Root of ``f(t) = s`` closest to 0 (inf for s>0, sup for s<0).

        Requires ``f`` non-decreasing with ``f(0) = 0``; raises
        :class:`OutOfRange` outside the closure of the range.
        """
        scalar = not isinstance(s, np.ndarray)
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        lo, hi = self.range_bounds()
        if np.any(s_arr < lo) or np.any(s_arr > hi):
            raise OutOfRange(f"value outside range [{lo}, {hi}]")
        out = np.zeros_like(s_arr)
        vals = self.knot_values
        knots = self.knots
        slopes = self.slopes
        pos = s_arr > 0
        neg = s_arr < 0
        if knots.size == 0:
            nz = pos | neg
            out[nz] = (s_arr[nz] - self.value_at_zero) / slopes[0]
        else:
            if np.any(pos):
                sp = s_arr[pos]
                j = np.searchsorted(vals, sp, side="left")
                res = np.empty_like(sp)
                inner = j < knots.size
                jj = j[inner]
                prev_val = np.where(jj > 0, vals[np.maximum(jj - 1, 0)], -np.inf)
                prev_knot = np.where(jj > 0, knots[np.maximum(jj - 1, 0)], 0.0)
                with np.errstate(divide="ignore", invalid="ignore"):
                    from_prev = prev_knot + (sp[inner] - prev_val) / slopes[jj]
                    from_next = knots[jj] - (vals[jj] - sp[inner]) / slopes[jj]
                res[inner] = np.where(jj > 0, from_prev, from_next)
                top = ~inner
                res[top] = knots[-1] + (sp[top] - vals[-1]) / slopes[-1]
                out[pos] = res
            if np.any(neg):
                sn = s_arr[neg]
                j = np.searchsorted(vals, sn, side="right") - 1
                res = np.empty_like(sn)
                inner = j >= 0
                jj = j[inner]
                res[inner] = knots[jj] + (sn[inner] - vals[jj]) / slopes[jj + 1]
                res[~inner] = knots[0] - (vals[0] - sn[~inner]) / slopes[0]
                out[neg] = res
        return out if not scalar else float(out[0])


class SmoothFunc:
    """Monotone function given by callables, for the quadrature fallback."""

    def __init__(self, fn, deriv, knots=()):
        self._fn = fn
        self._deriv = deriv
        self.knots = np.asarray(knots, dtype=float)

    def __call__(self, s):
        out = self._fn(np.asarray(s, dtype=float))
        return out if isinstance(s, np.ndarray) else float(out)

    def deriv(self, s):
        out = self._deriv(np.asarray(s, dtype=float))
        return out if isinstance(s, np.ndarray) else float(out)

    @property
    def max_slope(self):
        grid = np.linspace(-50.0, 50.0, 20001)
        return float(np.max(self.deriv(grid)))

    def range_bounds(self):
        return float(self._fn(np.asarray(-1e12))), float(self._fn(np.asarray(1e12)))

    def pseudo_inverse(self, s):
        scalar = not isinstance(s, np.ndarray)
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.zeros_like(s_arr)
        for i, si in enumerate(s_arr):
            if si == 0.0:
                continue
            lo, hi = (0.0, 1.0) if si > 0 else (-1.0, 0.0)
            for _ in range(200):
                if si > 0 and float(self(np.asarray(hi))) >= si:
                    break
                if si < 0 and float(self(np.asarray(lo))) <= si:
                    break
                lo, hi = (lo, 2.0 * hi) if si > 0 else (2.0 * lo, hi)
            else:
                raise OutOfRange("value outside range")
            out[i] = optimize.brentq(
                lambda t: float(self(np.asarray(t))) - si, lo, hi, xtol=1e-14
            )
        return out if not scalar else float(out[0])


class _PiecewiseQuadratic:
    """Cumulative integral, anchored at 0, of a piecewise-affine integrand.

    The integrand may jump at the knots, so each piece carries its own
    anchored value: piece ``j`` covers ``(knots[j-1], knots[j]]`` (unbounded
    at both ends), is anchored at ``knots[j-1]`` for ``j >= 1`` and at
    ``knots[0]`` for ``j == 0``, and on it the integrand equals
    ``g_anchor[j] + g_slopes[j] * (x - anchor_j)``.
    """

    def __init__(self, knots, g_anchor, g_slopes, domain):
        self.knots = np.asarray(knots, dtype=float)
        self.g_anchor = np.asarray(g_anchor, dtype=float)
        self.g_slopes = np.asarray(g_slopes, dtype=float)
        self.domain = domain
        k = self.knots
        if k.size == 0:
            # single piece anchored at 0
            self.values = np.zeros(0)
            return
        vals = np.zeros(k.size)

        def piece_integral(piece, a, b):
            anchor = k[piece - 1] if piece >= 1 else k[0]
            g, m = self.g_anchor[piece], self.g_slopes[piece]

            def anti(x):
                return g * (x - anchor) + 0.5 * m * (x - anchor) ** 2

            return anti(b) - anti(a)

        i0 = int(np.searchsorted(k, 0.0, side="right"))
        acc, pos = 0.0, 0.0
        for j in range(i0, k.size):
            acc += piece_integral(j, pos, k[j])
            vals[j] = acc
            pos = k[j]
        acc, pos = 0.0, 0.0
        for j in range(i0 - 1, -1, -1):
            acc -= piece_integral(j + 1, k[j], pos)
            vals[j] = acc
            pos = k[j]
        self.values = vals

    def __call__(self, z):
        scalar = not isinstance(z, np.ndarray)
        z_arr = np.atleast_1d(np.asarray(z, dtype=float))
        lo, hi = self.domain
        tol = 1e-12 * (1.0 + np.abs(z_arr))
        if np.any(z_arr < lo - tol) or np.any(z_arr > hi + tol):
            raise OutOfRange(f"argument outside [{lo}, {hi}]")
        z_arr = np.clip(z_arr, lo, hi)
        k = self.knots
        if k.size == 0:
            out = self.g_anchor[0] * z_arr + 0.5 * self.g_slopes[0] * z_arr**2
        else:
            idx = np.searchsorted(k, z_arr, side="right")
            aidx = np.maximum(idx - 1, 0)
            dx = z_arr - k[aidx]
            out = self.values[aidx] + self.g_anchor[idx] * dx + 0.5 * self.g_slopes[idx] * dx**2
        return out if not scalar else float(out[0])


def _merged_knots(f, g):
    ks = np.unique(np.concatenate([np.atleast_1d(f.knots), np.atleast_1d(g.knots)]))
    return ks


def _piece_reps(knots):
    """A representative interior point for each piece of a knot partition."""
    if knots.size == 0:
        return np.array([0.0])
    mids = 0.5 * (knots[:-1] + knots[1:])
    return np.concatenate(([knots[0] - 1.0], mids, [knots[-1] + 1.0]))


class NonlinearPair:
    """The model's two monotone scalar functions plus derived objects.

    Parameters
    ----------
    beta, zeta : PiecewiseLinear or SmoothFunc
        Non-decreasing Lipschitz functions vanishing at 0.
    L_beta, L_zeta : float, optional
        Lipschitz constants; defaults to the maximal slope.
    M0, M1 : float, optional
        Linear growth constants of ``zeta`` (|zeta(s)| >= M0|s| - M1);
        derived exactly for piecewise-affine ``zeta`` when omitted.
    """

    def __init__(self, beta, zeta, L_beta=None, L_zeta=None, M0=None, M1=None, name=None):
        self.beta = beta
        self.zeta = zeta
        self.name = name
        if not _is_monotone(beta) or not _is_monotone(zeta):
            raise NotMonotone("beta and zeta must be non-decreasing")
        if abs(float(beta(0.0))) > 0 or abs(float(zeta(0.0))) > 0:
            raise ValueError("beta(0) and zeta(0) must vanish")
        self.L_beta = float(L_beta) if L_beta is not None else beta.max_slope
        self.L_zeta = float(L_zeta) if L_zeta is not None else zeta.max_slope
        if M0 is None and isinstance(zeta, PiecewiseLinear):
            M0, M1 = _growth_constants_pw(zeta)
        self.M0 = M0
        self.M1 = M1
        self._exact = isinstance(beta, PiecewiseLinear) and isinstance(zeta, PiecewiseLinear)
        self._build_derived()

    def _build_derived(self):
        if self._exact:
            ks = _merged_knots(self.beta, self.zeta)
            reps = _piece_reps(ks)
            bslopes = self.beta.deriv(reps)
            zslopes = self.zeta.deriv(reps)
            prod = bslopes * zslopes
            self._nu = PiecewiseLinear(ks, prod, 0.0)
            # B(beta(s)) as a function of s: integrand zeta(q) * beta'(q)
            if ks.size:
                anchors = np.concatenate(([ks[0]], ks))
            else:
                anchors = np.zeros(1)
            g_anchor = self.zeta(anchors) * bslopes
            self._b_of_beta = _PiecewiseQuadratic(ks, g_anchor, prod, (-math.inf, math.inf))
            self._b_of_z = self._build_b_of_z(ks)
        else:
            self._nu = None
            self._b_of_beta = None
            self._b_of_z = None

    def _build_b_of_z(self, ks):
        """B as a function of z in the closure of range(beta).

        Piecewise quadratic with knots at the distinct values of beta; each
        z-piece is traversed by exactly one strictly-increasing t-piece whose
        affine inverse gives the integrand zeta(beta_r).
        """
        beta, zeta = self.beta, self.zeta
        reps = _piece_reps(ks)
        bslopes = beta.deriv(reps)
        zslopes = zeta.deriv(reps)
        if ks.size == 0:
            if bslopes[0] == 0.0:
                return _PiecewiseQuadratic(np.zeros(0), [0.0], [0.0], (0.0, 0.0))
            return _PiecewiseQuadratic(
                np.zeros(0), [0.0], [zslopes[0] / bslopes[0]], (-math.inf, math.inf)
            )
        zv = beta(ks)
        keep = [0] + [j for j in range(1, ks.size) if zv[j] > zv[j - 1]]
        knots_z = zv[keep]
        R = len(keep)
        g_anchor = np.zeros(R + 1)
        g_slopes = np.zeros(R + 1)
        if bslopes[0] > 0:
            g_anchor[0] = float(zeta(ks[0]))
            g_slopes[0] = zslopes[0] / bslopes[0]
            lo = -math.inf
        else:
            lo = knots_z[0]
        for r in range(1, R):
            q = keep[r]
            g_anchor[r] = float(zeta(ks[q - 1]))
            g_slopes[r] = zslopes[q] / bslopes[q]
        if bslopes[-1] > 0:
            g_anchor[R] = float(zeta(ks[-1]))
            g_slopes[R] = zslopes[-1] / bslopes[-1]
            hi = math.inf
        else:
            hi = knots_z[-1]
        return _PiecewiseQuadratic(knots_z, g_anchor, g_slopes, (lo, hi))

    # -- derived scalar objects ------------------------------------------

    def nu(self, s):
        """Composite nonlinearity with derivative beta' * zeta'."""
        if self._exact:
            return self._nu(s)
        scalar = not isinstance(s, np.ndarray)
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.array([self._nu_quad(float(si)) for si in s_arr])
        return out if not scalar else float(out[0])

    def _nu_quad(self, s):
        if s == 0.0:
            return 0.0
        pts = _quad_points(self.beta, self.zeta, 0.0, s)
        val, _ = integrate.quad(
            lambda q: float(self.beta.deriv(np.asarray(q))) * float(self.zeta.deriv(np.asarray(q))),
            0.0,
            s,
            points=pts,
            epsabs=1e-12,
            limit=200,
        )
        return val

    def nu_deriv(self, s):
        if self._exact:
            return self._nu.deriv(s)
        return self.beta.deriv(s) * self.zeta.deriv(s)

    def beta_r(self, s):
        """Pseudo-inverse of beta: the root closest to 0."""
        return self.beta.pseudo_inverse(s)

    def big_b(self, z):
        """Convex potential: integral of zeta(beta_r) from 0 to z."""
        if self._exact:
            return self._b_of_z(z)
        scalar = not isinstance(z, np.ndarray)
        z_arr = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.array([self._big_b_quad(float(zi)) for zi in z_arr])
        return out if not scalar else float(out[0])

    def _big_b_quad(self, z):
        if z == 0.0:
            return 0.0
        val, _ = integrate.quad(
            lambda s: float(self.zeta(np.asarray(self.beta.pseudo_inverse(np.asarray(s))))),
            0.0,
            z,
            epsabs=1e-12,
            limit=200,
        )
        return val

    def big_b_of_beta(self, s):
        """B(beta(s)) evaluated directly as the integral of zeta * beta'."""
        if self._exact:
            return self._b_of_beta(s)
        scalar = not isinstance(s, np.ndarray)
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = []
        for si in s_arr:
            if si == 0.0:
                out.append(0.0)
                continue
            pts = _quad_points(self.beta, self.zeta, 0.0, float(si))
            val, _ = integrate.quad(
                lambda q: float(self.zeta(np.asarray(q))) * float(self.beta.deriv(np.asarray(q))),
                0.0,
                float(si),
                points=pts,
                epsabs=1e-12,
                limit=200,
            )
            out.append(val)
        out = np.array(out)
        return out if not scalar else float(out[0])

    def growth_constants(self):
        """(K0, K1, K2) with K0 b(s)^2 - K1 <= B(b(s)) <= K2 s^2.

        K2 = L_zeta * L_beta / 2 always; K0, K1 follow the constructive
        choice K0 = M0 / (4 L_beta) with the threshold S = 2 M1 / M0.
        """
        K2 = 0.5 * self.L_zeta * self.L_beta
        if self.M0 is None:
            return None, None, K2
        K0 = self.M0 / (4.0 * self.L_beta)
        S = 2.0 * self.M1 / self.M0 if self.M0 > 0 else 0.0
        bmax = max(float(self.beta(S)) ** 2, float(self.beta(-S)) ** 2)
        K1 = K0 * bmax
        return K0, K1, K2


def _is_monotone(f):
    if isinstance(f, PiecewiseLinear):
        return f.is_monotone
    grid = np.linspace(-20.0, 20.0, 4001)
    return bool(np.all(np.diff(f(grid)) >= -1e-14))


def _growth_constants_pw(zeta):
    sl, sr = zeta.slopes[0], zeta.slopes[-1]
    if sl <= 0 or sr <= 0:
        raise ValueError("zeta needs positive terminal slopes for linear growth; pass M0, M1 explicitly")
    M0 = min(sl, sr)
    cands = [0.0]
    cands.extend(zeta.knots.tolist())
    # interior sign changes of zeta add kinks to |zeta|
    kv = zeta.knot_values
    for j in range(kv.size - 1):
        if kv[j] * kv[j + 1] < 0:
            t = zeta.knots[j] + (0.0 - kv[j]) / zeta.slopes[j + 1]
            cands.append(t)
    cands = np.asarray(cands)
    M1 = float(np.max(M0 * np.abs(cands) - np.abs(zeta(cands))))
    return M0, max(M1, 0.0)


def _quad_points(beta, zeta, a, b):
    lo, hi = min(a, b), max(a, b)
    ks = np.unique(np.concatenate([np.atleast_1d(beta.knots), np.atleast_1d(zeta.knots)]))
    inner = ks[(ks > lo) & (ks < hi)]
    return inner.tolist() if inner.size else None


# -- module-level operation wrappers --------------------------------------


def nu(pair, s):
    return pair.nu(s)


def beta_r(pair, s):
    return pair.beta_r(s)


def big_b(pair, z):
    return pair.big_b(z)


def big_b_of_beta(pair, s):
    return pair.big_b_of_beta(s)


def piecewise_from_triples(triples, leftmost_slope):
    """Build a piecewise-affine function from (breakpoint, slope, value) rows.

    Each row gives a breakpoint, the slope of the piece to its right and the
    function value at the breakpoint; ``leftmost_slope`` covers the piece
    left of the first breakpoint.  Continuity of the rows is validated.
    """
    rows = sorted((float(b), float(sl), float(v)) for b, sl, v in triples)
    knots = np.array([r[0] for r in rows])
    slopes = np.array([leftmost_slope] + [r[1] for r in rows])
    f = PiecewiseLinear.from_point(knots, slopes, rows[0][0], rows[0][2])
    for b, _, v in rows:
        if abs(float(f(b)) - v) > 1e-12 * (1.0 + abs(v)):
            raise ValueError(f"triples are not continuous at breakpoint {b}")
    return f


def pair_from_graph(points, left_dir=(1.0, 1.0), right_dir=(1.0, 1.0)):
    """Build a pair with ``zeta + beta = 2 Id`` from a maximal monotone graph.

    The graph is a monotone polyline in the plane: ``points`` lists vertices
    with both coordinates non-decreasing (vertical segments encode the
    multivalued jumps, horizontal segments the plateaus) and the two rays
    extend it to an operator with full-range sum.  The construction assigns
    to each graph point (x, y) the parameter s = (x + y) / 2 and reads off
    zeta(s) = x, beta(s) = y; both come out 2-Lipschitz.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    dx = np.diff(pts[:, 0])
    dy = np.diff(pts[:, 1])
    if np.any(dx < 0) or np.any(dy < 0):
        k = int(np.argmax((dx < 0) | (dy < 0)))
        raise NotMonotone(f"graph segment {k} violates (x-x')(y-y') >= 0")
    keep = np.concatenate(([True], (dx + dy) > 0))
    pts = pts[keep]
    ld = np.asarray(left_dir, dtype=float)
    rd = np.asarray(right_dir, dtype=float)
    for d in (ld, rd):
        if d[0] < 0 or d[1] < 0 or d[0] + d[1] <= 0:
            raise NotMonotone("ray directions must be non-negative and non-degenerate")
    s_knots = 0.5 * (pts[:, 0] + pts[:, 1])
    ds = np.diff(s_knots)
    zeta_slopes = np.empty(s_knots.size + 1)
    beta_slopes = np.empty(s_knots.size + 1)
    zeta_slopes[0] = 2.0 * ld[0] / (ld[0] + ld[1])
    beta_slopes[0] = 2.0 * ld[1] / (ld[0] + ld[1])
    if ds.size:
        zeta_slopes[1:-1] = np.diff(pts[:, 0]) / ds
        beta_slopes[1:-1] = np.diff(pts[:, 1]) / ds
    zeta_slopes[-1] = 2.0 * rd[0] / (rd[0] + rd[1])
    beta_slopes[-1] = 2.0 * rd[1] / (rd[0] + rd[1])
    if pts.shape[0] == 1 and not np.allclose(pts[0], 0.0, atol=1e-14):
        raise ValueError("graph must contain (0, 0)")
    zeta = PiecewiseLinear.from_point(s_knots, zeta_slopes, s_knots[0], pts[0, 0])
    beta = PiecewiseLinear.from_point(s_knots, beta_slopes, s_knots[0], pts[0, 1])
    if abs(float(zeta(0.0))) > 1e-12 or abs(float(beta(0.0))) > 1e-12:
        raise ValueError("graph must contain (0, 0)")
    try:
        M0, M1 = _growth_constants_pw(zeta)
    except ValueError:
        M0, M1 = None, None
    return NonlinearPair(beta, zeta, M0=M0, M1=M1, name="from_graph")


class PairCheckReport:
    """Worst margins of the structural inequalities over a sample set."""

    def __init__(self, pair, samples, seed, interval):
        self.pair = pair
        self.samples = samples
        self.seed = seed
        self.interval = interval
        self.margins = {}
        self.growth_constants = pair.growth_constants()

    def record(self, name, lhs, rhs, slack):
        margin = np.min(rhs + slack - lhs)
        self.margins[name] = float(margin)
        if margin < 0:
            k = int(np.argmin(rhs + slack - lhs))
            raise PropertyViolation(name, k, float(margin))

    def __repr__(self):
        rows = ", ".join(f"{k}: {v:.3e}" for k, v in self.margins.items())
        return f"PairCheckReport({rows})"


def check_pair_inequalities(pair, samples, seed, interval=(-10.0, 10.0), slack=1e-10):
    """Sample-check every inequality the pair must satisfy.

    Draws ``samples`` pairs (a, b) uniformly from ``interval`` with a seeded
    generator and asserts the Lipschitz/monotonicity hypotheses plus the
    derived inequalities tying the composite nonlinearity to the convex
    potential.  Raises :class:`PropertyViolation` with a witness on failure,
    otherwise returns the report of worst margins.
    """
    if samples < 1:
        raise ValueError("samples >= 1 required")
    rng = np.random.default_rng(seed)
    a = rng.uniform(interval[0], interval[1], samples)
    b = rng.uniform(interval[0], interval[1], samples)
    rep = PairCheckReport(pair, samples, seed, interval)
    Lb, Lz = pair.L_beta, pair.L_zeta
    ba, bb = pair.beta(a), pair.beta(b)
    za, zb = pair.zeta(a), pair.zeta(b)
    na, nb = pair.nu(a), pair.nu(b)
    Ba, Bb = pair.big_b_of_beta(a), pair.big_b_of_beta(b)
    Bmid = pair.big_b(0.5 * (ba + bb))

    def sl(lhs, rhs):
        return slack * (1.0 + np.abs(lhs) + np.abs(rhs))

    lhs = np.abs(ba - bb)
    rhs = Lb * np.abs(a - b)
    rep.record("beta_lipschitz", lhs, rhs, sl(lhs, rhs))
    lhs = np.abs(za - zb)
    rhs = Lz * np.abs(a - b)
    rep.record("zeta_lipschitz", lhs, rhs, sl(lhs, rhs))
    rep.record("beta_monotone", 0.0, (ba - bb) * (a - b), sl(0.0, np.abs(a - b)))
    rep.record("zeta_monotone", 0.0, (za - zb) * (a - b), sl(0.0, np.abs(a - b)))
    if pair.M0 is not None:
        lhs = pair.M0 * np.abs(a) - pair.M1
        rep.record("zeta_growth", lhs, np.abs(za), sl(lhs, za))

    lhs = np.abs(na - nb)
    rhs = Lb * np.abs(za - zb)
    rep.record("nu_zeta_bound", lhs, rhs, sl(lhs, rhs))
    lhs = (na - nb) ** 2
    rhs = Lb * Lz * (za - zb) * (ba - bb)
    rep.record("nu_product_bound", lhs, rhs, sl(lhs, rhs))
    lhs = za * (bb - ba)
    rhs = Bb - Ba
    rep.record("subgradient", lhs, rhs, sl(lhs, rhs))
    lhs = (na - nb) ** 2
    rhs = 4.0 * Lb * Lz * (Ba + Bb - 2.0 * Bmid)
    rep.record("uniform_convexity", lhs, rhs, sl(lhs, rhs))
    K0, K1, K2 = rep.growth_constants
    if K0 is not None:
        lhs = K0 * ba**2 - K1
        rep.record("potential_lower_growth", lhs, Ba, sl(lhs, Ba))
    lhs = Ba
    rhs = K2 * a**2
    rep.record("potential_upper_growth", lhs, rhs, sl(lhs, rhs))
    return rep


# -- named pairs -----------------------------------------------------------


def _identity():
    return PiecewiseLinear([], [1.0])


def _plateau01():
    # slope 1 outside [0, 1], flat inside
    return PiecewiseLinear([0.0, 1.0], [1.0, 0.0, 1.0])


def stefan_pair():
    """Melting-medium model: identity under d/dt, plateau on [0, 1] in space."""
    return NonlinearPair(_identity(), _plateau01(), name="stefan")


def richards_pair():
    """Unsaturated-flow model: plateau on [0, 1] under d/dt, identity in space."""
    return NonlinearPair(_plateau01(), _identity(), name="richards")


def p_laplace_identity_pair():
    return NonlinearPair(_identity(), _identity(), name="p_laplace_identity")


def doubly_degenerate_pair():
    """Plateaus in both functions: flat on [1, 2] in time, on [0, 1] in space."""
    beta = PiecewiseLinear([1.0, 2.0], [1.0, 0.0, 1.0])
    zeta = _plateau01()
    return NonlinearPair(beta, zeta, name="doubly_degenerate")


PAIR_NAMES = ("stefan", "richards", "p_laplace_identity", "doubly_degenerate")


def get_pair(name, **params):
    if name == "stefan":
        return stefan_pair()
    if name == "richards":
        return richards_pair()
    if name == "p_laplace_identity":
        return p_laplace_identity_pair()
    if name == "doubly_degenerate":
        return doubly_degenerate_pair()
    if name == "custom":
        beta = piecewise_from_triples(params["beta_triples"], params["beta_left_slope"])
        zeta = piecewise_from_triples(params["zeta_triples"], params["zeta_left_slope"])
        return NonlinearPair(beta, zeta, name="custom")
    raise KeyError(f"unknown pair {name!r}")
