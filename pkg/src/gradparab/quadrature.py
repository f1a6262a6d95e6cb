"""Gauss quadrature helpers for intervals and triangles."""

import numpy as np
from scipy.special import roots_legendre

# Dunavant degree-4 rule on the reference triangle (6 points), weights sum to 1.
_TRI_W = np.array(
    [0.223381589678011] * 3 + [0.109951743655322] * 3
)
_TRI_BARY = np.array(
    [
        [0.445948490915965, 0.445948490915965, 0.108103018168070],
        [0.445948490915965, 0.108103018168070, 0.445948490915965],
        [0.108103018168070, 0.445948490915965, 0.445948490915965],
        [0.091576213509771, 0.091576213509771, 0.816847572980459],
        [0.091576213509771, 0.816847572980459, 0.091576213509771],
        [0.816847572980459, 0.091576213509771, 0.091576213509771],
    ]
)


def gauss_interval(a, b, n=5):
    """Gauss-Legendre points and weights on [a, b].

    Returns points of shape (n, 1) so 1D and 2D cells share one layout.
    """
    x, w = roots_legendre(n)
    pts = 0.5 * (b - a) * x + 0.5 * (a + b)
    wts = 0.5 * (b - a) * w
    return pts.reshape(-1, 1), wts


def gauss_triangle(tri):
    """Degree-4 quadrature on a triangle given as a (3, 2) vertex array."""
    tri = np.asarray(tri, dtype=float)
    pts = _TRI_BARY @ tri
    area = 0.5 * abs(
        (tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1])
        - (tri[2, 0] - tri[0, 0]) * (tri[1, 1] - tri[0, 1])
    )
    return pts, _TRI_W * area


class QuadRegion:
    """A region of the domain carrying quadrature points and weights.

    ``points`` has shape (q, d) and ``weights`` shape (q,); the weights sum
    to the region measure.
    """

    __slots__ = ("points", "weights", "measure")

    def __init__(self, points, weights):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.measure = float(self.weights.sum())

    @classmethod
    def empty(cls, dim):
        return cls(np.zeros((0, dim)), np.zeros(0))

    @classmethod
    def merge(cls, regions, dim):
        regions = [r for r in regions if r.points.shape[0]]
        if not regions:
            return cls.empty(dim)
        pts = np.vstack([r.points for r in regions])
        wts = np.concatenate([r.weights for r in regions])
        return cls(pts, wts)

    def integrate(self, fn):
        """Integrate a vectorized callable fn(points) over the region."""
        if self.points.shape[0] == 0:
            return 0.0
        vals = np.asarray(fn(self.points))
        return float(np.dot(self.weights, vals))
