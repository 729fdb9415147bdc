"""Per-feature clamped B-spline bases and design-matrix assembly.

Each feature gets its own basis of ``d`` functions defined by a clamped
knot vector over the observed range of that feature.  The additive part
of the model works on design rows: the feature-major concatenation of
every per-feature basis evaluated at one input point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidInputError


@dataclass(frozen=True, eq=False)
class SplineBasis:
    """A clamped B-spline basis on ``[domain_lo, domain_hi]``.

    Attributes
    ----------
    degree : int
        Polynomial degree of the pieces (order minus one), >= 1.
    knots : np.ndarray
        Non-decreasing knot vector of length ``d + degree + 1`` with the
        first and last knot each repeated ``degree + 1`` times.
    d : int
        Number of basis functions.
    domain_lo, domain_hi : float
        Evaluation domain; inputs outside are clamped to the boundary.
    """

    degree: int
    knots: np.ndarray
    d: int
    domain_lo: float
    domain_hi: float

    def evaluate(self, x: float) -> np.ndarray:
        """Values of the ``d`` basis functions at a scalar ``x``."""
        if not np.isfinite(x):
            raise InvalidInputError(f"basis evaluation point must be finite, got {x!r}")
        return self.evaluate_many(np.asarray([x], dtype=float))[0]

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        """Row-wise basis values for a 1-d array of points, shape (len(xs), d).

        Points outside the domain are clamped to the boundary first.
        Each row has at most ``degree + 1`` nonzero entries and sums to 1.
        """
        xs = np.asarray(xs, dtype=float)
        if not np.all(np.isfinite(xs)):
            raise InvalidInputError("basis evaluation points must be finite")
        xs = np.clip(xs, self.domain_lo, self.domain_hi)

        t = self.knots
        deg = self.degree
        n = xs.shape[0]

        # Knot span s with t[s] <= x < t[s+1]; the right domain endpoint
        # falls into the last non-empty span d-1.
        span = np.searchsorted(t, xs, side="right") - 1
        span = np.clip(span, deg, self.d - 1)

        # Triangular Cox-de Boor recursion, vectorized over points.
        vals = np.zeros((n, deg + 1))
        vals[:, 0] = 1.0
        left = np.zeros((n, deg + 1))
        right = np.zeros((n, deg + 1))
        for j in range(1, deg + 1):
            left[:, j] = xs - t[span + 1 - j]
            right[:, j] = t[span + j] - xs
            saved = np.zeros(n)
            for r in range(j):
                denom = right[:, r + 1] + left[:, j - r]
                safe = np.where(denom == 0.0, 1.0, denom)
                temp = np.where(denom == 0.0, 0.0, vals[:, r] / safe)
                vals[:, r] = saved + right[:, r + 1] * temp
                saved = left[:, j - r] * temp
            vals[:, j] = saved

        out = np.zeros((n, self.d))
        rows = np.arange(n)[:, None]
        cols = span[:, None] - deg + np.arange(deg + 1)[None, :]
        out[rows, cols] = vals
        return out


def build_basis(column: np.ndarray, degree: int, d: int) -> SplineBasis:
    """Build a clamped basis over the observed range of one feature column.

    Interior knots (``d - degree - 1`` of them) are placed uniformly over
    the open range; the end knots repeat ``degree + 1`` times.
    """
    if degree < 1:
        raise InvalidInputError(f"degree must be >= 1, got {degree}")
    if d < degree + 1:
        raise InvalidInputError(f"need d >= degree + 1, got d={d}, degree={degree}")
    column = np.asarray(column, dtype=float)
    if not np.all(np.isfinite(column)):
        raise InvalidInputError("feature column must be finite")
    lo = float(column.min())
    hi = float(column.max())
    if lo == hi:
        raise DegenerateInputError(
            "feature column is constant; cannot build a spline basis over it"
        )
    n_interior = d - degree - 1
    interior = lo + (hi - lo) * np.arange(1, n_interior + 1) / (n_interior + 1)
    knots = np.concatenate([np.full(degree + 1, lo), interior, np.full(degree + 1, hi)])
    return SplineBasis(degree=degree, knots=knots, d=d, domain_lo=lo, domain_hi=hi)


def design_row(bases: list[SplineBasis], x: np.ndarray) -> np.ndarray:
    """Feature-major concatenation of every per-feature basis at point ``x``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != len(bases):
        raise InvalidInputError(
            f"point has {x.shape} entries, expected ({len(bases)},)"
        )
    return np.concatenate([b.evaluate(xj) for b, xj in zip(bases, x)])


def design_matrix(bases: list[SplineBasis], X: np.ndarray) -> np.ndarray:
    """Stack design rows for every row of ``X``; shape (n, p*d)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(bases):
        raise InvalidInputError(
            f"matrix has shape {X.shape}, expected (n, {len(bases)})"
        )
    blocks = [b.evaluate_many(X[:, j]) for j, b in enumerate(bases)]
    return np.hstack(blocks)
