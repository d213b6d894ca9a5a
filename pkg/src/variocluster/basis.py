"""Basis systems for functional data and their Gram matrices.

A basis system turns a curve into a coefficient vector; the Gram matrix of
pairwise basis inner products then converts coefficient arithmetic back into
L2 geometry on the time domain.  B-splines are the workhorse here; an
orthonormal Fourier basis is provided mainly because its Gram matrix is the
identity, which makes it a convenient reference case.
"""

import numpy as np
from scipy.interpolate import BSpline

from ._validation import check_interval, check_positive_int


class BSplineBasis:
    """B-spline basis with equally spaced interior knots.

    Parameters
    ----------
    domain : tuple of float
        Closed interval ``(t_min, t_max)`` the basis is defined on.
    n_basis : int
        Number of basis functions.  The basis uses ``n_basis - order``
        equally spaced interior knots, so ``n_basis >= order`` is required.
    order : int, default=4
        Spline order (polynomial degree plus one); 4 gives cubic splines.
    """

    kind = "bspline"

    def __init__(self, domain, n_basis, order=4):
        lo, hi = check_interval(domain)
        order = check_positive_int(order, "order", minimum=1)
        n_basis = check_positive_int(n_basis, "n_basis", minimum=1)
        if n_basis < order:
            raise ValueError(
                f"n_basis must be >= order for a B-spline basis, got n_basis={n_basis}, order={order}"
            )
        self.domain = (lo, hi)
        self.n_basis = n_basis
        self.order = order
        interior = np.linspace(lo, hi, n_basis - order + 2)[1:-1]
        self.knots = np.concatenate([np.full(order, lo), interior, np.full(order, hi)])

    @property
    def interior_knots(self):
        return self.knots[self.order:-self.order]

    def design_matrix(self, t):
        """Evaluate every basis function at ``t``.

        Parameters
        ----------
        t : array-like
            Evaluation points, all inside the basis domain.

        Returns
        -------
        numpy.ndarray of shape (len(t), n_basis)
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.domain
        if t.size and (t.min() < lo or t.max() > hi):
            raise ValueError(
                f"evaluation points must lie in the basis domain [{lo}, {hi}], "
                f"got range [{t.min()}, {t.max()}]"
            )
        return BSpline.design_matrix(t, self.knots, self.order - 1, extrapolate=False).toarray()

    def quadrature_rule(self):
        """Composite Gauss-Legendre rule exact for products of basis functions.

        Uses ``2 * order`` nodes per knot span, exact for polynomials up to
        degree ``4 * order - 1``; a product of two basis functions has degree
        ``2 * (order - 1)`` per span.
        """
        return _composite_gauss_legendre(np.unique(self.knots), 2 * self.order)

    def __repr__(self):
        return f"BSplineBasis(domain={self.domain}, n_basis={self.n_basis}, order={self.order})"


class FourierBasis:
    """Orthonormal Fourier basis (constant plus sine/cosine pairs).

    The functions are ``1/sqrt(|T|)`` and ``sqrt(2/|T|) sin/cos(2 pi k t' / |T|)``
    with ``t'`` measured from the left endpoint, so the basis is orthonormal
    over its own domain and its Gram matrix is the identity.
    """

    kind = "fourier"
    order = 0

    def __init__(self, domain, n_basis):
        lo, hi = check_interval(domain)
        self.domain = (lo, hi)
        self.n_basis = check_positive_int(n_basis, "n_basis", minimum=1)
        self.knots = np.array([lo, hi])

    def design_matrix(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.domain
        period = hi - lo
        phase = 2.0 * np.pi * (t - lo) / period
        cols = [np.full(t.shape, 1.0 / np.sqrt(period))]
        amp = np.sqrt(2.0 / period)
        k = 1
        while len(cols) < self.n_basis:
            cols.append(amp * np.sin(k * phase))
            if len(cols) < self.n_basis:
                cols.append(amp * np.cos(k * phase))
            k += 1
        return np.column_stack(cols)

    def quadrature_rule(self):
        # Trigonometric integrands are not polynomial; subdivide finely enough
        # that 10-node panels push the quadrature error below 1e-12.
        lo, hi = self.domain
        panels = np.linspace(lo, hi, 2 * self.n_basis + 2)
        return _composite_gauss_legendre(panels, 10)

    def __repr__(self):
        return f"FourierBasis(domain={self.domain}, n_basis={self.n_basis})"


def _composite_gauss_legendre(breakpoints, n_nodes):
    """Gauss-Legendre points and weights on each interval between breakpoints."""
    xg, wg = np.polynomial.legendre.leggauss(n_nodes)
    lo = breakpoints[:-1]
    hi = breakpoints[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    points = (half[:, None] * xg[None, :] + mid[:, None]).ravel()
    weights = (half[:, None] * wg[None, :]).ravel()
    return points, weights


def gram_matrix(basis):
    """Matrix of pairwise L2 inner products of the basis functions.

    Computed by composite Gauss-Legendre quadrature (exact for B-splines,
    accurate to ~1e-12 for the Fourier basis) and symmetrized so the result
    is exactly equal to its transpose.

    Returns
    -------
    numpy.ndarray of shape (n_basis, n_basis)
        Symmetric positive semi-definite matrix; the identity for any
        orthonormal basis.
    """
    points, weights = basis.quadrature_rule()
    design = basis.design_matrix(points)
    w = design.T @ (weights[:, None] * design)
    return 0.5 * (w + w.T)
