"""From discrete georeferenced recordings to smooth curves in coefficient form.

Each raw series is fit by unpenalized least squares in a common basis; the
resulting coefficient matrix, together with the basis Gram matrix, carries
all the L2 geometry the variogram machinery needs.  Also provides
leave-one-out cross-validation for choosing the basis dimension and a
coordinate detrending step for data where the mean varies over the region.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import as_float_array, check_coords, check_positive_int
from .basis import BSplineBasis, gram_matrix


@dataclass(frozen=True)
class SampledSeries:
    """One georeferenced time series recorded at discrete times.

    Attributes
    ----------
    site_id : hashable
        Identifier of the recording site.
    coords : numpy.ndarray of shape (2,)
        Planar site coordinates (or decimal degrees used as-is).
    times : numpy.ndarray
        Strictly increasing time stamps, at least two.
    values : numpy.ndarray
        Finite measurements, one per time stamp.
    """

    site_id: object
    coords: np.ndarray
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        coords = as_float_array(self.coords, "coords", ndim=1)
        if coords.shape != (2,):
            raise ValueError(f"coords must have exactly two entries, got {coords.shape}")
        times = as_float_array(self.times, "times", ndim=1)
        values = as_float_array(self.values, "values", ndim=1)
        if times.size != values.size:
            raise ValueError(
                f"times and values must have equal length, got {times.size} and {values.size}"
            )
        if times.size < 2:
            raise ValueError("a series needs at least two observations")
        if not (np.diff(times) > 0).all():
            raise ValueError(f"times must be strictly increasing for site {self.site_id!r}")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def n_obs(self):
        return self.times.size


@dataclass(frozen=True)
class FunctionalDataset:
    """Smoothed curves in basis-coefficient form with their site coordinates.

    Row ``i`` of ``coefficients`` holds the coefficient vector of curve ``i``
    in ``basis``; pairwise squared L2 distances between curves are quadratic
    forms in these rows through the basis Gram matrix.
    """

    basis: object
    coefficients: np.ndarray
    coords: np.ndarray
    site_ids: tuple = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        coeffs = as_float_array(self.coefficients, "coefficients", ndim=2)
        coords = check_coords(self.coords, n_sites=coeffs.shape[0])
        if coeffs.shape[0] < 2:
            raise ValueError("a functional dataset needs at least two curves")
        if coeffs.shape[1] != self.basis.n_basis:
            raise ValueError(
                f"coefficient matrix has {coeffs.shape[1]} columns but the basis "
                f"has {self.basis.n_basis} functions"
            )
        if np.unique(coords, axis=0).shape[0] != coords.shape[0]:
            raise ValueError("site coordinates contain duplicates")
        site_ids = self.site_ids
        if site_ids is None:
            site_ids = tuple(range(coeffs.shape[0]))
        else:
            site_ids = tuple(site_ids)
            if len(site_ids) != coeffs.shape[0]:
                raise ValueError("site_ids length does not match the number of curves")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "site_ids", site_ids)

    @property
    def n_curves(self):
        return self.coefficients.shape[0]

    @property
    def n_basis(self):
        return self.basis.n_basis

    def gram(self):
        """Gram matrix of the basis, computed once and cached."""
        if "gram" not in self._cache:
            self._cache["gram"] = gram_matrix(self.basis)
        return self._cache["gram"]

    def squared_l2_matrix(self):
        """All pairwise squared L2 distances between curves, cached.

        Returns
        -------
        numpy.ndarray of shape (n_curves, n_curves)
            Symmetric with zero diagonal; entry (i, j) equals
            ``l2_distance_sq(a_i, a_j, gram)``.
        """
        if "d2" not in self._cache:
            a = self.coefficients
            g = a @ self.gram() @ a.T
            q = np.diag(g)
            d2 = q[:, None] + q[None, :] - 2.0 * g
            np.fill_diagonal(d2, 0.0)
            self._cache["d2"] = np.maximum(d2, 0.0)
        return self._cache["d2"]

    def evaluate(self, t):
        """Evaluate every curve at the points ``t``; shape (n_curves, len(t))."""
        return self.coefficients @ self.basis.design_matrix(t).T


def l2_distance_sq(a_i, a_j, gram):
    """Squared L2 distance between two curves from their coefficients.

    Computes ``(a_i - a_j)' W (a_i - a_j)``, which equals the integral of the
    squared difference of the two curves over the basis domain.
    """
    a_i = as_float_array(a_i, "a_i", ndim=1)
    a_j = as_float_array(a_j, "a_j", ndim=1)
    if a_i.shape != a_j.shape:
        raise ValueError(f"coefficient vectors differ in length: {a_i.size} vs {a_j.size}")
    gram = as_float_array(gram, "gram", ndim=2)
    if gram.shape != (a_i.size, a_i.size):
        raise ValueError(f"gram matrix shape {gram.shape} does not match coefficient length {a_i.size}")
    d = a_i - a_j
    return float(d @ gram @ d)


def _empty_spans(basis, times):
    """Indices of knot spans containing no observation."""
    spans = np.unique(basis.knots)
    counts, _ = np.histogram(times, bins=spans)
    return [s for s, c in enumerate(counts) if c == 0]


def smooth_series(series, basis):
    """Least-squares basis coefficients of one sampled series.

    Parameters
    ----------
    series : SampledSeries
    basis : BSplineBasis or FourierBasis
        Basis whose domain covers all observation times.

    Returns
    -------
    numpy.ndarray of shape (n_basis,)

    Raises
    ------
    ValueError
        If the series has fewer observations than basis functions, or the
        design matrix is rank deficient (e.g. all observations fall into a
        single knot span).
    """
    z = basis.n_basis
    if series.n_obs < z:
        raise ValueError(
            f"series {series.site_id!r} has {series.n_obs} observations; "
            f"at least {z} are needed to fit {z} basis functions"
        )
    design = basis.design_matrix(series.times)
    coef, _, rank, _ = np.linalg.lstsq(design, series.values, rcond=None)
    if rank < z:
        empty = _empty_spans(basis, series.times)
        raise ValueError(
            f"rank-deficient design for site {series.site_id!r} (rank {rank} < {z}); "
            f"knot spans without observations: {empty}"
        )
    return coef


def _loocv_mse(series, basis):
    """Leave-one-out CV squared error of the least-squares fit, via leverages."""
    z = basis.n_basis
    if series.n_obs <= z:
        # removing any point makes the fit underdetermined
        return np.inf
    design = basis.design_matrix(series.times)
    coef, _, rank, _ = np.linalg.lstsq(design, series.values, rcond=None)
    if rank < z:
        return np.inf
    q, _ = np.linalg.qr(design)
    leverage = np.einsum("ij,ij->i", q, q)
    denom = 1.0 - leverage
    if (denom < 1e-12).any():
        return np.inf
    resid = series.values - design @ coef
    return float(np.mean((resid / denom) ** 2))


def infer_domain(series_list):
    """Smallest interval covering the times of every series."""
    if not series_list:
        raise ValueError("series list is empty")
    lo = min(s.times[0] for s in series_list)
    hi = max(s.times[-1] for s in series_list)
    if hi <= lo:
        raise ValueError("series times span a degenerate interval")
    return (lo, hi)


def select_basis_dimension(series_list, candidates, order=4, domain=None):
    """Pick the basis dimension with the best leave-one-out CV error.

    The CV error is computed per series (leaving out one time point at a
    time) and averaged over all series; one dimension is selected jointly
    for the whole collection.  Ties go to the smaller dimension.

    Parameters
    ----------
    series_list : sequence of SampledSeries
    candidates : sequence of int
        Candidate dimensions; every series must have at least
        ``max(candidates)`` observations.
    order : int, default=4
    domain : tuple, optional
        Basis domain; inferred from the data when omitted.

    Returns
    -------
    int
    """
    candidates = [check_positive_int(z, "candidate dimension") for z in candidates]
    if not candidates:
        raise ValueError("candidates must be a non-empty list of dimensions")
    series_list = list(series_list)
    if not series_list:
        raise ValueError("series list is empty")
    worst = max(candidates)
    for s in series_list:
        if s.n_obs < worst:
            raise ValueError(
                f"candidate dimension {worst} exceeds the {s.n_obs} observations "
                f"of series {s.site_id!r}"
            )
    if domain is None:
        domain = infer_domain(series_list)
    best_z, best_err = None, np.inf
    for z in sorted(set(candidates)):
        basis = BSplineBasis(domain, z, order=order)
        err = float(np.mean([_loocv_mse(s, basis) for s in series_list]))
        if err < best_err:
            best_z, best_err = z, err
    if best_z is None:
        raise ValueError("cross-validation failed for every candidate dimension")
    return best_z


def _trend_design(coords):
    return np.column_stack([np.ones(coords.shape[0]), coords])


def fit_spatial_trend(dataset):
    """OLS regression of each coefficient column on [1, lon, lat].

    Returns the (3, n_basis) matrix of regression coefficients.
    """
    if dataset.n_curves < 4:
        raise ValueError("detrending needs at least 4 sites to fit 3 regression coefficients")
    design = _trend_design(dataset.coords)
    if np.linalg.matrix_rank(design) < 3:
        raise ValueError("site coordinates are collinear; the spatial trend is not identifiable")
    beta, _, _, _ = np.linalg.lstsq(design, dataset.coefficients, rcond=None)
    return beta


def detrend(dataset):
    """Remove the coordinate-linear mean surface from every coefficient column.

    Each column of the coefficient matrix is replaced by its residual from an
    OLS fit on intercept, longitude and latitude, leaving coefficients
    orthogonal to the trend design.  Applying it twice is a no-op.
    """
    beta = fit_spatial_trend(dataset)
    resid = dataset.coefficients - _trend_design(dataset.coords) @ beta
    return replace(dataset, coefficients=resid, _cache={})


class BasisSmoother(TransformerMixin, BaseEstimator):
    """Turn a collection of sampled series into a functional dataset.

    Parameters
    ----------
    n_basis : int or sequence of int, default=8
        Basis dimension.  A sequence triggers leave-one-out cross-validated
        selection among the candidates during ``fit``.
    order : int, default=4
        Spline order; 4 gives cubic splines.
    domain : tuple of float, optional
        Basis domain; inferred from the fitted data when omitted.

    Attributes
    ----------
    basis_ : BSplineBasis
        The basis resolved during ``fit``.
    n_basis_ : int
        The dimension actually used.
    """

    def __init__(self, n_basis=8, order=4, domain=None):
        self.n_basis = n_basis
        self.order = order
        self.domain = domain

    def fit(self, X, y=None):
        series = _check_series_collection(X)
        domain = self.domain if self.domain is not None else infer_domain(series)
        if np.iterable(self.n_basis):
            z = select_basis_dimension(series, list(self.n_basis), order=self.order, domain=domain)
        else:
            z = check_positive_int(self.n_basis, "n_basis")
        self.n_basis_ = z
        self.basis_ = BSplineBasis(domain, z, order=self.order)
        return self

    def transform(self, X):
        if not hasattr(self, "basis_"):
            raise ValueError("BasisSmoother must be fitted before calling transform")
        series = _check_series_collection(X)
        coeffs = np.vstack([smooth_series(s, self.basis_) for s in series])
        coords = np.vstack([s.coords for s in series])
        return FunctionalDataset(
            basis=self.basis_,
            coefficients=coeffs,
            coords=coords,
            site_ids=[s.site_id for s in series],
        )


class SpatialTrendRemover(TransformerMixin, BaseEstimator):
    """Remove a coordinate-linear trend from the coefficients of a dataset.

    ``fit`` learns per-column OLS coefficients on [1, lon, lat];
    ``transform`` subtracts the learned surface.  ``fit_transform`` on one
    dataset is equivalent to :func:`detrend`.
    """

    def fit(self, X, y=None):
        self.trend_coef_ = fit_spatial_trend(X)
        return self

    def transform(self, X):
        if not hasattr(self, "trend_coef_"):
            raise ValueError("SpatialTrendRemover must be fitted before calling transform")
        resid = X.coefficients - _trend_design(X.coords) @ self.trend_coef_
        return replace(X, coefficients=resid, _cache={})


def _check_series_collection(X):
    series = list(X)
    if not series:
        raise ValueError("expected a non-empty collection of SampledSeries")
    for s in series:
        if not isinstance(s, SampledSeries):
            raise TypeError(f"expected SampledSeries elements, got {type(s).__name__}")
    return series
