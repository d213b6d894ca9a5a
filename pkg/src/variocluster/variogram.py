"""Empirical variograms on lag bins and parametric variogram models.

The trace-variogram averages halved squared L2 distances between curves over
site pairs falling in each distance bin; the centered variogram does the same
for the pairs anchored at one site.  Parametric exponential, Gaussian and
spherical models are fitted to the empirical points by multi-start
Nelder-Mead least squares and serve as the cluster prototypes.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import pdist, squareform

from ._validation import as_float_array, check_coords, check_option, check_positive_int

FAMILIES = ("exponential", "gaussian", "spherical")

# distance at which each family attains 95% of its sill, in units of the
# range parameter (exact for the spherical family)
_PRACTICAL_FACTOR = {"exponential": 3.0, "gaussian": np.sqrt(3.0), "spherical": 1.0}

_MIN_PARTIAL_SILL = 1e-12


class NoPairsError(ValueError):
    """No site pair falls into any lag bin."""


class InsufficientLagsError(ValueError):
    """Too few populated lags to fit a variogram model."""


class FitError(RuntimeError):
    """The variogram model fit did not produce a finite solution."""


@dataclass(frozen=True)
class LagStructure:
    """Equally spaced distance bins with per-pair bin assignments.

    Bin ``l`` covers ``(l*w, (l+1)*w]`` for bin width ``w``; its center sits
    at ``(l + 0.5) * w`` and the tolerance is ``w / 2``, so every pair within
    ``max_lag`` of each other lands in exactly one bin.

    Attributes
    ----------
    centers : numpy.ndarray of shape (n_lags,)
        Lag bin centers.
    tolerance : float
        Half the bin width.
    bin_index : numpy.ndarray of shape (n_sites, n_sites)
        Bin index of each site pair, -1 on the diagonal and for pairs beyond
        the last bin.
    """

    centers: np.ndarray
    tolerance: float
    bin_index: np.ndarray

    @property
    def n_lags(self):
        return self.centers.size

    @property
    def n_sites(self):
        return self.bin_index.shape[0]

    @property
    def max_lag(self):
        return float(self.centers[-1] + self.tolerance)

    def _index_matrix(self, subset=None):
        if subset is None:
            return self.bin_index
        subset = np.asarray(subset, dtype=int)
        return self.bin_index[np.ix_(subset, subset)]

    def pair_counts(self, subset=None):
        """Number of unordered pairs in each bin, optionally within a subset."""
        b = self._index_matrix(subset)
        iu = np.triu_indices(b.shape[0], k=1)
        vals = b[iu]
        return np.bincount(vals[vals >= 0], minlength=self.n_lags)

    def site_pair_counts(self, subset=None):
        """Directed pair counts per site and bin, shape (n, n_lags).

        Row ``i`` counts, for each bin, the pairs anchored at site ``i``;
        summing the rows gives twice the unordered counts because every pair
        is seen once from each endpoint.
        """
        b = self._index_matrix(subset)
        counts = np.empty((b.shape[0], self.n_lags), dtype=int)
        for l in range(self.n_lags):
            counts[:, l] = (b == l).sum(axis=1)
        return counts

    def pairs(self, lag):
        """Unordered site pairs (i < j) assigned to one bin."""
        i, j = np.nonzero(np.triu(self.bin_index == lag, k=1))
        return np.column_stack([i, j])


def build_lag_structure(coords, n_lags=15, max_lag=None):
    """Bin all site pairs into equally spaced distance classes.

    Parameters
    ----------
    coords : array-like of shape (n, 2)
    n_lags : int, default=15
    max_lag : float, optional
        Upper end of the last bin; defaults to half the maximum pairwise
        distance.

    Returns
    -------
    LagStructure

    Raises
    ------
    NoPairsError
        If all sites coincide (every pairwise distance is zero).
    """
    coords = check_coords(coords)
    n_lags = check_positive_int(n_lags, "n_lags")
    if coords.shape[0] < 2:
        raise ValueError("at least two sites are needed to form pairs")
    dist = squareform(pdist(coords))
    dmax = float(dist.max())
    if dmax <= 0.0:
        raise NoPairsError("all sites are coincident; no pairs at positive distance")
    if max_lag is None:
        max_lag = dmax / 2.0
    max_lag = float(max_lag)
    if max_lag <= 0.0:
        raise ValueError(f"max_lag must be positive, got {max_lag}")
    width = max_lag / n_lags
    # pair at distance d belongs to bin ceil(d/w) - 1, i.e. the half-open
    # interval (l*w, (l+1)*w]; d = 0 and d > max_lag fall outside every bin
    bins = np.ceil(dist / width).astype(np.int32) - 1
    bins[(dist <= 0.0) | (bins >= n_lags)] = -1
    centers = (np.arange(n_lags) + 0.5) * width
    return LagStructure(centers=centers, tolerance=width / 2.0, bin_index=bins)


@dataclass(frozen=True)
class EmpiricalVariogram:
    """Semivariance estimates on lag bins.

    Lags with no pairs are absent: their semivariance is NaN and their pair
    count zero.  ``pair_counts`` holds unordered pair counts for the
    trace-variogram and directed (anchored) counts for centered variograms.
    """

    lag_centers: np.ndarray
    semivariance: np.ndarray
    pair_counts: np.ndarray

    def __post_init__(self):
        centers = as_float_array(self.lag_centers, "lag_centers", ndim=1)
        semi = np.asarray(self.semivariance, dtype=float)
        counts = np.asarray(self.pair_counts, dtype=int)
        if not (centers.shape == semi.shape == counts.shape):
            raise ValueError("lag_centers, semivariance and pair_counts must share one shape")
        present = counts > 0
        if not np.isfinite(semi[present]).all() or (semi[present] < 0).any():
            raise ValueError("semivariance must be finite and nonnegative on populated lags")
        object.__setattr__(self, "lag_centers", centers)
        object.__setattr__(self, "semivariance", semi)
        object.__setattr__(self, "pair_counts", counts)

    @property
    def present(self):
        return self.pair_counts > 0

    @property
    def n_present(self):
        return int(self.present.sum())


def _resolve_subset(subset, n):
    subset = np.asarray(subset, dtype=int)
    if subset.ndim != 1 or subset.size == 0:
        raise ValueError("subset must be a non-empty 1-d index collection")
    if (subset < 0).any() or (subset >= n).any():
        raise ValueError(f"subset indices must lie in [0, {n})")
    if np.unique(subset).size != subset.size:
        raise ValueError("subset contains duplicate indices")
    return subset


def trace_variogram(dataset, lags, subset=None):
    """Empirical trace-variogram of a functional dataset.

    Per lag bin, half the average squared L2 distance between the curve
    pairs in the bin.  With ``subset``, both pair endpoints are restricted
    to the given site indices.

    Returns
    -------
    EmpiricalVariogram
        ``pair_counts`` holds the unordered pair count of each bin.

    Raises
    ------
    NoPairsError
        If no pair falls into any bin.
    """
    d2 = dataset.squared_l2_matrix()
    if lags.n_sites != d2.shape[0]:
        raise ValueError("lag structure and dataset disagree on the number of sites")
    b = lags.bin_index
    if subset is not None:
        subset = _resolve_subset(subset, d2.shape[0])
        ix = np.ix_(subset, subset)
        b = b[ix]
        d2 = d2[ix]
    iu = np.triu_indices(b.shape[0], k=1)
    vals = b[iu]
    dist2 = d2[iu]
    keep = vals >= 0
    vals, dist2 = vals[keep], dist2[keep]
    counts = np.bincount(vals, minlength=lags.n_lags)
    if counts.sum() == 0:
        raise NoPairsError("no site pair falls into any lag bin")
    sums = np.bincount(vals, weights=dist2, minlength=lags.n_lags)
    semi = np.full(lags.n_lags, np.nan)
    populated = counts > 0
    semi[populated] = 0.5 * sums[populated] / counts[populated]
    return EmpiricalVariogram(lags.centers, semi, counts)


def centered_variogram(dataset, lags, site, subset=None):
    """Empirical variogram anchored at one site.

    Per lag bin, half the average squared L2 distance from the anchor curve
    to the curves it is paired with in that bin.  With ``subset``, the
    anchor must belong to the subset and partners are restricted to it.

    Returns
    -------
    EmpiricalVariogram
        ``pair_counts`` holds the directed pair count anchored at ``site``.
    """
    d2 = dataset.squared_l2_matrix()
    n = d2.shape[0]
    if lags.n_sites != n:
        raise ValueError("lag structure and dataset disagree on the number of sites")
    site = int(site)
    if not 0 <= site < n:
        raise ValueError(f"site index {site} out of range [0, {n})")
    row_bins = lags.bin_index[site]
    row_d2 = d2[site]
    if subset is not None:
        subset = _resolve_subset(subset, n)
        if site not in subset:
            raise ValueError(f"site {site} is not a member of the given subset")
        row_bins = row_bins[subset]
        row_d2 = row_d2[subset]
    keep = row_bins >= 0
    vals, dist2 = row_bins[keep], row_d2[keep]
    counts = np.bincount(vals, minlength=lags.n_lags)
    sums = np.bincount(vals, weights=dist2, minlength=lags.n_lags)
    semi = np.full(lags.n_lags, np.nan)
    populated = counts > 0
    semi[populated] = 0.5 * sums[populated] / counts[populated]
    return EmpiricalVariogram(lags.centers, semi, counts)


def _model_curve(family, nugget, partial_sill, range_param, h):
    """Variogram values at nonnegative lags; zero exactly at h = 0."""
    u = h / range_param
    if family == "exponential":
        shape = 1.0 - np.exp(-u)
    elif family == "gaussian":
        shape = 1.0 - np.exp(-(u * u))
    else:  # spherical
        v = np.minimum(u, 1.0)
        shape = 1.5 * v - 0.5 * v**3
    return np.where(h > 0, nugget + partial_sill * shape, 0.0)


@dataclass(frozen=True)
class VariogramModel:
    """Parametric variogram curve used as a cluster prototype.

    The value is zero at lag zero, rises monotonically, and approaches
    ``nugget + partial_sill`` (the sill) at large lags; ``degenerate`` marks
    fits to all-zero empirical variograms, where the partial sill is pinned
    at its lower feasibility bound.
    """

    family: str
    nugget: float
    partial_sill: float
    range_param: float
    degenerate: bool = False

    def __post_init__(self):
        check_option(self.family, FAMILIES, "family")
        if not (np.isfinite(self.nugget) and self.nugget >= 0):
            raise ValueError(f"nugget must be finite and >= 0, got {self.nugget}")
        if not (np.isfinite(self.partial_sill) and self.partial_sill > 0):
            raise ValueError(f"partial_sill must be finite and > 0, got {self.partial_sill}")
        if not (np.isfinite(self.range_param) and self.range_param > 0):
            raise ValueError(f"range_param must be finite and > 0, got {self.range_param}")

    @property
    def sill(self):
        return self.nugget + self.partial_sill

    @property
    def practical_range(self):
        """Distance at which the curve reaches 95% of its sill (exact for spherical)."""
        return _PRACTICAL_FACTOR[self.family] * self.range_param

    def __call__(self, h):
        """Evaluate the variogram at nonnegative lag distances."""
        h_arr = np.asarray(h, dtype=float)
        if (h_arr < 0).any():
            raise ValueError("lag distances must be nonnegative")
        out = _model_curve(self.family, self.nugget, self.partial_sill, self.range_param, h_arr)
        return float(out) if np.isscalar(h) or h_arr.ndim == 0 else out


def _degenerate_model(family, scale_h, partial_sill=_MIN_PARTIAL_SILL, nugget=0.0):
    range_param = max(scale_h, 1.0) / _PRACTICAL_FACTOR[family]
    return VariogramModel(family, nugget, partial_sill, range_param, degenerate=True)


def fit_variogram(emp, family="exponential", weighting="ols"):
    """Fit a parametric variogram model to empirical semivariances.

    Minimizes the (possibly pair-count weighted) sum of squared gaps between
    the empirical points and the model curve over nugget, partial sill and
    range, using Nelder-Mead started from five deterministic range guesses.
    The data are rescaled to unit sill and unit maximum lag internally so the
    optimizer tolerances are scale-free.

    Parameters
    ----------
    emp : EmpiricalVariogram
        Needs at least three populated lags.
    family : {'exponential', 'gaussian', 'spherical'}
    weighting : {'ols', 'wls'}
        Unit weights, or weights proportional to the pair counts.

    Returns
    -------
    VariogramModel

    Raises
    ------
    InsufficientLagsError
        With fewer than three populated lags.
    FitError
        If no start leads to a finite solution.
    """
    check_option(family, FAMILIES, "family")
    check_option(weighting, ("ols", "wls"), "weighting")
    present = emp.present
    if present.sum() < 3:
        raise InsufficientLagsError(
            f"model fitting needs at least 3 populated lags, got {int(present.sum())}"
        )
    h = emp.lag_centers[present]
    g = emp.semivariance[present]
    w = np.ones_like(g) if weighting == "ols" else emp.pair_counts[present].astype(float)
    w = w / w.max()
    h_scale = float(h.max())
    g_scale = float(g.max())
    if g_scale <= 0.0:
        # all-zero variogram: identical curves; nothing to fit
        return _degenerate_model(family, h_scale)
    hn = h / h_scale
    gn = g / g_scale

    def objective(theta):
        nugget, psill, rng = theta
        resid = gn - _model_curve(family, nugget, psill, rng, hn)
        val = float(np.dot(w, resid * resid))
        return val if np.isfinite(val) else 1e300

    factor = _PRACTICAL_FACTOR[family]
    # bounds in normalized units keep the fit away from the flat-variogram
    # degeneracy where sill and range grow without bound along a near-linear
    # ridge of the objective
    bounds = [(0.0, 1.2), (_MIN_PARTIAL_SILL, 2.5), (1e-6, 2.0)]
    starts = [np.array([0.0, 1.0, r / factor]) for r in (0.1, 1 / 3, 0.5, 2 / 3, 1.0)]
    best = None
    for x0 in starts:
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000, "maxfev": 4000},
        )
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise FitError(f"no finite {family} fit found from any start")
    nugget, psill, rng = best.x
    return VariogramModel(
        family=family,
        nugget=max(float(nugget), 0.0) * g_scale,
        partial_sill=max(float(psill), _MIN_PARTIAL_SILL) * g_scale,
        range_param=max(float(rng), 1e-12) * h_scale,
    )
