"""Variogram-based dynamic clustering of georeferenced functional data.

The algorithm alternates, k-means style, between a representation step that
fits one parametric variogram prototype per cluster to that cluster's
empirical trace-variogram, and a batch allocation step that reassigns every
curve to the prototype best matching its centered variogram over lags up to
a cutoff h* derived from the prototypes' practical ranges.  Convergence is
tracked on a model-free criterion (gaps to the cluster empirical
trace-variograms) whose trace is kept non-increasing: an iteration that
would increase it is rolled back and treated as converged.
"""

from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClusterMixin

from ._validation import check_option, check_positive_int
from .variogram import (
    _MIN_PARTIAL_SILL,
    EmpiricalVariogram,
    InsufficientLagsError,
    NoPairsError,
    _degenerate_model,
    build_lag_structure,
    fit_variogram,
    trace_variogram,
)

H_STAR_RULES = ("max", "min", "median")


def _one_hot(labels, n_clusters):
    z = np.zeros((labels.size, n_clusters))
    z[np.arange(labels.size), labels] = 1.0
    return z


def _check_partition(labels, n_clusters, n):
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (n,):
        raise ValueError(f"labels must have shape ({n},), got {labels.shape}")
    if labels.min() < 0 or labels.max() >= n_clusters:
        raise ValueError(f"labels must lie in [0, {n_clusters})")
    sizes = np.bincount(labels, minlength=n_clusters)
    if (sizes == 0).any():
        empty = np.nonzero(sizes == 0)[0].tolist()
        raise ValueError(f"partition has empty clusters: {empty}")
    return labels


def _per_lag_stats(d2, bin_index, n_lags, labels, n_clusters):
    """Directed pair counts and distance sums from every site to every cluster.

    Returns
    -------
    counts, sums : numpy.ndarray of shape (n_lags, n, n_clusters)
        ``counts[l, i, k]`` is the number of sites of cluster ``k`` paired
        with site ``i`` in bin ``l``; ``sums`` accumulates the corresponding
        squared L2 curve distances.
    """
    membership = _one_hot(labels, n_clusters)
    counts = np.empty((n_lags, d2.shape[0], n_clusters))
    sums = np.empty_like(counts)
    for l in range(n_lags):
        mask = (bin_index == l).astype(float)
        counts[l] = mask @ membership
        sums[l] = (mask * d2) @ membership
    return counts, sums


def _centered_gammas(counts, sums):
    """Per-site, per-cluster centered variogram values; NaN where no pairs."""
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, 0.5 * sums / counts, np.nan)


def cluster_trace_variograms(dataset, lags, labels, n_clusters):
    """Empirical trace-variogram of each cluster (pairs within the cluster).

    Clusters with fewer than two members have no pairs and yield None.
    """
    labels = np.asarray(labels, dtype=int)
    out = []
    for k in range(n_clusters):
        members = np.nonzero(labels == k)[0]
        if members.size < 2:
            out.append(None)
            continue
        try:
            out.append(trace_variogram(dataset, lags, subset=members))
        except NoPairsError:
            out.append(None)
    return out


def fit_cluster_prototypes(dataset, lags, labels, n_clusters, family="exponential", weighting="ols"):
    """Representation step: fit one variogram prototype per cluster.

    Each prototype is the configured family fitted to the cluster's
    empirical trace-variogram.  Clusters that cannot support a fit (too few
    members or populated lags) receive a degenerate-flagged placeholder
    prototype instead of raising, so callers can detect and repair them.

    Returns
    -------
    list of VariogramModel
    """
    prototypes, _ = _representation(dataset, lags, labels, n_clusters, family, weighting)
    return prototypes


def _fallback_model(family, emp, lags):
    level = 0.0
    if emp is not None:
        level = float(np.max(emp.semivariance[emp.present], initial=0.0))
    return _degenerate_model(family, lags.max_lag, partial_sill=max(level, _MIN_PARTIAL_SILL))


def _representation(dataset, lags, labels, n_clusters, family, weighting):
    emps = cluster_trace_variograms(dataset, lags, labels, n_clusters)
    prototypes = []
    for emp in emps:
        if emp is None:
            prototypes.append(_fallback_model(family, None, lags))
            continue
        try:
            prototypes.append(fit_variogram(emp, family=family, weighting=weighting))
        except InsufficientLagsError:
            prototypes.append(_fallback_model(family, emp, lags))
    return prototypes, emps


def _reference_matrix(references, centers, n_clusters):
    """Stack reference curves as (n_lags, n_clusters) values; NaN = undefined."""
    ref = np.full((centers.size, n_clusters), np.nan)
    for k, r in enumerate(references):
        if r is None:
            continue
        if isinstance(r, EmpiricalVariogram):
            ref[:, k] = r.semivariance
        else:
            ref[:, k] = r(centers)
    return ref


def clustering_criterion(dataset, lags, labels, references, h_star, pair_weighted=False):
    """Sum of squared gaps between member centered variograms and references.

    For every curve, the centered variogram against its own cluster is
    compared with the cluster's reference curve on the populated lags up to
    ``h_star``; squared gaps are summed over curves and lags.  References
    may be fitted models or empirical (cluster trace) variograms; the latter
    gives the model-free criterion.

    With ``pair_weighted=True`` every squared gap is multiplied by the
    anchored pair count behind the centered-variogram estimate.  Under that
    norm the cluster trace-variogram (the count-weighted mean of its
    members' centered variograms) is the exact minimizer of the model-free
    criterion over reference curves, which is the consistency property the
    clustering loop relies on; the unweighted form is noise-dominated when
    per-site pair counts are small.
    """
    d2 = dataset.squared_l2_matrix()
    n = d2.shape[0]
    n_clusters = len(references)
    labels = _check_partition(labels, n_clusters, n)
    counts, sums = _per_lag_stats(d2, lags.bin_index, lags.n_lags, labels, n_clusters)
    gammas = _centered_gammas(counts, sums)
    ref = _reference_matrix(references, lags.centers, n_clusters)
    in_range = lags.centers <= h_star
    member = _one_hot(labels, n_clusters)[None, :, :]
    valid = (counts > 0) & np.isfinite(ref)[:, None, :] & in_range[:, None, None] & (member > 0)
    with np.errstate(invalid="ignore"):
        gaps = np.where(valid, gammas - ref[:, None, :], 0.0)
    if pair_weighted:
        return float(np.sum(gaps * gaps * np.where(valid, counts, 0.0)))
    return float(np.sum(gaps * gaps))


def allocate_curves(dataset, lags, labels, prototypes, h_star):
    """Batch allocation step: reassign every curve to its best prototype.

    The mismatch of curve ``i`` against cluster ``k`` sums, over populated
    lags up to ``h_star``, the squared gap between the curve's centered
    variogram toward the current members of ``k`` and the prototype, each
    lag weighted by the anchored pair count over the cluster's own pair
    count at that lag.  Ties go to the lowest cluster index.  Curves with no
    pairs toward any cluster inherit the label of their nearest spatial
    neighbor.

    Returns
    -------
    new_labels : numpy.ndarray
    n_fallback : int
        Curves assigned by the nearest-neighbor rule.
    mismatch : numpy.ndarray of shape (n, n_clusters)
        The evaluated mismatches (inf where a cluster had no usable lag).
    """
    d2 = dataset.squared_l2_matrix()
    n = d2.shape[0]
    n_clusters = len(prototypes)
    labels = _check_partition(labels, n_clusters, n)
    if h_star < lags.centers[0]:
        raise ValueError("h_star must reach at least the smallest lag center")
    counts, sums = _per_lag_stats(d2, lags.bin_index, lags.n_lags, labels, n_clusters)
    gammas = _centered_gammas(counts, sums)
    proto = _reference_matrix(prototypes, lags.centers, n_clusters)
    in_range = lags.centers <= h_star
    usable = (counts > 0) & in_range[:, None, None]
    # lag weights are the share of the curve's pairs toward the candidate
    # cluster falling in each bin; they sum to one per (curve, cluster), so
    # mismatches stay comparable across clusters of different sizes
    anchored_totals = np.sum(np.where(usable, counts, 0.0), axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(usable, counts / anchored_totals[None, :, :], 0.0)
        gaps = np.where(usable, gammas - proto[:, None, :], 0.0)
    mismatch = np.sum(gaps * gaps * rho, axis=0)
    mismatch[~usable.any(axis=0)] = np.inf

    new_labels = np.argmin(mismatch, axis=1)
    orphans = np.nonzero(np.isinf(mismatch.min(axis=1)))[0]
    for i in orphans:
        delta = dataset.coords - dataset.coords[i]
        spatial = np.einsum("ij,ij->i", delta, delta)
        spatial[i] = np.inf
        new_labels[i] = labels[np.argmin(spatial)]
    return new_labels, orphans.size, mismatch


def _repair_partition(labels, mismatch, n_clusters, rng):
    """Re-seed clusters that cannot carry pairs (fewer than two members).

    The donor is the curve with the worst allocation mismatch toward its own
    cluster among clusters that can spare a member; without mismatch
    information a random donor is drawn.
    """
    labels = labels.copy()
    sizes = np.bincount(labels, minlength=n_clusters)
    n_moved = 0
    # two passes: every cluster non-empty first, then two members where the
    # curve budget allows; donors keep the floor themselves, so each pass
    # terminates by pigeonhole
    for floor in (1, 2):
        while (sizes < floor).any():
            k = int(np.nonzero(sizes < floor)[0][0])
            donor_pool = np.nonzero(sizes[labels] > floor)[0]
            if donor_pool.size == 0:
                break
            if mismatch is None:
                donor = int(rng.choice(donor_pool))
            else:
                own = mismatch[donor_pool, labels[donor_pool]]
                own = np.where(np.isnan(own), np.inf, own)
                donor = int(donor_pool[np.argmax(own)])
            sizes[labels[donor]] -= 1
            labels[donor] = k
            sizes[k] += 1
            n_moved += 1
    return labels, n_moved


def resolve_h_star(prototypes, lags, rule="max"):
    """Cutoff lag from the prototypes' practical ranges, clamped to the bins."""
    check_option(rule, H_STAR_RULES, "h_star_rule")
    ranges = np.array([p.practical_range for p in prototypes])
    agg = {"max": np.max, "min": np.min, "median": np.median}[rule]
    return float(np.clip(agg(ranges), lags.centers[0], lags.max_lag))


def _initial_partition(rng, n, n_clusters):
    """Uniform random assignment with all clusters forced non-empty.

    Clusters are pushed to two members when the curve budget allows, since a
    singleton cluster carries no pairs.
    """
    labels = rng.integers(0, n_clusters, size=n)
    labels, _ = _repair_partition(labels, None, n_clusters, rng)
    return labels


@dataclass
class _RunResult:
    labels: np.ndarray
    prototypes: list
    h_star: float
    criterion_trace: np.ndarray
    fitted_criterion_trace: np.ndarray
    n_iter: int
    converged: bool
    n_reseeded: int
    n_fallback: int

    @property
    def criterion(self):
        return float(self.fitted_criterion_trace[-1])


def _run_single(dataset, lags, seed, n_clusters, family, weighting, h_star_rule, max_iter, tol):
    rng = np.random.default_rng(seed)
    n = dataset.n_curves
    labels = _initial_partition(rng, n, n_clusters)
    mf_trace, fit_trace = [], []
    state = None
    converged = False
    n_reseeded = 0
    n_fallback = 0
    n_iter = 0
    for _ in range(max_iter):
        n_iter += 1
        prototypes, emps = _representation(dataset, lags, labels, n_clusters, family, weighting)
        h_star = resolve_h_star(prototypes, lags, h_star_rule)
        # the convergence criterion runs over all populated lags and is
        # pair-count weighted; the cutoff h* only shapes the allocation
        # rule, so consecutive trace values stay comparable while h* moves
        # with the prototypes
        mf = clustering_criterion(dataset, lags, labels, emps, lags.max_lag, pair_weighted=True)
        fitted = clustering_criterion(
            dataset, lags, labels, prototypes, lags.max_lag, pair_weighted=True
        )
        if state is not None and mf > state[3]:
            # the last reallocation worsened the model-free criterion: keep
            # the previous state and stop
            converged = True
            break
        mf_trace.append(mf)
        fit_trace.append(fitted)
        prev_mf = state[3] if state is not None else None
        state = (labels, prototypes, h_star, mf)
        if prev_mf is not None and prev_mf - mf <= tol * max(prev_mf, 1e-300):
            converged = True
            break
        new_labels, n_fb, mismatch = allocate_curves(dataset, lags, labels, prototypes, h_star)
        n_fallback += n_fb
        new_labels, n_rs = _repair_partition(new_labels, mismatch, n_clusters, rng)
        n_reseeded += n_rs
        if np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
    labels, prototypes, h_star, _ = state
    return _RunResult(
        labels=labels,
        prototypes=prototypes,
        h_star=h_star,
        criterion_trace=np.asarray(mf_trace),
        fitted_criterion_trace=np.asarray(fit_trace),
        n_iter=n_iter,
        converged=converged,
        n_reseeded=n_reseeded,
        n_fallback=n_fallback,
    )


class VariogramKMeans(ClusterMixin, BaseEstimator):
    """Cluster georeferenced curves by their spatial variability structure.

    Starting from a seeded random partition, the estimator alternates
    fitting one parametric variogram prototype per cluster and reassigning
    every curve to the prototype that best matches its centered variogram up
    to the cutoff lag h*, until the partition or the criterion stabilizes.
    Several independent restarts are run and the best final criterion wins.

    Parameters
    ----------
    n_clusters : int, default=3
    family : {'exponential', 'gaussian', 'spherical'}, default='exponential'
        Parametric family of the prototypes.
    weighting : {'ols', 'wls'}, default='ols'
        Weighting of the prototype least-squares fit.
    n_lags : int, default=15
        Number of distance bins.
    max_lag : float, optional
        Largest binned distance; defaults to half the maximum pairwise
        site distance.
    h_star_rule : {'max', 'min', 'median'}, default='max'
        How the allocation cutoff is aggregated from the per-cluster
        practical ranges each iteration.
    max_iter : int, default=100
    tol : float, default=1e-6
        Relative decrease of the model-free criterion below which the run
        stops.
    n_restarts : int, default=10
        Independent seeded restarts.
    random_state : int, optional
        Master seed; fixing it makes the whole fit deterministic.
    n_jobs : int, optional
        Parallel restart execution (joblib semantics).

    Attributes
    ----------
    labels_ : numpy.ndarray of shape (n_curves,)
        Cluster index of each curve.
    prototypes_ : list of VariogramModel
    h_star_ : float
        Cutoff lag of the winning run at convergence.
    criterion_ : float
        Final fitted-prototype criterion of the winning run.
    criterion_trace_ : numpy.ndarray
        Per-iteration model-free criterion of the winning run;
        non-increasing by construction.
    fitted_criterion_trace_ : numpy.ndarray
        Per-iteration fitted-prototype criterion, reported alongside.
    n_iter_ : int
    converged_ : bool
    restart_criteria_ : numpy.ndarray
        Final criterion of every restart.
    n_reseeded_ : int
        Curves moved to revive degenerate clusters in the winning run.
    n_fallback_assignments_ : int
        Curves assigned by the nearest-neighbor rule in the winning run.
    """

    def __init__(
        self,
        n_clusters=3,
        family="exponential",
        weighting="ols",
        n_lags=15,
        max_lag=None,
        h_star_rule="max",
        max_iter=100,
        tol=1e-6,
        n_restarts=10,
        random_state=None,
        n_jobs=None,
    ):
        self.n_clusters = n_clusters
        self.family = family
        self.weighting = weighting
        self.n_lags = n_lags
        self.max_lag = max_lag
        self.h_star_rule = h_star_rule
        self.max_iter = max_iter
        self.tol = tol
        self.n_restarts = n_restarts
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        """Run the clustering on a FunctionalDataset.

        Parameters
        ----------
        X : FunctionalDataset
        y : ignored

        Returns
        -------
        self
        """
        n_clusters = check_positive_int(self.n_clusters, "n_clusters")
        check_option(self.family, ("exponential", "gaussian", "spherical"), "family")
        check_option(self.weighting, ("ols", "wls"), "weighting")
        check_option(self.h_star_rule, H_STAR_RULES, "h_star_rule")
        max_iter = check_positive_int(self.max_iter, "max_iter")
        n_restarts = check_positive_int(self.n_restarts, "n_restarts")
        n = X.n_curves
        if n_clusters > n:
            raise ValueError(f"n_clusters={n_clusters} exceeds the {n} curves in the dataset")
        lags = build_lag_structure(X.coords, n_lags=self.n_lags, max_lag=self.max_lag)
        X.squared_l2_matrix()  # fill the cache once, shared by all restarts
        seeds = np.random.SeedSequence(self.random_state).spawn(n_restarts)
        runs = Parallel(n_jobs=self.n_jobs)(
            delayed(_run_single)(
                X,
                lags,
                seed,
                n_clusters,
                self.family,
                self.weighting,
                self.h_star_rule,
                max_iter,
                float(self.tol),
            )
            for seed in seeds
        )
        self.restart_criteria_ = np.array([r.criterion for r in runs])
        best = runs[int(np.argmin(self.restart_criteria_))]
        self.lags_ = lags
        self.labels_ = best.labels
        self.prototypes_ = best.prototypes
        self.h_star_ = best.h_star
        self.criterion_ = best.criterion
        self.criterion_trace_ = best.criterion_trace
        self.fitted_criterion_trace_ = best.fitted_criterion_trace
        self.n_iter_ = best.n_iter
        self.converged_ = best.converged
        self.n_reseeded_ = best.n_reseeded
        self.n_fallback_assignments_ = best.n_fallback
        return self
