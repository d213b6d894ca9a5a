"""Choosing the variogram family and the number of clusters.

Both procedures sweep the clustering over the candidates with a shared
master seed, so every candidate starts from the identical initial
partitions, and return the full criterion table next to the winner; the
selection rules are heuristics and users are expected to inspect the table.
"""

import numpy as np

from .cluster import VariogramKMeans
from .variogram import FAMILIES


def select_family(dataset, n_clusters=3, families=FAMILIES, random_state=0, **params):
    """Pick the prototype family with the smallest final criterion.

    Runs the clustering once per family from identical seeded initial
    partitions.

    Parameters
    ----------
    dataset : FunctionalDataset
    n_clusters : int, default=3
    families : sequence of str, default=('exponential', 'gaussian', 'spherical')
    random_state : int, default=0
    **params
        Extra VariogramKMeans parameters (n_restarts, n_lags, ...).

    Returns
    -------
    best_family : str
    criteria : dict mapping family -> final criterion
    """
    families = list(families)
    if not families:
        raise ValueError("families must be a non-empty sequence")
    criteria = {}
    for family in families:
        est = VariogramKMeans(
            n_clusters=n_clusters, family=family, random_state=random_state, **params
        )
        est.fit(dataset)
        criteria[family] = est.criterion_
    best_family = min(families, key=lambda f: criteria[f])
    return best_family, criteria


def select_n_clusters(dataset, k_values, random_state=0, **params):
    """Pick the cluster count at the largest drop of the criterion curve.

    Runs the clustering for every candidate K and selects the K whose
    criterion drops the most relative to the previous candidate (the elbow);
    a single candidate is returned as-is.  The whole curve is returned so
    the rule can be overridden.

    Returns
    -------
    best_k : int
    criteria : dict mapping K -> final criterion
    """
    k_values = sorted(set(int(k) for k in k_values))
    if not k_values:
        raise ValueError("k_values must be a non-empty sequence")
    if k_values[0] < 1 or k_values[-1] > dataset.n_curves:
        raise ValueError(
            f"k_values must lie within [1, {dataset.n_curves}], got {k_values}"
        )
    criteria = {}
    for k in k_values:
        est = VariogramKMeans(n_clusters=k, random_state=random_state, **params)
        est.fit(dataset)
        criteria[k] = est.criterion_
    if len(k_values) == 1:
        return k_values[0], criteria
    drops = np.array([criteria[a] - criteria[b] for a, b in zip(k_values[:-1], k_values[1:])])
    best_k = k_values[1 + int(np.argmax(drops))]
    return best_k, criteria
