"""Partition agreement scoring."""

import numpy as np


def rand_index(labels_a, labels_b):
    """Fraction of object pairs on whose co-clustering two partitions agree.

    A pair agrees when it is grouped together in both partitions or split in
    both; the result is 1 exactly when the two co-clustering relations
    coincide and is invariant to relabeling.  Computed from the contingency
    table, so the cost is linear in the number of objects.

    Parameters
    ----------
    labels_a, labels_b : array-like of equal length >= 2

    Returns
    -------
    float in [0, 1]
    """
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.size != b.size:
        raise ValueError(f"partitions differ in length: {a.size} vs {b.size}")
    n = a.size
    if n < 2:
        raise ValueError("rand_index needs at least two objects")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka = int(ai.max()) + 1
    kb = int(bi.max()) + 1
    contingency = np.bincount(ai * kb + bi, minlength=ka * kb).reshape(ka, kb)

    def pairs(x):
        x = x.astype(float)
        return 0.5 * np.sum(x * (x - 1.0))

    total = 0.5 * n * (n - 1.0)
    together_both = pairs(contingency)
    together_a = pairs(contingency.sum(axis=1))
    together_b = pairs(contingency.sum(axis=0))
    agreements = total + 2.0 * together_both - together_a - together_b
    return float(agreements / total)
