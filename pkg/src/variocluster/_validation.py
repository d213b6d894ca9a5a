"""Input validation helpers shared across the package."""

import numbers

import numpy as np


def as_float_array(x, name, ndim=None):
    """Coerce ``x`` to a float64 array, requiring finite entries.

    Parameters
    ----------
    x : array-like
        Input to convert.
    name : str
        Argument name used in error messages.
    ndim : int, optional
        Required number of dimensions.

    Returns
    -------
    numpy.ndarray
    """
    arr = np.asarray(x, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_coords(coords, n_sites=None):
    """Validate an (n, 2) matrix of planar site coordinates."""
    arr = as_float_array(coords, "coords", ndim=2)
    if arr.shape[1] != 2:
        raise ValueError(f"coords must have two columns, got {arr.shape[1]}")
    if n_sites is not None and arr.shape[0] != n_sites:
        raise ValueError(f"coords has {arr.shape[0]} rows, expected {n_sites}")
    return arr


def check_positive_int(value, name, minimum=1):
    """Validate an integer-valued argument with a lower bound."""
    if not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_option(value, options, name):
    """Validate a categorical argument against the allowed options."""
    if value not in options:
        allowed = ", ".join(repr(o) for o in options)
        raise ValueError(f"{name} must be one of {allowed}, got {value!r}")
    return value


def check_interval(domain, name="domain"):
    """Validate a non-degenerate closed interval given as a (lo, hi) pair."""
    try:
        lo, hi = (float(domain[0]), float(domain[1]))
    except (TypeError, ValueError, IndexError) as exc:
        raise ValueError(f"{name} must be a (lo, hi) pair, got {domain!r}") from exc
    if not np.isfinite([lo, hi]).all() or hi <= lo:
        raise ValueError(f"{name} must be a non-degenerate finite interval, got {domain!r}")
    return lo, hi
