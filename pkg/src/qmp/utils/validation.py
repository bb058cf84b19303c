"""Input validation helpers used across the package."""

import numbers
import warnings

import numpy as np

from ..exceptions import DomainError


def check_rng(random_state=None):
    """Turn ``None``, an int seed or a Generator into a ``numpy.random.Generator``."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(random_state, (numbers.Integral, np.integer)):
        return np.random.default_rng(random_state)
    if isinstance(random_state, np.random.SeedSequence):
        return np.random.default_rng(random_state)
    raise TypeError(f"cannot build a random Generator from {random_state!r}")


def check_int(value, name, min_value=None, max_value=None):
    if isinstance(value, bool) or not isinstance(value, (numbers.Integral, np.integer)):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if min_value is not None and value < min_value:
        raise DomainError(f"{name}={value} is below the minimum {min_value}")
    if max_value is not None and value > max_value:
        raise DomainError(f"{name}={value} is above the maximum {max_value}")
    return value


def check_probability(value, name="p"):
    value = float(value)
    if not (0.0 <= value <= 1.0) or not np.isfinite(value):
        raise DomainError(f"{name}={value} is not a probability in [0, 1]")
    return value


def check_point(x, d=None, name="x"):
    """Return ``x`` as a finite 1-D float array, optionally of length ``d``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DomainError(f"{name} must be a 1-D point, got shape {x.shape}")
    if d is not None and x.shape[0] != d:
        raise DomainError(f"{name} has {x.shape[0]} coordinates, expected {d}")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} has non-finite coordinates")
    return x


def check_points(X, d=None, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise DomainError(f"{name} must be an (n, d) array, got shape {X.shape}")
    if d is not None and X.shape[1] != d:
        raise DomainError(f"{name} has {X.shape[1]} columns, expected {d}")
    if not np.all(np.isfinite(X)):
        raise DomainError(f"{name} has non-finite entries")
    return X


def warn_outside(value, lo, hi, what):
    if value < lo or value > hi:
        warnings.warn(
            f"{what}={value} lies outside the fitted domain [{lo}, {hi}]",
            RuntimeWarning,
            stacklevel=3,
        )
