"""Closed-form probabilities of measuring a bad entry, with and without oracle errors.

Two forms of the bad-measurement probability are provided. ``p_bad`` evaluates
the amplification angle at the real-valued optimal round count, while
``p_bad_at`` uses an explicit integer round count, which is what a planner
actually runs. ``p_bad_limit`` is ``p_bad`` written in terms of the solution
fraction alone.
"""

from dataclasses import dataclass
import math

from .qsearch import GroverInstance, success_probability
from .utils.validation import check_int, check_probability, warn_outside

LINEAR_SLOPE = 1.251
LINEAR_INTERCEPT = -0.0159
LINEAR_DOMAIN = (0.04, 0.75)
_RESIDUE = 1e-12


def _clamp(p):
    if -_RESIDUE <= p < 0.0:
        return 0.0
    if 1.0 < p <= 1.0 + _RESIDUE:
        return 1.0
    return p


@dataclass(frozen=True)
class OracleErrorRates:
    """False-positive rate ``q`` (bad tagged good) and false-negative rate ``v``."""

    q: float = 0.0
    v: float = 0.0

    def __post_init__(self):
        check_probability(self.q, "q")
        check_probability(self.v, "v")


@dataclass(frozen=True)
class ErrorQuery:
    N: int
    m: int
    r: float
    M: int = 1
    path_len: int = 1

    def __post_init__(self):
        check_int(self.N, "N", 1)
        check_int(self.m, "m", 1, self.N)
        if not 0.0 < self.r < 1.0:
            raise ValueError("r must lie strictly between 0 and 1")
        check_int(self.M, "M", 1)
        check_int(self.path_len, "path_len", 1)


def _real_optimum_bad(x):
    return _clamp(1.0 - math.sin((math.pi / 2.0 * math.sqrt(1.0 / x) + 1.0) * math.asin(math.sqrt(x))) ** 2)


def p_bad(N, m):
    """Bad-measurement probability at the real-valued optimal round count; 1 when ``m == 0``."""
    N = check_int(N, "N", 1)
    m = check_int(m, "m", 0, N)
    if m == 0:
        return 1.0
    return _real_optimum_bad(m / N)


def p_bad_at(N, m, i):
    """Bad-measurement probability after exactly ``i`` rounds."""
    N = check_int(N, "N", 1)
    m = check_int(m, "m", 0, N)
    i = check_int(i, "i", 0)
    if m == 0:
        return 1.0
    return _clamp(1.0 - success_probability(GroverInstance(N, m), i))


def p_bad_limit(r):
    if not 0.0 < r <= 1.0:
        raise ValueError("solution fraction must lie in (0, 1]")
    return _real_optimum_bad(r)


def _at_least_one(p_single, count):
    count = check_int(count, "count", 0)
    return _clamp(1.0 - (1.0 - p_single) ** count)


def p_any_bad_tree(r, M):
    """Upper bound on the chance that an ``M``-node tree holds a bad node."""
    return _at_least_one(p_bad_limit(r), M)


def p_any_bad_path(r, path_len):
    return _at_least_one(p_bad_limit(r), path_len)


def _with_errors(p_e, rates):
    return _clamp((-1.0 + rates.q + rates.v) * p_e + 1.0 - rates.q)


def p_good_with_errors(N, m, rates):
    """Probability that a measured entry is truly good when the oracle mislabels entries."""
    return _with_errors(p_bad(N, m), rates)


def p_good_limit(r, rates):
    return _with_errors(p_bad_limit(r), rates)


def p_any_bad_tree_err(r, M, rates):
    return _at_least_one(1.0 - p_good_limit(r, rates), M)


def p_any_bad_path_err(r, path_len, rates):
    return _at_least_one(1.0 - p_good_limit(r, rates), path_len)


def linear_approx_pbad(x):
    """Linear stand-in ``1.251 x - 0.0159`` for ``p_bad`` over fractions in [0.04, 0.75].

    Outside that range a RuntimeWarning is raised and the line is still evaluated.
    """
    warn_outside(x, *LINEAR_DOMAIN, "solution fraction")
    return LINEAR_SLOPE * x + LINEAR_INTERCEPT
