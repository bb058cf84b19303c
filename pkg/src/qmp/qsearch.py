"""Statevector simulation of amplitude amplification over a real register.

Starting from the uniform superposition, the phase oracle and the inversion
about the mean only ever produce real amplitudes, so the register is stored
as a float vector of length ``2**n``.  The operator Q is applied in O(N)
(sign flip + reflection), never as a dense matrix.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import CapacityError, NoSolutionsError, NormalizationError, ShapeError
from .utils import check_int, check_rng

MAX_QUBITS = 16


@dataclass
class QuantumRegister:
    """Amplitude vector of an ``n``-qubit register."""

    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if self.amplitudes.shape != (2**self.n,):
            raise ShapeError(
                f"register of width {self.n} needs {2**self.n} amplitudes, "
                f"got shape {self.amplitudes.shape}"
            )

    @property
    def size(self):
        return self.amplitudes.shape[0]

    def probabilities(self):
        return self.amplitudes**2

    def norm2(self):
        return float(np.dot(self.amplitudes, self.amplitudes))

    def copy(self):
        return QuantumRegister(self.n, self.amplitudes.copy())


@dataclass
class OracleMask:
    """Ground-truth predicate over database indices plus an oracle-call tally."""

    truth: np.ndarray
    calls: int = 0

    def __post_init__(self):
        truth = np.asarray(self.truth, dtype=bool).copy()
        truth.setflags(write=False)
        self.truth = truth

    def __len__(self):
        return self.truth.shape[0]

    @property
    def m(self):
        return int(np.count_nonzero(self.truth))


@dataclass(frozen=True)
class GroverInstance:
    N: int
    m: int
    theta: float = field(init=False)

    def __post_init__(self):
        if not 0 <= self.m <= self.N:
            raise ValueError(f"need 0 <= m <= N, got m={self.m}, N={self.N}")
        object.__setattr__(self, "theta", math.asin(math.sqrt(self.m / self.N)))


def _check_width(n):
    n = check_int(n, "n")
    if not 1 <= n <= MAX_QUBITS:
        raise CapacityError(f"register width {n} outside [1, {MAX_QUBITS}]")
    return n


def basis_state(n, index=0):
    n = _check_width(n)
    amps = np.zeros(2**n)
    amps[index] = 1.0
    return QuantumRegister(n, amps)


def walsh_hadamard(reg):
    """Apply H on every qubit (fast Walsh-Hadamard transform), in place."""
    a = reg.amplitudes
    h = 1
    while h < a.shape[0]:
        view = a.reshape(-1, 2, h)
        top = view[:, 0, :].copy()
        view[:, 0, :] += view[:, 1, :]
        view[:, 1, :] = top - view[:, 1, :]
        h *= 2
    a *= 2.0 ** (-reg.n / 2)
    return reg


def uniform_superposition(n):
    """Equal superposition over ``2**n`` basis states."""
    n = _check_width(n)
    return QuantumRegister(n, np.full(2**n, 2.0 ** (-n / 2)))


def grover_iterate(reg, mask):
    """One application of Q: phase-flip marked entries, then invert about the mean.

    Mutates ``reg`` and counts one oracle call on ``mask``.
    """
    if len(mask) != reg.size:
        raise ShapeError(f"mask has {len(mask)} entries, register has {reg.size}")
    a = reg.amplitudes
    a[mask.truth] *= -1.0
    np.subtract(2.0 * a.mean(), a, out=a)
    mask.calls += 1
    return reg


def optimal_iterations(N, m):
    """``floor(pi/4 * sqrt(N/m))``."""
    if m <= 0:
        raise NoSolutionsError("no marked entries: the iteration count is undefined")
    if m > N:
        raise ValueError(f"m={m} exceeds N={N}")
    return int(math.floor(math.pi / 4.0 * math.sqrt(N / m)))


def success_probability(inst, i):
    """Closed-form marked-state probability ``sin^2((2i+1) theta)`` after ``i`` iterations."""
    if inst.m == 0:
        return 0.0
    return math.sin((2 * i + 1) * inst.theta) ** 2


def marked_probability(reg, mask):
    return float(np.sum(reg.amplitudes[mask.truth] ** 2))


def measure(reg, rng=None, size=None, atol=1e-6):
    """Born-rule measurement by inverse-CDF lookup.

    Returns one basis index, or an array of ``size`` independent draws from
    the same pre-measurement state (used for statistics only; planners
    rebuild the register after every collapse).
    """
    p = reg.probabilities()
    total = p.sum()
    if abs(total - 1.0) > atol:
        raise NormalizationError(f"register norm^2 = {total:.9g}, expected 1")
    rng = check_rng(rng)
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    u = rng.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, reg.size - 1)
    if size is None:
        return int(idx)
    return idx


@dataclass
class CountingLedger:
    invocations: int = 0


def count_solutions(mask, relative_error=0.0, ledger=None):
    """Exact-count stand-in for quantum counting.

    Does not touch ``mask.calls``; each invocation is tallied in ``ledger``
    instead.  A nonzero ``relative_error`` returns ``round(m * (1 + eps))``
    for robustness studies.
    """
    m = mask.m
    if ledger is not None:
        ledger.invocations += 1
    if relative_error:
        m = int(np.clip(round(m * (1.0 + relative_error)), 0, len(mask)))
    return m


def classical_probes(mask, rng=None, replace=False):
    """Oracle calls a uniform classical scan spends before hitting a marked entry.

    Without replacement the scan walks a random permutation; with
    replacement each probe is an independent uniform index.
    """
    if mask.m == 0:
        raise NoSolutionsError("no marked entries to find")
    rng = check_rng(rng)
    N = len(mask)
    if replace:
        probes = 0
        while True:
            probes += 1
            if mask.truth[rng.integers(0, N)]:
                break
    else:
        order = rng.permutation(N)
        probes = int(np.argmax(mask.truth[order])) + 1
    mask.calls += probes
    return probes


def amplify(mask, iterations):
    """Uniform register over ``len(mask)`` entries after ``iterations`` applications of Q."""
    N = len(mask)
    n = N.bit_length() - 1
    if 2**n != N:
        raise ShapeError(f"database size {N} is not a power of two")
    reg = uniform_superposition(n)
    for _ in range(iterations):
        grover_iterate(reg, mask)
    return reg


class AmplitudeAmplifier(BaseEstimator):
    """Estimator-style front end: ``fit`` amplifies a truth vector, ``sample`` measures.

    Parameters
    ----------
    n_iterations : int or "optimal"
        Number of Q applications; ``"optimal"`` uses the floored optimum
        computed from the exact solution count.
    random_state : int, Generator or None
    """

    def __init__(self, n_iterations="optimal", random_state=None):
        self.n_iterations = n_iterations
        self.random_state = random_state

    def fit(self, truth, y=None):
        self.mask_ = OracleMask(truth)
        if self.n_iterations == "optimal":
            self.n_iterations_ = optimal_iterations(len(self.mask_), self.mask_.m)
        else:
            self.n_iterations_ = check_int(self.n_iterations, "n_iterations", 0)
        self.register_ = amplify(self.mask_, self.n_iterations_)
        self.success_probability_ = marked_probability(self.register_, self.mask_)
        self._rng = check_rng(self.random_state)
        return self

    def sample(self, size=None):
        return measure(self.register_, self._rng, size=size)
