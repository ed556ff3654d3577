"""Entropy and energy densities for the perceptron learning problem.

The annealed log-volume per weight of students at error ``eps`` after
``alpha * N`` examples is

    phi(eps; alpha) = s(eps) + alpha * ln(1 - eps) = s(eps) - e(eps; alpha),

with the entropy density ``s`` depending on the weight space and the energy
density ``e(eps; alpha) = -alpha * ln(1 - eps) >= 0``.  Natural logarithms
are used throughout.
"""

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import DomainError

HALF_LOG_2PI_E = 0.5 * (1.0 + math.log(2.0 * math.pi))


class EntropyKind(enum.Enum):
    CONTINUOUS_EXACT = "continuous-exact"
    CONTINUOUS_BOUND_ONE = "continuous-bound"
    ISING_EXACT = "ising-exact"
    ISING_SMALL_EPS = "ising-small-eps"
    TABULATED = "tabulated"


def binary_entropy(x):
    """Natural-log binary entropy with ``H(0) = H(1) = 0``."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x * np.log(x) - (1.0 - x) * np.log1p(-x)
    h = np.where((x <= 0.0) | (x >= 1.0), 0.0, h)
    return float(h) if h.ndim == 0 else h


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def entropy_continuous(eps):
    """Spherical-perceptron entropy ``(1 + ln 2pi + ln sin^2(pi eps)) / 2``.

    Diverges to ``-inf`` at both ends; ``eps`` in ``{0, 1}`` returns ``-inf``.
    """
    eps = np.asarray(eps, dtype=np.float64)
    with np.errstate(divide="ignore"):
        s = HALF_LOG_2PI_E + np.log(np.abs(np.sin(np.pi * eps)))
    s = np.where((eps <= 0.0) | (eps >= 1.0), -np.inf, s)
    return _out(s)


def entropy_ising(eps):
    """Ising-perceptron entropy ``H(sin^2(pi eps / 2))``, zero at both ends."""
    eps = np.asarray(eps, dtype=np.float64)
    return binary_entropy(np.sin(0.5 * np.pi * eps) ** 2)


def entropy_ising_from_overlap(eps):
    """Same function as :func:`entropy_ising`, written in the overlap variable.

    Uses ``R = cos(pi eps)`` and the entropy of flipping ``(1 - R) / 2`` of the
    ``N`` spins.  Kept separate so the two forms can be checked against each
    other.
    """
    r = np.cos(np.pi * np.asarray(eps, dtype=np.float64))
    p, q = (1.0 - r) / 2.0, (1.0 + r) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = -p * np.log(p) - q * np.log(q)
    s = np.where((p <= 0.0) | (q <= 0.0), 0.0, s)
    return _out(s)


def entropy_ising_small_eps(eps):
    """Small-error form of the Ising entropy, ``-(pi^2 / 2) eps^2 ln eps``."""
    eps = np.asarray(eps, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = -0.5 * np.pi**2 * eps**2 * np.log(eps)
    s = np.where(eps <= 0.0, 0.0, s)
    return _out(s)


def energy_density(eps, alpha):
    """Data penalty ``-alpha ln(1 - eps)``; ``+inf`` at ``eps = 1``."""
    if np.any(np.asarray(alpha) < 0):
        raise DomainError(f"alpha must be non-negative, got {alpha!r}")
    eps = np.asarray(eps, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        e = -np.asarray(alpha, dtype=np.float64) * np.log1p(-eps)
    # alpha = 0 at eps = 1 is 0 * inf; zero data means zero penalty
    e = np.where(np.asarray(alpha) == 0, 0.0, e)
    return _out(e)


@dataclass(frozen=True)
class EntropyModel:
    """A named entropy density ``s(eps)``.

    ``table`` is only used by ``TABULATED`` models: ``(eps, s)`` pairs with
    strictly increasing ``eps``, interpolated linearly.  Evaluating outside
    the tabulated range raises :class:`DomainError`.
    """

    kind: EntropyKind
    table: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind is EntropyKind.TABULATED:
            if len(self.table) < 2:
                raise ValueError("a tabulated entropy needs at least two points")
            xs = np.array([p[0] for p in self.table], dtype=np.float64)
            ys = np.array([p[1] for p in self.table], dtype=np.float64)
            if np.any(np.diff(xs) <= 0):
                raise ValueError("tabulated eps values must be strictly increasing")
            if xs[0] < 0 or xs[-1] > 1:
                raise ValueError("tabulated eps values must lie in [0, 1]")
            if not np.all(np.isfinite(ys)):
                raise ValueError("tabulated entropy values must be finite")
        elif self.table:
            raise ValueError(f"{self.kind.value} does not take a table")

    @classmethod
    def from_name(cls, name):
        return cls(EntropyKind(name))

    @classmethod
    def tabulated(cls, pairs):
        return cls(EntropyKind.TABULATED, tuple((float(a), float(b)) for a, b in pairs))

    @classmethod
    def from_csv(cls, path):
        """Load a two-column ``eps,s`` table; a non-numeric first row is a header."""
        pairs = []
        seen_header = False
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    pairs.append((float(row[0]), float(row[1])))
                except ValueError:
                    if not pairs and not seen_header:
                        seen_header = True
                        continue
                    raise
        return cls.tabulated(pairs)

    @property
    def name(self):
        return self.kind.value

    @property
    def domain(self):
        if self.kind is EntropyKind.TABULATED:
            return self.table[0][0], self.table[-1][0]
        return 0.0, 1.0

    def entropy(self, eps):
        kind = self.kind
        if kind is EntropyKind.CONTINUOUS_EXACT:
            return entropy_continuous(eps)
        if kind is EntropyKind.CONTINUOUS_BOUND_ONE:
            return _out(np.ones_like(np.asarray(eps, dtype=np.float64)))
        if kind is EntropyKind.ISING_EXACT:
            return entropy_ising(eps)
        if kind is EntropyKind.ISING_SMALL_EPS:
            return entropy_ising_small_eps(eps)
        lo, hi = self.domain
        eps = np.asarray(eps, dtype=np.float64)
        if np.any(eps < lo) or np.any(eps > hi):
            raise DomainError(f"eps outside tabulated range [{lo}, {hi}]")
        xs, ys = zip(*self.table)
        return _out(np.interp(eps, xs, ys))

    __call__ = entropy

    def log_volume_density(self, eps, alpha):
        return annealed_log_volume_density(self, eps, alpha)


def annealed_log_volume_density(model, eps, alpha):
    """``phi(eps; alpha) = s(eps) - e(eps; alpha)`` for the given entropy model."""
    s = np.asarray(model.entropy(eps), dtype=np.float64)
    e = np.asarray(energy_density(eps, alpha), dtype=np.float64)
    with np.errstate(invalid="ignore"):
        phi = s - e
    # -inf - (+inf) stays -inf
    phi = np.where(np.isneginf(s) | np.isposinf(e), -np.inf, phi)
    return _out(phi)
