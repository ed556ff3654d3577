"""PAC/VC-style bounds and the refined finite-class bound.

The refined bound keeps track of how many hypotheses ``q_j`` sit at each
error level ``eps_j``: a hypothesis at level ``j`` survives ``m`` independent
examples with probability ``(1 - eps_j)^m``, so by the union bound

    bound = min{ eps_i : sum_{j > i} q_j (1 - eps_j)^m <= delta }

fails with probability at most ``delta``.

Counts can be astronomically large, so tail sums are accumulated in log
space.
"""

import math
from dataclasses import dataclass

import numpy as np

RATE_LABEL = "rate shape, constants unspecified"


@dataclass(frozen=True)
class PacParams:
    delta: float
    m: int

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")


@dataclass(frozen=True)
class ErrorSpectrum:
    """Error levels ``eps_j`` (strictly increasing) and their multiplicities ``q_j``."""

    eps: tuple
    counts: tuple

    def __post_init__(self):
        if len(self.eps) == 0:
            raise ValueError("an error spectrum needs at least one level")
        if len(self.eps) != len(self.counts):
            raise ValueError("eps and counts must have equal length")
        if any(b <= a for a, b in zip(self.eps, self.eps[1:])):
            raise ValueError("spectrum levels must be strictly increasing")
        if any(e < 0 or e > 1 for e in self.eps):
            raise ValueError("spectrum levels must lie in [0, 1]")
        if any(int(q) != q or q < 1 for q in self.counts):
            raise ValueError("level counts must be positive integers")

    @classmethod
    def from_errors(cls, errors):
        """Group an array of per-hypothesis errors into levels."""
        values, counts = np.unique(np.asarray(errors, dtype=np.float64), return_counts=True)
        return cls(tuple(values.tolist()), tuple(int(c) for c in counts))

    @property
    def total(self):
        return sum(self.counts)

    def levels(self):
        return list(zip(self.eps, self.counts))

    def log_tail_sums(self, m):
        """``log sum_{j >= i} q_j (1 - eps_j)^m`` for every ``i``."""
        terms = np.array(
            [
                math.log(q) + (m * math.log1p(-e) if e < 1.0 else (0.0 if m == 0 else -math.inf))
                for e, q in zip(self.eps, self.counts)
            ]
        )
        return np.logaddexp.accumulate(terms[::-1])[::-1]


@dataclass(frozen=True)
class BoundReport:
    bound: float
    vacuous: bool
    method: str
    raw: float

    def to_json_dict(self):
        return {"bound": self.bound, "vacuous_flag": self.vacuous, "method": self.method}


def hoeffding_bound(m, delta_gap):
    """Two-sided Hoeffding tail ``2 exp(-2 m delta_gap^2)`` for one fixed hypothesis."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not delta_gap > 0:
        raise ValueError(f"delta_gap must be positive, got {delta_gap}")
    return 2.0 * math.exp(-2.0 * m * delta_gap**2)


def uniform_bound(class_size, m, delta_gap):
    """Union of the Hoeffding tail over a finite class, ``2 |F| exp(-2 m gap^2)``."""
    if class_size < 1:
        raise ValueError(f"class_size must be >= 1, got {class_size}")
    return class_size * hoeffding_bound(m, delta_gap)


def pac_consistent_error_bound(class_size, params):
    """``ln(|F| / delta) / m`` for any consistent hypothesis; reported capped at 1."""
    if class_size < 1:
        raise ValueError(f"class_size must be >= 1, got {class_size}")
    raw = (math.log(class_size) - math.log(params.delta)) / params.m
    return BoundReport(min(raw, 1.0), raw >= 1.0, "pac-consistent", raw)


def refined_spectrum_bound(spectrum, params, tail="strict"):
    """Finite-class bound from the error spectrum.

    ``tail="strict"`` returns the smallest level ``eps_i`` whose strict tail
    ``sum_{j > i} q_j (1 - eps_j)^m`` is at most ``delta``: with probability
    at least ``1 - delta`` no consistent hypothesis sits above ``eps_i``.
    ``tail="inclusive"`` sums ``j >= i`` instead, which is also valid but
    one level more conservative.

    A bound equal to the largest level of a multi-level spectrum certifies
    nothing and is flagged vacuous.
    """
    if not isinstance(spectrum, ErrorSpectrum):
        raise TypeError("refined_spectrum_bound needs an ErrorSpectrum")
    if tail not in ("strict", "inclusive"):
        raise ValueError(f"tail must be 'strict' or 'inclusive', got {tail!r}")
    tails = spectrum.log_tail_sums(params.m)
    if tail == "strict":
        tails = np.append(tails[1:], -math.inf)
    ok = np.flatnonzero(tails <= math.log(params.delta))
    i = int(ok[0]) if ok.size else len(spectrum.eps) - 1
    top = i == len(spectrum.eps) - 1 and len(spectrum.eps) > 1
    eps = spectrum.eps[i]
    return BoundReport(eps, top or ok.size == 0, f"refined-spectrum-{tail}", eps)


@dataclass(frozen=True)
class RateCurve:
    m: np.ndarray
    rate: np.ndarray
    realizable: bool
    label: str = RATE_LABEL


def vc_rate_curve(d_vc, m_grid, realizable=True):
    """VC decay shapes ``d ln(m)/m`` (realizable) or its square root.

    The hidden constants are set to 1; only the shape is meaningful.
    """
    if d_vc < 1:
        raise ValueError(f"d_vc must be >= 1, got {d_vc}")
    m = np.asarray(m_grid, dtype=np.float64)
    if np.any(m <= 1):
        raise ValueError("m grid must exceed 1 so that ln(m) > 0")
    rate = d_vc * np.log(m) / m
    if not realizable:
        rate = np.sqrt(rate)
    return RateCurve(m, rate, bool(realizable))


def ising_spectrum(n):
    """Spectrum of the ``2^n`` Ising students around a fixed Ising teacher.

    A student differing from the teacher in ``d`` spins has overlap
    ``1 - 2d/n``; there are ``C(n, d)`` of them.
    """
    d = np.arange(n + 1)
    eps = np.arccos(np.clip(1.0 - 2.0 * d / n, -1.0, 1.0)) / np.pi
    return ErrorSpectrum(tuple(eps.tolist()), tuple(math.comb(n, int(k)) for k in d))


def enumerated_ising_spectrum(teacher):
    """Spectrum obtained by listing every Ising student and its exact error."""
    from .gibbs_sim import iter_ising_students
    from .geometry import overlap_to_error

    teacher = np.asarray(teacher, dtype=np.float64)
    n = teacher.shape[0]
    errors = []
    for _, students in iter_ising_students(n):
        errors.append(overlap_to_error(np.clip(students @ teacher / n, -1.0, 1.0)))
    return ErrorSpectrum.from_errors(np.concatenate(errors))


@dataclass
class PacValidityResult:
    draws: int
    violations: int
    delta: float
    m: int
    n: int
    refined: list
    pac: list
    max_vs_error: list

    @property
    def violation_rate(self):
        return self.violations / self.draws

    @property
    def tolerance(self):
        """``delta`` plus three binomial standard deviations."""
        return self.delta + 3.0 * math.sqrt(self.delta * (1.0 - self.delta) / self.draws)

    @property
    def dominated_every_draw(self):
        return all(r <= p for r, p in zip(self.refined, self.pac))


def pac_validity_experiment(n, m, delta, draws, seed, threads=None):
    """Check the refined bound against exact version spaces of random datasets.

    Each draw uses its own teacher and Gaussian patterns.  The spectrum is
    enumerated for that teacher, and a violation is any version-space member
    whose error exceeds the bound.
    """
    from ._parallel import parallel_map
    from .gibbs_sim import WeightSpace, generate_instance, version_space_errors

    params = PacParams(delta, m)

    def one(t):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(t,)))
        inst = generate_instance(n, m, WeightSpace.ISING, rng)
        spectrum = enumerated_ising_spectrum(inst.teacher)
        refined = refined_spectrum_bound(spectrum, params).bound
        pac = pac_consistent_error_bound(spectrum.total, params).bound
        worst = float(version_space_errors(inst).max())
        return refined, pac, worst

    rows = parallel_map(one, range(draws), threads)
    refined = [r[0] for r in rows]
    pac = [r[1] for r in rows]
    worst = [r[2] for r in rows]
    violations = sum(w > b for w, b in zip(worst, refined))
    return PacValidityResult(draws, violations, delta, m, n, refined, pac, worst)
