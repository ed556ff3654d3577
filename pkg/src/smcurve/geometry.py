"""Teacher-student overlap geometry for the perceptron.

For inputs with a spherically symmetric distribution, a student ``J`` and a
teacher ``T`` disagree on a random input with probability ``theta / pi``,
where ``theta`` is the angle between them.  With the normalised overlap
``R = J.T / N`` this gives ``eps = arccos(R) / pi``.

Volumes of students are exponential in ``N`` and are therefore always handled
as logarithms.
"""

import math

import numpy as np

# arccos inputs this close outside [-1, 1] are treated as rounding error
CLAMP_SLACK = 1e-12


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


def _check_overlap(r):
    r = np.asarray(r, dtype=np.float64)
    if np.any(np.isnan(r)) or np.any(np.abs(r) > 1.0 + CLAMP_SLACK):
        raise DomainError(f"overlap must lie in [-1, 1], got {r!r}")
    return np.clip(r, -1.0, 1.0)


def _check_error(eps):
    eps = np.asarray(eps, dtype=np.float64)
    if np.any(np.isnan(eps)) or np.any(eps < 0.0) or np.any(eps > 1.0):
        raise DomainError(f"generalization error must lie in [0, 1], got {eps!r}")
    return eps


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def overlap_to_error(r):
    """Generalization error ``arccos(r) / pi`` of a student with overlap ``r``.

    Accepts scalars or arrays.  Values within ``CLAMP_SLACK`` of the interval
    are clamped; anything further out raises :class:`DomainError`.
    """
    return _scalar_or_array(np.arccos(_check_overlap(r)) / np.pi)


def error_to_overlap(eps):
    """Inverse of :func:`overlap_to_error`: ``cos(pi * eps)``."""
    return _scalar_or_array(np.cos(np.pi * _check_error(eps)))


def student_error(student, teacher):
    """Exact generalization error between two weight vectors of any norm."""
    student = np.asarray(student, dtype=np.float64)
    teacher = np.asarray(teacher, dtype=np.float64)
    r = student @ teacher / (np.linalg.norm(student) * np.linalg.norm(teacher))
    return overlap_to_error(np.clip(r, -1.0, 1.0))


def survival_log_volume(log_omega0, eps, m):
    """Log volume of students at error ``eps`` still consistent after ``m`` examples.

    Each independent example keeps a student of error ``eps`` with
    probability ``1 - eps``, so ``log Omega_m = log Omega_0 + m log(1 - eps)``.
    ``eps = 1`` with ``m > 0`` gives ``-inf`` (nothing survives).
    """
    if m < 0:
        raise DomainError(f"m must be non-negative, got {m}")
    eps = float(_check_error(eps))
    if m == 0:
        return float(log_omega0)
    if eps == 1.0:
        return -math.inf
    return float(log_omega0) + m * math.log1p(-eps)


def disagreement_frequency(student, teacher, samples, rng, inputs="gaussian"):
    """Monte Carlo estimate of the teacher-student disagreement probability.

    ``inputs="gaussian"`` draws i.i.d. standard normal components, for which
    the result converges to ``arccos(R)/pi`` at every ``N``.  ``"rademacher"``
    draws +-1 components; the angle law then only holds as ``N`` grows, and
    small-``N`` deviations are expected.

    Returns ``(frequency, disagreements)``.
    """
    student = np.asarray(student, dtype=np.float64)
    teacher = np.asarray(teacher, dtype=np.float64)
    n = teacher.shape[0]
    disagree = 0
    remaining = int(samples)
    while remaining > 0:
        batch = min(remaining, 1 << 16)
        if inputs == "gaussian":
            x = rng.standard_normal((batch, n))
        elif inputs == "rademacher":
            x = rng.choice(np.array([-1.0, 1.0]), size=(batch, n))
        else:
            raise ValueError(f"unknown input distribution {inputs!r}")
        disagree += int(np.count_nonzero(sign(x @ student) != sign(x @ teacher)))
        remaining -= batch
    return disagree / samples, disagree


def sign(x):
    """Elementwise sign with ties resolved to +1, as int8."""
    return np.where(np.asarray(x) >= 0, 1, -1).astype(np.int8)
