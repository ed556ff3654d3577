"""Tikhonov (ridge) and truncated-SVD least squares with regularization paths.

The ridge penalty is written ``lambda^2 |x|^2``, so the solution is
``(A^T A + lambda^2 I)^{-1} A^T b``.  Most texts put ``lambda`` rather than
``lambda^2`` in front of the penalty; here ``lambda`` has the units of a
singular value.

Everything is computed from one SVD ``A = U diag(sigma) V^T``.  With
``beta = U^T b`` the ridge solution is ``V (f * beta / sigma)`` where the filter
factors ``f = sigma^2 / (sigma^2 + lambda^2)`` shrink monotonically as
``lambda`` grows.  Path norms and residuals are evaluated from these
coefficients, so their monotonicity in the knob survives floating point.
"""

import csv
import enum
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# singular values within this fraction of sigma_max are tied at a truncation
TIE_RTOL = 1e-12


class RankDeficiencyError(np.linalg.LinAlgError):
    pass


class TruncationTieWarning(UserWarning):
    pass


class Knob(enum.Enum):
    LAMBDA = "lambda"
    RANK_K = "rank"


@dataclass(frozen=True)
class LeastSquaresProblem:
    a: np.ndarray
    b: np.ndarray
    a_test: np.ndarray = None
    b_test: np.ndarray = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("A must be a nonempty 2-D matrix")
        if b.shape[0] != a.shape[0]:
            raise ValueError(f"b has length {b.shape[0]}, A has {a.shape[0]} rows")
        if (self.a_test is None) != (self.b_test is None):
            raise ValueError("a held-out split needs both a_test and b_test")
        if self.a_test is not None:
            at = np.asarray(self.a_test, dtype=np.float64)
            bt = np.asarray(self.b_test, dtype=np.float64).reshape(-1)
            if at.ndim != 2 or at.shape[1] != a.shape[1] or bt.shape[0] != at.shape[0]:
                raise ValueError("held-out split dimensions do not match A")
            object.__setattr__(self, "a_test", at)
            object.__setattr__(self, "b_test", bt)

    @property
    def shape(self):
        return self.a.shape

    @property
    def has_split(self):
        return self.a_test is not None

    @cached_property
    def svd(self):
        u, s, vt = np.linalg.svd(self.a, full_matrices=False)
        beta = u.T @ self.b
        perp = self.b - u @ beta
        return _Svd(u, s, vt, beta, float(perp @ perp))

    @property
    def rank(self):
        s = self.svd.s
        if s.size == 0 or s[0] == 0:
            return 0
        tol = s[0] * max(self.a.shape) * np.finfo(np.float64).eps
        return int(np.count_nonzero(s > tol))


@dataclass(frozen=True)
class _Svd:
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray
    beta: np.ndarray
    perp_sq: float


def _ridge_coeffs(svd, lam):
    # coefficients of the solution in the right singular basis
    s2 = svd.s * svd.s
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(s2 > 0, svd.s * svd.beta / (s2 + lam * lam), 0.0)
    return c


def ridge_solve(problem, lam):
    """Minimizer of ``|Ax - b|^2 + lam^2 |x|^2``.

    ``lam = 0`` needs full column rank and then gives ordinary least squares.
    """
    if not lam >= 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    p = problem.a.shape[1]
    if lam == 0 and problem.rank < p:
        raise RankDeficiencyError(
            f"lambda = 0 needs full column rank: rank {problem.rank} < {p} columns "
            f"(short by {p - problem.rank})")
    svd = problem.svd
    return svd.vt.T @ _ridge_coeffs(svd, float(lam))


def _check_ties(s, k):
    if 0 < k < s.size and s[k - 1] - s[k] <= TIE_RTOL * s[0]:
        warnings.warn(f"singular values {k} and {k + 1} are tied; truncation at k = {k} "
                      "depends on the basis", TruncationTieWarning, stacklevel=3)


def _tsvd_coeffs(svd, k):
    c = np.zeros_like(svd.s)
    c[:k] = svd.beta[:k] / svd.s[:k]
    return c


def tsvd_solve(problem, k):
    """Pseudoinverse solution using only the top ``k`` singular triplets."""
    kmax = min(problem.a.shape)
    if int(k) != k or not 0 <= k <= kmax:
        raise ValueError(f"k must be an integer in [0, {kmax}], got {k}")
    k = int(k)
    svd = problem.svd
    if k > 0 and svd.s[k - 1] == 0:
        raise RankDeficiencyError(f"k = {k} exceeds the numerical rank {problem.rank}")
    _check_ties(svd.s, k)
    return svd.vt.T @ _tsvd_coeffs(svd, k)


@dataclass(frozen=True)
class RegularizationPath:
    knob: Knob
    knob_values: np.ndarray
    solution_norms: np.ndarray
    train_residuals: np.ndarray
    test_residuals: np.ndarray = None

    def rows(self):
        test = self.test_residuals
        for i, v in enumerate(self.knob_values):
            yield (float(v), float(self.solution_norms[i]), float(self.train_residuals[i]),
                   None if test is None else float(test[i]))


def _path_point(svd, coeffs, filt):
    # residual^2 = |b_perp|^2 + sum((1 - f) beta)^2, exact in the singular basis
    norm = math.sqrt(float(np.sum(coeffs * coeffs)))
    resid = math.sqrt(svd.perp_sq + float(np.sum(((1.0 - filt) * svd.beta) ** 2)))
    return norm, resid


def regularization_path(problem, knob, values):
    """Solution norm and residuals along a monotone sequence of knob values."""
    knob = Knob(knob)
    vals = np.asarray(values, dtype=np.float64).reshape(-1)
    if vals.size == 0:
        raise ValueError("a path needs at least one knob value")
    d = np.diff(vals)
    if vals.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("knob values must be strictly monotone")
    svd = problem.svd
    s2 = svd.s * svd.s
    norms, train, test = [], [], []
    for v in vals:
        if knob is Knob.LAMBDA:
            x = ridge_solve(problem, v)
            # evaluated as fl(s2 / fl(s2 + l2)) so it is monotone in lambda
            filt = np.where(s2 > 0, s2 / (s2 + v * v), 0.0)
            # |c_i| = sigma_i |beta_i| / (sigma_i^2 + lambda^2), monotone in lambda
            coeffs = np.where(s2 > 0, svd.s * np.abs(svd.beta) / (s2 + v * v), 0.0)
        else:
            k = int(v)
            if k != v:
                raise ValueError(f"rank knob values must be integers, got {v}")
            x = tsvd_solve(problem, k)
            filt = (np.arange(svd.s.size) < k).astype(np.float64)
            coeffs = _tsvd_coeffs(svd, k)
        norm, resid = _path_point(svd, coeffs, filt)
        norms.append(norm)
        train.append(resid)
        if problem.has_split:
            test.append(float(np.linalg.norm(problem.a_test @ x - problem.b_test)))
    return RegularizationPath(knob, vals, np.array(norms), np.array(train),
                              np.array(test) if problem.has_split else None)


def load_matrix_csv(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            rows.append([float(v) for v in row])
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: expected a nonempty rectangular numeric table")
    return np.array(rows)


def load_problem(a_path, b_path, a_test_path=None, b_test_path=None):
    """Problem from CSV files: ``A`` as an n x p table and ``b`` as one column."""
    a = load_matrix_csv(a_path)
    b = load_matrix_csv(b_path).reshape(-1)
    at = load_matrix_csv(a_test_path) if a_test_path else None
    bt = load_matrix_csv(b_test_path).reshape(-1) if b_test_path else None
    return LeastSquaresProblem(a, b, at, bt)
