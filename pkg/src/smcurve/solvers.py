"""Learning curves from the competition between entropy and energy.

Two readings of ``phi(eps; alpha) = s(eps) - e(eps; alpha)`` are supported:

* the rightmost crossing ``eps*``: the largest ``eps`` with ``s >= e``, an
  upper bound on the error of any consistent learner;
* the annealed maximizer: the ``eps`` that dominates the version-space
  volume, i.e. the typical error of a Gibbs student.

For the Ising perceptron both jump discontinuously to zero at a critical
load; for the continuous perceptron both decay smoothly like ``1/alpha``.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .entropy_energy import annealed_log_volume_density
from .geometry import DomainError

SCAN_POINTS = 2048
SECTION_WAYS = 64
JUMP_THRESHOLD = 0.05
ALPHA_BRACKET = (0.1, 50.0)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
ISING_CONDITION_MAX = math.pi**2 / math.e


class NoTransitionError(RuntimeError):
    """The requested criterion does not change over the scanned load bracket."""


class Method(enum.Enum):
    RIGHTMOST_CROSSING = "crossing"
    ANNEALED_MAX = "maximizer"


class Criterion(enum.Enum):
    CROSSING_VANISHES = "crossing-vanishes"
    INTERIOR_MAX_LOSES = "interior-max-loses"


@dataclass(frozen=True)
class CrossingResult:
    eps_star: float
    at_boundary: bool
    bracket: tuple


@dataclass(frozen=True)
class Jump:
    alpha_before: float
    alpha_after: float
    eps_before: float
    eps_after: float

    @property
    def alpha_c(self):
        return 0.5 * (self.alpha_before + self.alpha_after)


@dataclass
class LearningCurve:
    """Pointwise solver output; ``eps`` is ``nan`` where the solver failed."""

    model: str
    method: str
    alphas: np.ndarray
    eps: np.ndarray
    jumps: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)

    @property
    def points(self):
        return list(zip(self.alphas.tolist(), self.eps.tolist()))

    def jump_flags(self):
        """1 on the first point after each recorded discontinuity."""
        flags = np.zeros(len(self.alphas), dtype=int)
        after = {j.alpha_after for j in self.jumps}
        for i, a in enumerate(self.alphas):
            if float(a) in after:
                flags[i] = 1
        return flags


@dataclass(frozen=True)
class CriticalLoad:
    alpha_c: float
    certified_interval: tuple
    criterion: str
    model: str


def bisect_sign_change(f, lo, hi, tol, f_lo=None):
    """Shrink ``[lo, hi]`` with ``f(lo) >= 0 > f(hi)`` to width ``<= tol``.

    Returns the final ``(lo, hi)``; the invariant holds at every step.
    """
    if f_lo is None:
        f_lo = f(lo)
    if not f_lo >= 0:
        raise ValueError("bisection needs f(lo) >= 0")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def golden_section_max(f, a, b, tol):
    """Golden-section search for a maximum of a unimodal ``f`` on ``[a, b]``.

    Returns ``(x, f(x))`` for the best point seen, endpoints included.
    """
    fa, fb = f(a), f(b)
    best_x, best_f = (a, fa) if fa >= fb else (b, fb)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    for x, fx in ((c, fc), (d, fd)):
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def _phi_grid(model, alpha, lo, hi, ways):
    xs = np.linspace(lo, hi, ways + 1)
    return xs, np.asarray(annealed_log_volume_density(model, xs, alpha), dtype=np.float64)


def _refine_crossing(model, alpha, lo, hi, tol, ways=SECTION_WAYS):
    """Rightmost sign change of ``phi`` in ``[lo, hi]``, given ``phi(lo) >= 0 > phi(hi)``.

    Each pass evaluates ``ways + 1`` nodes at once and keeps the cell right of
    the last non-negative node, so the invariant of bisection is preserved
    while the bracket shrinks ``ways``-fold per numpy call.
    """
    while hi - lo > tol:
        xs, v = _phi_grid(model, alpha, lo, hi, ways)
        v[0], v[-1] = 0.0, -1.0
        j = int(np.flatnonzero(v >= 0)[-1])
        if xs[j] <= lo and xs[j + 1] >= hi:
            break
        lo, hi = float(xs[j]), float(xs[j + 1])
    return lo, hi


def _refine_max(model, alpha, a, b, tol, ways=SECTION_WAYS):
    """Maximum of a unimodal ``phi`` on ``[a, b]`` by repeated grid zooming."""
    best_x, best_f = a, -math.inf
    while True:
        xs, v = _phi_grid(model, alpha, a, b, ways)
        k = int(np.argmax(v))
        if v[k] > best_f or best_f == -math.inf:
            best_x, best_f = float(xs[k]), float(v[k])
        if b - a <= tol:
            return best_x, best_f
        na, nb = float(xs[max(k - 1, 0)]), float(xs[min(k + 1, ways)])
        if na <= a and nb >= b:
            return best_x, best_f
        a, b = na, nb


def _check_tol(tol):
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")


def rightmost_crossing(model, alpha, tol=1e-12, points=SCAN_POINTS):
    """Largest ``eps`` with ``s(eps) >= -alpha ln(1 - eps)``.

    The model domain is scanned on ``points + 1`` nodes from the right; the
    first node with ``phi >= 0`` brackets the crossing together with its right
    neighbour, and bisection refines it to ``tol``.  Interior bumps of ``phi``
    narrower than the grid are caught by refining every grid-local maximum.

    When nothing to the right of the left end satisfies the inequality the
    result is flagged ``at_boundary`` with ``eps_star`` at the left end (0 for
    the built-in models).  If ``s`` dominates on the whole domain ``eps_star``
    is the right end.
    """
    _check_tol(tol)
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    lo, hi = model.domain
    grid = np.linspace(lo, hi, points + 1)
    vals = np.asarray(annealed_log_volume_density(model, grid, alpha), dtype=np.float64)

    if vals[-1] >= 0:
        return CrossingResult(float(hi), False, (float(hi), float(hi)))

    nonneg = np.flatnonzero(vals[1:] >= 0) + 1
    if nonneg.size:
        k = int(nonneg[-1])
        a, b = _refine_crossing(model, alpha, grid[k], grid[k + 1], tol)
        return CrossingResult(float(a), False, (float(a), float(b)))

    # a positive bump may hide between nodes; refine the local maxima, rightmost first
    interior = np.arange(1, points)
    is_peak = (vals[interior] >= vals[interior - 1]) & (vals[interior] >= vals[interior + 1])
    for k in interior[is_peak][::-1]:
        x, fx = _refine_max(model, alpha, grid[k - 1], grid[k + 1], tol)
        if fx >= 0 and x > lo:
            a, b = _refine_crossing(model, alpha, x, grid[k + 1], tol)
            return CrossingResult(float(a), False, (float(a), float(b)))

    if vals[0] > 0:
        a, b = _refine_crossing(model, alpha, grid[0], grid[1], tol)
        return CrossingResult(float(a), False, (float(a), float(b)))
    return CrossingResult(float(lo), True, (float(lo), float(grid[1])))


@dataclass(frozen=True)
class _MaxDetail:
    eps: float
    value: float
    interior_eps: float
    interior_value: float
    boundary_value: float

    @property
    def boundary_wins(self):
        return self.boundary_value >= self.interior_value


def _maximize(model, alpha, tol, points=SCAN_POINTS):
    lo, hi = model.domain
    grid = np.linspace(lo, hi, points + 1)
    vals = np.asarray(annealed_log_volume_density(model, grid, alpha), dtype=np.float64)
    k = 1 + int(np.argmax(vals[1:-1]))
    x, fx = _refine_max(model, alpha, grid[k - 1], grid[k + 1], tol)
    boundary = float(vals[0])
    if boundary >= fx:
        return _MaxDetail(float(lo), boundary, float(x), float(fx), boundary)
    return _MaxDetail(float(x), float(fx), float(x), float(fx), boundary)


def annealed_maximizer(model, alpha, tol=1e-10):
    """Global maximizer of ``phi(.; alpha)`` on the model domain.

    The best interior point (grid search plus zoom refinement) is
    compared with the left boundary value ``phi(0)``; ties go to the boundary.
    For the Ising entropy ``phi(0) = 0``, and the maximizer drops to 0 once
    the interior maximum turns negative.  For the continuous entropy
    ``phi(0) = -inf`` so an interior point always wins.
    """
    _check_tol(tol)
    if alpha < 0:
        raise DomainError(f"alpha must be non-negative, got {alpha}")
    return _maximize(model, alpha, tol).eps


def ising_first_order_condition(alpha):
    """Larger root of ``-pi^2 eps ln(eps) = alpha``, or ``None`` if there is none.

    The left side peaks at ``eps = 1/e`` with value ``pi^2 / e``; above that
    load the small-error stationarity condition has no solution.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if alpha > ISING_CONDITION_MAX:
        return None
    g = lambda e: -math.pi**2 * e * math.log(e) - alpha
    peak = 1.0 / math.e
    if g(peak) <= 0:
        return peak
    a, b = bisect_sign_change(g, peak, 1.0, 1e-15)
    return a


def continuous_first_order_eps(alpha):
    """Large-load asymptotic ``1/alpha`` of the continuous maximizer, capped at 1."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return min(1.0, 1.0 / alpha)


def transition_predicate(model, criterion, alpha, tol=1e-12):
    criterion = Criterion(criterion)
    if criterion is Criterion.CROSSING_VANISHES:
        return rightmost_crossing(model, alpha, tol).at_boundary
    return _maximize(model, alpha, tol).boundary_wins


def critical_load(model, criterion, tol=1e-8, bracket=ALPHA_BRACKET):
    """Bisect the load at which ``criterion`` switches.

    Raises :class:`NoTransitionError` when the predicate agrees at both ends
    of ``bracket``.
    """
    _check_tol(tol)
    criterion = Criterion(criterion)
    lo, hi = map(float, bracket)
    p_lo = transition_predicate(model, criterion, lo)
    p_hi = transition_predicate(model, criterion, hi)
    if p_lo == p_hi:
        raise NoTransitionError(
            f"no transition detected for {model.name} / {criterion.value} "
            f"over alpha in [{lo}, {hi}]"
        )
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if transition_predicate(model, criterion, mid) == p_lo:
            lo = mid
        else:
            hi = mid
    return CriticalLoad(0.5 * (lo + hi), (lo, hi), criterion.value, model.name)


def _solve_point(model, method, alpha, tol):
    if method is Method.RIGHTMOST_CROSSING:
        return rightmost_crossing(model, alpha, tol).eps_star
    return annealed_maximizer(model, alpha, tol)


def detect_jumps(alphas, eps, threshold=JUMP_THRESHOLD):
    jumps = []
    valid = [i for i in range(len(alphas)) if np.isfinite(eps[i])]
    for i, j in zip(valid, valid[1:]):
        if abs(eps[i] - eps[j]) > threshold:
            jumps.append(Jump(float(alphas[i]), float(alphas[j]), float(eps[i]), float(eps[j])))
    return jumps


def learning_curve(model, method, alphas, tol=1e-12, jump_threshold=JUMP_THRESHOLD, threads=None):
    """Evaluate a solver over an increasing load grid and annotate jumps.

    Points whose solver raises are kept as ``nan`` gaps with the message in
    ``curve.errors``; the sweep carries on.
    """
    method = Method(method)
    alphas = np.asarray(alphas, dtype=np.float64)
    if alphas.ndim != 1 or alphas.size == 0:
        raise ValueError("alphas must be a non-empty 1-d grid")
    if np.any(np.diff(alphas) <= 0):
        raise ValueError("alpha grid must increase")
    if np.any(alphas <= 0):
        raise ValueError("alpha grid must be positive")

    def solve(alpha):
        try:
            return _solve_point(model, method, float(alpha), tol), None
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            return math.nan, str(exc)

    results = parallel_map(solve, alphas, threads)
    eps = np.array([r[0] for r in results], dtype=np.float64)
    errors = {float(a): r[1] for a, r in zip(alphas, results) if r[1] is not None}
    return LearningCurve(
        model=model.name,
        method=method.value,
        alphas=alphas,
        eps=eps,
        jumps=detect_jumps(alphas, eps, jump_threshold),
        errors=errors,
    )


def continuous_bound_crossing(alpha):
    """Closed form ``1 - exp(-1/alpha)`` of the crossing for ``s = 1``."""
    return -math.expm1(-1.0 / alpha)


__all__ = [
    "Method",
    "Criterion",
    "CrossingResult",
    "CriticalLoad",
    "Jump",
    "LearningCurve",
    "NoTransitionError",
    "annealed_maximizer",
    "bisect_sign_change",
    "continuous_first_order_eps",
    "critical_load",
    "golden_section_max",
    "ising_first_order_condition",
    "learning_curve",
    "rightmost_crossing",
]
