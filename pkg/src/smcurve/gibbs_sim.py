"""Teacher-student simulations of Gibbs learning for the perceptron.

Zero temperature is sampled exactly: every Ising student is enumerated, the
version space (students agreeing with all training labels) is kept, and
students are drawn uniformly from it.  Positive temperatures, spherical
weights and large ``n`` use a Metropolis chain whose energy is the number of
training errors, which is an approximation.
"""

import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _chain
from ._parallel import parallel_map
from .geometry import overlap_to_error, sign, student_error

MAX_ENUMERATION_N = 24
PHASE_THRESHOLD = 0.25
# lowest temperature reached by an annealed burn-in aimed at tau = 0
ANNEAL_FLOOR = 0.05
# students per enumeration chunk
CHUNK = 1 << 14


class WeightSpace(enum.Enum):
    ISING = "ising"
    SPHERE = "sphere"


class IntegrityError(RuntimeError):
    """The data admit no consistent student although they should."""


class LowTrialsWarning(UserWarning):
    pass


def as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def trial_rng(seed, *key):
    """Independent stream for one trial, keyed by its grid position."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def round_half_even(x):
    return int(round(x))


@dataclass(frozen=True)
class TeacherStudentInstance:
    n: int
    weight_space: WeightSpace
    teacher: np.ndarray
    patterns: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.patterns.shape != (self.labels.shape[0], self.n):
            raise ValueError("patterns must be an m x n matrix matching labels")
        if self.teacher.shape != (self.n,):
            raise ValueError("teacher must have length n")

    @property
    def m(self):
        return self.labels.shape[0]

    @property
    def alpha(self):
        return self.m / self.n

    def teacher_labels(self):
        return sign(self.patterns @ self.teacher)

    @property
    def realizable(self):
        return bool(np.all(self.teacher_labels() == self.labels))

    def with_labels(self, labels):
        return TeacherStudentInstance(self.n, self.weight_space, self.teacher, self.patterns,
                                      np.asarray(labels, dtype=np.int8))

    def training_errors(self, student):
        return int(np.count_nonzero(sign(self.patterns @ np.asarray(student, dtype=np.float64))
                                    != self.labels))

    def gen_error(self, student):
        return student_error(student, self.teacher)


def random_weights(n, space, rng):
    if space is WeightSpace.ISING:
        return rng.integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0
    w = rng.standard_normal(n)
    return w * (math.sqrt(n) / np.linalg.norm(w))


def generate_instance(n, m, space=WeightSpace.ISING, seed=None):
    """Random teacher, ``m`` Gaussian patterns and the teacher's labels."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    rng = as_rng(seed)
    space = WeightSpace(space)
    teacher = random_weights(n, space, rng)
    patterns = rng.standard_normal((m, n))
    return TeacherStudentInstance(n, space, teacher, patterns, sign(patterns @ teacher))


def iter_ising_students(n, chunk=CHUNK):
    """Yield ``(first_index, students)`` covering all ``2^n`` Ising vectors.

    Student ``k`` has spin ``i`` equal to +1 iff bit ``i`` of ``k`` is set.
    """
    if not 1 <= n <= MAX_ENUMERATION_N:
        raise ValueError(f"enumeration needs 1 <= n <= {MAX_ENUMERATION_N}, got {n}")
    total = 1 << n
    bits = np.arange(n, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        yield start, ((idx[:, None] >> bits) & 1).astype(np.float64) * 2.0 - 1.0


def _require_enumerable(instance):
    if instance.weight_space is not WeightSpace.ISING:
        raise ValueError("exact enumeration needs Ising weights")
    if instance.n > MAX_ENUMERATION_N:
        raise ValueError(f"exact enumeration is limited to n <= {MAX_ENUMERATION_N}")


def version_space(instance):
    """All Ising students consistent with every label, as a float matrix."""
    _require_enumerable(instance)
    keep = []
    xt = instance.patterns.T
    for _, students in iter_ising_students(instance.n):
        ok = np.all(sign(students @ xt) == instance.labels, axis=1)
        keep.append(students[ok])
    return np.concatenate(keep)


def version_space_errors(instance):
    """Exact generalization errors of all version-space members."""
    members = version_space(instance)
    if members.shape[0] == 0:
        raise IntegrityError("empty version space; labels are not realizable by an Ising student")
    r = np.clip(members @ instance.teacher / instance.n, -1.0, 1.0)
    return np.asarray(overlap_to_error(r), dtype=np.float64).reshape(-1)


@dataclass(frozen=True)
class GibbsConfig:
    tau: float = 0.0
    sweeps: int = 200
    burn_in: int = 0
    seed: int = 0
    step: float = 0.3
    anneal_from: float = 0.0

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.sweeps < 1:
            raise ValueError(f"sweeps must be >= 1, got {self.sweeps}")
        if not 0 <= self.burn_in < self.sweeps:
            raise ValueError("need sweeps > burn_in >= 0")
        if self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.anneal_from < 0:
            raise ValueError(f"anneal_from must be >= 0, got {self.anneal_from}")

    def schedule(self):
        """Temperature of every sweep.

        With ``anneal_from > 0`` the burn-in sweeps cool geometrically from
        ``anneal_from`` towards ``tau``; all later sweeps run at ``tau``.
        """
        taus = np.full(self.sweeps, float(self.tau))
        if self.anneal_from > 0 and self.burn_in > 0:
            floor = max(self.tau, ANNEAL_FLOOR)
            frac = np.arange(self.burn_in) / max(self.burn_in - 1, 1)
            taus[: self.burn_in] = self.anneal_from * (floor / self.anneal_from) ** frac
        return taus

    def with_tau(self, tau):
        return replace(self, tau=float(tau))


@dataclass(frozen=True)
class EmpiricalCurvePoint:
    alpha: float
    mean_eps: float
    stderr: float
    trials: int
    m: int = 0
    mean_train_err: float = 0.0
    train_stderr: float = 0.0
    low_trials: bool = False
    sampler: str = "exact"


def mean_stderr(values):
    """Sample mean and standard error; one value gives stderr 0."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no values to aggregate")
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def exact_gibbs_gen_error(instance, trials, seed=None):
    """Mean error of ``trials`` uniform draws from the exact version space.

    With no training data the version space is every student, and its mean
    error is returned exactly with stderr 0.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    errors = version_space_errors(instance)
    if instance.m == 0:
        return EmpiricalCurvePoint(0.0, float(errors.mean()), 0.0, int(errors.size), 0)
    draws = errors[as_rng(seed).integers(0, errors.size, size=trials)]
    mean, se = mean_stderr(draws)
    return EmpiricalCurvePoint(instance.alpha, mean, se, int(trials), instance.m,
                               low_trials=trials == 1)


def boltzmann_errors(instance, tau):
    """Exact errors and Gibbs weights ``exp(-E/tau)`` of every Ising student.

    ``tau = 0`` puts uniform weight on the version space.  Weights are
    normalised to sum to one.
    """
    _require_enumerable(instance)
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    energies, errors = [], []
    xt = instance.patterns.T
    for _, students in iter_ising_students(instance.n):
        energies.append(np.count_nonzero(sign(students @ xt) != instance.labels, axis=1))
        r = np.clip(students @ instance.teacher / instance.n, -1.0, 1.0)
        errors.append(np.asarray(overlap_to_error(r)).reshape(-1))
    energies = np.concatenate(energies).astype(np.float64)
    errors = np.concatenate(errors)
    e_min = energies.min()
    if tau == 0:
        w = (energies == e_min).astype(np.float64)
    else:
        w = np.exp(-(energies - e_min) / tau)
    return errors, w / w.sum()


def boltzmann_gen_error(instance, tau):
    """Exact thermal average of the student error at temperature ``tau``."""
    errors, w = boltzmann_errors(instance, tau)
    return float(errors @ w)


@dataclass
class MetropolisRun:
    student: np.ndarray
    energy: np.ndarray
    gen_error: float
    train_error: float
    mean_gen_error: float
    acceptance: float
    snapshots: np.ndarray = field(repr=False)


def _arch_for(instance):
    return _chain.perceptron_arch(instance.n)


def metropolis_gibbs(instance, config, rng=None, init=None):
    """Metropolis chain at temperature ``config.tau`` on the training-error energy.

    ``rng`` overrides the stream derived from ``config.seed``.  The returned
    ``mean_gen_error`` averages the exact student error over the sweeps after
    ``burn_in``.
    """
    if config.tau < 0:
        raise ValueError(f"tau must be >= 0, got {config.tau}")
    rng = as_rng(config.seed if rng is None else rng)
    ising = instance.weight_space is WeightSpace.ISING
    w0 = random_weights(instance.n, instance.weight_space, rng) if init is None else init
    res = _chain.run_chain(_arch_for(instance), instance.patterns, instance.labels, w0,
                           config.schedule(), config.sweeps, rng, ising, config.step)
    student = res.weights.reshape(-1)
    snaps = res.snapshots.reshape(config.sweeps, -1)[config.burn_in:]
    t = instance.teacher
    r = snaps @ t / (np.linalg.norm(snaps, axis=1) * np.linalg.norm(t))
    traj = np.asarray(overlap_to_error(np.clip(r, -1.0, 1.0))).reshape(-1)
    m = max(instance.m, 1)
    return MetropolisRun(student, res.energy, float(instance.gen_error(student)),
                         res.final_energy / m, float(traj.mean()),
                         res.accepted / res.proposals, res.snapshots)


def exact_available(n, space):
    return WeightSpace(space) is WeightSpace.ISING and n <= MAX_ENUMERATION_N


def _trial(n, m, space, config, sampler, rng):
    inst = generate_instance(n, m, space, rng)
    if sampler == "exact":
        # per-instance average over the whole version space
        return float(version_space_errors(inst).mean()), 0.0
    run = metropolis_gibbs(inst, config, rng)
    return run.gen_error, run.train_error


def _resolve_sampler(sampler, n, space, tau):
    if sampler == "auto":
        return "exact" if tau == 0 and exact_available(n, space) else "metropolis"
    if sampler == "exact" and not exact_available(n, space):
        raise ValueError("the exact sampler needs Ising weights and n <= 24")
    if sampler not in ("exact", "metropolis"):
        raise ValueError(f"unknown sampler {sampler!r}")
    return sampler


def _point(alpha, m, rows, sampler):
    eps = [r[0] for r in rows]
    train = [r[1] for r in rows]
    mean, se = mean_stderr(eps)
    tmean, tse = mean_stderr(train)
    trials = len(rows)
    if trials == 1:
        warnings.warn("a single trial gives no error estimate; stderr reported as 0",
                      LowTrialsWarning, stacklevel=3)
    return EmpiricalCurvePoint(float(alpha), mean, se, trials, m, tmean, tse, trials == 1, sampler)


def empirical_learning_curve(n, alphas, config, trials, space=WeightSpace.ISING,
                             sampler="auto", threads=None):
    """Mean student error over ``trials`` fresh instances for each load.

    The exact sampler reports, per instance, the mean error over the whole
    version space (the expectation of a uniform draw); Metropolis reports the
    error of the final student of one chain per instance.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    space = WeightSpace(space)
    sampler = _resolve_sampler(sampler, n, space, config.tau)
    ms = [round_half_even(a * n) for a in alphas]
    tasks = [(ai, t) for ai in range(len(ms)) for t in range(trials)]

    def run(task):
        ai, t = task
        return _trial(n, ms[ai], space, config, sampler, trial_rng(config.seed, ai, t))

    rows = parallel_map(run, tasks, threads)
    return [_point(a, ms[ai], rows[ai * trials:(ai + 1) * trials], sampler)
            for ai, a in enumerate(alphas)]


@dataclass
class PhaseMap:
    alphas: np.ndarray
    taus: np.ndarray
    mean_eps: np.ndarray
    stderr: np.ndarray
    mean_train_err: np.ndarray
    samplers: np.ndarray
    threshold: float = PHASE_THRESHOLD

    def labels(self):
        return np.where(self.mean_eps < self.threshold, "good", "poor")

    def rows(self):
        lab = self.labels()
        for i, a in enumerate(self.alphas):
            for j, t in enumerate(self.taus):
                yield (float(a), float(t), float(self.mean_eps[i, j]),
                       float(self.mean_train_err[i, j]), str(lab[i, j]))


def phase_map(n, alpha_grid, tau_grid, config, trials, threshold=PHASE_THRESHOLD,
              space=WeightSpace.ISING, threads=None):
    """Mean errors on an ``(alpha, tau)`` grid, labeled good/poor by ``threshold``.

    The ``tau = 0`` column uses the exact sampler when enumeration is possible.
    """
    alphas = np.asarray(alpha_grid, dtype=np.float64)
    taus = np.asarray(tau_grid, dtype=np.float64)
    if alphas.size == 0 or taus.size == 0:
        raise ValueError("phase map grids must be nonempty")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    space = WeightSpace(space)
    ms = [round_half_even(a * n) for a in alphas]
    samplers = [_resolve_sampler("auto", n, space, t) for t in taus]
    configs = [config.with_tau(t) for t in taus]
    tasks = [(i, j, t) for i in range(alphas.size) for j in range(taus.size) for t in range(trials)]

    def run(task):
        i, j, t = task
        return _trial(n, ms[i], space, configs[j], samplers[j], trial_rng(config.seed, i, j, t))

    rows = np.array(parallel_map(run, tasks, threads)).reshape(alphas.size, taus.size, trials, 2)
    mean_eps = rows[..., 0].mean(axis=2)
    if trials > 1:
        stderr = rows[..., 0].std(axis=2, ddof=1) / math.sqrt(trials)
    else:
        stderr = np.zeros_like(mean_eps)
    return PhaseMap(alphas, taus, mean_eps, stderr, rows[..., 1].mean(axis=2),
                    np.array(samplers), threshold)


@dataclass
class SurvivalLevel:
    eps: float
    count: int
    survived: int
    instances: int

    @property
    def frequency(self):
        return self.survived / self.instances


def survival_frequencies(n, m, instances, seed, threads=None):
    """Empirical survival of each Ising error level over random datasets.

    For every instance one student is drawn uniformly from each Hamming
    distance level around the teacher, so each level contributes one
    Bernoulli draw per instance with success probability equal to the
    level's survival fraction.
    """
    counts = [math.comb(n, d) for d in range(n + 1)]
    eps = [float(overlap_to_error(1.0 - 2.0 * d / n)) for d in range(n + 1)]

    def one(t):
        rng = trial_rng(seed, t)
        inst = generate_instance(n, m, WeightSpace.ISING, rng)
        hits = np.zeros(n + 1, dtype=np.int64)
        for d in range(n + 1):
            flip = rng.choice(n, size=d, replace=False)
            student = inst.teacher.copy()
            student[flip] *= -1.0
            hits[d] = inst.training_errors(student) == 0
        return hits

    total = np.sum(parallel_map(one, range(instances), threads), axis=0)
    return [SurvivalLevel(eps[d], counts[d], int(total[d]), instances) for d in range(n + 1)]
