"""Two-knob control plane: label noise lowers the load, stopping time sets the temperature.

Randomizing ``m_rand`` of ``m`` labels leaves ``m - m_rand`` informative
examples, so the effective load is ``(m - m_rand) / N``.  Stopping a
stochastic learner after ``t_star`` iterations is mapped to the temperature
``tau = c / t_star``: longer training means colder dynamics.

The trajectory experiment runs the Ising perceptron simulator at three
points.  A is clean data trained for ``t_star_pre`` sweeps, B is the same
data with noisy labels and the same training time, and C is the noisy data
trained for ``t_star_post`` sweeps.  Each chain runs ``t_star`` sweeps at
temperature ``c / t_star`` from a random start.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .gibbs_sim import (
    GibbsConfig,
    WeightSpace,
    generate_instance,
    mean_stderr,
    metropolis_gibbs,
    trial_rng,
)

VALIDATION_FRACTION = 0.2


@dataclass(frozen=True)
class VsdlControls:
    m: int
    m_rand: int
    n_capacity: float
    t_star: int
    temp_scale: float = 1.0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not 0 <= self.m_rand <= self.m:
            raise ValueError(f"need 0 <= m_rand <= m, got m_rand = {self.m_rand}")
        if not self.n_capacity > 0:
            raise ValueError(f"n_capacity must be positive, got {self.n_capacity}")
        if self.t_star < 1:
            raise ValueError(f"t_star must be >= 1, got {self.t_star}")
        if not self.temp_scale > 0:
            raise ValueError(f"temp_scale must be positive, got {self.temp_scale}")


def effective_load(controls):
    return (controls.m - controls.m_rand) / controls.n_capacity


def effective_temperature(controls):
    return controls.temp_scale / controls.t_star


def randomize_labels(instance, fraction, seed=None):
    """Replace ``round(fraction * m)`` labels, chosen without replacement, by fair coins.

    Returns ``(noisy_instance, m_rand)``.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    m_rand = int(round(fraction * instance.m))
    labels = instance.labels.copy()
    idx = rng.choice(instance.m, size=m_rand, replace=False)
    labels[idx] = np.where(rng.random(m_rand) < 0.5, 1, -1).astype(np.int8)
    return instance.with_labels(labels), m_rand


@dataclass(frozen=True)
class TrajectoryPoint:
    label: str
    alpha: float
    tau: float
    t_star: int
    mean_gen_error: float
    gen_stderr: float
    mean_train_error: float
    train_stderr: float
    trials: int


@dataclass
class TrajectoryReport:
    points: dict
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        a, b, c = self.points["A"], self.points["B"], self.points["C"]
        if not b.alpha < a.alpha:
            raise AssertionError("adding noise must lower the load")
        if c.alpha != b.alpha:
            raise AssertionError("C must share B's data")

    def __getitem__(self, key):
        return self.points[key]

    def gap(self, worse, better, on="gen"):
        """Difference ``worse - better`` in units of the combined stderr."""
        p, q = self.points[worse], self.points[better]
        if on == "gen":
            d, s = p.mean_gen_error - q.mean_gen_error, math.hypot(p.gen_stderr, q.gen_stderr)
        else:
            d = p.mean_train_error - q.mean_train_error
            s = math.hypot(p.train_stderr, q.train_stderr)
        return math.inf if s == 0 and d > 0 else (d / s if s > 0 else 0.0)

    def to_json_dict(self):
        out = {}
        for key, p in self.points.items():
            out[key] = {"alpha": p.alpha, "tau": p.tau, "t_star": p.t_star,
                        "train_err": p.mean_train_error, "gen_err": p.mean_gen_error,
                        "stderr": p.gen_stderr, "train_stderr": p.train_stderr,
                        "trials": p.trials}
        return {"points": out, "provenance": self.provenance}


def _train(instance, t_star, temp_scale, rng):
    return metropolis_gibbs(instance, GibbsConfig(tau=temp_scale / t_star, sweeps=t_star), rng)


def _trajectory_trial(n, m, noise_fraction, t_pre, t_post, temp_scale, seed, t):
    rng = trial_rng(seed, t)
    clean = generate_instance(n, m, WeightSpace.ISING, rng)
    noisy, m_rand = randomize_labels(clean, noise_fraction, rng)
    out = []
    for inst, t_star, label in ((clean, t_pre, "A"), (noisy, t_pre, "B"), (noisy, t_post, "C")):
        run = _train(inst, t_star, temp_scale, trial_rng(seed, t, ord(label)))
        out.append((run.gen_error, run.train_error))
    return out, m_rand


def trajectory_experiment(n, m, noise_fraction, t_star_pre, t_star_post, trials, seed,
                          temp_scale=1.0, threads=None):
    """Run points A, B and C over ``trials`` independent datasets.

    Generalization error is measured against the clean teacher; training
    error is measured on the labels the student was trained on.
    """
    if not 0.0 < noise_fraction < 1.0:
        raise ValueError(f"noise_fraction must lie in (0, 1), got {noise_fraction}")
    for name, v in (("n", n), ("m", m), ("t_star_pre", t_star_pre),
                    ("t_star_post", t_star_post), ("trials", trials)):
        if v < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")
    rows = parallel_map(
        lambda t: _trajectory_trial(n, m, noise_fraction, t_star_pre, t_star_post,
                                    temp_scale, seed, t),
        range(trials), threads)
    m_rand = rows[0][1]
    points = {}
    for i, (label, t_star) in enumerate((("A", t_star_pre), ("B", t_star_pre), ("C", t_star_post))):
        ctl = VsdlControls(m, 0 if label == "A" else m_rand, n, t_star, temp_scale)
        gen, gse = mean_stderr([r[0][i][0] for r in rows])
        train, tse = mean_stderr([r[0][i][1] for r in rows])
        points[label] = TrajectoryPoint(label, effective_load(ctl), effective_temperature(ctl),
                                        t_star, gen, gse, train, tse, trials)
    provenance = {"n": n, "m": m, "noise_fraction": noise_fraction, "m_rand": m_rand,
                  "t_star_pre": t_star_pre, "t_star_post": t_star_post, "trials": trials,
                  "seed": seed, "temp_scale": temp_scale}
    return TrajectoryReport(points, provenance)


@dataclass(frozen=True)
class StoppingChoice:
    t_star: int
    candidates: tuple
    validation_errors: tuple


def select_stopping_time(n, m, noise_fraction, candidates, trials, seed, temp_scale=1.0,
                         validation_fraction=VALIDATION_FRACTION, threads=None):
    """Pick the training time with the lowest held-out error on noisy labels.

    Each trial draws fresh noisy data, trains on the first
    ``1 - validation_fraction`` of the patterns and scores the student on the
    rest.  Ties go to the shorter time.  Only noisy labels are used.
    """
    candidates = tuple(sorted({int(c) for c in candidates}))
    if not candidates or any(c < 1 for c in candidates):
        raise ValueError("candidates must be positive sweep counts")
    n_val = int(round(validation_fraction * m))
    if not 0 < n_val < m:
        raise ValueError("validation split must leave both parts nonempty")

    def one(t):
        rng = trial_rng(seed, t)
        clean = generate_instance(n, m, WeightSpace.ISING, rng)
        noisy, _ = randomize_labels(clean, noise_fraction, rng)
        fit = noisy.__class__(n, noisy.weight_space, noisy.teacher, noisy.patterns[n_val:],
                              noisy.labels[n_val:])
        xv, yv = noisy.patterns[:n_val], noisy.labels[:n_val]
        errs = []
        for j, t_star in enumerate(candidates):
            run = _train(fit, t_star, temp_scale, trial_rng(seed, t, j))
            pred = np.where(xv @ run.student >= 0, 1, -1)
            errs.append(np.count_nonzero(pred != yv) / n_val)
        return errs

    errs = np.mean(parallel_map(one, range(trials), threads), axis=0)
    best = int(np.argmin(errs))
    return StoppingChoice(candidates[best], candidates, tuple(float(e) for e in errs))
