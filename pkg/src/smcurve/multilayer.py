"""Committee machine, tree parity machine and reversed-wedge perceptron.

The forward rules here are plain numpy and are kept independent of the
Metropolis kernel, which evaluates the same rules incrementally.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _chain
from ._parallel import parallel_map
from .geometry import sign
from .gibbs_sim import (
    GibbsConfig,
    WeightSpace,
    mean_stderr,
    random_weights,
    round_half_even,
    trial_rng,
)

DEFAULT_TEST_SAMPLES = 10_000


class Architecture(enum.Enum):
    PERCEPTRON = "perceptron"
    COMMITTEE = "committee"
    PARITY = "parity"
    WEDGE = "wedge"


def _check_norm(w, dim, space):
    if space is WeightSpace.ISING:
        if not np.all(np.abs(w) == 1.0):
            raise ValueError("Ising weights must be +-1")
    elif not np.allclose(np.sum(w**2, axis=-1), dim, rtol=0, atol=1e-9):
        raise ValueError(f"spherical weights must satisfy |J|^2 = {dim}")


def _as_inputs(s, n):
    s = np.asarray(s, dtype=np.float64)
    if s.shape[-1] != n:
        raise ValueError(f"input dimension {s.shape[-1]} does not match n = {n}")
    return s


def _scalar(out):
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CommitteeMachine:
    """``K`` hidden perceptrons on the full input, combined by majority vote."""

    weights: np.ndarray
    space: WeightSpace = WeightSpace.SPHERE

    def __post_init__(self):
        if self.weights.ndim != 2:
            raise ValueError("committee weights must be a K x N matrix")
        _check_norm(self.weights, self.n, self.space)

    @property
    def k(self):
        return self.weights.shape[0]

    @property
    def n(self):
        return self.weights.shape[1]


@dataclass(frozen=True)
class ParityMachine:
    """Tree parity machine: hidden unit ``k`` sees the ``k``-th contiguous block of ``N/K`` inputs."""

    weights: np.ndarray
    space: WeightSpace = WeightSpace.SPHERE

    def __post_init__(self):
        if self.weights.ndim != 2:
            raise ValueError("parity weights must be a K x (N/K) matrix")
        _check_norm(self.weights, self.weights.shape[1], self.space)

    @property
    def k(self):
        return self.weights.shape[0]

    @property
    def n(self):
        return self.weights.size


@dataclass(frozen=True)
class ReversedWedgePerceptron:
    weights: np.ndarray
    gamma: float = 0.0
    space: WeightSpace = WeightSpace.SPHERE

    def __post_init__(self):
        if self.weights.ndim != 1:
            raise ValueError("wedge weights must be a vector")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        _check_norm(self.weights, self.n, self.space)

    @property
    def n(self):
        return self.weights.shape[0]


def perceptron_forward(weights, s):
    """``sign(J . S)`` with ties to +1."""
    w = np.asarray(weights, dtype=np.float64)
    return _scalar(sign(_as_inputs(s, w.shape[0]) @ w))


def committee_forward(machine, s):
    """Majority of the hidden signs ``sign(J_k . S / sqrt(N))``; ties vote +1."""
    s = _as_inputs(s, machine.n)
    hidden = sign(s @ machine.weights.T / math.sqrt(machine.n)).astype(np.int64)
    return _scalar(sign(hidden.sum(axis=-1) / math.sqrt(machine.k)))


def parity_forward(machine, s):
    """Product of the hidden signs of the tree parity machine."""
    s = _as_inputs(s, machine.n)
    k, d = machine.weights.shape
    blocks = s.reshape(s.shape[:-1] + (k, d))
    hidden = sign(np.einsum("...kd,kd->...k", blocks, machine.weights) / math.sqrt(d))
    return _scalar(np.prod(hidden.astype(np.int64), axis=-1).astype(np.int8))


def wedge_output(lam, gamma):
    """+1 on ``[-gamma, 0)`` and ``[gamma, inf)``, -1 elsewhere."""
    lam = np.asarray(lam, dtype=np.float64)
    inside = ((lam >= -gamma) & (lam < 0.0)) | (lam >= gamma)
    return _scalar(np.where(inside, 1, -1).astype(np.int8))


def reversed_wedge_forward(machine, s):
    s = _as_inputs(s, machine.n)
    return wedge_output(s @ machine.weights / math.sqrt(machine.n), machine.gamma)


def chain_arch(architecture, n, k_or_gamma):
    """Kernel layout for an architecture; ``k_or_gamma`` is ``K`` or the wedge width."""
    architecture = Architecture(architecture)
    if architecture is Architecture.PERCEPTRON:
        return _chain.perceptron_arch(n)
    if architecture is Architecture.COMMITTEE:
        k = int(k_or_gamma)
        if k < 1:
            raise ValueError(f"K must be >= 1, got {k}")
        return _chain.Arch(_chain.RULE_COMMITTEE, k, n, np.zeros(k, dtype=np.int64))
    if architecture is Architecture.PARITY:
        k = int(k_or_gamma)
        if k < 1 or n % k:
            raise ValueError(f"K = {k} must be >= 1 and divide n = {n}")
        d = n // k
        return _chain.Arch(_chain.RULE_PARITY, k, d, np.arange(k, dtype=np.int64) * d)
    gamma = float(k_or_gamma)
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    return _chain.Arch(_chain.RULE_WEDGE, 1, n, np.zeros(1, dtype=np.int64), gamma,
                       1.0 / math.sqrt(n))


def build_machine(architecture, weights, k_or_gamma=None, space=WeightSpace.SPHERE):
    architecture = Architecture(architecture)
    w = np.asarray(weights, dtype=np.float64)
    if architecture is Architecture.COMMITTEE:
        return CommitteeMachine(w.reshape(int(k_or_gamma), -1), space)
    if architecture is Architecture.PARITY:
        return ParityMachine(w.reshape(int(k_or_gamma), -1), space)
    if architecture is Architecture.WEDGE:
        return ReversedWedgePerceptron(w.reshape(-1), float(k_or_gamma), space)
    return w.reshape(-1)


def machine_forward(machine, s):
    if isinstance(machine, CommitteeMachine):
        return committee_forward(machine, s)
    if isinstance(machine, ParityMachine):
        return parity_forward(machine, s)
    if isinstance(machine, ReversedWedgePerceptron):
        return reversed_wedge_forward(machine, s)
    return perceptron_forward(machine, s)


def random_network(arch, space, rng):
    return np.stack([random_weights(arch.d, space, rng) for _ in range(arch.k)])


@dataclass(frozen=True)
class MultilayerCurvePoint:
    architecture: str
    k_or_gamma: float
    alpha: float
    m: int
    mean_eps: float
    stderr: float
    mean_train_err: float
    trials: int
    test_samples: int
    low_trials: bool = False


def _multilayer_trial(arch, n, m, space, config, test_samples, rng):
    teacher = random_network(arch, space, rng)
    x = rng.standard_normal((m, n))
    y = _chain.forward(arch, x, teacher)
    w0 = random_network(arch, space, rng)
    res = _chain.run_chain(arch, x, y, w0, config.schedule(), config.sweeps, rng,
                           space is WeightSpace.ISING, config.step)
    x_test = rng.standard_normal((test_samples, n))
    gen = np.count_nonzero(_chain.forward(arch, x_test, res.weights)
                           != _chain.forward(arch, x_test, teacher)) / test_samples
    return gen, res.final_energy / max(m, 1)


def empirical_multilayer_curve(architecture, n, k_or_gamma, alphas, config, trials,
                               test_samples=DEFAULT_TEST_SAMPLES, space=WeightSpace.ISING,
                               threads=None):
    """Metropolis-trained students of a multilayer teacher, one curve point per load.

    Generalization error is the disagreement rate on ``test_samples`` fresh
    Gaussian inputs; the reported stderr is across trials.
    """
    if test_samples < 1:
        raise ValueError(f"test_samples must be >= 1, got {test_samples}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not isinstance(config, GibbsConfig):
        raise TypeError("config must be a GibbsConfig")
    architecture = Architecture(architecture)
    space = WeightSpace(space)
    arch = chain_arch(architecture, n, k_or_gamma)
    ms = [round_half_even(a * n) for a in alphas]
    tasks = [(ai, t) for ai in range(len(ms)) for t in range(trials)]

    def run(task):
        ai, t = task
        return _multilayer_trial(arch, n, ms[ai], space, config, test_samples,
                                 trial_rng(config.seed, ai, t))

    rows = parallel_map(run, tasks, threads)
    points = []
    for ai, a in enumerate(alphas):
        chunk = rows[ai * trials:(ai + 1) * trials]
        mean, se = mean_stderr([r[0] for r in chunk])
        train, _ = mean_stderr([r[1] for r in chunk])
        points.append(MultilayerCurvePoint(architecture.value, float(k_or_gamma), float(a), ms[ai],
                                           mean, se, train, trials, test_samples, trials == 1))
    return points
