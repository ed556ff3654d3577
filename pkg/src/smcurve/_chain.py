"""Metropolis chains for sign-output networks whose energy is the training-error count.

One kernel serves the perceptron, the committee and parity machines and the
reversed-wedge perceptron.  Weights are stored as ``K`` blocks of length
``d``; block ``k`` reads input columns ``offsets[k] : offsets[k] + d``.  The
kernel caches every hidden pre-activation, so a proposal touching block ``k``
only recomputes column ``k`` of the cache.

Random numbers are drawn by the Python driver in fixed-size blocks from one
``numpy`` generator, so a chain is a pure function of its generator state.
"""

import math
from dataclasses import dataclass

import numba
import numpy as np

RULE_COMMITTEE = 0
RULE_PARITY = 1
RULE_WEDGE = 2

# sweeps drawn per block of random numbers
BLOCK_SWEEPS = 64


@dataclass(frozen=True)
class Arch:
    """Network layout understood by the chain kernels."""

    rule: int
    k: int
    d: int
    offsets: np.ndarray
    gamma: float = 0.0
    scale: float = 1.0

    @property
    def n_weights(self):
        return self.k * self.d


def perceptron_arch(n):
    return Arch(RULE_COMMITTEE, 1, n, np.zeros(1, dtype=np.int64), 0.0, 1.0 / math.sqrt(n))


@numba.njit(cache=True, nogil=True)
def _vote(pre_row, k_sub, sub_val, rule, gamma, scale):
    # network output with hidden field k_sub replaced by sub_val (k_sub = -1: none)
    if rule == RULE_WEDGE:
        lam = (sub_val if k_sub == 0 else pre_row[0]) * scale
        if (lam >= -gamma and lam < 0.0) or lam >= gamma:
            return 1
        return -1
    acc = 0 if rule == RULE_COMMITTEE else 1
    for k in range(pre_row.shape[0]):
        v = sub_val if k == k_sub else pre_row[k]
        h = 1 if v >= 0.0 else -1
        if rule == RULE_COMMITTEE:
            acc += h
        else:
            acc *= h
    if rule == RULE_COMMITTEE:
        return 1 if acc >= 0 else -1
    return acc


@numba.njit(cache=True, nogil=True)
def _init_state(X, W, offsets, rule, gamma, scale, pre, out):
    m = X.shape[0]
    kk, d = W.shape
    for mu in range(m):
        for k in range(kk):
            s = 0.0
            for i in range(d):
                s += W[k, i] * X[mu, offsets[k] + i]
            pre[mu, k] = s
        out[mu] = _vote(pre[mu], -1, 0.0, rule, gamma, scale)


@numba.njit(cache=True, nogil=True)
def _forward_batch(X, W, offsets, rule, gamma, scale):
    m = X.shape[0]
    pre = np.empty((m, W.shape[0]))
    out = np.empty(m, dtype=np.int8)
    _init_state(X, W, offsets, rule, gamma, scale, pre, out)
    return out


@numba.njit(cache=True, nogil=True)
def _accept(d_e, tau, u):
    if d_e <= 0:
        return True
    if tau <= 0.0:
        return False
    return u < math.exp(-d_e / tau)


@numba.njit(cache=True, nogil=True)
def _record(t, steps_per_sweep, energy, e, snapshots, W):
    if (t + 1) % steps_per_sweep == 0:
        s = (t + 1) // steps_per_sweep - 1
        energy[s] = e
        snapshots[s] = W


@numba.njit(cache=True, nogil=True)
def _run_ising(X, y, W, offsets, rule, gamma, scale, taus, flips, uniforms,
               pre, out, steps_per_sweep, energy, snapshots, e):
    m = X.shape[0]
    d = W.shape[1]
    new_pre = np.empty(m)
    new_out = np.empty(m, dtype=np.int8)
    accepted = 0
    for t in range(flips.shape[0]):
        f = flips[t]
        k = f // d
        i = f - k * d
        col = offsets[k] + i
        w = W[k, i]
        d_e = 0
        for mu in range(m):
            v = pre[mu, k] - 2.0 * w * X[mu, col]
            new_pre[mu] = v
            o = _vote(pre[mu], k, v, rule, gamma, scale)
            new_out[mu] = o
            d_e += (o != y[mu]) - (out[mu] != y[mu])
        if _accept(d_e, taus[t // steps_per_sweep], uniforms[t]):
            W[k, i] = -w
            for mu in range(m):
                pre[mu, k] = new_pre[mu]
                out[mu] = new_out[mu]
            e += d_e
            accepted += 1
        _record(t, steps_per_sweep, energy, e, snapshots, W)
    return e, accepted


@numba.njit(cache=True, nogil=True)
def _run_sphere(X, y, W, offsets, rule, gamma, scale, taus, units, noise, uniforms,
                step, pre, out, steps_per_sweep, energy, snapshots, e):
    m = X.shape[0]
    d = W.shape[1]
    radius = math.sqrt(d)
    w_new = np.empty(d)
    new_pre = np.empty(m)
    new_out = np.empty(m, dtype=np.int8)
    accepted = 0
    for t in range(units.shape[0]):
        k = units[t]
        norm = 0.0
        for i in range(d):
            w_new[i] = W[k, i] + step * noise[t, i]
            norm += w_new[i] * w_new[i]
        c = radius / math.sqrt(norm)
        for i in range(d):
            w_new[i] *= c
        d_e = 0
        off = offsets[k]
        for mu in range(m):
            v = 0.0
            for i in range(d):
                v += w_new[i] * X[mu, off + i]
            new_pre[mu] = v
            o = _vote(pre[mu], k, v, rule, gamma, scale)
            new_out[mu] = o
            d_e += (o != y[mu]) - (out[mu] != y[mu])
        if _accept(d_e, taus[t // steps_per_sweep], uniforms[t]):
            for i in range(d):
                W[k, i] = w_new[i]
            for mu in range(m):
                pre[mu, k] = new_pre[mu]
                out[mu] = new_out[mu]
            e += d_e
            accepted += 1
        _record(t, steps_per_sweep, energy, e, snapshots, W)
    return e, accepted


@dataclass
class ChainResult:
    weights: np.ndarray
    energy: np.ndarray
    snapshots: np.ndarray
    accepted: int
    proposals: int

    @property
    def final_energy(self):
        return int(self.energy[-1])


def forward(arch, X, W):
    """Network outputs (int8, +-1) for the rows of ``X``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    W = np.ascontiguousarray(W, dtype=np.float64)
    return _forward_batch(X, W, arch.offsets, arch.rule, arch.gamma, arch.scale)


def run_chain(arch, X, y, W0, tau, sweeps, rng, ising, step=0.3):
    """Run ``sweeps`` Metropolis sweeps of ``arch.n_weights`` proposals each.

    ``tau`` is either one temperature or one temperature per sweep.

    ``energy[0]`` is the starting training-error count and ``energy[s]`` the
    count after sweep ``s``; ``snapshots[s - 1]`` holds the weights after
    sweep ``s``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int8)
    W = np.array(W0, dtype=np.float64).reshape(arch.k, arch.d)
    m = X.shape[0]
    pre = np.empty((m, arch.k))
    out = np.empty(m, dtype=np.int8)
    _init_state(X, W, arch.offsets, arch.rule, arch.gamma, arch.scale, pre, out)
    e = int(np.count_nonzero(out != y))
    energy = np.empty(sweeps + 1, dtype=np.int64)
    energy[0] = e
    snapshots = np.empty((sweeps, arch.k, arch.d))
    taus = np.broadcast_to(np.asarray(tau, dtype=np.float64), (sweeps,))
    steps_per_sweep = arch.n_weights
    accepted = 0
    done = 0
    while done < sweeps:
        block = min(BLOCK_SWEEPS, sweeps - done)
        steps = block * steps_per_sweep
        e_view = energy[1 + done: 1 + done + block]
        s_view = snapshots[done: done + block]
        t_view = np.ascontiguousarray(taus[done: done + block])
        if ising:
            flips = rng.integers(0, steps_per_sweep, size=steps)
            uniforms = rng.random(steps)
            e, acc = _run_ising(X, y, W, arch.offsets, arch.rule, arch.gamma, arch.scale,
                                t_view, flips, uniforms, pre, out, steps_per_sweep,
                                e_view, s_view, e)
        else:
            units = rng.integers(0, arch.k, size=steps)
            noise = rng.standard_normal((steps, arch.d))
            uniforms = rng.random(steps)
            e, acc = _run_sphere(X, y, W, arch.offsets, arch.rule, arch.gamma, arch.scale,
                                 t_view, units, noise, uniforms, float(step), pre, out,
                                 steps_per_sweep, e_view, s_view, e)
        accepted += acc
        done += block
    return ChainResult(W, energy, snapshots, accepted, sweeps * steps_per_sweep)
