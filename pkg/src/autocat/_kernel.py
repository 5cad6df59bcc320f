"""Simulation engine: counter-based RNG streams and compiled SSA loops.

The RNG is a splitmix64-style counter generator: draw k of a stream with
root r is ``finalize(r + k*GAMMA)``, so any draw is a pure function of
(root, counter).  Per-trajectory roots are derived from the master seed by
one extra finalize round, which makes ensemble members independent streams
that can run in any order, in parallel, with bit-identical results.

Kernels are compiled with numba when it is importable; otherwise the same
functions run as plain Python (slow, but identical output).
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit, prange
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

    def prange(*args):
        return range(*args)

U64 = np.uint64
_GAMMA = U64(0x9E3779B97F4A7C15)
_MIX_A = U64(0xBF58476D1CE4E5B9)
_MIX_B = U64(0x94D049BB133111EB)
_MASK = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = 1.0 / 9007199254740992.0


def mix64_int(z: int) -> int:
    """Finalizer on plain Python ints; reference for the compiled path."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def stream_seeds(master_seed: int, n: int, start: int = 0) -> np.ndarray:
    """Per-trajectory stream roots for indices start..start+n-1 (uint64)."""
    base = mix64_int((master_seed + 0x9E3779B97F4A7C15) & _MASK)
    seeds = np.empty(n, dtype=np.uint64)
    for i in range(n):
        seeds[i] = mix64_int((base + (start + i) * 0x9E3779B97F4A7C15) & _MASK)
    return seeds


def uniform_from_counter(root: int, k: int) -> float:
    """k-th uniform of the stream with the given root, in [0, 1)."""
    return (mix64_int((root + k * 0x9E3779B97F4A7C15) & _MASK) >> 11) * _INV_2_53


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> U64(30))) * _MIX_A
    z = (z ^ (z >> U64(27))) * _MIX_B
    return z ^ (z >> U64(31))


@njit(cache=True)
def _uniform(root, k):
    return float(_mix64(root + U64(k) * _GAMMA) >> U64(11)) * _INV_2_53


@njit(cache=True)
def _fill_rates(kappa, lam, delta, x, rates):
    d = lam.shape[0]
    tot = 0.0
    c = 0
    for i in range(d):
        xi = x[i]
        for j in range(d):
            r = kappa[i, j] * xi * x[j]
            rates[c] = r
            tot += r
            c += 1
    for i in range(d):
        rates[c] = lam[i]
        tot += lam[i]
        c += 1
    for i in range(d):
        r = delta[i] * x[i]
        rates[c] = r
        tot += r
        c += 1
    return tot


@njit(cache=True)
def _apply_pick(x, pick, d):
    if pick < d * d:
        i = pick // d
        j = pick - i * d
        x[i] -= 1
        x[j] += 1
    elif pick < d * d + d:
        x[pick - d * d] += 1
    else:
        x[pick - d * d - d] -= 1


@njit(cache=True)
def _select(rates, nch, target):
    acc = 0.0
    for c in range(nch):
        acc += rates[c]
        if target < acc:
            return c
    return nch - 1


@njit(cache=True, parallel=True)
def _end_states(kappa, lam, delta, x0, T, seeds, cap):
    """End state X(T) per trajectory; returns (states, event counts, capped flags)."""
    n_traj = seeds.shape[0]
    d = lam.shape[0]
    nch = d * d + 2 * d
    out = np.empty((n_traj, d), dtype=np.int64)
    events = np.zeros(n_traj, dtype=np.int64)
    capped = np.zeros(n_traj, dtype=np.bool_)
    for m in prange(n_traj):
        rates = np.empty(nch, dtype=np.float64)
        root = seeds[m]
        x = x0.copy()
        t = 0.0
        k = 0
        n_ev = 0
        while True:
            tot = _fill_rates(kappa, lam, delta, x, rates)
            u1 = _uniform(root, k)
            u2 = _uniform(root, k + 1)
            k += 2
            wait = -math.log(1.0 - u1) / tot
            if t + wait > T:
                break
            if n_ev >= cap:
                capped[m] = True
                break
            t += wait
            n_ev += 1
            _apply_pick(x, _select(rates, nch, u2 * tot), d)
        out[m] = x
        events[m] = n_ev
    return out, events, capped


@njit(cache=True)
def _trajectory_chunk(kappa, lam, delta, x, t, root, k, T, times, states):
    """Advance one trajectory, recording events into the provided buffers.

    Mutates x in place.  Returns (filled, t, k, done); done means the next
    waiting time would pass T, so the trajectory is complete.
    """
    d = lam.shape[0]
    nch = d * d + 2 * d
    rates = np.empty(nch, dtype=np.float64)
    capacity = times.shape[0]
    filled = 0
    while filled < capacity:
        tot = _fill_rates(kappa, lam, delta, x, rates)
        u1 = _uniform(root, k)
        u2 = _uniform(root, k + 1)
        k += 2
        wait = -math.log(1.0 - u1) / tot
        if t + wait > T:
            return filled, t, k, True
        t += wait
        _apply_pick(x, _select(rates, nch, u2 * tot), d)
        times[filled] = t
        for i in range(d):
            states[filled, i] = x[i]
        filled += 1
    return filled, t, k, False
