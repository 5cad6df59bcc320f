"""Exact stochastic simulation of the network's continuous-time Markov chain.

The simulator is the direct (first-reaction-free) SSA: draw an exponential
waiting time from the total propensity, then pick one channel proportionally
to its rate.  Randomness comes from counter-based streams (`_kernel`), so a
trajectory is a pure function of (network, x0, T, seed) and ensembles are
reproducible under any execution order.

Per event exactly two uniforms are consumed, in a fixed channel order
(autocatalytic pairs row-major, inflows, outflows); `ssa_step` and the
compiled kernels follow the same contract bit for bit.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .model import EventCapError, ReactionNetwork, as_state

DEFAULT_EVENT_CAP = 10**9
_CHUNK = 1 << 16


def event_cap_from_env(default: int = DEFAULT_EVENT_CAP) -> int:
    """Event cap, honoring the AUTOCAT_EVENT_CAP environment override."""
    raw = os.environ.get("AUTOCAT_EVENT_CAP")
    if raw is None:
        return default
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"AUTOCAT_EVENT_CAP must be an integer, got {raw!r}")
    if cap < 1:
        raise ValueError("AUTOCAT_EVENT_CAP must be >= 1")
    return cap


class CounterStream:
    """Python-side view of one RNG stream; mirrors the compiled generator."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.counter = 0

    def uniform(self) -> float:
        u = _kernel.uniform_from_counter(self.seed, self.counter)
        self.counter += 1
        return u


def ssa_step(net: ReactionNetwork, x, rng: CounterStream):
    """One exact SSA step: returns (waiting time, next state).

    The waiting time is Exponential(total propensity) and the jump is chosen
    with probability rate/total.  Always defined, since inflows keep the
    total propensity positive.
    """
    x = as_state(x, net.d)
    d = net.d
    kappa, lam, delta = net.kappa, net.lam, net.delta
    # accumulation order mirrors the compiled kernel so streams stay aligned
    rates = []
    picks = []
    tot = 0.0
    for i in range(d):
        xi = x[i]
        for j in range(d):
            r = kappa[i, j] * xi * x[j]
            tot += r
            if kappa[i, j] > 0:
                rates.append(r)
                picks.append((i, j))
    for i in range(d):
        tot += lam[i]
        rates.append(float(lam[i]))
        picks.append((d, i))
    for i in range(d):
        r = delta[i] * x[i]
        tot += r
        rates.append(float(r))
        picks.append((d + 1, i))
    u1 = rng.uniform()
    u2 = rng.uniform()
    wait = -math.log(1.0 - u1) / tot
    target = u2 * tot
    acc = 0.0
    chosen = len(rates) - 1
    for c, r in enumerate(rates):
        acc += r
        if target < acc:
            chosen = c
            break
    x_next = x.copy()
    tag, i = picks[chosen][0], picks[chosen][1]
    if tag == d:
        x_next[i] += 1
    elif tag == d + 1:
        x_next[i] -= 1
    else:
        x_next[tag] -= 1
        x_next[i] += 1
    return wait, x_next


@dataclass(frozen=True)
class Trajectory:
    """One realized path: event times and post-event states on [0, end_time]."""

    times: np.ndarray       # (m,) strictly increasing event times
    states: np.ndarray      # (m, d) state after each event
    initial_state: np.ndarray
    end_time: float
    seed: int

    @property
    def d(self) -> int:
        return self.initial_state.size

    @property
    def n_events(self) -> int:
        return self.times.size


def simulate_trajectory(net: ReactionNetwork, x0, T: float, seed: int,
                        event_cap: int | None = None) -> Trajectory:
    """Exact trajectory on [0, T], deterministic in seed.

    Raises EventCapError when more than event_cap events fire (default
    10^9), which signals a runaway parameter regime rather than a bug.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    x0 = as_state(x0, net.d)
    cap = DEFAULT_EVENT_CAP if event_cap is None else int(event_cap)
    x = x0.copy()
    t = 0.0
    k = 0
    root = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    chunks_t, chunks_s = [], []
    total = 0
    with np.errstate(over="ignore"):
        while True:
            size = min(_CHUNK, cap - total + 1)
            buf_t = np.empty(size, dtype=np.float64)
            buf_s = np.empty((size, net.d), dtype=np.int64)
            filled, t, k, done = _kernel._trajectory_chunk(
                net.kappa, net.lam, net.delta, x, t, root, k, float(T),
                buf_t, buf_s)
            if filled:
                chunks_t.append(buf_t[:filled])
                chunks_s.append(buf_s[:filled])
                total += filled
            if total > cap:
                raise EventCapError(
                    f"trajectory exceeded the {cap}-event cap before t={T}")
            if done:
                break
    times = np.concatenate(chunks_t) if chunks_t else np.empty(0)
    states = (np.concatenate(chunks_s) if chunks_s
              else np.empty((0, net.d), dtype=np.int64))
    times.setflags(write=False)
    states.setflags(write=False)
    return Trajectory(times=times, states=states, initial_state=x0,
                      end_time=float(T), seed=int(seed))


@dataclass(frozen=True)
class EnsembleResult:
    """End states X(T) of independent trajectories, with full seed provenance."""

    end_states: np.ndarray  # (n_traj, d)
    seeds: np.ndarray       # (n_traj,) uint64 per-trajectory stream roots
    config: dict = field(default_factory=dict)

    @property
    def n_traj(self) -> int:
        return self.end_states.shape[0]


def ensemble_sample(net: ReactionNetwork, x0, T: float, n_traj: int,
                    master_seed: int, event_cap: int | None = None) -> EnsembleResult:
    """n_traj independent end states X(T).

    Per-trajectory stream roots are split off master_seed by the counter
    scheme in `_kernel.stream_seeds`; member i is exactly reproduced by
    simulate_trajectory(net, x0, T, seed=result.seeds[i]).
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    x0 = as_state(x0, net.d)
    cap = DEFAULT_EVENT_CAP if event_cap is None else int(event_cap)
    seeds = _kernel.stream_seeds(master_seed, n_traj)
    with np.errstate(over="ignore"):
        states, _events, capped = _kernel._end_states(
            net.kappa, net.lam, net.delta, x0, float(T), seeds, cap)
    if capped.any():
        first = int(np.argmax(capped))
        raise EventCapError(
            f"trajectory {first} exceeded the {cap}-event cap before t={T}")
    states.setflags(write=False)
    seeds.setflags(write=False)
    return EnsembleResult(
        end_states=states, seeds=seeds,
        config={"n_traj": int(n_traj), "T": float(T),
                "master_seed": int(master_seed)})


@dataclass(frozen=True)
class EmpiricalConditional:
    """Normalized end-state histogram on one simplex E_n."""

    n: int
    states: np.ndarray      # (N, d) simplex states, enumeration order
    probs: np.ndarray       # (N,)
    retained: int


def empirical_conditional(ens: EnsembleResult, n: int) -> EmpiricalConditional:
    """Histogram of end states with total n, normalized over the simplex E_n.

    Raises ValueError when no end state has that total.
    """
    from .analytic import enumerate_simplex

    totals = ens.end_states.sum(axis=1)
    sel = ens.end_states[totals == n]
    if sel.shape[0] == 0:
        raise ValueError(f"no end state has total {n}")
    d = ens.end_states.shape[1]
    simplex = enumerate_simplex(d, n)
    base = n + 1
    weights = base ** np.arange(d, dtype=np.int64)
    keys = simplex @ weights
    order = np.argsort(keys, kind="stable")
    pos = order[np.searchsorted(keys[order], sel @ weights)]
    counts = np.bincount(pos, minlength=simplex.shape[0])
    return EmpiricalConditional(
        n=int(n), states=simplex, probs=counts / sel.shape[0],
        retained=int(sel.shape[0]))


@dataclass(frozen=True)
class LumpedPath:
    """Birth-death path of the total count: autocatalytic events removed."""

    times: np.ndarray
    totals: np.ndarray
    initial_total: int
    end_time: float


def lumped_projection(traj: Trajectory) -> LumpedPath:
    """Project a trajectory to its total count n(t) = ||X(t)||_1.

    Autocatalytic events leave the total unchanged and are dropped from the
    event list, so every remaining jump is +-1.
    """
    totals = traj.states.sum(axis=1)
    prev = np.concatenate(([traj.initial_state.sum()], totals[:-1]))
    changed = totals != prev
    return LumpedPath(times=traj.times[changed], totals=totals[changed],
                      initial_total=int(traj.initial_state.sum()),
                      end_time=traj.end_time)


def total_occupancy(lp: LumpedPath) -> np.ndarray:
    """Time-weighted occupancy of each total over [0, end_time], normalized.

    Entry n is the fraction of time the lumped path spent at total n; this
    is the ergodic estimate of the lumped stationary law.
    """
    boundaries = np.concatenate(([0.0], lp.times, [lp.end_time]))
    values = np.concatenate(([lp.initial_total], lp.totals)).astype(np.int64)
    durations = np.diff(boundaries)
    occ = np.zeros(int(values.max()) + 1)
    np.add.at(occ, values, durations)
    return occ / occ.sum()


@dataclass(frozen=True)
class DitStats:
    """Switching statistics between single-species dominance patterns."""

    epsilon: float
    n_switches: int
    dominant_dwell: np.ndarray          # (d,) total time each species dominated
    pattern_sequence: list              # [(species index or None, entry time)]
    end_time: float

    @property
    def dominant_fraction(self) -> float:
        return float(self.dominant_dwell.sum() / self.end_time)


def dit_statistics(traj: Trajectory, epsilon: float,
                   min_total: int = 5) -> DitStats:
    """Dominance patterns of a trajectory at threshold epsilon.

    Species i dominates a segment when a_i >= epsilon * n and n >= min_total;
    segments with no dominant species are tagged None.  Switches count
    transitions between distinct dominant species, ignoring None gaps (a
    brief spell with no dominant species does not end a pattern).
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    d = traj.d
    values = np.vstack([traj.initial_state[None, :], traj.states])
    boundaries = np.concatenate(([0.0], traj.times, [traj.end_time]))
    durations = np.diff(boundaries)
    totals = values.sum(axis=1)
    peaks = values.max(axis=1)
    leaders = values.argmax(axis=1)
    dominant = (peaks >= epsilon * totals) & (totals >= min_total)
    labels = np.where(dominant, leaders, -1)

    dwell = np.zeros(d)
    np.add.at(dwell, labels[dominant], durations[dominant])

    sequence: list[tuple[int | None, float]] = []
    for lab, t in zip(labels, boundaries[:-1]):
        lab_out = None if lab < 0 else int(lab)
        if not sequence or sequence[-1][0] != lab_out:
            sequence.append((lab_out, float(t)))
    species_only = [lab for lab, _ in sequence if lab is not None]
    switches = sum(1 for a, b in zip(species_only, species_only[1:]) if a != b)
    return DitStats(epsilon=float(epsilon), n_switches=switches,
                    dominant_dwell=dwell, pattern_sequence=sequence,
                    end_time=traj.end_time)


# ---------------------------------------------------------------------------
# CSV emission


def _fmt(t: float) -> str:
    return format(t, ".17g")


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """CSV export `time,a_1,...,a_d`, with the initial state as the t=0 row."""
    d = traj.d
    with open(path, "w", newline="") as fh:
        fh.write("time," + ",".join(f"a_{i+1}" for i in range(d)) + "\n")
        fh.write("0," + ",".join(str(int(v)) for v in traj.initial_state) + "\n")
        for t, row in zip(traj.times, traj.states):
            fh.write(_fmt(t) + "," + ",".join(str(int(v)) for v in row) + "\n")


def write_ensemble_csv(ens: EnsembleResult, path) -> None:
    """CSV export `traj_id,seed,a_1,...,a_d` of ensemble end states."""
    d = ens.end_states.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write("traj_id,seed," + ",".join(f"a_{i+1}" for i in range(d)) + "\n")
        for m in range(ens.n_traj):
            row = ",".join(str(int(v)) for v in ens.end_states[m])
            fh.write(f"{m},{int(ens.seeds[m])},{row}\n")
