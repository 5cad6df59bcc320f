"""Autocatalytic reaction networks with inflow and outflow.

A network on ``d`` species has three kinds of reactions under stochastic
mass-action kinetics:

* autocatalytic conversion ``A_i + A_j -> 2 A_j`` at rate ``kappa[i,j]*a_i*a_j``
  for every ordered pair ``i != j`` with ``kappa[i,j] > 0``,
* inflow ``0 -> A_i`` at constant rate ``lam[i]``,
* outflow ``A_i -> 0`` at rate ``delta[i]*a_i``.

States are nonnegative integer count vectors.  Autocatalytic jumps preserve
the total count; inflow and outflow move it by one.  All types here are
immutable after construction and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOPOLOGIES = ("full-symmetric", "tk-cycle", "custom")


class ConfigError(ValueError):
    """Malformed network configuration document."""


class HypothesisError(ValueError):
    """Parameter hypotheses of the requested operation are not satisfied."""


class EventCapError(RuntimeError):
    """A simulation exceeded its event budget."""


@dataclass(frozen=True)
class ReactionNetwork:
    """Validated reaction network; the single source of truth for dynamics.

    Attributes:
        d: number of species (>= 1)
        kappa: (d, d) nonnegative rate matrix with zero diagonal;
            kappa[i, j] is the rate constant of A_i + A_j -> 2 A_j
        lam: (d,) positive inflow rates
        delta: (d,) positive per-molecule outflow rates
        topology: construction provenance tag, one of TOPOLOGIES
    """

    d: int
    kappa: np.ndarray
    lam: np.ndarray
    delta: np.ndarray
    topology: str = "custom"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        kappa = np.ascontiguousarray(np.asarray(self.kappa, dtype=float))
        lam = np.ascontiguousarray(np.asarray(self.lam, dtype=float))
        delta = np.ascontiguousarray(np.asarray(self.delta, dtype=float))
        if kappa.shape != (self.d, self.d):
            raise ValueError(
                f"kappa has shape {kappa.shape}, expected {(self.d, self.d)}")
        if lam.shape != (self.d,) or delta.shape != (self.d,):
            raise ValueError(
                f"lambda/delta must have shape ({self.d},), got "
                f"{lam.shape} and {delta.shape}")
        if np.any(kappa < 0):
            raise ValueError("kappa entries must be nonnegative")
        if np.any(np.diag(kappa) != 0):
            raise ValueError("kappa diagonal must be zero")
        if np.any(lam <= 0):
            raise ValueError("inflow rates lambda must be positive")
        if np.any(delta <= 0):
            raise ValueError("outflow rates delta must be positive")
        if self.topology == "tk-cycle":
            mask = np.ones((self.d, self.d), dtype=bool)
            idx = np.arange(self.d)
            mask[idx, (idx + 1) % self.d] = False
            np.fill_diagonal(mask, False)
            if np.any(kappa[mask] != 0):
                raise ValueError(
                    "tk-cycle topology allows kappa[i,j] != 0 only for "
                    "j = (i+1) mod d")
        elif self.topology == "full-symmetric":
            off = kappa[~np.eye(self.d, dtype=bool)]
            if off.size and np.any(off != off[0]):
                raise ValueError(
                    "full-symmetric topology requires all off-diagonal "
                    "kappa entries equal")
        for arr in (kappa, lam, delta):
            arr.setflags(write=False)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "delta", delta)

    @property
    def equal_delta(self) -> bool:
        return bool(np.all(self.delta == self.delta[0]))


@dataclass(frozen=True)
class Transition:
    """One reaction channel evaluated at a state: jump vector plus propensity.

    kind is ("autocatalytic", i, j), ("inflow", i) or ("outflow", i).
    """

    jump: np.ndarray
    rate: float
    kind: tuple

    def __post_init__(self):
        jump = np.asarray(self.jump, dtype=np.int64)
        jump.setflags(write=False)
        object.__setattr__(self, "jump", jump)


def _broadcast_kappa(d: int, topology: str, kappa) -> np.ndarray:
    kappa = np.asarray(kappa, dtype=float)
    if kappa.ndim == 0:
        full = np.zeros((d, d))
        if d == 1:
            return full  # no ordered pairs exist
        if topology == "tk-cycle":
            idx = np.arange(d)
            full[idx, (idx + 1) % d] = float(kappa)
        else:
            full[:] = float(kappa)
            np.fill_diagonal(full, 0.0)
        return full
    return kappa


def _broadcast_vec(d: int, v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return np.full(d, float(v))
    if v.shape != (d,):
        raise ValueError(f"{name} must be a scalar or a length-{d} vector, "
                         f"got shape {v.shape}")
    return v


def create_network(d: int, topology: str, kappa, lam, delta) -> ReactionNetwork:
    """Build a validated network, broadcasting scalar parameters.

    Scalar kappa is expanded to the topology's zero pattern; scalar lam and
    delta apply to every species.  Raises ValueError on dimension mismatch,
    nonpositive lam/delta, negative kappa or a nonzero kappa diagonal.
    """
    if topology not in TOPOLOGIES:
        raise ValueError(f"unknown topology {topology!r}")
    kappa_full = _broadcast_kappa(d, topology, kappa)
    return ReactionNetwork(
        d=d,
        kappa=kappa_full,
        lam=_broadcast_vec(d, lam, "lambda"),
        delta=_broadcast_vec(d, delta, "delta"),
        topology=topology,
    )


def apply_volume_scaling(kappa_prime, lambda_prime, delta_prime, V: float,
                         d: int, topology: str = "full-symmetric") -> ReactionNetwork:
    """Classical density scaling: kappa = kappa'/V, delta = delta', lam = lam'*V.

    V is the volume parameter linking the count process to its fluid limit.
    """
    if not V > 0:
        raise ValueError(f"volume must be positive, got {V}")
    kappa_prime = np.asarray(kappa_prime, dtype=float)
    lam = _broadcast_vec(d, lambda_prime, "lambda_prime") * V
    delta = _broadcast_vec(d, delta_prime, "delta_prime")
    return create_network(d, topology, kappa_prime / V, lam, delta)


def as_state(x, d: int) -> np.ndarray:
    """Validate and convert a count vector to a read-only int64 array."""
    arr = np.asarray(x, dtype=np.int64)
    if arr.shape != (d,):
        raise ValueError(f"state must have shape ({d},), got {arr.shape}")
    if np.any(arr < 0):
        raise ValueError("state counts must be nonnegative")
    return arr


def reaction_channels(net: ReactionNetwork) -> list[tuple[tuple, np.ndarray]]:
    """Structural channel list as (kind, jump) pairs, in canonical order.

    Order: autocatalytic pairs (i, j) with kappa[i,j] > 0 in row-major order,
    then inflows, then outflows.  This order is the selection order of the
    simulator and is part of the determinism contract.
    """
    d = net.d
    channels = []
    for i in range(d):
        for j in range(d):
            if net.kappa[i, j] > 0:
                jump = np.zeros(d, dtype=np.int64)
                jump[i] = -1
                jump[j] += 1
                channels.append((("autocatalytic", i, j), jump))
    for i in range(d):
        jump = np.zeros(d, dtype=np.int64)
        jump[i] = 1
        channels.append((("inflow", i), jump))
    for i in range(d):
        jump = np.zeros(d, dtype=np.int64)
        jump[i] = -1
        channels.append((("outflow", i), jump))
    return channels


def propensities(net: ReactionNetwork, x) -> list[Transition]:
    """Transitions with nonzero propensity at state x, in channel order.

    Channels whose mass-action factor vanishes at x are omitted, but every
    returned Transition carries its structural kind, so callers can still
    enumerate the full stoichiometry via reaction_channels().
    """
    x = as_state(x, net.d)
    out = []
    for kind, jump in reaction_channels(net):
        tag = kind[0]
        if tag == "autocatalytic":
            _, i, j = kind
            rate = net.kappa[i, j] * x[i] * x[j]
        elif tag == "inflow":
            rate = net.lam[kind[1]]
        else:
            rate = net.delta[kind[1]] * x[kind[1]]
        if rate > 0:
            out.append(Transition(jump=jump, rate=float(rate), kind=kind))
    return out


def total_propensity(net: ReactionNetwork, x) -> float:
    """Sum of all propensities at x: sum_ij kappa_ij a_i a_j + sum lam + sum delta_i a_i."""
    x = as_state(x, net.d)
    xf = x.astype(float)
    return float(xf @ net.kappa @ xf + net.lam.sum() + net.delta @ xf)


def generator_apply(net: ReactionNetwork, f, x) -> float:
    """Apply the infinitesimal generator to f at x.

    (Lf)(x) = sum over transitions of rate * (f(x + jump) - f(x)), an exact
    finite sum since only finitely many channels have nonzero rate.
    """
    x = as_state(x, net.d)
    fx = f(x)
    acc = 0.0
    for tr in propensities(net, x):
        acc += tr.rate * (f(x + tr.jump) - fx)
    return acc


_CONFIG_KEYS = {"dimension", "topology", "kappa", "lambda", "delta", "volume"}
_VOLUME_KEYS = {"V", "kappa_prime", "lambda_prime", "delta_prime"}


def network_from_config(doc: dict) -> ReactionNetwork:
    """Build a network from a JSON-style config document.

    Keys: dimension (int), topology, and either direct parameters
    (kappa, lambda, delta) or a volume object
    {V, kappa_prime, lambda_prime, delta_prime} which takes precedence and
    feeds apply_volume_scaling.  Unknown keys are rejected.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        d = int(doc["dimension"])
        topology = doc["topology"]
    except KeyError as exc:
        raise ConfigError(f"missing config key: {exc.args[0]}") from None
    if topology not in TOPOLOGIES:
        raise ConfigError(f"unknown topology {topology!r}")
    try:
        if "volume" in doc:
            vol = doc["volume"]
            if not isinstance(vol, dict):
                raise ConfigError("volume must be an object")
            unknown = set(vol) - _VOLUME_KEYS
            if unknown:
                raise ConfigError(f"unknown volume keys: {sorted(unknown)}")
            missing = _VOLUME_KEYS - set(vol)
            if missing:
                raise ConfigError(f"missing volume keys: {sorted(missing)}")
            return apply_volume_scaling(
                vol["kappa_prime"], vol["lambda_prime"], vol["delta_prime"],
                float(vol["V"]), d, topology)
        missing = {"kappa", "lambda", "delta"} - set(doc)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        return create_network(d, topology, doc["kappa"], doc["lambda"],
                              doc["delta"])
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
