"""Volume-scaling sweeps and the critical volume of the flat conditional.

Under the density scaling kappa = kappa'/V, delta = delta', lam = lam'*V,
the conditional weights become alpha_i proportional to V, so shrinking the
volume drives the conditional law to the simplex corners (the switching
regime) while growing it concentrates the scaled process at the fluid
equilibrium.  The crossover happens exactly where every alpha_i = 1:

    full-symmetric preset (kappa'=1, lam'=delta'=D):  V = d / D
    cyclic preset at the uniform-law relation:        V = d / ((d-1) D)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import (
    DirichletMultinomial,
    MixtureStationary,
    UniformSimplex,
    analytic_moments,
    conditional_logpmf_states,
    corner_mass,
    dirichlet_params,
    enumerate_simplex,
    mixing_intensity,
)
from .model import HypothesisError, apply_volume_scaling

MODALITIES = ("boundary-concentrated", "flat", "interior-unimodal", "mixed")


def critical_volume(d: int, D: float, topology: str) -> float:
    """Volume at which the conditional law is exactly uniform.

    d/D for the full-symmetric preset, d/((d-1)*D) for the tk-cycle.
    The two coincide at d = 2.  A custom topology has no closed form.
    """
    if d < 2:
        raise ValueError("critical volume needs d >= 2")
    if not D > 0:
        raise ValueError("D must be positive")
    if topology == "full-symmetric":
        return d / D
    if topology == "tk-cycle":
        return d / ((d - 1) * D)
    raise HypothesisError(
        f"no closed-form critical volume for topology {topology!r}")


def modality_class(alpha) -> str:
    """Shape class of the Dirichlet-multinomial conditional.

    All weights above one give an interior mode, all exactly one the flat
    law, all below one mass piled at the boundary; anything else is mixed.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ValueError("alpha entries must be positive")
    if np.all(alpha > 1):
        return "interior-unimodal"
    if np.all(alpha == 1):
        return "flat"
    if np.all(alpha < 1):
        return "boundary-concentrated"
    return "mixed"


def flatness(cond, n: int) -> float:
    """Sup-norm distance of the conditional pmf on E_n from the uniform pmf."""
    states = enumerate_simplex(cond.d, n)
    probs = np.exp(conditional_logpmf_states(cond, states))
    return float(np.abs(probs - 1.0 / states.shape[0]).max())


@dataclass(frozen=True)
class VolumeRecord:
    """Per-volume entry of a scaling sweep."""

    V: float
    mu: float
    reference_n: int
    conditional_available: bool
    alpha: np.ndarray | None
    modality: str
    flatness: float
    corner_mass: float
    mean: np.ndarray | None     # scaled mean of X/V
    var11: float


@dataclass(frozen=True)
class ScalingSweep:
    kappa_prime: float
    lambda_prime: np.ndarray
    delta_prime: float
    d: int
    topology: str
    volumes: tuple
    records: tuple


def tk_preset(D: float):
    """The conventional preset kappa' = 1, lambda' = delta' = D."""
    return 1.0, D, D


def scaling_sweep(kappa_prime, lambda_prime, delta_prime, volumes, d: int,
                  topology: str = "full-symmetric",
                  reference_n: int | None = None) -> ScalingSweep:
    """Evaluate the stationary regime of the scaled network at each volume.

    Per volume: the scaled network, the conditional weights, the modality
    class, the sup-norm flatness at the reference total (default: the
    rounded Poisson mean), the corner mass, and the analytic moments of
    X/V.  A tk-cycle has a known conditional only at its critical relation;
    off it the record is flagged unavailable and only the mixing intensity
    is reported.
    """
    volumes = [float(v) for v in volumes]
    if not volumes:
        raise ValueError("volume grid must be nonempty")
    if any(v <= 0 for v in volumes):
        raise ValueError("volumes must be positive")
    records = []
    for V in volumes:
        net = apply_volume_scaling(kappa_prime, lambda_prime, delta_prime,
                                   V, d, topology)
        mu = mixing_intensity(net)
        ref_n = int(round(mu)) if reference_n is None else int(reference_n)
        ref_n = max(ref_n, 1)
        alpha = None
        available = True
        try:
            alpha = dirichlet_params(net)
            cond = DirichletMultinomial(alpha)
        except HypothesisError:
            if topology == "tk-cycle" and _tk_at_critical(net):
                cond = UniformSimplex(d)
                alpha = np.ones(d)
            else:
                available = False
        if available:
            ms = MixtureStationary(mu=mu, conditional=cond, d=d)
            mom = analytic_moments(ms, V)
            records.append(VolumeRecord(
                V=V, mu=mu, reference_n=ref_n, conditional_available=True,
                alpha=alpha, modality=modality_class(alpha),
                flatness=flatness(cond, ref_n),
                corner_mass=corner_mass(alpha, ref_n),
                mean=mom.mean, var11=float(mom.cov[0, 0])))
        else:
            records.append(VolumeRecord(
                V=V, mu=mu, reference_n=ref_n, conditional_available=False,
                alpha=None, modality="unavailable", flatness=math.nan,
                corner_mass=math.nan, mean=None, var11=math.nan))
    return ScalingSweep(
        kappa_prime=float(np.asarray(kappa_prime, dtype=float)),
        lambda_prime=np.atleast_1d(np.asarray(lambda_prime, dtype=float)),
        delta_prime=float(np.asarray(delta_prime, dtype=float)),
        d=d, topology=topology, volumes=tuple(volumes),
        records=tuple(records))


def _tk_at_critical(net) -> bool:
    idx = np.arange(net.d)
    kap = net.kappa[idx, (idx + 1) % net.d]
    if kap[0] <= 0 or np.any(kap != kap[0]) or np.any(net.lam != net.lam[0]):
        return False
    rel = net.delta[0] * (net.d - 1) - net.d * kap[0]
    return abs(rel) <= 1e-12 * net.delta[0]


def write_sweep_csv(sweep: ScalingSweep, path) -> None:
    """CSV export `V,alpha_1..alpha_d,modality,flatness,corner_mass,mean_1..mean_d,var_11`.

    Cells with no defined value (unavailable conditional) are left empty.
    """
    d = sweep.d

    def fmt(x) -> str:
        if x is None or (isinstance(x, float) and math.isnan(x)):
            return ""
        return format(x, ".17g")

    header = (["V"] + [f"alpha_{i+1}" for i in range(d)]
              + ["modality", "flatness", "corner_mass"]
              + [f"mean_{i+1}" for i in range(d)] + ["var_11"])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for rec in sweep.records:
            alphas = ([fmt(a) for a in rec.alpha] if rec.alpha is not None
                      else [""] * d)
            means = ([fmt(m) for m in rec.mean] if rec.mean is not None
                     else [""] * d)
            row = ([fmt(rec.V)] + alphas
                   + [rec.modality, fmt(rec.flatness), fmt(rec.corner_mass)]
                   + means + [fmt(rec.var11)])
            fh.write(",".join(row) + "\n")
