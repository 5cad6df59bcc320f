"""Closed-form stationary laws of the network family.

Under equal outflow rates the count process is lumpable by total count, the
lumped birth-death chain has a Poisson stationary law with intensity
``mu = sum(lam)/delta``, and the stationary distribution factorizes as

    stationary(a) = conditional(a | n) * poisson(mu, n),   n = sum(a).

The conditional family on the simplex ``E_n = {a >= 0 : sum(a) = n}`` is

* Dirichlet-multinomial with ``alpha_i = delta*lam_i / (kappa*sum(lam))``
  when all off-diagonal kappa entries share one value ``kappa > 0``
  (beta-binomial for d = 2), and
* the uniform distribution ``n!(d-1)!/(n+d-1)!`` for the cyclic topology at
  the critical relation ``delta = d/(d-1) * kappa``.

All probability evaluation runs in log space through scipy's log-gamma; a
secondary exact-rational path (`conditional_pmf_exact`) serves as an
independent oracle for small totals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .model import HypothesisError, ReactionNetwork

_SIMPLEX_CAP = 2_000_000


def enumerate_simplex(d: int, n: int) -> np.ndarray:
    """All count vectors with total n, as an (N, d) int64 array.

    N = C(n+d-1, d-1).  The order is deterministic: the first coordinate
    ascends, recursively.  Raises ValueError beyond the size cap.
    """
    if d < 1 or n < 0:
        raise ValueError(f"need d >= 1 and n >= 0, got d={d}, n={n}")
    if math.comb(n + d - 1, d - 1) > _SIMPLEX_CAP:
        raise ValueError(f"simplex E_{n} in dimension {d} exceeds the "
                         f"{_SIMPLEX_CAP}-state cap")
    if d == 1:
        return np.array([[n]], dtype=np.int64)
    blocks = []
    for k in range(n + 1):
        rest = enumerate_simplex(d - 1, n - k)
        first = np.full((rest.shape[0], 1), k, dtype=np.int64)
        blocks.append(np.hstack([first, rest]))
    return np.vstack(blocks)


def simplex_size(d: int, n: int) -> int:
    return math.comb(n + d - 1, d - 1)


# ---------------------------------------------------------------------------
# conditional families


@dataclass(frozen=True)
class DirichletMultinomial:
    """Dirichlet-multinomial conditional with positive weight vector alpha."""

    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.ndim != 1 or alpha.size < 1:
            raise ValueError("alpha must be a 1-d vector")
        if np.any(alpha <= 0):
            raise ValueError("alpha entries must be positive")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)

    @property
    def d(self) -> int:
        return self.alpha.size


@dataclass(frozen=True)
class UniformSimplex:
    """Uniform conditional on E_n; equals DirichletMultinomial(ones(d))."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")


Conditional = DirichletMultinomial | UniformSimplex


@dataclass(frozen=True)
class MixtureStationary:
    """Poisson(mu) mixture over totals with a conditional family on each E_n."""

    mu: float
    conditional: Conditional
    d: int

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        cd = self.conditional.d
        if cd != self.d:
            raise ValueError(f"conditional dimension {cd} != d {self.d}")


def mixing_intensity(net: ReactionNetwork) -> float:
    """Poisson intensity of the lumped total-count chain: sum(lam)/delta.

    Requires equal outflow rates (the lumpability hypothesis).
    """
    if not net.equal_delta:
        raise HypothesisError(
            "mixing intensity requires equal outflow rates delta_i")
    return float(net.lam.sum() / net.delta[0])


def dirichlet_params(net: ReactionNetwork) -> np.ndarray:
    """Conditional weights alpha_i = delta*lam_i / (kappa * sum(lam)).

    Requires equal deltas and a common positive off-diagonal kappa (the
    full-symmetric hypothesis; any topology tag qualifies if the matrix
    values do).  Guarantees sum(alpha) = delta/kappa.
    """
    if not net.equal_delta:
        raise HypothesisError("dirichlet parameters require equal deltas")
    if net.d < 2:
        raise HypothesisError("dirichlet parameters require d >= 2")
    off = net.kappa[~np.eye(net.d, dtype=bool)]
    kappa = off[0]
    if kappa <= 0 or np.any(off != kappa):
        raise HypothesisError(
            "dirichlet parameters require one common positive kappa for "
            "every ordered species pair")
    return net.delta[0] * net.lam / (kappa * net.lam.sum())


def stationary_mixture(net: ReactionNetwork) -> MixtureStationary:
    """Closed-form stationary law of the network, when one is known.

    Full-symmetric kappa values give the Dirichlet-multinomial conditional;
    a tk-cycle at the critical relation delta = d/(d-1)*kappa with equal
    inflows gives the uniform conditional.  Anything else raises
    HypothesisError: no closed form is available.
    """
    mu = mixing_intensity(net)
    try:
        cond: Conditional = DirichletMultinomial(dirichlet_params(net))
    except HypothesisError:
        if net.topology != "tk-cycle" or net.d < 2:
            raise
        idx = np.arange(net.d)
        kap = net.kappa[idx, (idx + 1) % net.d]
        kappa = kap[0]
        delta = net.delta[0]
        rel = delta * (net.d - 1) - net.d * kappa
        if (kappa <= 0 or np.any(kap != kappa)
                or np.any(net.lam != net.lam[0])
                or abs(rel) > 1e-12 * delta):
            raise HypothesisError(
                "no closed-form stationary law: tk-cycle requires equal "
                "kappa, equal lambda and delta = d/(d-1)*kappa") from None
        cond = UniformSimplex(net.d)
    return MixtureStationary(mu=mu, conditional=cond, d=net.d)


# ---------------------------------------------------------------------------
# pmf evaluation (log space)


def poisson_logpmf(mu: float, n) -> np.ndarray | float:
    if not mu > 0:
        raise ValueError("mu must be positive")
    n_arr = np.asarray(n, dtype=float)
    out = n_arr * math.log(mu) - mu - gammaln(n_arr + 1.0)
    return out if out.ndim else float(out)


def poisson_pmf(mu: float, n) -> np.ndarray | float:
    """Poisson mass mu^n e^(-mu)/n!, evaluated via log-gamma."""
    out = np.exp(poisson_logpmf(mu, n))
    return out if np.ndim(out) else float(out)


def poisson_tail_cutoff(mu: float, tol: float = 1e-14) -> int:
    """Smallest N >= mu with Chernoff bound P(X > N) <= exp(-mu)(e mu/N)^N <= tol."""
    n = max(1, math.ceil(mu))
    while True:
        log_bound = -mu + n * (1.0 + math.log(mu / n))
        if log_bound <= math.log(tol):
            return n
        n = max(n + 1, int(n * 1.1))


def conditional_logpmf_states(cond: Conditional, states: np.ndarray) -> np.ndarray:
    """Log conditional pmf for an (N, d) block of states on one simplex E_n."""
    states = np.asarray(states, dtype=np.int64)
    n = int(states[0].sum())
    a = states.astype(float)
    if isinstance(cond, UniformSimplex):
        logp = (gammaln(n + 1.0) + gammaln(float(cond.d))
                - gammaln(n + float(cond.d)))
        return np.full(states.shape[0], logp)
    alpha = cond.alpha
    a0 = alpha.sum()
    log_multinom = gammaln(n + 1.0) - gammaln(a + 1.0).sum(axis=1)
    log_weight = (gammaln(a + alpha[None, :]) - gammaln(alpha)[None, :]).sum(axis=1)
    return log_multinom + gammaln(a0) - gammaln(n + a0) + log_weight


def conditional_pmf(cond: Conditional, n: int, a) -> float:
    """Conditional probability of state a on the simplex E_n.

    Dirichlet-multinomial:
        multinomial(n; a) * Gamma(sum alpha)/Gamma(n + sum alpha)
                          * prod_i Gamma(a_i + alpha_i)/Gamma(alpha_i)
    Uniform: n!(d-1)!/(n+d-1)!.  Raises ValueError when sum(a) != n.
    """
    a = np.asarray(a, dtype=np.int64)
    if np.any(a < 0):
        raise ValueError("state counts must be nonnegative")
    if int(a.sum()) != n:
        raise ValueError(f"state total {int(a.sum())} != n = {n}")
    if a.size != cond.d:
        raise ValueError(f"state has {a.size} species, conditional has {cond.d}")
    return float(np.exp(conditional_logpmf_states(cond, a[None, :])[0]))


def conditional_pmf_exact(alpha, a) -> Fraction:
    """Exact-rational Dirichlet-multinomial pmf, for rational alpha.

    Uses rising factorials: pmf = multinomial(n; a) * prod_i rf(alpha_i, a_i)
    / rf(sum alpha, n).  Independent oracle for the log-gamma path; intended
    for totals up to a few tens.
    """
    alpha = [Fraction(x) if not isinstance(x, Fraction) else x for x in alpha]
    a = [int(v) for v in a]
    if any(v < 0 for v in a):
        raise ValueError("state counts must be nonnegative")
    n = sum(a)

    def rising(x: Fraction, k: int) -> Fraction:
        out = Fraction(1)
        for t in range(k):
            out *= x + t
        return out

    multinom = Fraction(math.factorial(n))
    for v in a:
        multinom /= math.factorial(v)
    num = Fraction(1)
    for x, v in zip(alpha, a):
        num *= rising(x, v)
    return multinom * num / rising(sum(alpha), n)


def stationary_logpmf(ms: MixtureStationary, a) -> float:
    a = np.asarray(a, dtype=np.int64)
    n = int(a.sum())
    return (float(conditional_logpmf_states(ms.conditional, a[None, :])[0])
            + float(poisson_logpmf(ms.mu, n)))


def stationary_pmf(ms: MixtureStationary, a) -> float:
    """Stationary probability of count vector a: conditional(a|n) * poisson(mu, n)."""
    a = np.asarray(a, dtype=np.int64)
    if np.any(a < 0):
        raise ValueError("state counts must be nonnegative")
    return math.exp(stationary_logpmf(ms, a))


# ---------------------------------------------------------------------------
# moments and corner mass


@dataclass(frozen=True)
class ScaledMoments:
    """Mean vector and covariance matrix of the scaled process X/V."""

    mean: np.ndarray
    cov: np.ndarray


def _weights(cond: Conditional) -> tuple[np.ndarray, float]:
    if isinstance(cond, UniformSimplex):
        alpha = np.ones(cond.d)
    else:
        alpha = cond.alpha
    return alpha / alpha.sum(), float(alpha.sum())


def analytic_moments(ms: MixtureStationary, V: float) -> ScaledMoments:
    """Exact first and second moments of X/V at stationarity.

    With p_i = alpha_i/sum(alpha), a0 = sum(alpha) and Poisson intensity mu,
    factorial-moment identities of the mixture give

        E[X_i]        = mu * p_i
        Cov[X_i, X_j] = mu^2 * p_i (delta_ij - p_j) / (a0 + 1)
                        + delta_ij * mu * p_i

    which are then scaled by 1/V and 1/V^2.
    """
    if not V > 0:
        raise ValueError("V must be positive")
    p, a0 = _weights(ms.conditional)
    mu = ms.mu
    mean = mu * p / V
    cov = (mu * mu * (np.diag(p) - np.outer(p, p)) / (a0 + 1.0)
           + mu * np.diag(p)) / (V * V)
    return ScaledMoments(mean=mean, cov=cov)


def corner_mass(alpha, n: int) -> float:
    """Total conditional mass of the corner states n*e_i.

    Equals Gamma(a0)/Gamma(n+a0) * sum_i Gamma(n+alpha_i)/Gamma(alpha_i);
    tends to one as the weights shrink toward zero.
    """
    alpha = np.asarray(alpha, dtype=float)
    if n < 1:
        raise ValueError("n must be >= 1")
    if np.any(alpha <= 0):
        raise ValueError("alpha entries must be positive")
    a0 = alpha.sum()
    log_common = gammaln(a0) - gammaln(n + a0)
    terms = gammaln(n + alpha) - gammaln(alpha) + log_common
    return float(np.exp(terms).sum())
