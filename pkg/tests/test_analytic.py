import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import betabinom, poisson

import autocat as ac
from autocat.analytic import (
    conditional_logpmf_states,
    conditional_pmf_exact,
    enumerate_simplex,
    poisson_tail_cutoff,
    simplex_size,
)
from autocat.model import HypothesisError


def test_enumerate_simplex_counts_and_uniqueness():
    for d, n in [(1, 5), (2, 7), (3, 6), (4, 5), (5, 4)]:
        states = enumerate_simplex(d, n)
        assert states.shape == (simplex_size(d, n), d)
        assert np.all(states.sum(axis=1) == n)
        assert len({tuple(s) for s in states}) == states.shape[0]


def test_mixing_intensity(fig1_net):
    assert ac.mixing_intensity(fig1_net) == pytest.approx(40.0)
    net = ac.create_network(2, "full-symmetric", 0.05, 0.05, 0.1)
    assert ac.mixing_intensity(net) == pytest.approx(1.0)
    bad = ac.create_network(2, "full-symmetric", 0.05, 0.2, [0.01, 0.02])
    with pytest.raises(HypothesisError):
        ac.mixing_intensity(bad)


def test_dirichlet_params_fig1(fig1_net):
    alpha = ac.dirichlet_params(fig1_net)
    assert alpha == pytest.approx([0.1, 0.1], rel=1e-12)


def test_dirichlet_params_scaled_presets():
    # symmetric scaling gives alpha_i = D V / d
    for d, V in [(2, 50.0), (3, 120.0), (4, 20.0)]:
        net = ac.apply_volume_scaling(1.0, 0.01, 0.01, V, d)
        alpha = ac.dirichlet_params(net)
        assert alpha == pytest.approx([0.01 * V / d] * d, rel=1e-12)


def test_dirichlet_params_sum_identity():
    rng = np.random.default_rng(5)
    for _ in range(50):
        d = int(rng.integers(2, 6))
        kappa = float(rng.uniform(0.01, 1.0))
        delta = float(rng.uniform(0.01, 1.0))
        net = ac.create_network(d, "full-symmetric", kappa,
                                rng.uniform(0.05, 2.0, size=d), delta)
        alpha = ac.dirichlet_params(net)
        assert alpha.sum() == pytest.approx(delta / kappa, rel=1e-12)


def test_dirichlet_params_hypothesis_errors():
    cyc = ac.create_network(3, "tk-cycle", 0.05, 0.2, 0.01)
    with pytest.raises(HypothesisError):
        ac.dirichlet_params(cyc)
    uneq = ac.create_network(2, "full-symmetric", 0.05, 0.2, [0.01, 0.02])
    with pytest.raises(HypothesisError):
        ac.dirichlet_params(uneq)


def test_poisson_pmf_basics():
    assert ac.poisson_pmf(1.0, 0) == pytest.approx(math.exp(-1), rel=1e-14)
    # recurrence oracle: nu(n) = nu(n-1) * mu / n
    mu = 40.0
    val = math.exp(-mu)
    for n in range(1, 120):
        val *= mu / n
        assert ac.poisson_pmf(mu, n) == pytest.approx(val, rel=1e-10)
    # scipy cross-check
    ns = np.arange(0, 150)
    assert np.allclose(ac.poisson_pmf(mu, ns), poisson.pmf(ns, mu), rtol=1e-12)


def test_poisson_normalization_with_tail_cutoff():
    for mu in (1.0, 40.0):
        cutoff = poisson_tail_cutoff(mu, 1e-14)
        total = float(ac.poisson_pmf(mu, np.arange(cutoff + 1)).sum())
        assert abs(total - 1.0) < 1e-12


def test_conditional_pmf_flat_case():
    cond = ac.DirichletMultinomial(np.array([1.0, 1.0]))
    assert ac.conditional_pmf(cond, 3, [1, 2]) == pytest.approx(0.25, rel=1e-13)
    for a in range(4):
        assert ac.conditional_pmf(cond, 3, [a, 3 - a]) == pytest.approx(0.25, rel=1e-13)


def test_uniform_simplex_value_and_normalization():
    cond = ac.UniformSimplex(3)
    states = enumerate_simplex(3, 2)
    assert states.shape[0] == 6
    for a in states:
        assert ac.conditional_pmf(cond, 2, a) == pytest.approx(1 / 6, rel=1e-13)


def test_conditional_pmf_against_exact_rational():
    # frozen value from the exact-rational oracle: 4638501/12058624
    got = ac.conditional_pmf(ac.DirichletMultinomial(np.array([0.1, 0.1])),
                             10, [0, 10])
    assert got == pytest.approx(0.3846625452456267, rel=1e-12)
    exact = conditional_pmf_exact([Fraction(1, 10), Fraction(1, 10)], [0, 10])
    assert exact == Fraction(4638501, 12058624)

    rng = np.random.default_rng(19)
    alpha_opts = [Fraction(1, 10), Fraction(2, 5), Fraction(1), Fraction(13, 4)]
    for _ in range(40):
        d = int(rng.integers(2, 5))
        alpha = [alpha_opts[i] for i in rng.integers(0, len(alpha_opts), size=d)]
        n = int(rng.integers(1, 26))
        a = rng.multinomial(n, np.ones(d) / d)
        exact = float(conditional_pmf_exact(alpha, a))
        got = ac.conditional_pmf(
            ac.DirichletMultinomial(np.array([float(x) for x in alpha])), n, a)
        assert got == pytest.approx(exact, rel=1e-11)


def test_conditional_pmf_total_mismatch_raises():
    cond = ac.DirichletMultinomial(np.array([0.5, 0.5]))
    with pytest.raises(ValueError, match="!= n"):
        ac.conditional_pmf(cond, 4, [1, 2])


def test_d2_dirichlet_multinomial_equals_beta_binomial():
    # scipy betabinom is the independent oracle for the d = 2 reduction
    for alpha, beta_p in [(0.1, 0.1), (1.0, 1.0), (2.5, 0.7)]:
        cond = ac.DirichletMultinomial(np.array([alpha, beta_p]))
        for n in (1, 5, 23):
            for i in range(n + 1):
                ours = ac.conditional_pmf(cond, n, [i, n - i])
                ref = betabinom.pmf(i, n, alpha, beta_p)
                assert ours == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_uniform_equals_dm_with_unit_alpha():
    for d, n in [(2, 9), (3, 6), (4, 5)]:
        uni = ac.UniformSimplex(d)
        dm = ac.DirichletMultinomial(np.ones(d))
        states = enumerate_simplex(d, n)
        pu = np.exp(conditional_logpmf_states(uni, states))
        pd = np.exp(conditional_logpmf_states(dm, states))
        assert np.allclose(pu, pd, rtol=1e-12)


def test_conditional_normalization_random_alphas():
    rng = np.random.default_rng(3)
    cases = [(2, 50), (3, 30), (4, 20), (5, 15)]
    for d, n in cases:
        alpha = rng.uniform(0.05, 5.0, size=d)
        cond = ac.DirichletMultinomial(alpha)
        states = enumerate_simplex(d, n)
        total = float(np.exp(conditional_logpmf_states(cond, states)).sum())
        assert abs(total - 1.0) < 1e-10


def test_stationary_mixture_families():
    sym = ac.create_network(3, "full-symmetric", 0.05, [0.1, 0.2, 0.3], 0.1)
    ms = ac.stationary_mixture(sym)
    assert isinstance(ms.conditional, ac.DirichletMultinomial)
    cyc = ac.create_network(3, "tk-cycle", 0.05, 0.2, 1.5 * 0.05)
    ms_c = ac.stationary_mixture(cyc)
    assert isinstance(ms_c.conditional, ac.UniformSimplex)
    off = ac.create_network(3, "tk-cycle", 0.05, 0.2, 0.05)
    with pytest.raises(HypothesisError):
        ac.stationary_mixture(off)


def test_stationary_pmf_values_and_normalization():
    net = ac.create_network(2, "full-symmetric", 0.05, 0.05, 0.1)
    ms = ac.stationary_mixture(net)
    assert ms.mu == pytest.approx(1.0)
    assert ms.conditional.alpha == pytest.approx([1.0, 1.0])
    assert ac.stationary_pmf(ms, [0, 0]) == pytest.approx(math.exp(-1), rel=1e-12)
    assert ac.stationary_pmf(ms, [1, 0]) == pytest.approx(math.exp(-1) / 2, rel=1e-12)
    total = sum(ac.stationary_pmf(ms, a)
                for n in range(61) for a in enumerate_simplex(2, n))
    assert abs(total - 1.0) < 1e-10


def test_analytic_moments_match_enumeration_oracle():
    # frozen from direct summation over the lattice (tail < 1e-14)
    ms = ac.MixtureStationary(
        mu=2.5, conditional=ac.DirichletMultinomial(np.array([0.4, 1.3])), d=2)
    mom = ac.analytic_moments(ms, 1.0)
    assert mom.mean == pytest.approx([0.5882352941176463, 1.911764705882349], rel=1e-12)
    assert mom.cov[0, 0] == pytest.approx(1.0047417659874394, rel=1e-9)
    assert mom.cov[0, 1] == pytest.approx(-0.41650647186979334, rel=1e-9)
    assert mom.cov[1, 1] == pytest.approx(2.3282711777521463, rel=1e-9)

    # live enumeration oracle on a second parameter set
    ms2 = ac.MixtureStationary(
        mu=1.0, conditional=ac.DirichletMultinomial(np.array([1.0, 1.0])), d=2)
    states = np.vstack([enumerate_simplex(2, n) for n in range(60)])
    from autocat.verify import conditional_logpmf_states_by_total
    p = np.exp(conditional_logpmf_states_by_total(ms2, states))
    mean = (p[:, None] * states).sum(axis=0)
    cen = states - mean
    cov = np.einsum("s,si,sj->ij", p, cen, cen)
    mom2 = ac.analytic_moments(ms2, 1.0)
    assert mom2.mean == pytest.approx(mean, rel=1e-10)
    assert np.allclose(mom2.cov, cov, rtol=1e-8)


def test_analytic_moments_d2_closed_form():
    # (Sigma_V)_11 = [ab/(a+b)^2 * mu^2/(a+b+1) + mu a/(a+b)] / V^2
    alpha, beta_p, mu, V = 1.0, 1.0, 400.0, 200.0
    ms = ac.MixtureStationary(
        mu=mu, conditional=ac.DirichletMultinomial(np.array([alpha, beta_p])), d=2)
    mom = ac.analytic_moments(ms, V)
    a0 = alpha + beta_p
    expected = (alpha * beta_p / a0**2 * mu**2 / (a0 + 1)
                + mu * alpha / a0) / V**2
    assert mom.cov[0, 0] == pytest.approx(expected, rel=1e-13)
    assert mom.mean == pytest.approx([1.0, 1.0], rel=1e-13)


def test_scaled_moments_converge_to_fluid_limit():
    lam_p = np.array([0.013, 0.027])
    delta_p = 0.01
    covs = []
    for V in (1e2, 1e3, 1e4):
        net = ac.apply_volume_scaling(1.0, lam_p, delta_p, V, 2)
        ms = ac.stationary_mixture(net)
        mom = ac.analytic_moments(ms, V)
        # the scaled mean is V-independent, already at the fluid equilibrium
        assert mom.mean == pytest.approx(lam_p / delta_p, rel=1e-10)
        covs.append(np.abs(mom.cov))
    assert np.all(covs[1] < covs[0]) and np.all(covs[2] < covs[1])
    assert np.all(covs[2] < covs[0] / 20)


def test_corner_mass_uniform_case():
    for n in (1, 4, 10):
        assert ac.corner_mass([1.0, 1.0], n) == pytest.approx(2 / (n + 1), rel=1e-12)


def test_corner_mass_against_endpoint_sum():
    # frozen from the exact-rational endpoint sum at alpha = (0.1, 0.1), n = 10
    assert ac.corner_mass([0.1, 0.1], 10) == pytest.approx(0.7693250904912534, rel=1e-12)
    cond = ac.DirichletMultinomial(np.array([0.3, 0.7, 0.2]))
    direct = sum(ac.conditional_pmf(cond, 8, 8 * np.eye(3, dtype=int)[i])
                 for i in range(3))
    assert ac.corner_mass([0.3, 0.7, 0.2], 8) == pytest.approx(direct, rel=1e-12)


def test_corner_mass_increases_as_volume_shrinks():
    n = 10
    masses = [ac.corner_mass(np.array([0.37, 0.81]) * V, n)
              for V in (1.0, 0.1, 0.01)]
    assert masses[0] < masses[1] < masses[2] < 1.0


def test_uniform_recurrences_exact_as_rationals():
    # u_n = n!(d-1)!/(n+d-1)!; adding a molecule scales by (n+1)/(n+d),
    # removing one by (n+d-1)/n, independently of the state
    for d in (2, 3, 5):
        for n in (1, 4, 17):
            u = lambda m: (Fraction(math.factorial(m) * math.factorial(d - 1),
                                    math.factorial(m + d - 1)))
            assert u(n + 1) == Fraction(n + 1, n + d) * u(n)
            assert u(n - 1) == Fraction(n + d - 1, n) * u(n)
