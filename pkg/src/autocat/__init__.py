"""Autocatalytic reaction networks: exact simulation, closed-form stationary
laws, volume-scaling analysis and verification tooling."""

from .model import (
    ConfigError,
    EventCapError,
    HypothesisError,
    ReactionNetwork,
    Transition,
    apply_volume_scaling,
    create_network,
    generator_apply,
    network_from_config,
    propensities,
    reaction_channels,
    total_propensity,
)
from .analytic import (
    DirichletMultinomial,
    MixtureStationary,
    ScaledMoments,
    UniformSimplex,
    analytic_moments,
    conditional_pmf,
    conditional_pmf_exact,
    corner_mass,
    dirichlet_params,
    enumerate_simplex,
    mixing_intensity,
    poisson_pmf,
    stationary_mixture,
    stationary_pmf,
)
from .simulate import (
    CounterStream,
    DitStats,
    EnsembleResult,
    Trajectory,
    dit_statistics,
    empirical_conditional,
    ensemble_sample,
    lumped_projection,
    simulate_trajectory,
    ssa_step,
    total_occupancy,
    write_ensemble_csv,
    write_trajectory_csv,
)
from .verify import (
    VerificationReport,
    drift_report,
    lumpability_check,
    master_equation_residual,
    master_equation_sweep,
    moment_zscore_report,
    oracle_comparison,
    recurrence_check,
    truncated_stationary_solve,
)
from .scaling import (
    ScalingSweep,
    critical_volume,
    modality_class,
    scaling_sweep,
    tk_preset,
    write_sweep_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
