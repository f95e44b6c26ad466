"""Bernoulli convolutions of stick-breaking random partitions."""
from .grid import GridFunction
from .measures import (
    Beta,
    Dirac,
    GridDensity,
    MeasureError,
    MomentVector,
    SymmetricFamilyDensity,
    Uniform,
    complement_moments,
    gem2_condition_residual,
    mixed_moments,
    moments,
    parse_measure,
    sample,
    symmetric_family_density,
)
from .partition import ConvolutionSampleConfig, Partition, sample_bernoulli_convolution, sample_partition
from .moments import (
    HalfNotIdentifiable,
    NearSingularError,
    ReconstructionReport,
    coefficient_table,
    forward_z_moments,
    hausdorff_check,
    pivot,
    prop22_residual,
    reconstruct,
    stick_b_sequence,
)
from .hoperator import ConvolutionDensity, NonMemberError, apply_H, check_characterization
from .fractional import ConvergenceError, FractionalOrder, PowerSeriesFn, frac_derivative, frac_integral
from .nonunique import (
    ConstructedMeasure,
    ConstructionError,
    PerturbationFn,
    construct_fractional,
    construct_gem2,
    default_perturbation,
    verify_nonuniqueness,
)
from .holroyd import build_reference, joint_distance, marginal, perturbed, z_distribution
from .stats import empirical_moments, ks_one_sample, two_sample_ks

__version__ = "0.1.0"

__all__ = [
    "GridFunction",
    "Beta",
    "Dirac",
    "GridDensity",
    "MeasureError",
    "MomentVector",
    "SymmetricFamilyDensity",
    "Uniform",
    "complement_moments",
    "gem2_condition_residual",
    "mixed_moments",
    "moments",
    "parse_measure",
    "sample",
    "symmetric_family_density",
    "ConvolutionSampleConfig",
    "Partition",
    "sample_bernoulli_convolution",
    "sample_partition",
    "HalfNotIdentifiable",
    "NearSingularError",
    "ReconstructionReport",
    "coefficient_table",
    "forward_z_moments",
    "hausdorff_check",
    "pivot",
    "prop22_residual",
    "reconstruct",
    "stick_b_sequence",
    "ConvolutionDensity",
    "NonMemberError",
    "apply_H",
    "check_characterization",
    "ConvergenceError",
    "FractionalOrder",
    "PowerSeriesFn",
    "frac_derivative",
    "frac_integral",
    "ConstructedMeasure",
    "ConstructionError",
    "PerturbationFn",
    "construct_fractional",
    "construct_gem2",
    "default_perturbation",
    "verify_nonuniqueness",
    "build_reference",
    "joint_distance",
    "marginal",
    "perturbed",
    "z_distribution",
    "empirical_moments",
    "ks_one_sample",
    "two_sample_ks",
]
