"""Free-pole hierarchical equations of motion for the sub-Ohmic spin-boson model."""

from .bath import (BathSpec, QuadratureError, SampleGrid, SpectralParams, SpinSystem,
                   correlation_oracle, correlation_series, frequency_grid, noise_power,
                   spectral_density)
from .barycentric import (BarycentricApproximant, BathMode, CertificationError, ModeSet, aaa_fit,
                          certify, decompose, poles_and_residues, reconstruct_correlation)
from .hierarchy import (HEOMGenerator, HierarchyIndexSet, HierarchyState, HierarchyTooLarge,
                        NumericalInstability, PropagatorConfig, Trajectory, default_time_step,
                        enumerate_hierarchy, heom_rhs, hierarchy_size, observe_population, propagate)
from .perturbative import InteractionPictureCache, redfield_plus_propagate, redfield_propagate
from .niba import PairInteraction, niba_kernel, pair_interaction
from .gme import (IllPosedExtraction, MemoryKernelSeries, PopulationSeries, RateMatrix,
                  asymptotic_rates, extract_kernel, extract_kernel_matrix, gme_forward)
from .config import ConfigError, ExperimentConfig, parse_config
from .experiment import RunManifest, run_experiment, run_sweep

__version__ = "0.1.0"
