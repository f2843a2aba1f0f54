"""Path sampling, empirical Markov distributions and sparse reconstruction."""

from .backend import HAVE_COMPILED, active_backend, set_backend
from .core import (
    ConditionalSampler,
    EmpiricalMarkov,
    PathCounts,
    ReconstructedNetwork,
    build_sampler,
    compression_stats,
    empirical_markov,
    reconstruct,
    sample_paths,
)
from .rng import RNG_ALGORITHM, derive_seed, stream_key, uniform_block

__all__ = [
    "ConditionalSampler",
    "EmpiricalMarkov",
    "PathCounts",
    "ReconstructedNetwork",
    "build_sampler",
    "sample_paths",
    "empirical_markov",
    "reconstruct",
    "compression_stats",
    "RNG_ALGORITHM",
    "derive_seed",
    "stream_key",
    "uniform_block",
    "HAVE_COMPILED",
    "active_backend",
    "set_backend",
]
