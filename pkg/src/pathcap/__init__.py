"""pathcap: path-sampling compression and path-based capacity measures
for positive homogeneous feed-forward networks."""

from .logscaled import LogScaled
from .measures import (
    DegenerateNetworkError,
    InputWeighting,
    PathChain,
    PathMeasures,
    build_chain,
    enumerate_paths_oracle,
    input_weights,
    marginal,
    path_complexity,
    path_measures,
    path_norm_phi,
    product_abs,
    renyi_half_exp,
    variation,
    variation_bounds,
)
from .network import (
    Activation,
    Dataset,
    DoubledNetwork,
    Network,
    doubled_forward,
    forward,
    forward_batch,
    sign_split,
)
from .norms import PowerIterationError, group_norm_q1, induced_norm
from .sampling import (
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

__version__ = "0.1.0"
