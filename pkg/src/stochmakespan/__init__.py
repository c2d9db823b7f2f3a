"""Choose ``t`` of ``n`` stochastic tasks to keep the expected maximum
resource load small."""
from .exceptions import (
    InfeasibleError,
    InternalConsistencyError,
    ResourceLimitError,
    ValidationError,
)
from .stochastic import (
    DiscreteDistribution,
    ScalingGrid,
    SplitDistribution,
    build_scaling_grid,
    effective_size,
    effective_sizes,
    scale,
    split_at_one,
)

__version__ = "0.1.0"

__all__ = [
    "DiscreteDistribution",
    "InfeasibleError",
    "InternalConsistencyError",
    "ResourceLimitError",
    "ScalingGrid",
    "SplitDistribution",
    "ValidationError",
    "build_scaling_grid",
    "effective_size",
    "effective_sizes",
    "scale",
    "split_at_one",
]
