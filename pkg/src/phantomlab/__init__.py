"""Monte Carlo laboratory for phantom distribution functions of Markov-chain maxima."""

__version__ = "0.1.0"

from .densities import (  # noqa: E402
    Constant,
    CustomTable,
    Exponential,
    Gaussian,
    Pareto,
    Proposal,
    StudentT,
    Uniform,
)
from .empirics import (  # noqa: E402
    MaxSampleMatrix,
    StepDF,
    empirical_max_df,
    extremal_index_zero_check,
    run_replicas,
    sup_distance,
)
from .models import (  # noqa: E402
    FiniteModel,
    IIDModel,
    LindleyModel,
    MetropolisModel,
    Start,
    simulate_running_maxima,
)
from .phantom import (  # noqa: E402
    LevelSequence,
    continuize,
    levels_from_df,
    levels_from_samples,
    phantom_from_levels,
    regularity_ratios,
    verify_obrien,
)
