"""Split-sample, noise-smoothed and Stevens-type confidence intervals for a
binomial proportion, with exact coverage and length evaluation."""

from .datarand import (
    PermutationRank,
    TrialSequence,
    data_randomized_u_wilson,
    korn_interval,
    sequence_rank,
    split_by_order,
)
from .dist import (
    BinomialSample,
    binom_cdf,
    binom_pmf,
    binom_sf,
    hypergeom_pmf,
    hypergeom_support,
    log_binom_coeff,
    normal_quantile,
)
from .errors import ConfigurationError, DomainError
from .evaluation import (
    BoundRange,
    EvaluationPoint,
    conditional_expected_length,
    coverage,
    coverage_given_x,
    distinct_value_count,
    expected_length,
    upper_bound_range,
)
from .intervals import (
    ConfidenceInterval,
    HypergeometricZ,
    Method,
    MethodSpec,
    RankU,
    SplitDesign,
    StevensNu,
    UniformNoise,
    clopper_pearson,
    construct,
    mid_p,
    split_sample_sizes,
    split_sample_wilson,
    split_tilde_x,
    stevens,
    u_noise_wilson,
    wilson,
)

__version__ = "0.1.0"
