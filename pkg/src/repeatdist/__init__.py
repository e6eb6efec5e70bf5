"""Copy-number distributions of tandem repeats under unequal crossover."""

from .analysis import (
    BalanceReport,
    FixedPointSolution,
    detailed_balance_residual,
    moment_set_membership,
    no_reversibility_witness,
    reversibility_recursion,
    solve_fixed_point_q,
)
from .dist import (
    CopyNumberDistribution,
    MomentSetSpec,
    centered_moment,
    geometric,
    internal_fixed_point,
    mean,
    random_fixed_point,
    read_distribution,
    takahata_fixed_point,
    total_variation,
    write_distribution,
)
from .dynamics import (
    IterationResult,
    Status,
    StepMode,
    StepPolicy,
    TrajectoryRecord,
    apply_recombinator,
    euler_step,
    iterate,
    lipschitz_ratio_estimate,
)
from .errors import (
    CapacityError,
    DomainError,
    LeakExceeded,
    MaxStepsReached,
    NumericalFailure,
    RecombinationError,
    TransformDomainError,
)
from .kernels import ModelKind, Variant, kernel_value, kernel_values, normalization_constant_q
from .markov import MarkovOperator, geometric_markov_matrix, markov_apply, markov_eigen_checks
from .transforms import (
    CoefficientVector,
    XMetricParams,
    a_map,
    b_map,
    induced_step_takahata,
    inverse_b_map,
    x_metric,
)

__version__ = "0.1.0"
