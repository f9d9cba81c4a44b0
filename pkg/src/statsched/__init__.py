"""Statistical-CSI MU-MIMO scheduling: DE link models, implicit gradients,
and a momentum Frank-Wolfe scheduler with reference baselines."""

__version__ = "0.1.0"

from .config import ProblemConfig
from .channel import (
    ChannelRealization,
    CorrelationSet,
    RawChannelSample,
    estimate_correlation,
    load_correlation_set,
    sample_effective_channels,
    save_correlation_set,
    svd_effective,
)
from .link import (
    LinkMetrics,
    PrecoderSet,
    ScheduleVars,
    ergodic_rate_mc,
    instantaneous_sinr,
    rzf_precoders,
)
from .det_equiv import (
    DeRzfSolution,
    DeZfSolution,
    FixedPointError,
    de_rate,
    de_sinr_zf,
    relative_error,
    solve_bar_e,
    solve_de_rzf,
)
from .objective import (
    GradientBundle,
    ObjectiveValue,
    grad_alpha,
    grad_e_wrt_alpha,
    grad_p,
    gradient_bundle,
    objective,
    rate_relaxed,
    sigmoid_bonus,
)
from .afw import (
    AfwState,
    BinarySchedule,
    afw_schedule,
    lmo_alpha,
    lmo_p,
    round_schedule,
)
from .baselines import (
    BaselineResult,
    evaluate_per_tti,
    exhaustive_search,
    greedy_select,
    sus_schedule,
)
from .experiments import (
    ExperimentReport,
    ExperimentSpec,
    run_benchmark,
    run_convergence,
    run_de_accuracy,
    run_experiment,
)
