"""Clone-invariant deviation ratings for N-player normal-form games.

Rates each strategy by its deviation gain at the strictest
coarse-correlated equilibrium reachable via iterated LP tightening, with
uniform / Elo / Nash-averaging baselines, score-table gamification,
equilibrium-backed per-task contributions, and a population-improvement
simulation harness.
"""

from .games import (
    GameError,
    GameValidationError,
    UnknownLabelError,
    NormalFormGame,
    OffsetSpec,
    build_game,
    quantize,
    clone_strategy,
    mix_strategy,
    append_strategy,
    apply_offset,
    permute_strategies,
    random_game,
    game_to_dict,
    game_from_dict,
    load_game,
    save_game,
)
from .cce import (
    DistributionError,
    JointDistribution,
    CCEConstraintMatrix,
    CCECheck,
    marginal,
    pairwise_deviation_gain,
    cce_deviation_gain,
    deviation_gains,
    cce_gap,
    cce_constraint_matrix,
    verify_cce,
)
from .rating import (
    RatingError,
    RatingInfeasibleError,
    StageBudgetError,
    SolverConfig,
    FreezeRecord,
    RatingResult,
    RatingCertificate,
    solve_stage,
    detect_active,
    deviation_rating,
    rating_certificate,
    result_to_dict,
    save_result,
)
from .baselines import (
    EloConfig,
    EloResult,
    NashAveragingResult,
    WinProbMatrix,
    elo_fit,
    load_winprob,
    nash_averaging_2pzs,
    payoff_to_winprob,
    save_winprob,
    uniform_rating,
)
from .gamify import (
    ScoreTable,
    dirichlet_mixtures,
    game_from_table_2pzs,
    game_from_table_3p,
    load_score_table,
    normalize_per_task,
    pairwise_margins,
    population_game,
    save_score_table,
)
from .analysis import (
    ContributionMatrix,
    PROPERTY_NAMES,
    PropertyReport,
    ReducedConstraintSystem,
    check_property,
    dedup_joints,
    rate_reduced,
    save_contributions,
    symmetrize_payoffs,
    task_contributions,
)
from .improve import (
    ImprovementLoopError,
    IterationRecord,
    LoopConfig,
    Population,
    Trajectory,
    lift_to_full,
    meta_game,
    random_population,
    run_improvement_loop,
    save_trajectory,
)

__version__ = "0.1.0"
