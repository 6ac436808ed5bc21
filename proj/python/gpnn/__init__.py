from ._gpnn import (
    CheckpointError,
    ConfigurationError,
    ConstantMatrixError,
    DegenerateGameError,
    Equilibrium,
    Game,
    NetworkParams,
    NetworkShape,
    NonFiniteUpdateError,
    NotCoordinationGameError,
    ShapeError,
    StrategyProfile,
    TracingFailureError,
    build_test_set,
    classify_selection,
    enumerate_all_nash,
    enumerate_pure_nash,
    evaluate_models,
    expected_payoff,
    forward,
    game_from_angles,
    init_params,
    is_normalized,
    load_checkpoint,
    max_normalized_regret,
    normalize,
    param_count,
    profile_tv,
    rationalizable_actions,
    regret,
    restrict_game,
    risk_dominant_2x2,
    sample_uniform_game,
    save_checkpoint,
    strictly_dominated_actions,
    swap_roles,
    trace_linear,
    train,
    tv_distance,
    uniform_benchmark_maxreg,
)

__all__ = [name for name in dir() if not name.startswith("_")]
