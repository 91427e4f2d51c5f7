"""Exact solving, constructive play, and verification for the
Toucher-Isolator game on trees."""

from .game import (
    Board,
    BoardError,
    CyclicError,
    DelayedGame,
    DisconnectedError,
    DuplicateEdgeError,
    FormatError,
    GameNotOverError,
    GameOverError,
    IllegalMoveError,
    MoveError,
    PlayState,
    Player,
    SelfLoopError,
    Tree,
    VertexClassification,
    VertexRangeError,
    apply_move,
    classify,
    endpoint_pattern,
    final_score,
    format_board,
    format_game,
    fresh_game,
    initial_state,
    isolatable_edges,
    legal_moves,
    make_tree,
    mask_of,
    parse_board,
    parse_game,
    parse_tree,
    score_now,
    set_of,
)
from .enumeration import (
    FREE_TREE_COUNTS,
    SamplingError,
    all_trees,
    canonical_code,
    path,
    random_config,
    s_n,
    star,
)
from .reductions import (
    CasePreconditionError,
    FinalCaseBound,
    ForestSplit,
    Ledger,
    Lemma2Check,
    ReductionCertificate,
    SplitIdentityError,
    certificate_to_text,
    check_reduction,
    compute_ledger,
    final_case_bound,
    forest_split,
    lemma2_bound_check,
    lemma5_check,
    make_certificate,
    score_bound,
)
from .solver import (
    SearchLimitError,
    SolveResult,
    Solver,
    StrategyMoveError,
    alpha,
    best_response_score,
    make_optimal_policy,
    optimal_move,
    random_playout_score,
    u,
)
from .strategy import (
    CaseMatch,
    CaseTag,
    IsolatorSession,
    PhaseOneTrace,
    StrategyInvariantError,
    StrategyState,
    case_applies,
    full_strategy,
    lemma3_chain,
    lemma3_reduce,
    lemma3_step,
    make_strategy_policy,
    phase1_move,
    phase2_case,
    phase2_move,
)
from .verify import (
    ReportRow,
    VerificationReport,
    general_lower,
    general_upper,
    lower_bound,
    verify_families,
    verify_lemma4,
    verify_theorem1,
)

__all__ = [name for name in dir() if not name.startswith("_")]
