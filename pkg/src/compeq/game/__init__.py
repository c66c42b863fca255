"""Exact finite extensive-form games."""

from .analysis import (
    ImperfectRecallError,
    NEReport,
    NotCompletelyMixedError,
    OutcomeDistribution,
    SeqReport,
    ZeroReachError,
    behavioral_from_mixed,
    best_response,
    brute_force_best_response,
    check_epsilon_ne,
    check_sequential_certificate,
    conditional_gains,
    conditional_outcome_distribution,
    default_certificate,
    expected_utility,
    measured_slack,
    outcome_distribution,
    reach,
    tremble_profile,
    utility_vector,
)
from .normal_form import (
    NormalFormGame,
    action_label,
    action_name,
    embed_normal_form,
    embedded_profile,
    nf_stage,
    pure_nash,
    support_enumeration,
)
from .strategies import (
    BehavioralStrategy,
    MissingStrategyError,
    MixedStrategy,
    Profile,
    PureStrategy,
    as_behavioral,
    behavioral,
    count_pure_strategies,
    mix_behavioral,
    mixed,
    pure,
    pure_strategies,
    uniform_behavioral,
    uniform_profile,
)
from .tree import (
    Decision,
    GameTree,
    History,
    InvalidGameError,
    Terminal,
    ValidationReport,
    has_perfect_recall,
    leaf,
    node,
    validate_game,
)
