"""Computational game families, machines, the runner and representation checks."""

from .core import (
    FORFEIT,
    Bits,
    ComputationalGameFamily,
    Forfeit,
    MachineStrategy,
    View,
    concat,
    is_bits,
    uniform_bits,
)
from .representation import (
    CheckReport,
    ClosenessReport,
    InducedStrategy,
    InterpreterReport,
    MappedOutcome,
    Representation,
    RepresentationError,
    enumerate_histories,
    induced_abstract_strategy,
    pushforward,
    verify_ug2,
    verify_ug3,
    verify_ug4a,
    verify_ug4b,
)
from .runner import (
    ActivationEvent,
    EmpiricalDistribution,
    GameResult,
    empirical_psi,
    map_chunks,
    player_tape,
    run_game,
    trial_seed,
    trial_seeds,
)
