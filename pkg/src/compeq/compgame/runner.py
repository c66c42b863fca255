"""Playing machines against each other, one trial or many."""

from __future__ import annotations

from collections import Counter
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Mapping, Sequence, TypeVar

from ..crypto import IdealPermutation, PermutationHandle, QueryBudgetExceeded
from ..rng import RandomTape, derive_seed, mix64
from .core import ComputationalGameFamily, Forfeit, MachineStrategy, View

R = TypeVar("R")

DEFAULT_CHUNK = 1024


@dataclass(frozen=True)
class Activation:
    player: int
    depth: int
    view: View
    action: Any
    randomness_before: int
    randomness_after: int
    queries: int
    steps: int


@dataclass
class GameResult:
    history: tuple
    utilities: tuple[Fraction, ...]
    forfeit: Forfeit | None
    perm: IdealPermutation
    transcript: list[Activation] = field(default_factory=list)
    stopped: bool = False
    stop_view: View | None = None

    def outcome_key(self) -> Hashable:
        return self.forfeit.key() if self.forfeit else self.history


@dataclass
class ActivationEvent:
    """Passed to a run observer once per activation, after the action is chosen."""

    player: int
    history: tuple
    view: View
    action: Any
    legal: bool
    perm: IdealPermutation
    tape_before: RandomTape | None
    handle: PermutationHandle


class MalformedFamilyError(RuntimeError):
    pass


def trial_seed(master: int, experiment: str, n: int, index: int) -> int:
    return derive_seed(master, experiment, n, index)


def trial_seeds(master: int, experiment: str, n: int, trials: int) -> list[int]:
    return [derive_seed(master, experiment, n, t) for t in range(trials)]


_TAPE_SALT = derive_seed("tape")
_PERM_SALT = derive_seed("perm")


def player_tape(seed: int, player: int) -> RandomTape:
    return RandomTape(mix64(seed ^ mix64(_TAPE_SALT + player)))


def trial_permutation(seed: int) -> IdealPermutation:
    return IdealPermutation(mix64(seed ^ _PERM_SALT))


def run_game(family: ComputationalGameFamily, n: int, profile: Mapping[int, MachineStrategy], seed: int, *,
             record: bool = True, observer: Callable[[ActivationEvent], None] | None = None,
             snapshot: frozenset[int] | set[int] = frozenset(), max_depth: int = 10_000,
             stop: Callable[[tuple, IdealPermutation], bool] | None = None) -> GameResult:
    """Play one game of ``G_n``.

    A machine that emits an illegal action, exceeds a budget or raises
    forfeits. The run then ends with ``family.forfeit_utility``.

    ``stop(h, perm)`` is consulted before every activation; when it holds,
    the run halts and returns the mover's view at ``h`` in ``stop_view``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    for i in range(1, family.num_players + 1):
        if i not in profile:
            raise ValueError(f"no machine for player {i}")
    perm = trial_permutation(seed)
    tapes: dict[int, RandomTape] = {}
    handles: dict[int, PermutationHandle] = {}
    steps: dict[int, int] = {}
    transcript: list[Activation] = []
    h: tuple = ()
    forfeit = None
    while not family.is_terminal(n, h):
        if len(h) > max_depth:
            raise MalformedFamilyError("game does not terminate")
        i = family.player(n, h)
        machine = profile[i]
        tape = tapes.get(i)
        if tape is None:
            tape = tapes[i] = player_tape(seed, i)
            handles[i] = PermutationHandle(perm, machine.query_budget(n))
            steps[i] = 0
        handle = handles[i]
        before = tape.consumed()
        view = View(i, family.observe(n, h, i), before if machine.stateful else None)
        if stop is not None and stop(h, perm):
            return GameResult(h, (), None, perm, transcript, stopped=True, stop_view=view)
        steps[i] += 1
        snap = tape.copy() if i in snapshot else None
        try:
            action = machine.act(n, view, tape, handle)
        except QueryBudgetExceeded:
            forfeit = Forfeit(i, "query budget")
        except Exception as exc:  # a crashing machine forfeits like an illegal one
            forfeit = Forfeit(i, f"error: {type(exc).__name__}")
        if forfeit is None and steps[i] + handle.queries > machine.step_budget(n):
            forfeit = Forfeit(i, "step budget")
        if forfeit is None and not family.is_legal(n, h, action):
            forfeit = Forfeit(i, "illegal action")
        if record:
            transcript.append(Activation(i, len(h), view, None if forfeit else action,
                                         before[1], tape.consumed()[1], handle.queries, steps[i]))
        if observer is not None:
            observer(ActivationEvent(i, h, view, action if forfeit is None else None,
                                     forfeit is None, perm, snap, handle))
        if forfeit is not None:
            break
        h = h + (action,)
    if forfeit is not None:
        u = family.forfeit_utility(n, h, forfeit.player)
    else:
        u = family.utility(n, h, perm)
    return GameResult(h, u, forfeit, perm, transcript)


def _chunks(seq: Sequence, size: int) -> list[Sequence]:
    return [seq[j:j + size] for j in range(0, len(seq), size)]


_FORKED_TASK: Callable | None = None


def _run_forked(part):
    return _FORKED_TASK(part)


def map_chunks(task: Callable[[Sequence[int]], R], seeds: Sequence[int], workers: int = 1,
               chunk: int = DEFAULT_CHUNK) -> list[R]:
    """Apply ``task`` to fixed-size seed chunks; results stay in chunk order.

    Chunk boundaries do not depend on ``workers``, so any order-independent
    reduction of the results is identical for every degree of parallelism.
    Where ``fork`` is available the task is inherited by the workers rather
    than pickled, so it may close over lambdas and local classes.
    """
    global _FORKED_TASK
    parts = _chunks(list(seeds), chunk)
    if workers <= 1 or len(parts) <= 1:
        return [task(p) for p in parts]
    if "fork" in multiprocessing.get_all_start_methods():
        _FORKED_TASK = task
        try:
            with ProcessPoolExecutor(max_workers=workers, mp_context=multiprocessing.get_context("fork")) as pool:
                return list(pool.map(_run_forked, parts))
        finally:
            _FORKED_TASK = None
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, parts))


@dataclass
class EmpiricalDistribution:
    counts: Counter
    trials: int
    seed: int
    n: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.trials:
            raise ValueError("counts must sum to the number of trials")

    def probability(self, key) -> Fraction:
        return Fraction(self.counts.get(key, 0), self.trials)

    def probabilities(self) -> dict[Hashable, Fraction]:
        return {k: Fraction(c, self.trials) for k, c in self.counts.items()}

    def forfeits(self) -> int:
        return sum(c for k, c in self.counts.items() if isinstance(k, tuple) and k[:1] == ("FORFEIT",))


def terminal_key(n: int, result: GameResult) -> Hashable:
    return result.outcome_key()


class _PsiTask:
    def __init__(self, family, n, profile, observe):
        self.family, self.n, self.profile, self.observe = family, n, profile, observe

    def __call__(self, seeds: Sequence[int]) -> Counter:
        c: Counter = Counter()
        for s in seeds:
            res = run_game(self.family, self.n, self.profile, s, record=False)
            c[self.observe(self.n, res)] += 1
        return c


def empirical_psi(family: ComputationalGameFamily, n: int, profile: Mapping[int, MachineStrategy], trials: int,
                  seed: int, *, observe: Callable[[int, GameResult], Hashable] = terminal_key,
                  experiment: str = "psi", workers: int = 1) -> EmpiricalDistribution:
    """Outcome counts over ``trials`` independently seeded runs.

    ``observe`` maps a finished run to its bin; the default is the terminal
    history (or a forfeit marker). Pass a coarsening to keep the support
    small.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    seeds = trial_seeds(seed, experiment, n, trials)
    total: Counter = Counter()
    for part in map_chunks(_PsiTask(family, n, dict(profile), observe), seeds, workers):
        total.update(part)
    return EmpiricalDistribution(total, trials, seed, n)
