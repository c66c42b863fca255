"""Representations of a finite game by a computational family, and their checks.

A representation bundles the history maps ``f_n`` (from ``G_n`` to ``G``),
the strategy lift ``F`` and the action interpreters ``M^σ``. The verifiers
here test the structural conditions (same length, same mover, monotone
under prefixes, information sets preserved, the last action determined by
the information set), utility agreement, closeness of outcome distributions,
and interpreter agreement.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping, NamedTuple, Sequence

from ..crypto import IdealPermutation, PermutationHandle
from ..game.analysis import outcome_distribution
from ..game.strategies import Profile, Strategy, uniform_behavioral
from ..game.tree import GameTree, History
from ..rng import RandomTape, derive_seed
from ..stats import hoeffding_radius, l1_distance
from .core import ComputationalGameFamily, MachineStrategy
from .runner import EmpiricalDistribution, GameResult, empirical_psi, run_game, trial_permutation, trial_seeds

Interpreter = Callable[..., str]


class RepresentationError(RuntimeError):
    """``f_n`` is undefined where it must be defined."""


class MappedOutcome(NamedTuple):
    """A terminal of ``G_n`` together with its image in ``G``.

    The image depends on the permutation of the trial, so it is computed
    while the trial's permutation is still available.
    """

    history: tuple | None
    image: History


class Representation(ABC):
    game: GameTree
    family: ComputationalGameFamily
    name: str = "representation"

    @abstractmethod
    def history_map(self, n: int, h: tuple, perm: IdealPermutation) -> History:
        """``f_n(h)``; the permutation is used as trusted, unbudgeted infrastructure."""

    @abstractmethod
    def lift(self, strategy: Strategy) -> MachineStrategy:
        """``F(σ_i)``."""

    @abstractmethod
    def interpreter(self, strategy: Strategy) -> Interpreter:
        """``M^σ``: predicts the ``G`` action ``F(σ)`` plays from a view and tape."""

    def lift_profile(self, profile: Profile) -> dict[int, MachineStrategy]:
        return {i: self.lift(s) for i, s in profile.items()}

    def default_profile(self) -> dict[int, Strategy]:
        return {i: uniform_behavioral(self.game, i) for i in range(1, self.game.num_players + 1)}

    def image_observer(self, keep_history: bool = False) -> "ImageObserver":
        return ImageObserver(self, keep_history)


class ImageObserver:
    """Bins a finished run by its ``f_n``-image (or the forfeit marker)."""

    def __init__(self, rep: Representation, keep_history: bool = False):
        self.rep = rep
        self.keep_history = keep_history

    def __call__(self, n: int, result: GameResult) -> Hashable:
        if result.forfeit is not None:
            return result.forfeit.key()
        image = self.rep.history_map(n, result.history, result.perm)
        return MappedOutcome(result.history if self.keep_history else None, image)


def _is_forfeit(key) -> bool:
    return isinstance(key, tuple) and not isinstance(key, MappedOutcome) and key[:1] == ("FORFEIT",)


def pushforward(rep: Representation, dist: EmpiricalDistribution) -> EmpiricalDistribution:
    """Re-bin outcome counts by their ``G`` image; forfeits stay separate."""
    out: Counter = Counter()
    for key, c in dist.counts.items():
        if isinstance(key, MappedOutcome):
            if key.image not in rep.game.history_set:
                raise RepresentationError(f"image {key.image!r} is not a history of G")
            out[key.image] += c
        elif _is_forfeit(key):
            out[key] += c
        else:
            raise RepresentationError(f"outcome {key!r} was recorded without its image")
    return EmpiricalDistribution(out, dist.trials, dist.seed, dist.n)


@dataclass
class CheckReport:
    check: str
    n: int
    mode: str
    examined: int = 0
    failures: list[str] = field(default_factory=list)
    failure_count: int = 0
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failure_count == 0

    def fail(self, msg: str) -> None:
        self.failure_count += 1
        if len(self.failures) < 20:
            self.failures.append(msg)


def enumerate_histories(family: ComputationalGameFamily, n: int, cap: int) -> list[tuple]:
    out: list[tuple] = []
    stack: list[tuple] = [()]
    while stack:
        h = stack.pop()
        out.append(h)
        if len(out) > cap:
            raise ValueError(f"G_{n} has more than {cap} histories; use sampled mode")
        if not family.is_terminal(n, h):
            for a in family.legal_actions(n, h):
                stack.append(h + (a,))
    return out


class _Checker:
    """Shared machinery of the structural and utility checks for one permutation."""

    def __init__(self, rep: Representation, family: ComputationalGameFamily, n: int,
                 perm: IdealPermutation, ug2: CheckReport | None, ug3: CheckReport | None):
        self.rep, self.family, self.n, self.perm = rep, family, n, perm
        self.g = rep.game
        self.ug2, self.ug3 = ug2, ug3
        self.images: dict[tuple, History | None] = {}

    def image(self, h: tuple) -> History | None:
        if h not in self.images:
            try:
                self.images[h] = self.rep.history_map(self.n, h, self.perm)
            except Exception as exc:
                self.images[h] = None
                (self.ug2 or self.ug3).fail(f"f_n undefined at {h!r}: {exc}")
        return self.images[h]

    def check(self, h: tuple) -> None:
        fam, g, n = self.family, self.g, self.n
        img = self.image(h)
        if img is None:
            return
        terminal = fam.is_terminal(n, h)
        r2 = self.ug2
        if r2 is not None:
            r2.examined += 1
            if img not in g.history_set:
                r2.fail(f"(a) image {img!r} is not a history of G")
                return
            if len(img) != len(h):
                r2.fail(f"(a) length {len(h)} maps to length {len(img)}")
            if terminal != g.is_terminal(img):
                r2.fail(f"(b) terminal status differs at {img!r}")
            elif not terminal and fam.player(n, h) != g.player_fn[img]:
                r2.fail(f"(b) mover differs at {img!r}")
            if h:
                parent = self.image(h[:-1])
                if parent is not None and img[:-1] != parent:
                    r2.fail(f"(c) image of prefix {parent!r} is not a prefix of {img!r}")
        if self.ug3 is not None and terminal:
            self.ug3.examined += 1
            if img in g.utilities:
                got = tuple(fam.utility(n, h, self.perm))
                if got != tuple(g.utilities[img]):
                    self.ug3.fail(f"utility {got} differs from {g.utilities[img]} at {img!r}")
            else:
                self.ug3.fail(f"terminal maps to non-terminal {img!r}")

    def same_set(self, h: tuple, other: tuple, actions: Iterable) -> None:
        """Conditions (d) and (e) for two histories in one ``G_n`` information set."""
        r2 = self.ug2
        if r2 is None:
            return
        a_img, b_img = self.image(h), self.image(other)
        if a_img is None or b_img is None:
            return
        ia, ib = self.g.infosets.get(a_img), self.g.infosets.get(b_img)
        if ia is None or ia != ib:
            r2.fail(f"(d) {a_img!r} and {b_img!r} share a G_n set but not a G set")
            return
        for a in actions:
            x, y = self.image(h + (a,)), self.image(other + (a,))
            if x is not None and y is not None and x[-1] != y[-1]:
                r2.fail(f"(e) action maps to {x[-1]!r} and {y[-1]!r} in one information set")


def _verify(rep: Representation, family: ComputationalGameFamily, n: int, mode: str, trials: int,
            seed: int, cap: int, want2: bool, want3: bool, profile: Profile | None
            ) -> tuple[CheckReport | None, CheckReport | None]:
    r2 = CheckReport("UG2", n, mode) if want2 else None
    r3 = CheckReport("UG3", n, mode) if want3 else None
    if mode == "exhaustive":
        perm = IdealPermutation(derive_seed(seed, "verify", n))
        chk = _Checker(rep, family, n, perm, r2, r3)
        hs = enumerate_histories(family, n, cap)
        groups: dict[Hashable, list[tuple]] = defaultdict(list)
        for h in hs:
            chk.check(h)
            if not family.is_terminal(n, h):
                i = family.player(n, h)
                groups[(i, family.observe(n, h, i))].append(h)
        if r2 is not None:
            for members in groups.values():
                if len(members) > 1:
                    acts = list(family.legal_actions(n, members[0]))
                    for other in members[1:]:
                        chk.same_set(members[0], other, acts)
            covered = {chk.images[h] for h in hs if chk.images.get(h) is not None}
            missing = rep.game.history_set - covered
            if missing:
                r2.fail(f"f_{n} is not onto: {len(missing)} histories of G missed")
            r2.notes["histories"] = len(hs)
        if r3 is not None:
            r3.notes["histories"] = len(hs)
        return r2, r3
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    if trials < 1:
        raise ValueError("sampled mode needs trials >= 1")
    machines = rep.lift_profile(profile or rep.default_profile())
    for t, s in enumerate(trial_seeds(seed, f"verify:{rep.name}", n, trials)):
        if t % 2 == 0:
            res = run_game(family, n, machines, s, record=False)
            history, perm = res.history, res.perm
            if res.forfeit is not None:
                if r2 is not None:
                    r2.fail(f"honest run forfeited: {res.forfeit}")
                continue
        else:
            perm = trial_permutation(s)
            tape = RandomTape(derive_seed(s, "walk"))
            history = ()
            while not family.is_terminal(n, history):
                history = history + (family.sample_action(n, history, tape),)
        chk = _Checker(rep, family, n, perm, r2, r3)
        side = RandomTape(derive_seed(s, "hidden"))
        for j in range(len(history) + 1):
            h = history[:j]
            chk.check(h)
            if j < len(history):
                other = family.resample_hidden(n, h, side)
                if other is not None:
                    chk.same_set(h, other, [history[j]])
    for r in (r2, r3):
        if r is not None:
            r.notes["trials"] = trials
    return r2, r3


def verify_ug2(rep: Representation, family: ComputationalGameFamily, n: int, mode: str = "exhaustive", *,
               trials: int = 10_000, seed: int = 0, cap: int = 200_000, profile: Profile | None = None) -> CheckReport:
    return _verify(rep, family, n, mode, trials, seed, cap, True, False, profile)[0]


def verify_ug3(rep: Representation, family: ComputationalGameFamily, n: int, mode: str = "exhaustive", *,
               trials: int = 10_000, seed: int = 0, cap: int = 200_000, profile: Profile | None = None) -> CheckReport:
    return _verify(rep, family, n, mode, trials, seed, cap, False, True, profile)[1]


@dataclass(frozen=True)
class ClosenessRow:
    profile: str
    n: int
    trials: int
    l1: float
    radius: float
    threshold: float
    forfeits: int

    @property
    def passed(self) -> bool:
        return self.l1 <= self.threshold


@dataclass
class ClosenessReport:
    tol: float
    rows: list[ClosenessRow]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def verify_ug4a(rep: Representation, profiles: Sequence[tuple[str, Profile]] | Mapping[str, Profile],
                n_list: Sequence[int], trials: int, tol: float, *, seed: int = 0, workers: int = 1,
                lifts: Mapping[str, Mapping[int, MachineStrategy]] | None = None) -> ClosenessReport:
    """Compare the pushed-forward empirical outcome law of ``F(σ)`` with ``ρ_σ``.

    ``lifts`` can replace the lifted machines for a profile name (used to
    test that a broken lift is caught).
    """
    if not 0 < tol <= 2:
        raise ValueError("tol must lie in (0, 2]")
    items = list(profiles.items()) if isinstance(profiles, Mapping) else list(profiles)
    rows = []
    for name, prof in items:
        exact = outcome_distribution(rep.game, prof).support()
        machines = (lifts or {}).get(name) or rep.lift_profile(prof)
        for n in n_list:
            emp = empirical_psi(rep.family, n, machines, trials, seed, observe=rep.image_observer(),
                                experiment=f"ug4a:{name}", workers=workers)
            pushed = pushforward(rep, emp)
            dist = float(l1_distance({k: float(v) for k, v in pushed.probabilities().items()},
                                     {k: float(v) for k, v in exact.items()}))
            r = hoeffding_radius(trials)
            rows.append(ClosenessRow(name, n, trials, dist, r, tol + 3 * r, pushed.forfeits()))
    return ClosenessReport(tol, rows)


@dataclass
class InterpreterReport:
    n: int
    trials: int
    views: int = 0
    mismatches: int = 0
    examples: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.mismatches == 0 and self.views > 0


def _others(rep: Representation, player: int, others: Profile | None) -> dict[int, Strategy]:
    base = rep.default_profile()
    if others:
        base.update({i: s for i, s in others.items() if i != player})
    base.pop(player, None)
    return base


def verify_ug4b(rep: Representation, strategy: Strategy, n: int, trials: int, *, seed: int = 0,
                others: Profile | None = None, interpreter: Interpreter | None = None,
                machine: MachineStrategy | None = None) -> InterpreterReport:
    """Replay each on-path activation of ``F(σ)`` through ``M^σ`` and compare."""
    i = strategy.player
    interp = interpreter or rep.interpreter(strategy)
    machines = rep.lift_profile(_others(rep, i, others))
    machines[i] = machine or rep.lift(strategy)
    report = InterpreterReport(n, trials)
    for s in trial_seeds(seed, f"ug4b:{rep.name}", n, trials):
        seen = []

        def observe(ev, seen=seen):
            if ev.player == i and ev.legal:
                seen.append((ev.history, ev.action, interp(n, ev.view, ev.tape_before, PermutationHandle(ev.perm))))

        res = run_game(rep.family, n, machines, s, record=False, observer=observe, snapshot={i})
        for h, a, predicted in seen:
            report.views += 1
            actual = rep.history_map(n, h + (a,), res.perm)[-1]
            if actual != predicted:
                report.mismatches += 1
                if len(report.examples) < 10:
                    report.examples.append(f"trial seed {s}: history {h!r} played {actual!r}, "
                                           f"interpreter said {predicted!r}")
    return report


@dataclass
class InducedStrategy:
    player: int
    n: int
    trials: int
    counts: dict[str, Counter]

    def reach(self, infoset: str) -> int:
        return sum(self.counts.get(infoset, Counter()).values())

    def dist(self, infoset: str) -> dict[str, Fraction]:
        c = self.counts.get(infoset)
        if not c:
            raise KeyError(f"{infoset} was never reached")
        total = sum(c.values())
        return {a: Fraction(v, total) for a, v in c.items()}

    def unreached(self, game: GameTree) -> list[str]:
        return [I for I in game.player_infosets(self.player) if not self.counts.get(I)]


def induced_abstract_strategy(rep: Representation, family: ComputationalGameFamily, machine: MachineStrategy,
                              others: Profile | None, n: int, trials: int, *, seed: int = 0,
                              experiment: str = "induced") -> InducedStrategy:
    """Empirical ``G``-level behavior of ``machine`` against lifted opponents."""
    i = machine.player
    machines = rep.lift_profile(_others(rep, i, others))
    machines[i] = machine
    counts: dict[str, Counter] = defaultdict(Counter)
    for s in trial_seeds(seed, experiment, n, trials):
        seen = []

        def observe(ev, seen=seen):
            if ev.player == i:
                seen.append((ev.history, ev.action if ev.legal else None))

        res = run_game(family, n, machines, s, record=False, observer=observe)
        for h, a in seen:
            label = rep.game.infosets[rep.history_map(n, h, res.perm)]
            if a is None:
                counts[label]["FORFEIT"] += 1
            else:
                counts[label][rep.history_map(n, h + (a,), res.perm)[-1]] += 1
    return InducedStrategy(i, n, trials, dict(counts))
