"""Pure, mixed and behavioral strategies with exact probabilities."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Union

from .tree import GameTree, History


class MissingStrategyError(ValueError):
    """A profile lacks a strategy for some player or information set."""


@dataclass(frozen=True)
class PureStrategy:
    player: int
    choices: Mapping[str, str]

    def __hash__(self) -> int:
        return hash((self.player, tuple(sorted(self.choices.items()))))

    def __eq__(self, other) -> bool:
        return (isinstance(other, PureStrategy) and self.player == other.player
                and dict(self.choices) == dict(other.choices))

    def action(self, infoset: str) -> str:
        try:
            return self.choices[infoset]
        except KeyError:
            raise MissingStrategyError(f"no choice at {infoset}") from None


@dataclass(frozen=True, eq=False)
class MixedStrategy:
    player: int
    components: tuple[tuple[Fraction, PureStrategy], ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("mixed strategy needs a component")
        if any(w <= 0 for w, _ in self.components):
            raise ValueError("weights must be positive")
        if sum(w for w, _ in self.components) != 1:
            raise ValueError("weights must sum to 1")
        if any(s.player != self.player for _, s in self.components):
            raise ValueError("component belongs to another player")


@dataclass(frozen=True, eq=False)
class BehavioralStrategy:
    player: int
    dists: Mapping[str, Mapping[str, Fraction]]

    def __post_init__(self):
        for label, dist in self.dists.items():
            if any(p < 0 for p in dist.values()):
                raise ValueError(f"negative probability at {label}")
            if sum(dist.values()) != 1:
                raise ValueError(f"distribution at {label} does not sum to 1")

    def prob(self, infoset: str, action: str) -> Fraction:
        try:
            dist = self.dists[infoset]
        except KeyError:
            raise MissingStrategyError(f"no distribution at {infoset}") from None
        return dist.get(action, Fraction(0))

    def dist(self, infoset: str) -> Mapping[str, Fraction]:
        try:
            return self.dists[infoset]
        except KeyError:
            raise MissingStrategyError(f"no distribution at {infoset}") from None


Strategy = Union[PureStrategy, MixedStrategy, BehavioralStrategy]
Profile = Mapping[int, Strategy]


def pure(player: int, **choices: str) -> PureStrategy:
    return PureStrategy(player, dict(choices))


def mixed(player: int, *components: tuple) -> MixedStrategy:
    return MixedStrategy(player, tuple((Fraction(w), s) for w, s in components))


def behavioral(player: int, dists: Mapping[str, Mapping[str, object]]) -> BehavioralStrategy:
    return BehavioralStrategy(player, {I: {a: Fraction(p) for a, p in d.items()} for I, d in dists.items()})


def uniform_behavioral(g: GameTree, player: int) -> BehavioralStrategy:
    dists = {}
    for I in g.player_infosets(player):
        acts = g.infoset_actions(I)
        dists[I] = {a: Fraction(1, len(acts)) for a in acts}
    return BehavioralStrategy(player, dists)


def uniform_profile(g: GameTree) -> dict[int, BehavioralStrategy]:
    return {i: uniform_behavioral(g, i) for i in range(1, g.num_players + 1)}


def as_behavioral(g: GameTree, s: Strategy) -> BehavioralStrategy:
    """Point masses for pure strategies, Kuhn conversion for mixed ones."""
    if isinstance(s, BehavioralStrategy):
        return s
    if isinstance(s, PureStrategy):
        return BehavioralStrategy(s.player, {I: {s.action(I): Fraction(1)} for I in g.player_infosets(s.player)})
    from .analysis import behavioral_from_mixed
    return behavioral_from_mixed(g, s)


def mix_behavioral(a: BehavioralStrategy, b: BehavioralStrategy, weight_b: Fraction) -> BehavioralStrategy:
    """``(1-w)·a + w·b`` infoset by infoset."""
    w = Fraction(weight_b)
    dists = {}
    for I, da in a.dists.items():
        db = b.dists[I]
        acts = list(db) + [x for x in da if x not in db]
        dists[I] = {x: (1 - w) * da.get(x, 0) + w * db.get(x, 0) for x in acts}
    return BehavioralStrategy(a.player, dists)


def pure_strategies(g: GameTree, player: int) -> Iterator[PureStrategy]:
    """All pure strategies in lexicographic order of the players' infosets."""
    labels = g.player_infosets(player)
    options = [g.infoset_actions(I) for I in labels]
    for combo in itertools.product(*options):
        yield PureStrategy(player, dict(zip(labels, combo)))


def count_pure_strategies(g: GameTree, player: int) -> int:
    n = 1
    for I in g.player_infosets(player):
        n *= len(g.infoset_actions(I))
    return n


def own_reach(g: GameTree, s: Strategy, h: History) -> Fraction:
    """Probability that ``s`` plays its owner's actions along ``h``."""
    moves = g.own_moves(h, s.player)
    if isinstance(s, PureStrategy):
        return Fraction(int(all(s.action(I) == a for I, a in moves)))
    if isinstance(s, BehavioralStrategy):
        p = Fraction(1)
        for I, a in moves:
            p *= s.prob(I, a)
            if not p:
                break
        return p
    return sum((w * own_reach(g, c, h) for w, c in s.components), Fraction(0))
