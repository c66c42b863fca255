"""Outcome distributions, Nash checks, Kuhn conversion and sequential certificates.

All arithmetic is exact. Best responses are searched over pure strategies;
expected utility is linear in the deviator's mixture, so a pure strategy
always attains the maximum over mixed (and, under perfect recall,
behavioral) deviations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .strategies import (
    BehavioralStrategy,
    MissingStrategyError,
    MixedStrategy,
    Profile,
    PureStrategy,
    as_behavioral,
    mix_behavioral,
    own_reach,
    pure_strategies,
    uniform_behavioral,
)
from .tree import GameTree, History, InvalidGameError, player_has_perfect_recall, require_valid


class ImperfectRecallError(InvalidGameError):
    """Operation needs perfect recall."""


class ZeroReachError(ValueError):
    """Conditioning on an event of probability zero."""


class NotCompletelyMixedError(ValueError):
    """A trembled profile leaves some terminal history with probability zero."""


class OutcomeDistribution(dict):
    """Terminal history -> exact probability (every terminal listed)."""

    def total(self) -> Fraction:
        return sum(self.values(), Fraction(0))

    def support(self) -> dict[History, Fraction]:
        return {h: p for h, p in self.items() if p}


def _check_profile(g: GameTree, profile: Profile) -> None:
    for i in range(1, g.num_players + 1):
        if i not in profile:
            raise MissingStrategyError(f"no strategy for player {i}")
        if profile[i].player != i:
            raise MissingStrategyError(f"strategy for player {i} is owned by {profile[i].player}")


def reach(g: GameTree, profile: Profile, h: History, *, skip: int | None = None) -> Fraction:
    """Probability of reaching ``h``; ``skip`` drops one player's factor."""
    p = Fraction(1)
    for i in range(1, g.num_players + 1):
        if i == skip:
            continue
        p *= own_reach(g, profile[i], h)
        if not p:
            break
    return p


def outcome_distribution(g: GameTree, profile: Profile) -> OutcomeDistribution:
    _check_profile(g, profile)
    return OutcomeDistribution((z, reach(g, profile, z)) for z in g.terminals)


def expected_utility(g: GameTree, profile: Profile, player: int) -> Fraction:
    rho = outcome_distribution(g, profile)
    return sum((p * g.utility(z, player) for z, p in rho.items() if p), Fraction(0))


def utility_vector(g: GameTree, profile: Profile) -> tuple[Fraction, ...]:
    rho = outcome_distribution(g, profile)
    return tuple(sum((p * g.utility(z, i) for z, p in rho.items() if p), Fraction(0))
                 for i in range(1, g.num_players + 1))


class _Solver:
    """Best-response dynamic program for one perfect-recall player."""

    def __init__(self, g: GameTree, profile: Profile, player: int, own: BehavioralStrategy | None = None):
        self.g = g
        self.i = player
        self.own = own
        self.opp = {z: reach(g, profile, z, skip=player) for z in g.terminals}
        self.values: dict[str, Fraction] = {}
        self.choice: dict[str, str] = {}

    def _collect(self, x: History, acc: list, hits: set) -> None:
        g = self.g
        if g.is_terminal(x):
            w = self.opp[x]
            if w:
                acc[0] += w * g.utility(x, self.i)
        elif g.player_fn[x] == self.i:
            hits.add(g.infosets[x])
        else:
            for a in g.children[x]:
                self._collect(x + (a,), acc, hits)

    def _continuation(self, starts: Iterable[History]) -> Fraction:
        acc = [Fraction(0)]
        hits: set[str] = set()
        for x in starts:
            self._collect(x, acc, hits)
        return acc[0] + sum((self.value(J) for J in sorted(hits)), Fraction(0))

    def value(self, label: str) -> Fraction:
        """Max over continuations from ``label`` of opponent-weighted utility."""
        v = self.values.get(label)
        if v is None:
            members = self.g.infoset_members[label]
            best = None
            for a in self.g.infoset_actions(label):
                va = self._continuation(h + (a,) for h in members)
                if best is None or va > best:
                    best, self.choice[label] = va, a
            v = self.values[label] = best
        return v

    def root_value(self) -> Fraction:
        return self._continuation([()])

    def own_value(self, x: History) -> Fraction:
        """Opponent-weighted utility below ``x`` when the player follows ``own``."""
        g = self.g
        if g.is_terminal(x):
            return self.opp[x] * g.utility(x, self.i)
        total = Fraction(0)
        if g.player_fn[x] == self.i:
            for a, p in self.own.dist(g.infosets[x]).items():
                if p:
                    total += p * self.own_value(x + (a,))
        else:
            for a in g.children[x]:
                total += self.own_value(x + (a,))
        return total

    def strategy(self) -> PureStrategy:
        choices = {}
        for I in self.g.player_infosets(self.i):
            self.value(I)
            choices[I] = self.choice[I]
        return PureStrategy(self.i, choices)


def brute_force_best_response(g: GameTree, profile: Profile, player: int) -> tuple[Fraction, PureStrategy]:
    """Enumerate every pure strategy; first maximiser in enumeration order wins."""
    best_v, best_s = None, None
    for s in pure_strategies(g, player):
        v = expected_utility(g, {**profile, player: s}, player)
        if best_v is None or v > best_v:
            best_v, best_s = v, s
    return best_v, best_s


def best_response(g: GameTree, profile: Profile, player: int) -> tuple[Fraction, PureStrategy]:
    _check_profile(g, profile)
    if not player_has_perfect_recall(g, player):
        return brute_force_best_response(g, profile, player)
    solver = _Solver(g, profile, player)
    return solver.root_value(), solver.strategy()


@dataclass(frozen=True)
class NEReport:
    epsilon: Fraction
    gains: dict[int, Fraction]
    best: dict[int, PureStrategy]

    @property
    def max_gain(self) -> Fraction:
        return max(self.gains.values(), default=Fraction(0))

    @property
    def passed(self) -> bool:
        return self.max_gain <= self.epsilon


def check_epsilon_ne(g: GameTree, profile: Profile, epsilon=0) -> NEReport:
    require_valid(g)
    _check_profile(g, profile)
    gains, best = {}, {}
    for i in range(1, g.num_players + 1):
        v, s = best_response(g, profile, i)
        gains[i] = v - expected_utility(g, profile, i)
        best[i] = s
    return NEReport(Fraction(epsilon), gains, best)


def behavioral_from_mixed(g: GameTree, m: MixedStrategy | PureStrategy) -> BehavioralStrategy:
    """Kuhn conversion: conditional play probabilities, uniform where unreachable."""
    require_valid(g)
    if isinstance(m, PureStrategy):
        m = MixedStrategy(m.player, ((Fraction(1), m),))
    i = m.player
    if not player_has_perfect_recall(g, i):
        raise ImperfectRecallError(f"player {i} does not have perfect recall")
    dists = {}
    for I in g.player_infosets(i):
        path = g.own_moves(g.infoset_members[I][0], i)
        acts = g.infoset_actions(I)
        mass = {a: Fraction(0) for a in acts}
        for w, s in m.components:
            if all(s.action(J) == b for J, b in path):
                mass[s.action(I)] += w
        total = sum(mass.values())
        if total:
            dists[I] = {a: v / total for a, v in mass.items()}
        else:
            dists[I] = {a: Fraction(1, len(acts)) for a in acts}
    return BehavioralStrategy(i, dists)


def conditional_outcome_distribution(g: GameTree, profile: Profile, reach_set: Iterable[History]) -> OutcomeDistribution:
    targets = set(reach_set)
    rho = outcome_distribution(g, profile)
    inside = [z for z in g.terminals if any(z[:j] in targets for j in range(len(z) + 1))]
    mass = sum((rho[z] for z in inside), Fraction(0))
    if not mass:
        raise ZeroReachError("reach set has probability zero")
    return OutcomeDistribution((z, rho[z] / mass) for z in inside)


def conditional_gains(g: GameTree, profile: Profile, player: int) -> dict[str, Fraction]:
    """Per information set, best conditional value minus the player's own.

    Beliefs inside a set are proportional to the opponents' reach, which is
    the conditional distribution whenever the player has perfect recall.
    """
    own = as_behavioral(g, profile[player])
    solver = _Solver(g, profile, player, own)
    gains = {}
    for I in g.player_infosets(player):
        members = g.infoset_members[I]
        weight = sum((reach(g, profile, h, skip=player) for h in members), Fraction(0))
        if not weight:
            continue
        gains[I] = (solver.value(I) - sum((solver.own_value(h) for h in members), Fraction(0))) / weight
    return gains


@dataclass(frozen=True)
class CertificateFailure:
    index: int
    player: int
    infoset: str
    gain: Fraction
    delta: Fraction


@dataclass
class SeqReport:
    deltas: list[Fraction]
    slacks: list[Fraction]
    distances: list[Fraction]
    failures: list[CertificateFailure] = field(default_factory=list)

    @property
    def delta_monotone(self) -> bool:
        return all(a >= b for a, b in zip(self.deltas, self.deltas[1:]))

    @property
    def distance_monotone(self) -> bool:
        return all(a >= b for a, b in zip(self.distances, self.distances[1:]))

    @property
    def worst_slack(self) -> Fraction:
        return min((d - s for d, s in zip(self.deltas, self.slacks)), default=Fraction(0))

    @property
    def passed(self) -> bool:
        return not self.failures and self.delta_monotone and self.distance_monotone


def _distance(g: GameTree, a: Profile, b: Profile) -> Fraction:
    worst = Fraction(0)
    for i in range(1, g.num_players + 1):
        sa, sb = as_behavioral(g, a[i]), as_behavioral(g, b[i])
        for I in g.player_infosets(i):
            for x in g.infoset_actions(I):
                worst = max(worst, abs(sa.prob(I, x) - sb.prob(I, x)))
    return worst


def check_sequential_certificate(g: GameTree, profile: Profile,
                                 certificate: Sequence[tuple[Profile, object]]) -> SeqReport:
    """Verify a trembling certificate ``[(σ^k, δ_k), ...]`` for ``profile``.

    Each ``σ^k`` must be completely mixed. At every information set, each
    player's conditional play under ``σ^k`` must be within ``δ_k`` of a best
    response. ``δ_k`` and the distance from ``σ^k`` to ``profile`` must not
    increase along the list.
    """
    require_valid(g)
    for i in range(1, g.num_players + 1):
        if not player_has_perfect_recall(g, i):
            raise ImperfectRecallError(f"player {i} does not have perfect recall")
    report = SeqReport([], [], [])
    for idx, (sk, delta) in enumerate(certificate):
        delta = Fraction(delta)
        bk = {i: as_behavioral(g, s) for i, s in sk.items()}
        rho = outcome_distribution(g, bk)
        if any(p <= 0 for p in rho.values()):
            raise NotCompletelyMixedError(f"certificate entry {idx} misses a terminal")
        slack = Fraction(0)
        for i in range(1, g.num_players + 1):
            for I, gain in conditional_gains(g, bk, i).items():
                slack = max(slack, gain)
                if gain > delta:
                    report.failures.append(CertificateFailure(idx, i, I, gain, delta))
        report.deltas.append(delta)
        report.slacks.append(slack)
        report.distances.append(_distance(g, bk, profile))
    return report


def tremble_profile(g: GameTree, profile: Profile, k: int) -> dict[int, BehavioralStrategy]:
    """Mix each strategy with weight ``1/k`` toward uniform behavioral play."""
    return {i: mix_behavioral(as_behavioral(g, s), uniform_behavioral(g, i), Fraction(1, k))
            for i, s in profile.items()}


def measured_slack(g: GameTree, profile: Profile) -> Fraction:
    bprof = {i: as_behavioral(g, s) for i, s in profile.items()}
    worst = Fraction(0)
    for i in range(1, g.num_players + 1):
        worst = max([worst, *conditional_gains(g, bprof, i).values()])
    return worst


def default_certificate(g: GameTree, profile: Profile, ks: Sequence[int] = (2, 4, 8, 16, 32)
                        ) -> list[tuple[dict[int, BehavioralStrategy], Fraction]]:
    """Uniform trembles with ``δ_k`` the running max of measured slack over ``j ≥ k``."""
    trembled = [tremble_profile(g, profile, k) for k in ks]
    slacks = [measured_slack(g, t) for t in trembled]
    deltas = []
    tail = Fraction(0)
    for s in reversed(slacks):
        tail = max(tail, s)
        deltas.append(tail)
    deltas.reverse()
    return list(zip(trembled, deltas))
