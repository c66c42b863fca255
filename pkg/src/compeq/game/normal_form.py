"""Normal-form games, sequential embedding and exact equilibrium enumeration."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .strategies import BehavioralStrategy
from .tree import Decision, GameTree, Node, Terminal

ActionProfile = tuple[str, ...]
# per player: action -> probability
MixedProfile = tuple[Mapping[str, Fraction], ...]


@dataclass(frozen=True, eq=False)
class NormalFormGame:
    actions: tuple[tuple[str, ...], ...]
    payoffs: Mapping[ActionProfile, tuple[Fraction, ...]]
    name: str = "nf"

    def __post_init__(self):
        for cell in itertools.product(*self.actions):
            u = self.payoffs.get(cell)
            if u is None or len(u) != self.num_players:
                raise ValueError(f"payoff missing for {cell}")
        for acts in self.actions:
            if not acts or len(set(acts)) != len(acts):
                raise ValueError("each player needs distinct actions")

    @classmethod
    def from_table(cls, actions: Sequence[Sequence[str]], table: Mapping[ActionProfile, Sequence], name: str = "nf"):
        return cls(tuple(tuple(a) for a in actions),
                   {tuple(k): tuple(Fraction(x) for x in v) for k, v in table.items()}, name)

    @property
    def num_players(self) -> int:
        return len(self.actions)

    def cells(self):
        return itertools.product(*self.actions)

    def expected_payoff(self, profile: MixedProfile) -> tuple[Fraction, ...]:
        total = [Fraction(0)] * self.num_players
        for cell in self.cells():
            p = Fraction(1)
            for i, a in enumerate(cell):
                p *= Fraction(profile[i].get(a, 0))
            if p:
                for j, u in enumerate(self.payoffs[cell]):
                    total[j] += p * u
        return tuple(total)

    def deviation_gain(self, profile: MixedProfile) -> Fraction:
        """Largest gain any player gets from a pure deviation."""
        base = self.expected_payoff(profile)
        worst = Fraction(0)
        for i, acts in enumerate(self.actions):
            for a in acts:
                dev = list(profile)
                dev[i] = {a: Fraction(1)}
                worst = max(worst, self.expected_payoff(tuple(dev))[i] - base[i])
        return worst

    def is_nash(self, profile: MixedProfile) -> bool:
        return self.deviation_gain(profile) == 0


def move_order(num_players: int) -> list[int]:
    """Player 2 first, then 1, then the rest (1 alone for one-player games)."""
    if num_players == 1:
        return [1]
    return [2, 1, *range(3, num_players + 1)]


def action_label(name: str, infoset: str) -> str:
    return f"{name}@{infoset}"


def action_name(label: str) -> str:
    return label.split("@", 1)[0]


def nf_stage(nf: NormalFormGame, infoset_of: Callable[[int], str],
             leaf_of: Callable[[ActionProfile], Node] | None = None) -> Node:
    """Subtree where players move in :func:`move_order`, each blind to the others.

    ``infoset_of(p)`` names player ``p``'s single information set in this
    stage; every action label is qualified by it to keep action sets disjoint.
    """
    order = move_order(nf.num_players)

    def build(depth: int, chosen: dict[int, str]) -> Node:
        if depth == len(order):
            cell = tuple(chosen[i] for i in range(1, nf.num_players + 1))
            if leaf_of is not None:
                return leaf_of(cell)
            return Terminal(nf.payoffs[cell])
        p = order[depth]
        label = infoset_of(p)
        kids = tuple((action_label(a, label), build(depth + 1, {**chosen, p: a}))
                     for a in nf.actions[p - 1])
        return Decision(p, label, kids)

    return build(0, {})


def embed_normal_form(nf: NormalFormGame) -> GameTree:
    root = nf_stage(nf, lambda p: f"p{p}")
    return GameTree.from_root(root, nf.num_players, name=nf.name)


def embedded_profile(nf: NormalFormGame, profile: MixedProfile, infoset_of: Callable[[int], str] = lambda p: f"p{p}"
                     ) -> dict[int, BehavioralStrategy]:
    out = {}
    for i in range(1, nf.num_players + 1):
        label = infoset_of(i)
        dist = {action_label(a, label): Fraction(profile[i - 1].get(a, 0)) for a in nf.actions[i - 1]}
        out[i] = BehavioralStrategy(i, {label: dist})
    return out


def _solve(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    """Gauss-Jordan over the rationals; None if singular."""
    n = len(matrix)
    a = [row[:] + [b] for row, b in zip(matrix, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def _indifferent_mix(nf: NormalFormGame, mover: int, support: tuple[str, ...],
                     other: int, other_support: tuple[str, ...]) -> dict[str, Fraction] | None:
    """Mixture over ``support`` (mover) that makes ``other`` indifferent on ``other_support``."""
    k = len(support)
    rows, rhs = [], []
    base = other_support[0]
    for b in other_support[1:]:
        row = []
        for a in support:
            cells = {}
            for name in (b, base):
                cell = [None, None]
                cell[mover] = a
                cell[other] = name
                cells[name] = nf.payoffs[tuple(cell)][other]
            row.append(cells[b] - cells[base])
        rows.append(row)
        rhs.append(Fraction(0))
    rows.append([Fraction(1)] * k)
    rhs.append(Fraction(1))
    if len(rows) != k:
        return None
    x = _solve(rows, rhs)
    if x is None or any(v < 0 for v in x):
        return None
    return dict(zip(support, x))


def support_enumeration(nf: NormalFormGame) -> list[MixedProfile]:
    """All Nash equilibria with equal-size supports of a two-player game.

    Complete for nondegenerate games. Pure equilibria of any game are always
    included. Results come out in a deterministic order, with duplicates
    removed.
    """
    if nf.num_players != 2:
        raise ValueError("support enumeration needs two players")
    found: list[MixedProfile] = []
    seen = set()
    a1, a2 = nf.actions
    for size in range(1, min(len(a1), len(a2)) + 1):
        for s1 in itertools.combinations(a1, size):
            for s2 in itertools.combinations(a2, size):
                if size == 1:
                    x = {s1[0]: Fraction(1)}
                    y = {s2[0]: Fraction(1)}
                else:
                    x = _indifferent_mix(nf, 0, s1, 1, s2)
                    y = _indifferent_mix(nf, 1, s2, 0, s1)
                    if x is None or y is None:
                        continue
                prof = (x, y)
                if not nf.is_nash(prof):
                    continue
                key = tuple(tuple(sorted((a, p) for a, p in d.items() if p)) for d in prof)
                if key not in seen:
                    seen.add(key)
                    found.append(tuple({a: p for a, p in d.items() if p} for d in prof))
    return found


def pure_nash(nf: NormalFormGame) -> list[MixedProfile]:
    out = []
    for cell in nf.cells():
        prof = tuple({a: Fraction(1)} for a in cell)
        if nf.is_nash(prof):
            out.append(prof)
    return out
