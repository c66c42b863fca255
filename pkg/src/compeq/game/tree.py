"""Finite extensive-form games with imperfect information.

Histories are tuples of action labels. Every information set has a string
label, and action labels are globally unique per information set (distinct
sets use disjoint labels), which lets a history's last action identify the
set it was played from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

History = tuple[str, ...]


class InvalidGameError(ValueError):
    """Operation requires a structurally valid game."""


@dataclass(frozen=True)
class Terminal:
    utilities: tuple[Fraction, ...]


@dataclass(frozen=True)
class Decision:
    player: int
    infoset: str
    children: tuple[tuple[str, "Node"], ...]


Node = Union[Terminal, Decision]


def leaf(*utilities) -> Terminal:
    return Terminal(tuple(Fraction(u) for u in utilities))


def node(player: int, infoset: str, children: Mapping[str, Node] | Sequence[tuple[str, Node]]) -> Decision:
    items = tuple(children.items()) if isinstance(children, Mapping) else tuple(children)
    return Decision(player, infoset, items)


@dataclass(frozen=True, eq=False)
class GameTree:
    """Raw game data. Use :func:`validate_game` before trusting it.

    ``histories`` is in depth-first order, so action order at each node is
    the order children were declared.
    """

    num_players: int
    histories: tuple[History, ...]
    player_fn: Mapping[History, int]
    utilities: Mapping[History, tuple[Fraction, ...]]
    infosets: Mapping[History, str]
    name: str = field(default="game")

    @classmethod
    def from_root(cls, root: Node, num_players: int | None = None, name: str = "game") -> "GameTree":
        histories: list[History] = []
        player_fn: dict[History, int] = {}
        utilities: dict[History, tuple[Fraction, ...]] = {}
        infosets: dict[History, str] = {}
        stack: list[tuple[History, Node]] = [((), root)]
        while stack:
            h, nd = stack.pop()
            histories.append(h)
            if isinstance(nd, Terminal):
                utilities[h] = nd.utilities
            else:
                player_fn[h] = nd.player
                infosets[h] = nd.infoset
                for a, child in reversed(nd.children):
                    stack.append((h + (a,), child))
        if num_players is None:
            sizes = {len(u) for u in utilities.values()}
            num_players = max(sizes | set(player_fn.values()) | {1})
        return cls(num_players, tuple(histories), player_fn, utilities, infosets, name)

    @cached_property
    def history_set(self) -> frozenset[History]:
        return frozenset(self.histories)

    @cached_property
    def children(self) -> dict[History, list[str]]:
        out: dict[History, list[str]] = {h: [] for h in self.histories}
        for h in self.histories:
            if h and h[:-1] in out:
                out[h[:-1]].append(h[-1])
        return out

    @cached_property
    def terminals(self) -> list[History]:
        return [h for h in self.histories if not self.children.get(h)]

    def is_terminal(self, h: History) -> bool:
        return not self.children.get(h)

    def actions(self, h: History) -> list[str]:
        return self.children[h]

    @cached_property
    def infoset_members(self) -> dict[str, list[History]]:
        out: dict[str, list[History]] = {}
        for h in self.histories:
            label = self.infosets.get(h)
            if label is not None:
                out.setdefault(label, []).append(h)
        return out

    @cached_property
    def infoset_player(self) -> dict[str, int]:
        return {label: self.player_fn[hs[0]] for label, hs in self.infoset_members.items()}

    def infoset_actions(self, label: str) -> list[str]:
        return self.children[self.infoset_members[label][0]]

    @cached_property
    def action_infoset(self) -> dict[str, str]:
        """Action label -> the information set it belongs to."""
        out = {}
        for label, hs in self.infoset_members.items():
            for a in self.children[hs[0]]:
                out[a] = label
        return out

    def player_infosets(self, player: int) -> list[str]:
        return [I for I, p in self.infoset_player.items() if p == player]

    @cached_property
    def _own_moves(self) -> dict[History, tuple[tuple[int, str, str], ...]]:
        """For each history, the sequence of (player, infoset, action) moves."""
        out: dict[History, tuple] = {(): ()}
        for h in self.histories:
            if h:
                parent = h[:-1]
                out[h] = out[parent] + ((self.player_fn[parent], self.infosets[parent], h[-1]),)
        return out

    def moves(self, h: History) -> tuple[tuple[int, str, str], ...]:
        return self._own_moves[h]

    def own_moves(self, h: History, player: int) -> tuple[tuple[str, str], ...]:
        return tuple((I, a) for p, I, a in self._own_moves[h] if p == player)

    def last_action(self, h: History) -> str:
        return h[-1]

    def utility(self, h: History, player: int) -> Fraction:
        return self.utilities[h][player - 1]


@dataclass(frozen=True)
class Violation:
    rule: str
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "; ".join(f"{v.rule}: {v.detail}" for v in self.violations)


def validate_game(g: GameTree) -> ValidationReport:
    """List every structural problem with ``g``; empty iff valid."""
    bad: list[Violation] = []
    hs = g.history_set
    if len(hs) != len(g.histories):
        bad.append(Violation("distinct histories", "duplicate history listed"))
    if () not in hs:
        bad.append(Violation("prefix closure", "empty history missing"))
    for h in g.histories:
        if h and h[:-1] not in hs:
            bad.append(Violation("prefix closure", f"prefix of {h!r} missing"))
    for h in g.histories:
        acts = g.children.get(h, [])
        if acts:
            if len(acts) < 2:
                bad.append(Violation("|A(h)|>=2", f"{h!r} has a single action"))
            if len(set(acts)) != len(acts):
                bad.append(Violation("distinct actions", f"{h!r} repeats an action"))
            p = g.player_fn.get(h)
            if p is None or not 1 <= p <= g.num_players:
                bad.append(Violation("player function", f"{h!r} has mover {p!r}"))
            if h not in g.infosets:
                bad.append(Violation("partition", f"{h!r} is in no information set"))
            if h in g.utilities:
                bad.append(Violation("utilities", f"nonterminal {h!r} has utilities"))
        else:
            u = g.utilities.get(h)
            if u is None or len(u) != g.num_players:
                bad.append(Violation("utilities", f"terminal {h!r} lacks {g.num_players} utilities"))
            if h in g.infosets or h in g.player_fn:
                bad.append(Violation("partition", f"terminal {h!r} assigned a mover"))
    owner: dict[str, str] = {}
    for label, members in g.infoset_members.items():
        if any(g.is_terminal(h) for h in members):
            continue
        players = {g.player_fn.get(h) for h in members}
        if len(players) != 1:
            bad.append(Violation("partition", f"{label} mixes players {sorted(map(str, players))}"))
        action_sets = {tuple(sorted(g.children[h])) for h in members}
        if len(action_sets) != 1:
            bad.append(Violation("information set actions", f"{label} has differing action sets"))
        for a in g.children[members[0]]:
            other = owner.setdefault(a, label)
            if other != label:
                bad.append(Violation("disjoint actions", f"{a!r} used by {other} and {label}"))
    return ValidationReport(tuple(bad))


def require_valid(g: GameTree) -> None:
    report = validate_game(g)
    if not report.ok:
        raise InvalidGameError(str(report))


def player_has_perfect_recall(g: GameTree, player: int) -> bool:
    for label in g.player_infosets(player):
        members = g.infoset_members[label]
        first = g.own_moves(members[0], player)
        if any(g.own_moves(h, player) != first for h in members[1:]):
            return False
    return True


def has_perfect_recall(g: GameTree) -> bool:
    """True iff every player's record of own moves is constant on each cell."""
    require_valid(g)
    return all(player_has_perfect_recall(g, i) for i in range(1, g.num_players + 1))


def prefixes(h: History) -> Iterable[History]:
    for j in range(len(h) + 1):
        yield h[:j]
