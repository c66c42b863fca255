"""Computational game families and bounded strategy machines."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Hashable, Iterator, NamedTuple, Sequence

from ..rng import uniform_int


class Bits(NamedTuple):
    """A bit string of fixed ``length``; ``value`` holds it MSB first."""

    value: int
    length: int

    @classmethod
    def of(cls, text: str) -> "Bits":
        return cls(int(text, 2) if text else 0, len(text))

    def __str__(self) -> str:
        return format(self.value, f"0{self.length}b") if self.length else ""

    def ok(self) -> bool:
        return self.length >= 0 and 0 <= self.value < (1 << self.length)

    def split(self, *widths: int) -> list[int]:
        """Cut into consecutive fields of the given widths (must add up)."""
        if sum(widths) != self.length:
            raise ValueError("widths do not cover the string")
        out, rest = [], self.length
        for w in widths:
            rest -= w
            out.append((self.value >> rest) & ((1 << w) - 1))
        return out


def concat(fields: Sequence[tuple[int, int]]) -> Bits:
    v, n = 0, 0
    for value, width in fields:
        v = (v << width) | value
        n += width
    return Bits(v, n)


def is_bits(a: Any, length: int | None = None) -> bool:
    if type(a) is not Bits or type(a.value) is not int:
        return False
    return (length is None or a.length == length) and a.length >= 0 and 0 <= a.value and not a.value >> a.length


class View:
    """What a machine sees when activated.

    ``history`` is the information component (the history as visible to the
    player). ``randomness`` is ``(value, length)`` of the tape prefix used in
    earlier activations, and is ``None`` for stateless machines.
    """

    __slots__ = ("player", "history", "randomness")

    def __init__(self, player: int, history: tuple, randomness: tuple[int, int] | None):
        self.player = player
        self.history = history
        self.randomness = randomness

    def __repr__(self) -> str:
        return f"View(player={self.player}, history={self.history!r}, randomness={self.randomness!r})"


class MachineStrategy(ABC):
    """A bounded, probabilistic strategy for one player of a family.

    ``act`` gets fresh randomness from ``tape`` and permutation access from a
    one-way, budgeted ``oracle`` handle. The runner charges one step per
    activation plus one per oracle query.
    """

    player: int = 1
    stateful: bool = True
    name: str = "machine"

    @abstractmethod
    def act(self, n: int, view: View, tape, oracle) -> Any:
        ...

    def query_budget(self, n: int) -> int:
        return 4 * n + 16

    def step_budget(self, n: int) -> int:
        return self.query_budget(n) + 16

    def abstract_infoset(self, n: int, history: tuple, randomness, oracle, tape=None) -> str | None:
        """G information set this machine believes it is at; lifts override."""
        return None

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name} p{self.player}>"


class ComputationalGameFamily(ABC):
    """A uniform sequence of perfect-information games ``G_n`` over bit strings."""

    name = "family"
    num_players = 2

    @abstractmethod
    def action_length(self, n: int) -> int:
        ...

    @abstractmethod
    def is_history(self, n: int, h: tuple) -> bool:
        ...

    @abstractmethod
    def is_terminal(self, n: int, h: tuple) -> bool:
        ...

    @abstractmethod
    def player(self, n: int, h: tuple) -> int:
        ...

    @abstractmethod
    def utility(self, n: int, h: tuple, perm) -> tuple[Fraction, ...]:
        ...

    @abstractmethod
    def legal_actions(self, n: int, h: tuple) -> Iterator[Bits]:
        ...

    @abstractmethod
    def sample_action(self, n: int, h: tuple, tape) -> Bits:
        ...

    def forfeit_utility(self, n: int, h: tuple, offender: int) -> tuple[Fraction, ...]:
        raise NotImplementedError

    def is_legal(self, n: int, h: tuple, a: Any) -> bool:
        """Whether ``h + (a,)`` is a history, assuming ``h`` already is one."""
        return is_bits(a) and a.length <= self.action_length(n) and self.is_history(n, h + (a,))

    def observe(self, n: int, h: tuple, player: int) -> Hashable:
        """Information component of ``player``'s view; perfect information by default."""
        return h

    def resample_hidden(self, n: int, h: tuple, tape) -> tuple | None:
        """Another history in the mover's information set, or ``None`` if singleton."""
        return None


def uniform_bits(tape, length: int) -> Bits:
    return Bits(tape.read(length), length)


def uniform_below(tape, m: int, length: int) -> Bits:
    return Bits(uniform_int(tape, m), length)


@dataclass(frozen=True)
class Forfeit:
    """Outcome marker for a run that ended because a machine misbehaved."""

    player: int
    reason: str

    def key(self) -> tuple:
        return ("FORFEIT", self.player)


FORFEIT = "FORFEIT"
