"""Deterministic seeding and random tapes.

Everything random in the package flows from a 64-bit master seed through
``derive_seed``. Tapes are counter based, so a trial's bits depend only on its
seed, never on scheduling or on how many trials ran before it.
"""

from __future__ import annotations

import functools
import hashlib
import math
import os
from fractions import Fraction
from typing import Sequence, TypeVar

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

T = TypeVar("T")


def mix64(z: int) -> int:
    """SplitMix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@functools.lru_cache(maxsize=4096)
def _label_to_int(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "big")


def _part_to_int(part: object) -> int:
    if type(part) is int:
        return part & MASK64
    if isinstance(part, str):
        return _label_to_int(part)
    if isinstance(part, int):
        return int(part) & MASK64
    return _label_to_int(repr(part))


def derive_seed(*parts: object) -> int:
    """Hash a sequence of ints/strings into a 64-bit seed."""
    h = 0x243F6A8885A308D3
    for part in parts:
        z = ((h ^ _part_to_int(part)) + GOLDEN) & MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        h = z ^ (z >> 31)
    return h


def default_seed(seed: int | None = None) -> int:
    """Resolve an optional seed, falling back to ``COMPGAME_SEED`` then 0."""
    if seed is not None:
        return seed
    return int(os.environ.get("COMPGAME_SEED", "0"))


class TapeExhausted(Exception):
    """A replay tape was asked for more bits than it recorded."""


class RandomTape:
    """Lazily generated infinite bit string.

    Bits are read most-significant first from a splitmix64 stream. The tape
    keeps the consumed prefix so a stateful machine's randomness can be shown
    to later activations.
    """

    __slots__ = ("seed", "_ctr", "_buf", "_avail", "_cval", "_clen")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self._ctr = 0
        self._buf = 0
        self._avail = 0
        self._cval = 0
        self._clen = 0

    def _word(self) -> int:
        self._ctr += 1
        return mix64(self.seed + self._ctr * GOLDEN)

    def read(self, nbits: int) -> int:
        if nbits <= 0:
            return 0
        while self._avail < nbits:
            self._buf = (self._buf << 64) | self._word()
            self._avail += 64
        rest = self._avail - nbits
        out = self._buf >> rest
        self._buf &= (1 << rest) - 1
        self._avail = rest
        self._cval = (self._cval << nbits) | out
        self._clen += nbits
        return out

    def consumed(self) -> tuple[int, int]:
        """Bits read so far as ``(value, length)``."""
        return self._cval, self._clen

    def fork(self, label: object) -> "RandomTape":
        """An independent tape keyed by ``label``; does not touch this one."""
        return RandomTape(derive_seed(self.seed, "fork", label))

    def copy(self) -> "RandomTape":
        twin = RandomTape.__new__(RandomTape)
        for name in self.__slots__:
            setattr(twin, name, getattr(self, name))
        return twin


class ReplayTape:
    """Reads back a recorded prefix; raises once it runs out."""

    __slots__ = ("_value", "_length", "_pos")

    def __init__(self, value: int, length: int):
        self._value = value
        self._length = length
        self._pos = 0

    def read(self, nbits: int) -> int:
        if nbits <= 0:
            return 0
        end = self._pos + nbits
        if end > self._length:
            raise TapeExhausted(f"need {end} bits, have {self._length}")
        out = (self._value >> (self._length - end)) & ((1 << nbits) - 1)
        self._pos = end
        return out


def uniform_int(tape, m: int) -> int:
    """Uniform integer in ``[0, m)`` by rejection sampling."""
    if m <= 0:
        raise ValueError("m must be positive")
    if m == 1:
        return 0
    bits = (m - 1).bit_length()
    while True:
        x = tape.read(bits)
        if x < m:
            return x


class WeightedSampler:
    """Exact sampler for a finite distribution with rational weights.

    Draws ``u`` uniform below the common denominator and walks the integer
    cumulative sums, so the law is exact and the tape usage deterministic.
    """

    __slots__ = ("items", "cuts", "denom")

    def __init__(self, items: Sequence[tuple[T, Fraction]]):
        live = [(x, Fraction(w)) for x, w in items if w > 0]
        if not live:
            raise ValueError("distribution has no positive mass")
        if sum(w for _, w in live) != 1:
            raise ValueError("weights do not sum to one")
        self.denom = math.lcm(*(w.denominator for _, w in live))
        self.items = tuple(x for x, _ in live)
        cuts, acc = [], 0
        for _, w in live:
            acc += w.numerator * (self.denom // w.denominator)
            cuts.append(acc)
        self.cuts = tuple(cuts)

    def draw(self, tape) -> T:
        if len(self.items) == 1:
            return self.items[0]
        u = uniform_int(tape, self.denom)
        for x, cut in zip(self.items, self.cuts):
            if u < cut:
                return x
        raise AssertionError("unreachable")


def sample_weighted(tape, items: Sequence[tuple[T, Fraction]]) -> T:
    """Draw once from a finite distribution with exact rational weights."""
    return WeightedSampler(items).draw(tape)

