"""Commitments over a lazily sampled ideal permutation.

The permutation stands in for a one-way permutation. Resource bounds are
modelled as query budgets: a caller holds a :class:`PermutationHandle` that
counts forward/inverse/reveal calls and aborts before exceeding its budget.

Players only get one-way handles (``forward`` and ``reveal``). Raw inversion
is reserved for trusted infrastructure such as history maps and verifiers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .rng import GOLDEN, MASK64, derive_seed, mix64

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


class QueryBudgetExceeded(Exception):
    """Raised instead of issuing a query beyond the declared budget."""


class OracleAccessError(Exception):
    """A player handle tried to use the raw inverse."""


def _mix64_np(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


class _Width:
    __slots__ = ("fwd", "inv", "ctr", "base")

    def __init__(self, base: int):
        self.fwd: dict[int, int] = {}
        self.inv: dict[int, int] = {}
        self.ctr = 0
        self.base = base


class IdealPermutation:
    """A uniformly random permutation of ``{0,1}^k`` for every width ``k``.

    Points are sampled on demand: an unseen input (or output) receives a fresh
    value that is not yet used on the other side, so the tables stay a partial
    bijection that extends to a uniform permutation. Draws come from a counter
    keyed by ``(seed, k)``. The same seed and the same query order therefore
    give the same permutation.
    """

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self._tables: dict[int, _Width] = {}

    def _table(self, k: int) -> _Width:
        t = self._tables.get(k)
        if t is None:
            if k < 1:
                raise ValueError("width must be positive")
            t = self._tables[k] = _Width(derive_seed(self.seed, "width", k))
        return t

    def _draw(self, t: _Width, k: int) -> int:
        t.ctr += 1
        if k <= 64:
            return mix64(t.base + t.ctr * GOLDEN) >> (64 - k)
        words = -(-k // 64)
        v = 0
        for j in range(words):
            v = (v << 64) | mix64(t.base + (t.ctr * words + j) * GOLDEN + 1)
        return v >> (64 * words - k)

    @staticmethod
    def _check(k: int, x: int) -> None:
        if not 0 <= x < (1 << k):
            raise ValueError(f"{x} is not a {k}-bit string")

    def forward(self, k: int, x: int) -> int:
        self._check(k, x)
        t = self._table(k)
        y = t.fwd.get(x)
        if y is None:
            y = self._draw(t, k)
            while y in t.inv:
                y = self._draw(t, k)
            t.fwd[x] = y
            t.inv[y] = x
        return y

    def inverse(self, k: int, y: int) -> int:
        self._check(k, y)
        t = self._table(k)
        x = t.inv.get(y)
        if x is None:
            x = self._draw(t, k)
            while x in t.fwd:
                x = self._draw(t, k)
            t.inv[y] = x
            t.fwd[x] = y
        return x

    def forward_many(self, k: int, xs: np.ndarray) -> np.ndarray:
        """Batch ``forward``; equal to calling it on each entry in order."""
        xs = np.asarray(xs, dtype=np.uint64)
        t = self._table(k)
        if k > 64 or xs.size == 0:
            return np.array([self.forward(k, int(x)) for x in xs], dtype=object)
        if t.fwd:
            known_keys = np.fromiter(t.fwd.keys(), dtype=np.uint64, count=len(t.fwd))
            known = np.isin(xs, known_keys)
        else:
            known = np.zeros(xs.size, dtype=bool)
        fresh = xs[~known]
        m = fresh.size
        if m and np.unique(fresh).size == m:
            ctrs = np.arange(t.ctr + 1, t.ctr + 1 + m, dtype=np.uint64)
            with np.errstate(over="ignore"):
                ys = _mix64_np(np.uint64(t.base) + ctrs * np.uint64(GOLDEN))
            ys >>= np.uint64(64 - k)
            clash = np.unique(ys).size != m
            if not clash and t.inv:
                used = np.fromiter(t.inv.keys(), dtype=np.uint64, count=len(t.inv))
                clash = bool(np.isin(ys, used).any())
            if not clash:
                t.ctr += m
                fl, yl = fresh.tolist(), ys.tolist()
                t.fwd.update(zip(fl, yl))
                t.inv.update(zip(yl, fl))
                out = np.empty(xs.size, dtype=np.uint64)
                out[~known] = ys
                if known.any():
                    out[known] = [t.fwd[x] for x in xs[known].tolist()]
                return out
        return np.array([self.forward(k, x) for x in xs.tolist()], dtype=np.uint64)

    def reveal(self, k: int, c: int, s: int) -> int | None:
        """Open commitment ``c`` with key ``s``: the bit, or ``None`` on failure."""
        if k < 2:
            raise ValueError("commitment width must be at least 2")
        self._check(k - 1, s)
        pre = self.inverse(k, c)
        if pre >> 1 != s:
            return None
        return pre & 1

    def opening(self, k: int, c: int) -> tuple[int, int]:
        """The unique ``(key, bit)`` that opens ``c`` (perfect binding)."""
        pre = self.inverse(k, c)
        return pre >> 1, pre & 1

    def known_points(self, k: int) -> int:
        return len(self._table(k).fwd)


class PermutationHandle:
    """Budgeted access to an :class:`IdealPermutation`.

    ``reveal`` costs one query. Raw ``inverse`` is only available on
    privileged handles, because a single inverse query opens any commitment.
    """

    __slots__ = ("perm", "budget", "queries", "privileged")

    def __init__(self, perm: IdealPermutation, budget: int | None = None, *, privileged: bool = False):
        self.perm = perm
        self.budget = budget
        self.queries = 0
        self.privileged = privileged

    def remaining(self) -> int | None:
        return None if self.budget is None else self.budget - self.queries

    def _charge(self, m: int) -> None:
        if self.budget is not None and self.queries + m > self.budget:
            raise QueryBudgetExceeded(
                f"query {self.queries + m} exceeds budget {self.budget}")
        self.queries += m

    def forward(self, k: int, x: int) -> int:
        self._charge(1)
        return self.perm.forward(k, x)

    def forward_many(self, k: int, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.uint64)
        self._charge(int(xs.size))
        return self.perm.forward_many(k, xs)

    def inverse(self, k: int, y: int) -> int:
        if not self.privileged:
            raise OracleAccessError("players may not invert the permutation")
        self._charge(1)
        return self.perm.inverse(k, y)

    def reveal(self, k: int, c: int, s: int) -> int | None:
        self._charge(1)
        return self.perm.reveal(k, c, s)

    def reveal_scan(self, k: int, c: int, candidates: range) -> tuple[int, int] | None:
        """Try keys in order; return ``(key, bit)`` for the first that opens ``c``.

        Charged exactly as a loop of ``reveal`` calls would be. Stops when
        the budget would be exceeded and raises just as that loop would.
        """
        key, bit = self.perm.opening(k, c)
        if key in candidates:
            examined = candidates.index(key) + 1
        else:
            examined = len(candidates)
        rem = self.remaining()
        if rem is not None and examined > rem:
            self.queries = self.budget
            raise QueryBudgetExceeded(f"scan needs {examined} queries, {rem} left")
        self.queries += examined
        return (key, bit) if key in candidates else None


@dataclass(frozen=True)
class Commitment:
    width: int
    string: int
    key: int

    def hex(self) -> str:
        return format(self.string, f"0{-(-self.width // 4)}x")

    def key_hex(self) -> str:
        return format(self.key, f"0{max(1, -(-(self.width - 1) // 4))}x")


def commit(k: int, b: int, tape, oracle) -> Commitment:
    """Commit to bit ``b``: key is the next ``k-1`` tape bits, string ``Π_k(key‖b)``."""
    if k < 2:
        raise ValueError("commitment width must be at least 2")
    if b not in (0, 1):
        raise ValueError("b must be a bit")
    key = tape.read(k - 1)
    return Commitment(k, oracle.forward(k, (key << 1) | b), key)


def reveal(k: int, c: int, s: int, oracle) -> int | None:
    """Return the committed bit if ``s`` is the key of ``c``, else ``None``."""
    if not 0 <= c < (1 << k):
        raise ValueError(f"commitment must have {k} bits")
    return oracle.reveal(k, c, s)


def commit_string(k: int, bits: Sequence[int], tape, oracle) -> list[Commitment]:
    """Commit to each bit of ``bits`` independently, in order."""
    if not bits:
        raise ValueError("need at least one bit")
    return [commit(k, b, tape, oracle) for b in bits]


def reveal_string(k: int, strings: Iterable[int], keys: Iterable[int], oracle) -> list[int | None]:
    return [reveal(k, c, s, oracle) for c, s in zip(strings, keys)]


def hiding_advantage_bound(k: int, q: int) -> Fraction:
    """Best advantage of a ``q``-query distinguisher between commitments to 0 and 1.

    Each query rules out at most one of the ``2^(k-1)`` keys, so the bound is
    ``q / 2^(k-1)``, capped at 1.
    """
    space = 1 << (k - 1)
    return Fraction(min(max(q, 0), space), space)
