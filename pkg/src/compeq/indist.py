"""Empirical indistinguishability: distinguishers, advantages, view ensembles.

An advantage is estimated from two independent Monte-Carlo passes, one per
ensemble. Each sample carries the ideal permutation of its own trial, so a
distinguisher's queries are answered consistently with the sample it
inspects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .compgame.core import ComputationalGameFamily, MachineStrategy, View
from .compgame.representation import Representation
from .compgame.runner import run_game, trial_permutation
from .crypto import IdealPermutation, PermutationHandle, QueryBudgetExceeded, commit, hiding_advantage_bound
from .game.tree import GameTree, History
from .rng import RandomTape, derive_seed
from .stats import hoeffding_radius, l1_distance, ladder_thresholds

__all__ = [
    "SUITE_VERSION", "Sample", "Distinguisher", "standard_suite", "estimate_advantage", "estimate_suite",
    "CommitmentSampler", "ViewSampler", "ReachFloorError", "sample_view_ensemble",
    "check_consistent_partition", "canonical_partition", "l1_distance",
]

SUITE_VERSION = 1


class ReachFloorError(RuntimeError):
    """The target is reached too rarely to sample conditional views."""


@dataclass
class Sample:
    """One draw from an ensemble: visible commitments plus the trial's permutation."""

    perm: IdealPermutation
    strings: tuple[tuple[int, int], ...]
    view: View | None = None
    image: History | None = None


class Distinguisher:
    name = "distinguisher"

    def budget(self, n: int) -> int:
        return 0

    def decide(self, n: int, sample: Sample, tape: RandomTape, oracle: PermutationHandle) -> int:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{self.name}>"


class Constant(Distinguisher):
    def __init__(self, bit: int):
        self.bit = bit
        self.name = f"constant-{bit}"

    def decide(self, n, sample, tape, oracle):
        return self.bit


class FirstBit(Distinguisher):
    name = "first-bit"

    def decide(self, n, sample, tape, oracle):
        if not sample.strings:
            return 0
        k, c = sample.strings[0]
        return (c >> (k - 1)) & 1


class FrequencyThreshold(Distinguisher):
    """Outputs 1 when at least half the bits of the first commitment are set."""

    name = "frequency-threshold"

    def decide(self, n, sample, tape, oracle):
        if not sample.strings:
            return 0
        k, c = sample.strings[0]
        return int(2 * bin(c).count("1") >= k)


class ReplayKnownKey(Distinguisher):
    """Re-commits to 0 under a guessed key and looks for a match.

    This catches players that commit with a fixed, publicly known key.
    """

    def __init__(self, key: int = 0):
        self.key = key
        self.name = "replay-known-key"

    def budget(self, n):
        return 8

    def decide(self, n, sample, tape, oracle):
        for k, c in sample.strings[:4]:
            if oracle.forward(k, (self.key % (1 << (k - 1))) << 1) == c:
                return 1
        return 0


class BoundedInverter(Distinguisher):
    """Searches keys ``0..q-1`` for a preimage ``key‖0`` of the first commitment.

    Outputs 0 when it finds one and 1 otherwise. Its advantage is exactly
    ``min(q, 2^(k-1)) / 2^(k-1)``, the hiding bound.
    """

    def __init__(self, q: Callable[[int], int] | int):
        self.q = q if callable(q) else (lambda n, q=q: q)
        self.name = "bounded-inverter"

    def budget(self, n):
        return int(self.q(n))

    def decide(self, n, sample, tape, oracle):
        if not sample.strings:
            return 0
        k, c = sample.strings[0]
        m = min(self.budget(n), 1 << (k - 1))
        if k <= 64:
            keys = np.arange(m, dtype=np.uint64)
            ys = oracle.forward_many(k, keys << np.uint64(1))
            return 0 if bool((ys == np.uint64(c)).any()) else 1
        for key in range(m):
            if oracle.forward(k, key << 1) == c:
                return 0
        return 1


def standard_suite(q: Callable[[int], int] | int | None = None) -> list[Distinguisher]:
    """The versioned suite; ``q`` is the inverter's budget (default ``n²``)."""
    return [Constant(0), Constant(1), FirstBit(), ReplayKnownKey(0),
            BoundedInverter(q if q is not None else (lambda n: n * n)), FrequencyThreshold()]


def _decide(d: Distinguisher, n: int, sample: Sample, seed: int) -> int:
    handle = PermutationHandle(sample.perm, d.budget(n))
    tape = RandomTape(derive_seed(seed, "distinguisher", d.name))
    try:
        return 1 if d.decide(n, sample, tape, handle) else 0
    except QueryBudgetExceeded:
        return 0


@dataclass(frozen=True)
class AdvantageRow:
    distinguisher: str
    n: int
    trials: int
    p_x: float
    p_y: float
    radius: float
    bound: float | None = None

    @property
    def advantage(self) -> float:
        return abs(self.p_x - self.p_y)


def estimate_suite(suite: Sequence[Distinguisher], sampler_x, sampler_y, n: int, trials: int, seed: int
                   ) -> list[AdvantageRow]:
    """Advantage of every suite member; samples are shared across members."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    hits = {0: [0] * len(suite), 1: [0] * len(suite)}
    for side, sampler in ((0, sampler_x), (1, sampler_y)):
        for t in range(trials):
            s = derive_seed(seed, "advantage", side, n, t)
            sample = sampler(n, s)
            for j, d in enumerate(suite):
                hits[side][j] += _decide(d, n, sample, s)
    r = hoeffding_radius(trials)
    return [AdvantageRow(d.name, n, trials, hits[0][j] / trials, hits[1][j] / trials, r)
            for j, d in enumerate(suite)]


def estimate_advantage(d: Distinguisher, sampler_x, sampler_y, n: int, trials: int, seed: int) -> AdvantageRow:
    return estimate_suite([d], sampler_x, sampler_y, n, trials, seed)[0]


class CommitmentSampler:
    """Fresh commitments to a fixed bit under a fresh permutation."""

    def __init__(self, bit: int, width: int | None = None):
        self.bit = bit
        self.width = width

    def __call__(self, n: int, seed: int) -> Sample:
        k = self.width or n
        perm = trial_permutation(seed)
        com = commit(k, self.bit, RandomTape(derive_seed(seed, "committer")), perm)
        return Sample(perm, ((k, com.string),))


class ViewSampler:
    """Views of the mover at histories whose image lies in ``target``.

    Runs the profile from fresh seeds and stops at the first history mapped
    into ``target``. Runs that miss are rejected.
    """

    def __init__(self, rep: Representation, machines: Mapping[int, MachineStrategy],
                 target: Iterable[History], max_rejects: int = 10_000):
        self.rep = rep
        self.family = rep.family
        self.machines = dict(machines)
        self.target = frozenset(target)
        self.max_rejects = max_rejects
        self.attempts = 0
        self.accepted = 0
        depths = {len(h) for h in self.target}
        self._depths = depths

    def _stop(self, n):
        def stop(h, perm):
            return len(h) in self._depths and self.rep.history_map(n, h, perm) in self.target
        return stop

    def __call__(self, n: int, seed: int) -> Sample:
        stop = self._stop(n)
        for j in range(self.max_rejects + 1):
            self.attempts += 1
            res = run_game(self.family, n, self.machines, derive_seed(seed, "view", j), record=False, stop=stop)
            if res.stopped:
                self.accepted += 1
                strings = self.family.commitments_in(n, res.history)
                return Sample(res.perm, tuple(strings), res.stop_view,
                              self.rep.history_map(n, res.history, res.perm))
        raise ReachFloorError(f"target missed {self.max_rejects + 1} times in a row")

    @property
    def reach_estimate(self) -> float:
        return self.accepted / self.attempts if self.attempts else 0.0


def sample_view_ensemble(rep: Representation, family: ComputationalGameFamily, machines: Mapping[int, MachineStrategy],
                         target: History | Iterable[History], n: int, max_rejects: int, seed: int) -> Sample:
    if isinstance(target, tuple) and all(isinstance(a, str) for a in target):
        target = [target]
    target = list(target)
    if not target:
        raise ValueError("target must be nonempty")
    if family is not rep.family:
        raise ValueError("family does not belong to this representation")
    return ViewSampler(rep, machines, target, max_rejects)(n, seed)


def canonical_partition(game: GameTree) -> dict[int, list[tuple[str, frozenset[History]]]]:
    """Each player's information sets as named cells."""
    out: dict[int, list] = {}
    for label, members in game.infoset_members.items():
        out.setdefault(game.infoset_player[label], []).append((label, frozenset(members)))
    return out


def singleton_partition(game: GameTree) -> dict[int, list[tuple[str, frozenset[History]]]]:
    out: dict[int, list] = {}
    for h, p in game.player_fn.items():
        out.setdefault(p, []).append(("/".join(h) or "root", frozenset([h])))
    return out


def _reach_fraction(rep: Representation, machines, target: frozenset, n: int, runs: int, seed: int) -> float:
    depths = {len(h) for h in target}
    hits = 0
    for t in range(runs):
        res = run_game(rep.family, n, machines, derive_seed(seed, "reach", t), record=False)
        if res.forfeit is not None:
            continue
        if any(rep.history_map(n, res.history[:d], res.perm) in target
               for d in depths if d <= len(res.history)):
            hits += 1
    return hits / runs


@dataclass(frozen=True)
class ConsistencyRow:
    experiment: str
    n: int
    cell: str
    distinguisher: str
    trials: int
    advantage: float
    radius: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.advantage <= self.bound


@dataclass
class ConsistencyReport:
    rows: list[ConsistencyRow] = field(default_factory=list)
    skipped: list[tuple[str, int, str]] = field(default_factory=list)
    details: dict = field(default_factory=dict)
    suite_version: int = SUITE_VERSION
    footer: str = ("Passing the suite is evidence, not a certificate: consistency is only "
                   "tested against the listed distinguishers.")

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def check_consistent_partition(rep: Representation, machines: Mapping[int, MachineStrategy],
                               partition: Mapping[int, Sequence[tuple[str, frozenset[History]]]] | None,
                               suite: Sequence[Distinguisher], n_list: Sequence[int], trials: int,
                               decay_tol: float, *, seed: int = 0, floor: float | None = None,
                               experiment: str = "consistency", pilot: int | None = None) -> ConsistencyReport:
    """Max-over-suite advantage between views at ``h`` and at the rest of its cell.

    A cell passes when the advantage at the largest ``n`` is at most
    ``decay_tol + 3·radius`` and does not grow along ``n_list`` beyond
    sampling noise. Histories reached less often than ``floor`` are skipped.
    """
    if list(n_list) != sorted(n_list):
        raise ValueError("n_list must be ascending")
    partition = partition if partition is not None else canonical_partition(rep.game)
    floor = 10 / trials if floor is None else floor
    runs = pilot or min(trials, 2000)
    report = ConsistencyReport()
    for player in sorted(partition):
        for label, cell in partition[player]:
            if len(cell) < 2:
                continue
            for h in sorted(cell):
                rest = cell - {h}
                name = f"p{player}:{label}|{'/'.join(h)}"
                series = []
                for n in n_list:
                    rs = derive_seed(seed, experiment, name, n)
                    xi_h = _reach_fraction(rep, machines, frozenset([h]), n, runs, rs)
                    xi_rest = _reach_fraction(rep, machines, rest, n, runs, derive_seed(rs, "rest"))
                    if min(xi_h, xi_rest) < floor:
                        report.skipped.append((name, n, f"reach {min(xi_h, xi_rest):.2g} below floor"))
                        continue
                    rows = estimate_suite(suite, ViewSampler(rep, machines, [h]), ViewSampler(rep, machines, rest),
                                          n, trials, rs)
                    best = max(rows, key=lambda r: r.advantage)
                    report.details[(name, n)] = rows
                    series.append((n, best))
                if not series:
                    continue
                values = [b.advantage for _, b in series]
                radii = [b.radius for _, b in series]
                for (n, best), bound in zip(series, ladder_thresholds(values, radii, decay_tol)):
                    report.rows.append(ConsistencyRow(experiment, n, name, f"max:{best.distinguisher}",
                                                      trials, best.advantage, best.radius, bound))
    return report


def hiding_rows(suite: Sequence[Distinguisher], k: int, trials: int, seed: int) -> list[ConsistencyRow]:
    """Advantage of each suite member between commitments to 0 and to 1 at width ``k``."""
    rows = estimate_suite(suite, CommitmentSampler(0, k), CommitmentSampler(1, k), k, trials, seed)
    out = []
    for d, r in zip(suite, rows):
        bound = float(hiding_advantage_bound(k, d.budget(k))) + 3 * r.radius
        out.append(ConsistencyRow("hiding", k, f"k={k}", d.name, trials, r.advantage, r.radius, bound))
    return out
