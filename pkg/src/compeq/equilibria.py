"""Computational Nash and sequential equilibrium checks against deviation batteries.

No finite battery covers every bounded deviation, so a pass is evidence
about the listed machines only. Gains are estimated from matched seeds: the
deviating run reuses the seed (hence the permutation and every tape) of the
baseline run it is compared with.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .compgame.core import ComputationalGameFamily, MachineStrategy, View
from .compgame.representation import ClosenessReport, Representation, verify_ug4a
from .compgame.runner import map_chunks, run_game, trial_seeds
from .game.analysis import check_epsilon_ne, default_certificate, tremble_profile
from .game.strategies import Profile
from .indist import canonical_partition
from .rng import uniform_int
from .stats import hoeffding_radius, ladder_thresholds

__all__ = [
    "DeviationBattery", "GainRow", "GainReport", "check_computational_ne", "lift_ne", "LiftReport",
    "PreconditionError", "SwitchMachine", "make_switch_machine", "TrembleMachine", "make_tremble_machine",
    "check_computational_seqeq",
]


class PreconditionError(ValueError):
    pass


@dataclass
class DeviationBattery:
    """Named deviations per player; ``version`` keeps reports comparable."""

    deviations: dict[int, list[MachineStrategy]] = field(default_factory=dict)
    version: str = "1"

    def __post_init__(self):
        for i, ms in self.deviations.items():
            names = [m.name for m in ms]
            if len(set(names)) != len(names):
                raise ValueError(f"duplicate deviation names for player {i}")
            for m in ms:
                if m.player != i:
                    raise ValueError(f"deviation {m.name!r} is for player {m.player}, listed under {i}")

    def items(self) -> Iterator[tuple[int, MachineStrategy]]:
        for i in sorted(self.deviations):
            yield from ((i, m) for m in self.deviations[i])

    def for_player(self, i: int) -> list[MachineStrategy]:
        return list(self.deviations.get(i, ()))

    def __len__(self) -> int:
        return sum(len(v) for v in self.deviations.values())


@dataclass(frozen=True)
class GainRow:
    check: str
    n: int
    player: int
    cell: str
    deviation: str
    k: int | None
    gain: float
    radius: float
    threshold: float
    reached: int = 0

    @property
    def passed(self) -> bool:
        return self.gain <= self.threshold


@dataclass
class GainReport:
    check: str
    rows: list[GainRow] = field(default_factory=list)
    skipped: list[tuple] = field(default_factory=list)
    battery_version: str = "1"

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def worst(self) -> GainRow | None:
        return max(self.rows, key=lambda r: r.gain, default=None)


def bind(dev, base: MachineStrategy) -> MachineStrategy:
    """Deviations may be fixed machines or factories that wrap the machine they replace."""
    return dev.bind(base) if hasattr(dev, "bind") else dev


def _check_ladder(n_list: Sequence[int]) -> None:
    if len(n_list) < 2:
        raise ValueError("n_list needs at least two entries")
    if list(n_list) != sorted(set(n_list)):
        raise ValueError("n_list must be strictly ascending")


class _NETask:
    def __init__(self, family, n, profile, deviations, base: bool):
        self.family, self.n, self.profile = family, n, profile
        self.deviations, self.base = deviations, base

    def __call__(self, seeds):
        k = self.family.num_players
        sums = [Fraction(0)] * (k + len(self.deviations))
        for s in seeds:
            if self.base:
                u = run_game(self.family, self.n, self.profile, s, record=False).utilities
                for j in range(k):
                    sums[j] += u[j]
            for d, (i, m) in enumerate(self.deviations):
                u = run_game(self.family, self.n, {**self.profile, i: m}, s, record=False).utilities
                sums[k + d] += u[i - 1]
        return sums


def _reduce(parts):
    total = None
    for p in parts:
        total = list(p) if total is None else [a + b for a, b in zip(total, p)]
    return total


def check_computational_ne(family: ComputationalGameFamily, profile: Mapping[int, MachineStrategy],
                           battery: DeviationBattery, n_list: Sequence[int], trials: int, decay_tol: float, *,
                           seed: int = 0, workers: int = 1, paired: bool = True,
                           experiment: str = "ne") -> GainReport:
    """Gain of each battery deviation over ``profile`` along the ``n`` ladder.

    With ``paired=False`` the deviating runs use their own seeds; the
    expectation is the same, only the variance differs.
    """
    _check_ladder(n_list)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    report = GainReport("ne", battery_version=battery.version)
    devs = list(battery.items())
    if not devs:
        return report
    devs = [(i, bind(dev, profile[i])) for i, dev in devs]
    k = family.num_players
    gains: dict[int, list[float]] = {d: [] for d in range(len(devs))}
    for n in n_list:
        seeds = trial_seeds(seed, experiment, n, trials)
        if paired:
            sums = _reduce(map_chunks(_NETask(family, n, dict(profile), devs, True), seeds, workers))
        else:
            base = _reduce(map_chunks(_NETask(family, n, dict(profile), [], True), seeds, workers))
            other = trial_seeds(seed, experiment + ":unpaired", n, trials)
            dev = _reduce(map_chunks(_NETask(family, n, dict(profile), devs, False), other, workers))
            sums = base[:k] + dev[k:]
        for d, (i, _) in enumerate(devs):
            gains[d].append(float((sums[k + d] - sums[i - 1]) / trials))
    r = hoeffding_radius(trials)
    for d, (i, m) in enumerate(devs):
        radii = [r] * len(n_list)
        for n, g, t in zip(n_list, gains[d], ladder_thresholds(gains[d], radii, decay_tol)):
            report.rows.append(GainRow("ne", n, i, "root", m.name, None, g, r, t, trials))
    return report


@dataclass
class LiftReport:
    closeness: ClosenessReport
    ne: GainReport

    @property
    def passed(self) -> bool:
        return self.closeness.passed and self.ne.passed


def lift_ne(rep: Representation, sigma: Profile, battery: DeviationBattery, n_list: Sequence[int], trials: int,
            decay_tol: float, *, tol: float = 0.02, seed: int = 0, workers: int = 1
            ) -> tuple[dict[int, MachineStrategy], LiftReport]:
    """Lift an exact equilibrium of ``G`` and check the lift empirically.

    Raises ``PreconditionError`` before any simulation when ``sigma`` is not
    an exact equilibrium of ``G``.
    """
    exact = check_epsilon_ne(rep.game, sigma, 0)
    if not exact.passed:
        raise PreconditionError(f"profile is not an equilibrium of {rep.game.name}: gains {exact.gains}")
    machines = rep.lift_profile(sigma)
    closeness = verify_ug4a(rep, [("sigma", sigma)], n_list, trials, tol, seed=seed, workers=workers)
    ne = check_computational_ne(rep.family, machines, battery, n_list, trials, decay_tol, seed=seed,
                                workers=workers, experiment="lift-ne")
    return machines, LiftReport(closeness, ne)


def _view_for(machine: MachineStrategy, view: View) -> View:
    if machine.stateful or view.randomness is None:
        return view
    return View(view.player, view.history, None)


class SwitchMachine(MachineStrategy):
    """Plays ``base`` until its owner reaches one of ``infosets``, then ``alt``.

    Membership is decided by ``base.abstract_infoset`` on the machine's own
    earlier decision points, which replays its consumed randomness. Once any
    of them lies in the target cell, every later activation goes to ``alt``.
    """

    def __init__(self, base: MachineStrategy, infosets: Iterable[str], alt: MachineStrategy,
                 family: ComputationalGameFamily, name: str | None = None):
        self.base, self.alt, self.family = base, alt, family
        self.infosets = frozenset(infosets)
        self.player = base.player
        self.stateful = base.stateful or alt.stateful
        self.name = name or f"switch({base.name},{'|'.join(sorted(self.infosets))},{alt.name})"

    def query_budget(self, n):
        return self.base.query_budget(n) + self.alt.query_budget(n) + 4 * n + 16

    def step_budget(self, n):
        return self.base.step_budget(n) + self.alt.step_budget(n) + 4 * n + 16

    def reached(self, n: int, view: View, oracle, tape=None) -> bool:
        h = view.history
        for d in range(len(h) + 1):
            prefix = h[:d]
            if self.family.player(n, prefix) != self.player:
                continue
            if self.base.abstract_infoset(n, prefix, view.randomness, oracle, tape) in self.infosets:
                return True
        return False

    def act(self, n, view, tape, oracle):
        m = self.alt if self.reached(n, view, oracle, tape) else self.base
        return m.act(n, _view_for(m, view), tape, oracle)

    def abstract_infoset(self, n, history, randomness, oracle, tape=None):
        return self.base.abstract_infoset(n, history, randomness, oracle, tape)


def make_switch_machine(base: MachineStrategy, infoset: str | Iterable[str], alt: MachineStrategy,
                        rep: Representation) -> SwitchMachine:
    labels = [infoset] if isinstance(infoset, str) else list(infoset)
    for label in labels:
        owner = rep.game.infoset_player.get(label)
        if owner is None:
            raise ValueError(f"{label!r} is not an information set of {rep.game.name}")
        if owner != base.player or alt.player != base.player:
            raise ValueError(f"{label!r} belongs to player {owner}, not to the machine's owner")
    return SwitchMachine(base, labels, alt, rep.family)


class TrembleMachine(MachineStrategy):
    """With probability ``2^(-nk)`` per activation, plays a uniform legal action.

    The base machine is always run, so its tape and query usage stay as if
    it had moved; only its output is replaced. Tremble coins come from a
    fork of the tape keyed by the depth, so later activations can recompute
    them. ``override_prob`` replaces ``2^(-nk)`` (a test hook).
    """

    def __init__(self, base: MachineStrategy, k: int, family: ComputationalGameFamily,
                 override_prob: Fraction | float | None = None):
        if k < 1:
            raise ValueError("tremble index must be at least 1")
        self.base, self.k, self.family = base, k, family
        self.override = None if override_prob is None else Fraction(override_prob)
        self.player = base.player
        self.stateful = base.stateful
        self.name = f"tremble{k}({base.name})"

    def query_budget(self, n):
        return self.base.query_budget(n)

    def step_budget(self, n):
        return self.base.step_budget(n)

    def _coin(self, n: int, depth: int, tape):
        fork = tape.fork(("tremble", depth))
        if self.override is None:
            hit = fork.read(n * self.k) == 0
        else:
            p = self.override
            hit = uniform_int(fork, p.denominator) < p.numerator
        return hit, fork

    def act(self, n, view, tape, oracle):
        hit, fork = self._coin(n, len(view.history), tape)
        action = self.base.act(n, view, tape, oracle)
        return self.family.sample_action(n, view.history, fork) if hit else action

    def trembled_before(self, n: int, history: tuple, tape) -> bool:
        return any(self.family.player(n, history[:d]) == self.player and self._coin(n, d, tape)[0]
                   for d in range(len(history)))

    def abstract_infoset(self, n, history, randomness, oracle, tape=None):
        # after an own tremble the machine cannot tell where it is
        if tape is not None and self.trembled_before(n, history, tape):
            return None
        return self.base.abstract_infoset(n, history, randomness, oracle, tape)


def make_tremble_machine(base: MachineStrategy, k: int, family: ComputationalGameFamily,
                         override_prob=None) -> TrembleMachine:
    return TrembleMachine(base, k, family, override_prob)


class _SeqTask:
    """Sums of matched-seed gains, per (player, cell, deviation), over one chunk."""

    def __init__(self, rep, n, machines, cells, battery):
        self.rep, self.n, self.machines = rep, n, machines
        self.cells, self.battery = cells, battery

    def __call__(self, seeds):
        rep, n, fam = self.rep, self.n, self.rep.family
        game = rep.game
        acc: dict[tuple, list] = {}
        for s in seeds:
            base = run_game(fam, n, self.machines, s, record=False)
            hist = base.history
            limit = len(hist) + (1 if base.forfeit is None else 0)
            seen = set()
            for d in range(limit):
                img = rep.history_map(n, hist[:d], base.perm)
                label = game.infosets.get(img)
                if label is not None:
                    seen.add((game.player_fn[img], label))
            for (i, cell, labels) in self.cells:
                if not any((i, lab) in seen for lab in labels):
                    continue
                for j, dev in enumerate(self.battery.get(i, ())):
                    sw = SwitchMachine(self.machines[i], labels, dev, fam)
                    u = run_game(fam, n, {**self.machines, i: sw}, s, record=False).utilities[i - 1]
                    slot = acc.setdefault((i, cell, j), [0, Fraction(0)])
                    slot[0] += 1
                    slot[1] += u - base.utilities[i - 1]
                if not self.battery.get(i):
                    acc.setdefault((i, cell, -1), [0, Fraction(0)])[0] += 1
        return acc


def _merge(parts):
    total: dict[tuple, list] = {}
    for p in parts:
        for key, (c, g) in p.items():
            slot = total.setdefault(key, [0, Fraction(0)])
            slot[0] += c
            slot[1] += g
    return total


def check_computational_seqeq(rep: Representation, sigma: Profile, battery: DeviationBattery,
                              n_list: Sequence[int], trials: int, decay_tol: float, *,
                              tremble_ks: Sequence[int] = (2, 4), delta_list: Sequence | None = None,
                              partition: Mapping | None = None, seed: int = 0, floor: float | None = None,
                              machine_tremble: bool = True, workers: int = 1,
                              experiment: str = "seqeq") -> GainReport:
    """Conditional gains of switch deviations under trembled lifts.

    For each ``k`` the defender profile is ``M^k``: the lift of ``σ`` mixed
    toward uniform with weight ``1/k``, each machine also trembling with
    probability ``2^(-nk)``. For each cell ``I`` and deviation ``M'`` the
    gain of ``(M^k_i, I, M')`` over ``M^k_i`` is averaged over the runs
    whose image reaches ``I``. The last rung must sit below
    ``δ_k + decay_tol + 3·radius``.
    """
    _check_ladder(n_list)
    ks = list(tremble_ks)
    if delta_list is None:
        delta_list = [2 * d for _, d in default_certificate(rep.game, sigma, ks)]
    deltas = [Fraction(d) for d in delta_list]
    if len(deltas) != len(ks):
        raise ValueError("tremble_ks and delta_list differ in length")
    if any(a < b for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta_list must be nonincreasing")
    partition = partition if partition is not None else canonical_partition(rep.game)
    cells = []
    for i in sorted(partition):
        for label, members in partition[i]:
            cells.append((i, label, frozenset(rep.game.infosets[h] for h in members)))
    floor = 10 / trials if floor is None else floor
    report = GainReport("seqeq", battery_version=battery.version)
    devs = {i: battery.for_player(i) for i in battery.deviations}
    for k, delta in zip(ks, deltas):
        sk = tremble_profile(rep.game, sigma, k)
        machines = rep.lift_profile(sk)
        if machine_tremble:
            machines = {i: TrembleMachine(m, k, rep.family) for i, m in machines.items()}
        bound = {i: [bind(d, machines[i]) for d in ds] for i, ds in devs.items()}
        series: dict[tuple, list] = {}
        for n in n_list:
            seeds = trial_seeds(seed, f"{experiment}:{k}", n, trials)
            acc = _merge(map_chunks(_SeqTask(rep, n, machines, cells, bound), seeds, workers))
            for i, cell, _ in cells:
                for j, dev in enumerate(devs.get(i, ())):
                    c, g = acc.get((i, cell, j), (0, Fraction(0)))
                    if c < max(1, floor * trials):
                        report.skipped.append((k, n, i, cell, dev.name, c))
                        continue
                    series.setdefault((i, cell, dev.name), []).append((n, float(g / c), hoeffding_radius(c), c))
        for (i, cell, name), pts in series.items():
            if pts[-1][0] != n_list[-1]:
                continue  # not reached at the top of the ladder
            values = [p[1] for p in pts]
            radii = [p[2] for p in pts]
            for (n, g, r, c), t in zip(pts, ladder_thresholds(values, radii, decay_tol, float(delta))):
                report.rows.append(GainRow("seqeq", n, i, cell, name, k, g, r, t, c))
    return report
