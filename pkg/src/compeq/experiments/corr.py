"""Correlated play without a mediator, from a rational mix of Nash equilibria.

Player 1 seals a value ``a`` in ``{0..ℓ-1}``, player 2 announces ``b``,
player 1 opens (or destroys) the envelope, and then everybody plays, blind
to each other, the normal-form game. After an opening, equilibrium number
``(a + b) mod ℓ`` of a fixed ordering is played. Each listed equilibrium
appears in the ordering in proportion to its weight. After a destroyed
envelope a punishing equilibrium is played, one that is worst for player 1
among the equilibria found. Because the punishment is itself an
equilibrium, carrying it out costs the punishers nothing.

In ``G_n`` the envelope is ``d`` width-``n`` commitments to the bits of a
``d``-bit string (``2^(d-1) <= ℓ < 2^d``), ``b`` is a ``d``-bit string, the
reveal is the ``d`` keys, and normal-form actions are binary indices into
the sorted action list. Strings are read modulo ``ℓ``; out-of-range indices
mean the first action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Callable, Iterator, NamedTuple, Sequence

from ..compgame.core import Bits, ComputationalGameFamily, MachineStrategy, View, is_bits, uniform_bits
from ..compgame.representation import Representation, RepresentationError
from ..compgame.runner import empirical_psi
from ..crypto import commit
from ..game.analysis import (
    check_epsilon_ne,
    check_sequential_certificate,
    default_certificate,
    measured_slack,
    outcome_distribution,
    tremble_profile,
)
from ..game.normal_form import (
    MixedProfile,
    NormalFormGame,
    action_label,
    action_name,
    embed_normal_form,
    embedded_profile,
    move_order,
    nf_stage,
    pure_nash,
    support_enumeration,
)
from ..game.strategies import BehavioralStrategy, Strategy, as_behavioral
from ..game.tree import Decision, GameTree, History
from ..reports import ResultRow
from ..rng import ReplayTape, WeightedSampler, uniform_int
from ..stats import hoeffding_radius, l1_distance

if TYPE_CHECKING:
    from ..equilibria import DeviationBattery

ROOT = "root"
PICK = "pick"


class NotNiceError(ValueError):
    pass


def _canonical(profile: MixedProfile) -> tuple:
    return tuple(tuple(sorted((a, Fraction(p)) for a, p in d.items() if p)) for d in profile)


@dataclass(frozen=True, eq=False)
class NiceCCNE:
    """A convex combination of Nash equilibria with rational weights."""

    nf: NormalFormGame
    components: tuple[tuple[Fraction, MixedProfile], ...]

    def __post_init__(self):
        if not self.components:
            raise NotNiceError("empty combination")
        fixed = []
        for w, prof in self.components:
            if isinstance(w, float):
                raise NotNiceError("weights must be exact rationals, not floats")
            w = Fraction(w)
            if w <= 0:
                raise NotNiceError("weights must be positive")
            prof = tuple({a: Fraction(p) for a, p in d.items() if p} for d in prof)
            if len(prof) != self.nf.num_players:
                raise NotNiceError("profile has the wrong number of players")
            emb = embed_normal_form(self.nf)
            if not check_epsilon_ne(emb, embedded_profile(self.nf, prof), 0).passed:
                raise NotNiceError(f"{_canonical(prof)} is not a Nash equilibrium of {self.nf.name}")
            fixed.append((w, prof))
        if sum(w for w, _ in fixed) != 1:
            raise NotNiceError("weights must sum to 1")
        object.__setattr__(self, "components", tuple(fixed))

    @property
    def lcd(self) -> int:
        return math.lcm(*(w.denominator for w, _ in self.components))

    @property
    def ell(self) -> int:
        """Envelope size; at least 2 so that every choice is a real choice."""
        return max(self.lcd, 2)

    @property
    def ordering(self) -> list[int]:
        out = []
        for j, (w, _) in enumerate(self.components):
            out += [j] * int(w * self.ell)
        return out

    @property
    def d(self) -> int:
        return self.ell.bit_length()

    def distribution(self) -> dict[tuple, Fraction]:
        """π as a law over action profiles."""
        out: dict[tuple, Fraction] = {}
        for w, prof in self.components:
            for cell in self.nf.cells():
                p = w
                for i, a in enumerate(cell):
                    p *= prof[i].get(a, 0)
                if p:
                    out[cell] = out.get(cell, 0) + p
        return out


def choose_punishment(nf: NormalFormGame, pi: NiceCCNE | None = None) -> MixedProfile:
    """An equilibrium that is worst for player 1 among those found; ties go to the least profile."""
    cands = list(pure_nash(nf))
    if pi is not None:
        cands += [p for _, p in pi.components]
    if nf.num_players == 2:
        cands += support_enumeration(nf)
    cands = [p for p in cands if nf.is_nash(p)]
    if not cands:
        raise ValueError(f"no equilibrium of {nf.name} found")
    return min(cands, key=lambda p: (nf.expected_payoff(p)[0], _canonical(p)))


def minimax_punishment(nf: NormalFormGame) -> MixedProfile:
    """Pure punishment holding player 1 to its minimax value, whatever it costs player 2.

    Player 2 picks the action minimizing player 1's best reply value and
    player 1 best-replies (ties to the first action).
    """
    if nf.num_players != 2:
        raise ValueError("two-player games only")
    a1, a2 = nf.actions

    def reply(y):
        return max(a1, key=lambda x: (nf.payoffs[(x, y)][0], -a1.index(x)))

    y = min(a2, key=lambda y: (nf.payoffs[(reply(y), y)][0], a2.index(y)))
    return ({reply(y): Fraction(1)}, {y: Fraction(1)})


def a_label(a: int) -> str:
    return f"a{a}"


def b_label(b: int) -> str:
    return f"b{b}"


def reveal_infoset(a: int, b: int) -> str:
    return f"rev:{a},{b}"


def open_action(a: int, b: int) -> str:
    return f"open:{a},{b}"


def destroy_action(a: int, b: int) -> str:
    return f"destroy:{a},{b}"


def nf_infoset(p: int, a: int, b: int, opened: bool) -> str:
    if opened:
        return f"nf:{a},{b},open/p{p}"
    if p == 1:
        return f"nf:{a},{b},destroy/p1"
    return f"nf:*,{b},destroy/p{p}"


class CorrGame(NamedTuple):
    game: GameTree
    sigma: dict[int, BehavioralStrategy]
    punishment: MixedProfile


def build_corr_game(nf: NormalFormGame, pi: NiceCCNE, punishment: MixedProfile | None = None) -> CorrGame:
    """``G_corr`` with ``σ_π`` and the punishment equilibrium.

    A custom ``punishment`` (which need not be an equilibrium) is accepted
    so that empty threats can be studied.
    """
    if pi.nf is not nf:
        raise ValueError("the combination belongs to another game")
    ell, c = pi.ell, nf.num_players
    pun = punishment if punishment is not None else choose_punishment(nf, pi)

    def reveal_node(a, b):
        kids = []
        for opened, lab in ((True, open_action(a, b)), (False, destroy_action(a, b))):
            kids.append((lab, nf_stage(nf, lambda p, o=opened: nf_infoset(p, a, b, o))))
        return Decision(1, reveal_infoset(a, b), tuple(kids))

    root = Decision(1, ROOT, tuple(
        (a_label(a), Decision(2, PICK, tuple((b_label(b), reveal_node(a, b)) for b in range(ell))))
        for a in range(ell)))
    game = GameTree.from_root(root, c, name=f"corr({nf.name})")

    order = pi.ordering
    dists: dict[int, dict[str, dict[str, Fraction]]] = {p: {} for p in range(1, c + 1)}
    dists[1][ROOT] = {a_label(a): Fraction(1, ell) for a in range(ell)}
    dists[2][PICK] = {b_label(b): Fraction(1, ell) for b in range(ell)}
    for a in range(ell):
        for b in range(ell):
            dists[1][reveal_infoset(a, b)] = {open_action(a, b): Fraction(1)}
            ne = pi.components[order[(a + b) % ell]][1]
            for p in range(1, c + 1):
                for opened, prof in ((True, ne), (False, pun)):
                    label = nf_infoset(p, a, b, opened)
                    dists[p][label] = {action_label(x, label): Fraction(prof[p - 1].get(x, 0))
                                       for x in nf.actions[p - 1]}
    sigma = {p: BehavioralStrategy(p, dists[p]) for p in dists}
    return CorrGame(game, sigma, pun)


def _nf_cell(game_history: History, c: int) -> tuple[str, ...]:
    order = move_order(c)
    moves = {p: action_name(x) for p, x in zip(order, game_history[3:])}
    return tuple(moves[p] for p in range(1, c + 1))


def nf_outcome_distribution(corr: CorrGame, nf: NormalFormGame) -> dict[tuple, Fraction]:
    out: dict[tuple, Fraction] = {}
    for z, p in outcome_distribution(corr.game, corr.sigma).items():
        if p:
            cell = _nf_cell(z, nf.num_players)
            out[cell] = out.get(cell, 0) + p
    return out


class CorrFamily(ComputationalGameFamily):
    def __init__(self, nf: NormalFormGame, pi: NiceCCNE, punishment: MixedProfile):
        self.nf, self.pi = nf, pi
        self.name = "corr-eq"
        self.num_players = nf.num_players
        self.ell, self.d = pi.ell, pi.d
        self.order = move_order(nf.num_players)
        self.acts = {p: tuple(sorted(nf.actions[p - 1])) for p in range(1, nf.num_players + 1)}
        self.nf_width = {p: max(1, (len(a) - 1).bit_length()) for p, a in self.acts.items()}
        pay = nf.expected_payoff(punishment)
        low = [min(u[i] for u in nf.payoffs.values()) - 1 for i in range(nf.num_players)]
        self._forfeit = {p: tuple(low[i] if i == p - 1 else pay[i] for i in range(nf.num_players))
                         for p in range(1, nf.num_players + 1)}
        self.strings = {r: [u for u in range(1 << self.d) if u % self.ell == r] for r in range(self.ell)}

    def width(self, n: int, depth: int) -> int:
        if depth == 0:
            return self.d * n
        if depth == 1:
            return self.d
        if depth == 2:
            return self.d * (n - 1)
        return self.nf_width[self.order[depth - 3]]

    def action_length(self, n):
        return max(self.d * n, max(self.nf_width.values()))

    def is_history(self, n, h):
        if n < 2 or len(h) > 3 + self.num_players:
            return False
        return all(is_bits(a, self.width(n, j)) for j, a in enumerate(h))

    def is_legal(self, n, h, a):
        return len(h) < 3 + self.num_players and is_bits(a, self.width(n, len(h)))

    def is_terminal(self, n, h):
        return len(h) == 3 + self.num_players

    def player(self, n, h):
        k = len(h)
        if k < 3:
            return (1, 2, 1)[k]
        return self.order[k - 3]

    def decode_nf(self, p: int, a: Bits) -> str:
        acts = self.acts[p]
        return acts[a.value] if a.value < len(acts) else acts[0]

    def cell(self, n, h) -> tuple[str, ...]:
        moves = {p: self.decode_nf(p, x) for p, x in zip(self.order, h[3:])}
        return tuple(moves[p] for p in range(1, self.num_players + 1))

    def utility(self, n, h, perm):
        return self.nf.payoffs[self.cell(n, h)]

    def forfeit_utility(self, n, h, offender):
        return self._forfeit[offender]

    def legal_actions(self, n, h) -> Iterator[Bits]:
        w = self.width(n, len(h))
        return (Bits(v, w) for v in range(1 << w))

    def sample_action(self, n, h, tape):
        return uniform_bits(tape, self.width(n, len(h)))

    def observe(self, n, h, player):
        if len(h) <= 3:
            return h
        return h[:3] + (None,) * (len(h) - 3)

    def resample_hidden(self, n, h, tape):
        if len(h) <= 3:
            return None
        return h[:3] + tuple(uniform_bits(tape, self.width(n, j)) for j in range(3, len(h)))

    def split(self, a: Bits, width: int) -> list[int]:
        return list(a.split(*([width] * self.d)))

    def commitments_in(self, n, history):
        return tuple((n, c) for c in self.split(history[0], n)) if history else ()

    def opened_value(self, n, history, oracle) -> int | None:
        """Sealed value if every key in ``history[2]`` opens its commitment."""
        v = 0
        for c, s in zip(self.split(history[0], n), self.split(history[2], n - 1)):
            bit = oracle.reveal(n, c, s)
            if bit is None:
                return None
            v = (v << 1) | bit
        return v


class CorrRepresentation(Representation):
    def __init__(self, nf: NormalFormGame, pi: NiceCCNE, punishment: MixedProfile | None = None):
        self.nf, self.pi = nf, pi
        self.corr = build_corr_game(nf, pi, punishment)
        self.game = self.corr.game
        self.family = CorrFamily(nf, pi, self.corr.punishment)
        self.name = f"corr-eq({nf.name})"

    @property
    def sigma(self):
        return self.corr.sigma

    def history_map(self, n, h, perm):
        fam = self.family
        if not fam.is_history(n, h):
            raise RepresentationError(f"{h!r} is not a history of G_corr,{n}")
        out: list[str] = []
        if not h:
            return ()
        opens = [perm.opening(n, c) for c in fam.split(h[0], n)]
        v = 0
        for _, bit in opens:
            v = (v << 1) | bit
        a = v % fam.ell
        out.append(a_label(a))
        if len(h) < 2:
            return tuple(out)
        b = h[1].value % fam.ell
        out.append(b_label(b))
        if len(h) < 3:
            return tuple(out)
        opened = all(k == s for (k, _), s in zip(opens, fam.split(h[2], n - 1)))
        out.append(open_action(a, b) if opened else destroy_action(a, b))
        for p, x in zip(fam.order, h[3:]):
            out.append(action_label(fam.decode_nf(p, x), nf_infoset(p, a, b, opened)))
        return tuple(out)

    def lift(self, strategy: Strategy) -> MachineStrategy:
        sigma = as_behavioral(self.game, strategy)
        if strategy.player == 1:
            return CorrCommitter(sigma, self.family)
        return CorrResponder(sigma, self.family, strategy.player)

    def interpreter(self, strategy):
        return self.lift(strategy).predict

    def nf_observer(self, n, result):
        if result.forfeit is not None:
            return result.forfeit.key()
        return self.family.cell(n, result.history)


def _samplers(sigma: BehavioralStrategy) -> dict[str, WeightedSampler]:
    return {I: WeightedSampler(list(d.items())) for I, d in sigma.dists.items()}


def _encode(fam: CorrFamily, p: int, label: str) -> Bits:
    return Bits(fam.acts[p].index(action_name(label)), fam.nf_width[p])


class CorrCommitter(MachineStrategy):
    """Lift for player 1: the sealed value, its keys and the nf move, rebuilt from the tape."""

    player = 1
    stateful = True

    def __init__(self, sigma: BehavioralStrategy, family: CorrFamily, name: str = "lift"):
        self.family = family
        self.name = name
        self._s = _samplers(sigma)

    def query_budget(self, n):
        return self.family.d

    def step_budget(self, n):
        return self.family.d + 8

    def _seal(self, n, tape) -> tuple[str, int]:
        label = self._s[ROOT].draw(tape)
        cands = self.family.strings[int(label[1:])]
        return label, cands[uniform_int(tape, len(cands))]

    def state(self, n: int, randomness) -> tuple[int, int, list[int]]:
        replay = ReplayTape(*randomness)
        label, s = self._seal(n, replay)
        return int(label[1:]), s, [replay.read(n - 1) for _ in range(self.family.d)]

    def _keys(self, n, keys) -> int:
        v = 0
        for k in keys:
            v = (v << (n - 1)) | k
        return v

    def infoset(self, n, history, randomness) -> str | None:
        fam = self.family
        if not history:
            return ROOT
        if len(history) < 2 or fam.player(n, history) != 1 or fam.is_terminal(n, history):
            return None
        a, _, keys = self.state(n, randomness)
        b = history[1].value % fam.ell
        if len(history) == 2:
            return reveal_infoset(a, b)
        return nf_infoset(1, a, b, history[2].value == self._keys(n, keys))

    def predict(self, n, view, tape, oracle=None) -> str:
        if not view.history:
            return self._s[ROOT].draw(tape)
        return self._s[self.infoset(n, view.history, view.randomness)].draw(tape)

    def act(self, n, view, tape, oracle):
        fam, h = self.family, view.history
        if not h:
            _, s = self._seal(n, tape)
            v = 0
            for j in range(fam.d - 1, -1, -1):
                v = (v << n) | commit(n, (s >> j) & 1, tape, oracle).string
            return Bits(v, fam.d * n)
        label = self.predict(n, view, tape)
        if len(h) == 2:
            _, _, keys = self.state(n, view.randomness)
            if label.startswith("destroy"):
                keys = [keys[0] ^ 1, *keys[1:]]
            return Bits(self._keys(n, keys), fam.d * (n - 1))
        return _encode(fam, 1, label)

    def abstract_infoset(self, n, history, randomness, oracle, tape=None):
        return self.infoset(n, history, randomness)


class CorrResponder(MachineStrategy):
    """Lift for players other than 1; its position is read off the public history."""

    stateful = False

    def __init__(self, sigma: BehavioralStrategy, family: CorrFamily, player: int, name: str = "lift"):
        self.family, self.player, self.name = family, player, name
        self._s = _samplers(sigma)

    def query_budget(self, n):
        return self.family.d

    def step_budget(self, n):
        return self.family.d + 8

    def infoset(self, n, history, oracle) -> str | None:
        fam = self.family
        if len(history) == 1 and self.player == 2:
            return PICK
        if len(history) < 3 or fam.is_terminal(n, history) or fam.player(n, history) != self.player:
            return None
        b = history[1].value % fam.ell
        v = fam.opened_value(n, history, oracle)
        if v is None:
            return nf_infoset(self.player, 0, b, False)
        return nf_infoset(self.player, v % fam.ell, b, True)

    def predict(self, n, view, tape, oracle=None) -> str:
        return self._s[self.infoset(n, view.history, oracle)].draw(tape)

    def act(self, n, view, tape, oracle):
        fam = self.family
        label = self.predict(n, view, tape, oracle)
        if len(view.history) == 1:
            cands = fam.strings[int(label[1:])]
            return Bits(cands[uniform_int(tape, len(cands))], fam.d)
        return _encode(fam, self.player, label)

    def abstract_infoset(self, n, history, randomness, oracle, tape=None):
        return self.infoset(n, history, oracle)


# Deviations. Each binds to the machine it replaces, so it can reuse that
# machine's tape layout (keys are rebuilt, not stored).

def _innermost(m: MachineStrategy) -> MachineStrategy:
    while hasattr(m, "k") and hasattr(m, "base"):  # tremble wrappers
        m = m.base
    return m


class Override:
    """Runs the bound machine, then replaces its output where ``stage`` holds."""

    def __init__(self, player: int, name: str, stage: Callable[[CorrFamily, int, tuple], bool],
                 fn: Callable[["_Overridden", int, View, Bits], Bits]):
        self.player, self.name, self.stage, self.fn = player, name, stage, fn

    def bind(self, base: MachineStrategy) -> MachineStrategy:
        return _Overridden(base, self)

    def __repr__(self):
        return f"<Override {self.name} p{self.player}>"


class _Overridden(MachineStrategy):
    def __init__(self, base: MachineStrategy, override: Override):
        self.base, self.override = base, override
        self.player, self.stateful, self.name = base.player, base.stateful, override.name
        self.family = _innermost(base).family

    def query_budget(self, n):
        return self.base.query_budget(n)

    def step_budget(self, n):
        return self.base.step_budget(n)

    def act(self, n, view, tape, oracle):
        out = self.base.act(n, view, tape, oracle)
        if self.override.stage(self.family, n, view.history):
            return self.override.fn(self, n, view, out)
        return out

    def abstract_infoset(self, n, history, randomness, oracle, tape=None):
        return self.base.abstract_infoset(n, history, randomness, oracle, tape)


def _at_reveal(fam, n, h):
    return len(h) == 2


def _at_pick(fam, n, h):
    return len(h) == 1


def _at_nf(fam, n, h):
    return len(h) >= 3


def _wrong_key(m: _Overridden, n, view, out):
    inner = _innermost(m.base)
    _, _, keys = inner.state(n, view.randomness)
    return Bits(inner._keys(n, [keys[0] ^ 1, *keys[1:]]), out.length)


def corr_battery(nf: NormalFormGame) -> "DeviationBattery":
    """Battery version corr-1: aborts, wrong keys, biased picks and nf-stage deviations."""
    from ..equilibria import DeviationBattery

    def nf_fixed(p, which):
        def fn(m, n, view, out):
            k = len(m.family.acts[p])
            return Bits(0 if which == "first" else k - 1, out.length)
        return Override(p, f"nf-{which}", _at_nf, fn)

    devs = {
        1: [Override(1, "abort-after-commit", _at_reveal, lambda m, n, v, out: Bits(0, 0)),
            Override(1, "wrong-key", _at_reveal, _wrong_key),
            nf_fixed(1, "first"), nf_fixed(1, "last")],
        2: [Override(2, "biased-pick", _at_pick, lambda m, n, v, out: Bits(0, out.length)),
            Override(2, "mismatch-pick", _at_pick, lambda m, n, v, out: Bits(out.value ^ 1, out.length)),
            nf_fixed(2, "first"), nf_fixed(2, "last")],
    }
    for p in range(3, nf.num_players + 1):
        devs[p] = [nf_fixed(p, "first"), nf_fixed(p, "last")]
    return DeviationBattery(devs, version="corr-1")


# Shipped instances

def coordination_instance() -> tuple[NormalFormGame, NiceCCNE]:
    nf = NormalFormGame.from_table([("L", "R"), ("L", "R")], {
        ("L", "L"): (1, 1), ("L", "R"): (0, 0), ("R", "L"): (0, 0), ("R", "R"): (1, 1)}, name="coordination")
    pure = lambda x: ({x: Fraction(1)}, {x: Fraction(1)})  # noqa: E731
    return nf, NiceCCNE(nf, ((Fraction(1, 2), pure("L")), (Fraction(1, 2), pure("R"))))


def three_ne_instance() -> tuple[NormalFormGame, NiceCCNE]:
    """Three-action coordination with unequal stakes; weights 1/3 each, so ``ℓ = 3``."""
    acts = ("A", "B", "C")
    stake = {"A": 3, "B": 2, "C": 1}
    table = {(x, y): ((stake[x], stake[x]) if x == y else (0, 0)) for x in acts for y in acts}
    nf = NormalFormGame.from_table([acts, acts], table, name="three-ne")
    pure = lambda x: ({x: Fraction(1)}, {x: Fraction(1)})  # noqa: E731
    return nf, NiceCCNE(nf, tuple((Fraction(1, 3), pure(x)) for x in acts))


def empty_threat_instance() -> tuple[NormalFormGame, NiceCCNE, MixedProfile]:
    """A game whose minimax punishment of player 1 hurts player 2.

    ``L`` strictly dominates ``R`` for player 2, so ``(T, L)`` is the only
    equilibrium. Pushing player 1 down to its minimax value needs ``R``,
    which costs player 2 three points: an empty threat.
    """
    nf = NormalFormGame.from_table([("T", "B"), ("L", "R")], {
        ("T", "L"): (2, 2), ("T", "R"): (0, -1), ("B", "L"): (1, 1), ("B", "R"): (-1, -2)}, name="empty-threat")
    pi = NiceCCNE(nf, ((Fraction(1), ({"T": Fraction(1)}, {"L": Fraction(1)})),))
    return nf, pi, minimax_punishment(nf)


def build_corr_family(nf: NormalFormGame, pi: NiceCCNE, punishment: MixedProfile | None = None):
    rep = CorrRepresentation(nf, pi, punishment)
    return rep.family, rep


def certificate_passes(corr: CorrGame, ks: Sequence[int] = (2, 4, 8, 16, 32), scale=None):
    """Check a trembling certificate for ``σ_π`` on ``G_corr``.

    By default ``δ_k`` is the measured slack (running max); with ``scale``
    it is ``scale / k`` instead, which fails wherever slack does not vanish.
    """
    cert = default_certificate(corr.game, corr.sigma, ks)
    if scale is not None:
        cert = [(s, Fraction(scale) / k) for (s, _), k in zip(cert, ks)]
    return check_sequential_certificate(corr.game, corr.sigma, cert)


def slack_decay(corr: CorrGame, k_lo: int = 2, k_hi: int = 32) -> Fraction:
    """Ratio of the tremble slack at ``k_hi`` to that at ``k_lo`` (0 when both vanish)."""
    lo, hi = (measured_slack(corr.game, tremble_profile(corr.game, corr.sigma, k)) for k in (k_lo, k_hi))
    if lo == 0:
        return Fraction(0) if hi == 0 else Fraction(10**6)
    return hi / lo


def run_corr_experiment(nf: NormalFormGame, pi: NiceCCNE, battery, n_list: Sequence[int], trials: int, seed: int,
                        *, tol: float = 0.05, seq_trials: int | None = None, tremble_ks: Sequence[int] = (2, 4),
                        workers: int = 1, punishment: MixedProfile | None = None) -> list[ResultRow]:
    """Exact checks on ``G_corr``, then distribution match, NE gains and conditional gains."""
    from ..equilibria import check_computational_ne, check_computational_seqeq

    rep = CorrRepresentation(nf, pi, punishment)
    exp = "corr-eq"
    rows: list[ResultRow] = []
    target = pi.distribution()
    exact = nf_outcome_distribution(rep.corr, nf)
    rows.append(ResultRow(exp, 0, "exact-l1-vs-pi", "G_corr", float(l1_distance(exact, target)), 0.0, 0.0))
    cert = certificate_passes(rep.corr)
    rows.append(ResultRow(exp, 0, "certificate-failures", "G_corr", float(len(cert.failures)), 0.0, 0.0))
    # δ_k above is the measured slack, so the certificate alone cannot fail; the
    # slack itself has to vanish as the trembles shrink.
    rows.append(ResultRow(exp, 0, "slack-decay", "k=32 vs k=2", float(slack_decay(rep.corr)), 0.0, 0.25))
    machines = rep.lift_profile(rep.sigma)
    r = hoeffding_radius(trials)
    for n in n_list:
        emp = empirical_psi(rep.family, n, machines, trials, seed, observe=rep.nf_observer,
                            experiment=f"{exp}:psi", workers=workers)
        dist = float(l1_distance({k: float(v) for k, v in emp.probabilities().items()},
                                 {k: float(v) for k, v in target.items()}))
        rows.append(ResultRow(exp, n, "l1-vs-pi", "honest", dist, r, tol + 3 * r))
    st = seq_trials or trials
    ne = check_computational_ne(rep.family, machines, battery, n_list, st, tol, seed=seed, workers=workers,
                                experiment=f"{exp}:ne")
    for g in ne.rows:
        rows.append(ResultRow(exp, g.n, "ne-gain", f"p{g.player}:{g.deviation}", g.gain, g.radius, g.threshold))
    seq = check_computational_seqeq(rep, rep.sigma, battery, n_list, st, tol, tremble_ks=tremble_ks, seed=seed,
                                    workers=workers, experiment=f"{exp}:seqeq")
    for g in seq.rows:
        rows.append(ResultRow(exp, g.n, f"seqeq-gain:k={g.k}", f"p{g.player}:{g.cell}:{g.deviation}",
                              g.gain, g.radius, g.threshold))
    return rows
