"""The envelope game, realized with bit commitments.

In ``G`` player 1 seals a bit, player 2 guesses it, and player 1 then opens
or destroys the envelope. In ``G_n`` the envelope is a width-``n``
commitment, the guess is one bit, and player 1 finally sends a key of
``n - 1`` bits. ``f_n`` maps a commitment to the bit it binds. A valid key
maps to "open" and any other key to "destroy".
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from ..compgame.core import Bits, ComputationalGameFamily, MachineStrategy, View, is_bits, uniform_bits
from ..compgame.representation import Representation, RepresentationError
from ..crypto import QueryBudgetExceeded, commit
from ..game.strategies import (
    BehavioralStrategy,
    PureStrategy,
    Strategy,
    as_behavioral,
    behavioral,
    uniform_profile,
)
from ..game.tree import GameTree, leaf, node
from ..rng import ReplayTape, WeightedSampler

ZERO_SUM = "zero-sum"
COORDINATION = "coordination"

ROOT = "commit"
GUESS = "guess"


def reveal_set(a: int, b: int) -> str:
    return f"reveal:{a}{b}"


def open_label(a: int, b: int) -> str:
    return f"open:{a}{b}"


def destroy_label(a: int, b: int) -> str:
    return f"destroy:{a}{b}"


def _payoff(variant: str, a: int, b: int, opened: bool) -> tuple[Fraction, Fraction]:
    """Utilities when ``a`` was sealed, ``b`` guessed and the envelope opened or not.

    Zero-sum: player 1 wins exactly when it opens on a wrong guess.
    Coordination: both get 1 on a match, 0 on a mismatch, -1 when destroyed.
    """
    if variant == ZERO_SUM:
        return (Fraction(1), Fraction(-1)) if opened and a != b else (Fraction(-1), Fraction(1))
    if variant == COORDINATION:
        if not opened:
            return Fraction(-1), Fraction(-1)
        return (Fraction(1), Fraction(1)) if a == b else (Fraction(0), Fraction(0))
    raise ValueError(f"unknown variant {variant!r}")


_PAYOFFS = {(v, a, b, o): _payoff(v, a, b, o) for v in (ZERO_SUM, COORDINATION)
            for a in (0, 1) for b in (0, 1) for o in (False, True)}


def payoff(variant: str, a: int, b: int, opened: bool) -> tuple[Fraction, Fraction]:
    try:
        return _PAYOFFS[variant, a, b, bool(opened)]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}") from None


def envelope_game(variant: str = ZERO_SUM) -> GameTree:
    def reveal_node(a, b):
        return node(1, reveal_set(a, b), {
            open_label(a, b): leaf(*payoff(variant, a, b, True)),
            destroy_label(a, b): leaf(*payoff(variant, a, b, False)),
        })

    root = node(1, ROOT, {
        f"c{a}": node(2, GUESS, {f"g{b}": reveal_node(a, b) for b in (0, 1)}) for a in (0, 1)
    })
    name = "envelope" if variant == ZERO_SUM else "envelope-coordination"
    return GameTree.from_root(root, 2, name=name)


class CommitmentFamily(ComputationalGameFamily):
    """``G_n``: an ``n``-bit commitment, a 1-bit guess, an ``(n-1)``-bit key."""

    num_players = 2

    def __init__(self, variant: str = ZERO_SUM):
        self.variant = variant
        self.name = "commitment-game" if variant == ZERO_SUM else "variant-prime"

    def widths(self, n: int) -> tuple[int, int, int]:
        return n, 1, n - 1

    def action_length(self, n: int) -> int:
        return n

    def is_history(self, n: int, h: tuple) -> bool:
        if n < 2 or len(h) > 3:
            return False
        return all(is_bits(a, w) for a, w in zip(h, self.widths(n)))

    def is_legal(self, n: int, h: tuple, a) -> bool:
        return len(h) < 3 and is_bits(a, self.widths(n)[len(h)])

    def is_terminal(self, n: int, h: tuple) -> bool:
        return len(h) == 3

    def player(self, n: int, h: tuple) -> int:
        return (1, 2, 1)[len(h)]

    def utility(self, n: int, h: tuple, perm) -> tuple[Fraction, Fraction]:
        c, g, s = h
        key, a = perm.opening(n, c.value)
        return payoff(self.variant, a, g.value, key == s.value)

    def forfeit_utility(self, n: int, h: tuple, offender: int) -> tuple[Fraction, Fraction]:
        if self.variant == ZERO_SUM:
            return (Fraction(-1), Fraction(1)) if offender == 1 else (Fraction(1), Fraction(-1))
        return (Fraction(-1), Fraction(0)) if offender == 1 else (Fraction(0), Fraction(-1))

    def legal_actions(self, n: int, h: tuple) -> Iterator[Bits]:
        w = self.widths(n)[len(h)]
        return (Bits(v, w) for v in range(1 << w))

    def sample_action(self, n: int, h: tuple, tape) -> Bits:
        return uniform_bits(tape, self.widths(n)[len(h)])

    def commitments_in(self, n: int, history: tuple) -> tuple[tuple[int, int], ...]:
        return ((n, history[0].value),) if history else ()

    def check_opening(self, n: int, first: Bits, key: Bits, oracle) -> int | None:
        """The bit that ``key`` opens in ``first``, via a budgeted reveal."""
        if not is_bits(key, n - 1):
            return None
        return oracle.reveal(n, first.value, key.value)


def _bit(label: str) -> int:
    return int(label[-1])


class LiftedCommitter(MachineStrategy):
    """``F(σ_1)``: commit to the sampled bit, then open or destroy as ``σ_1`` says.

    The key is never stored. At reveal time the machine replays its own
    consumed randomness to rebuild the sealed bit and the key.
    """

    player = 1
    stateful = True

    def __init__(self, strategy: BehavioralStrategy, name: str = "lift"):
        self.sigma = strategy
        self.name = name
        self._root = WeightedSampler(list(strategy.dist(ROOT).items()))
        self._reveal = {reveal_set(a, b): WeightedSampler(list(strategy.dist(reveal_set(a, b)).items()))
                        for a in (0, 1) for b in (0, 1)}

    def query_budget(self, n: int) -> int:
        return 1

    def step_budget(self, n: int) -> int:
        return 3

    def rebuild(self, n: int, randomness: tuple[int, int]) -> tuple[int, int]:
        """Sealed bit and key from the randomness consumed at the first move."""
        replay = ReplayTape(*randomness)
        a = _bit(self._root.draw(replay))
        return a, replay.read(n - 1)

    def choose(self, n: int, view: View, tape) -> tuple[str, int | None]:
        """The ``G`` action this machine plays, plus the key where relevant."""
        if not view.history:
            return self._root.draw(tape), None
        a, key = self.rebuild(n, view.randomness)
        return self._reveal[reveal_set(a, view.history[1].value)].draw(tape), key

    def act(self, n: int, view: View, tape, oracle):
        label, key = self.choose(n, view, tape)
        if key is None:
            return Bits(commit(n, _bit(label), tape, oracle).string, n)
        return Bits(key if label.startswith("open") else key ^ 1, n - 1)

    def predict(self, n: int, view: View, tape, oracle=None) -> str:
        return self.choose(n, view, tape)[0]

    def abstract_infoset(self, n: int, history: tuple, randomness, oracle, tape=None) -> str | None:
        if not history:
            return ROOT
        if len(history) == 2:
            return reveal_set(self.rebuild(n, randomness)[0], history[1].value)
        return None


class LiftedGuesser(MachineStrategy):
    """``F(σ_2)``: one bit drawn from ``σ_2`` at the guess."""

    player = 2
    stateful = True

    def __init__(self, strategy: BehavioralStrategy, name: str = "lift"):
        self.name = name
        self._dist = WeightedSampler(list(strategy.dist(GUESS).items()))

    def query_budget(self, n: int) -> int:
        return 0

    def step_budget(self, n: int) -> int:
        return 1

    def act(self, n: int, view: View, tape, oracle):
        return Bits(_bit(self._dist.draw(tape)), 1)

    def predict(self, n: int, view: View, tape, oracle=None) -> str:
        return self._dist.draw(tape)

    def abstract_infoset(self, n: int, history: tuple, randomness, oracle, tape=None) -> str | None:
        return GUESS if len(history) == 1 else None


class CommitmentRepresentation(Representation):
    def __init__(self, variant: str = ZERO_SUM):
        self.game = envelope_game(variant)
        self.family = CommitmentFamily(variant)
        self.name = self.family.name

    def history_map(self, n: int, h: tuple, perm) -> tuple[str, ...]:
        if not self.family.is_history(n, h):
            raise RepresentationError(f"{h!r} is not a history of G_{n}")
        out: list[str] = []
        if h:
            key, a = perm.opening(n, h[0].value)
            out.append(f"c{a}")
            if len(h) > 1:
                b = h[1].value
                out.append(f"g{b}")
                if len(h) > 2:
                    out.append(open_label(a, b) if h[2].value == key else destroy_label(a, b))
        return tuple(out)

    def lift(self, strategy: Strategy) -> MachineStrategy:
        sigma = as_behavioral(self.game, strategy)
        return LiftedCommitter(sigma) if strategy.player == 1 else LiftedGuesser(sigma)

    def interpreter(self, strategy: Strategy):
        return self.lift(strategy).predict


# Named abstract profiles of the envelope game

def uniform_open(game: GameTree) -> dict[int, BehavioralStrategy]:
    """Seal a uniform bit and always open; guess uniformly. A Nash equilibrium."""
    p1 = {ROOT: {"c0": Fraction(1, 2), "c1": Fraction(1, 2)}}
    for a in (0, 1):
        for b in (0, 1):
            p1[reveal_set(a, b)] = {open_label(a, b): 1}
    return {1: behavioral(1, p1), 2: behavioral(2, {GUESS: {"g0": Fraction(1, 2), "g1": Fraction(1, 2)}})}


def pure_profile(a: int, b: int, open_when: Callable[[int, int], bool] = lambda a, b: True
                 ) -> dict[int, PureStrategy]:
    choices = {ROOT: f"c{a}"}
    for x in (0, 1):
        for y in (0, 1):
            choices[reveal_set(x, y)] = open_label(x, y) if open_when(x, y) else destroy_label(x, y)
    return {1: PureStrategy(1, choices), 2: PureStrategy(2, {GUESS: f"g{b}"})}


def abstract_profiles(game: GameTree) -> dict[str, dict]:
    """A spread of profiles used for distribution-closeness checks."""
    skew = {ROOT: {"c0": Fraction(1, 3), "c1": Fraction(2, 3)}}
    for a in (0, 1):
        for b in (0, 1):
            skew[reveal_set(a, b)] = {open_label(a, b): Fraction(3, 4), destroy_label(a, b): Fraction(1, 4)}
    return {
        "uniform-open": uniform_open(game),
        "pure-c1-g0": pure_profile(1, 0),
        "pure-c0-g0-destroy": pure_profile(0, 0, lambda a, b: False),
        "skewed": {1: behavioral(1, skew), 2: behavioral(2, {GUESS: {"g0": Fraction(1, 5), "g1": Fraction(4, 5)}})},
        "open-on-miss": {1: behavioral(1, {**{ROOT: {"c0": Fraction(1, 2), "c1": Fraction(1, 2)}},
                                           **{reveal_set(a, b): ({open_label(a, b): 1} if a != b
                                                                 else {destroy_label(a, b): 1})
                                              for a in (0, 1) for b in (0, 1)}}),
                         2: behavioral(2, {GUESS: {"g0": Fraction(1, 2), "g1": Fraction(1, 2)}})},
        "uniform": uniform_profile(game),
    }


# Deviations

class StatelessMachine(MachineStrategy):
    stateful = False


class LowEntropyCommitter(StatelessMachine):
    """Commits to a uniform bit under the all-zero key, then opens by trying that key."""

    player = 1
    name = "low-entropy-key"

    def query_budget(self, n):
        return 2

    def act(self, n, view, tape, oracle):
        if not view.history:
            return Bits(oracle.forward(n, tape.read(1)), n)
        return Bits(0, n - 1)


class ForgetfulCommitter(StatelessMachine):
    """Honest commitment, but the key is lost: reveals a fresh random string."""

    player = 1
    name = "forgetful"

    def query_budget(self, n):
        return 1

    def act(self, n, view, tape, oracle):
        if not view.history:
            return Bits(commit(n, tape.read(1), tape, oracle).string, n)
        return uniform_bits(tape, n - 1)


class IllegalReveal(MachineStrategy):
    """Honest commitment, then a key of the wrong length."""

    player = 1
    name = "illegal-reveal"

    def query_budget(self, n):
        return 1

    def act(self, n, view, tape, oracle):
        if not view.history:
            return Bits(commit(n, tape.read(1), tape, oracle).string, n)
        return Bits(0, n)


class ConstantGuess(MachineStrategy):
    player = 2
    stateful = False

    def __init__(self, bit: int):
        self.bit = bit
        self.name = f"always-{bit}"

    def query_budget(self, n):
        return 0

    def act(self, n, view, tape, oracle):
        return Bits(self.bit, 1)


class FeatureGuess(MachineStrategy):
    """Guesses a fixed function of the commitment string."""

    player = 2
    stateful = False

    def __init__(self, name: str, feature: Callable[[int, int], int]):
        self.name = name
        self.feature = feature

    def query_budget(self, n):
        return 0

    def act(self, n, view, tape, oracle):
        return Bits(self.feature(n, view.history[0].value) & 1, 1)


class InverterGuess(MachineStrategy):
    """Searches ``q(n)`` keys for an opening of the commitment, for both bits."""

    player = 2
    stateful = False

    def __init__(self, q: Callable[[int], int] = lambda n: n * n, name: str = "inverter"):
        self.q = q
        self.name = name

    def query_budget(self, n):
        return 2 * self.q(n)

    def act(self, n, view, tape, oracle):
        c = view.history[0].value
        m = min(self.q(n), 1 << (n - 1))
        for b in (0, 1):
            keys = np.arange(m, dtype=np.uint64)
            if (oracle.forward_many(n, (keys << np.uint64(1)) | np.uint64(b)) == np.uint64(c)).any():
                return Bits(b, 1)
        return uniform_bits(tape, 1)


class KnownKeyMatcher(MachineStrategy):
    """Inverts an all-zero-key commitment by re-committing to 0 and comparing."""

    player = 2
    stateful = False
    name = "known-key-matcher"

    def query_budget(self, n):
        return 1

    def act(self, n, view, tape, oracle):
        return Bits(0 if oracle.forward(n, 0) == view.history[0].value else 1, 1)


class ExtractKeyAttack(MachineStrategy):
    """Runs the defender's reveal step on ``(h, 1)`` many times, hoping for its key.

    A stateless defender sees nothing at reveal time that player 2 cannot
    reproduce, so its reveal can be simulated. For a stateful target the
    simulation must invent the consumed randomness. A valid key exposes the
    committed bit, which is then guessed; otherwise the guess is 1.
    """

    player = 2
    stateful = False

    def __init__(self, target: MachineStrategy, family, sims: Callable[[int], int] = lambda n: n * n,
                 name: str = "extract-key", guess_bit: Callable[[int], int] = lambda a: a):
        self.target, self.family, self.sims = target, family, sims
        self.name = name
        self.guess_bit = guess_bit

    def query_budget(self, n):
        return self.sims(n) * (self.target.query_budget(n) + 1) + 16

    def step_budget(self, n):
        return self.query_budget(n) + self.sims(n) + 16

    def act(self, n, view, tape, oracle):
        first = view.history[0]
        h = view.history + (Bits(1, 1),)
        sim = tape.fork("sim")
        for _ in range(self.sims(n)):
            randomness = (sim.read(n + 64), n + 64) if self.target.stateful else None
            try:
                key = self.target.act(n, View(self.target.player, h, randomness), sim, oracle)
            except QueryBudgetExceeded:
                raise
            except Exception:
                continue
            bit = self.family.check_opening(n, first, key, oracle)
            if bit is not None:
                return Bits(self.guess_bit(bit), 1)
        return Bits(1, 1)


def _lifted(strategy, name):
    return (LiftedCommitter if strategy.player == 1 else LiftedGuesser)(strategy, name)


def envelope_battery(game: GameTree, family: CommitmentFamily, defender: MachineStrategy | None = None):
    """Thirteen deviations for the envelope game (battery version envelope-1)."""
    from ..equilibria import DeviationBattery

    def p1(choose_a, open_when=lambda a, b: True, name=""):
        choices = {ROOT: f"c{choose_a}"}
        for a in (0, 1):
            for b in (0, 1):
                choices[reveal_set(a, b)] = open_label(a, b) if open_when(a, b) else destroy_label(a, b)
        return LiftedCommitter(as_behavioral(game, PureStrategy(1, choices)), name)

    class ParityCommitter(LiftedCommitter):
        def __init__(self):
            self._inner = {b: p1(b, name="") for b in (0, 1)}
            self.name = "parity-of-n"

        def choose(self, n, view, tape):
            return self._inner[n % 2].choose(n, view, tape)

        def rebuild(self, n, randomness):
            return self._inner[n % 2].rebuild(n, randomness)

    destroyer = uniform_open(game)[1]
    destroyer = behavioral(1, {I: ({destroy_label(*map(int, I[-2:])): 1} if I.startswith("reveal") else d)
                               for I, d in destroyer.dists.items()})
    target = defender or LiftedCommitter(uniform_open(game)[1])
    return DeviationBattery({
        1: [p1(0, name="commit-0"), p1(1, name="commit-1"), ParityCommitter(),
            LiftedCommitter(destroyer, "always-destroy"), LowEntropyCommitter(), ForgetfulCommitter(),
            IllegalReveal()],
        2: [ConstantGuess(0), ConstantGuess(1),
            FeatureGuess("first-bit", lambda n, c: c >> (n - 1)),
            FeatureGuess("popcount-parity", lambda n, c: bin(c).count("1")),
            InverterGuess(),
            ExtractKeyAttack(target, family)],
    }, version="envelope-1")


def non_ne_control(rep: "CommitmentRepresentation") -> dict[int, MachineStrategy]:
    """Always seal 1 and open; always guess 0. Guessing 1 instead gains 2."""
    prof = pure_profile(1, 0)
    return {1: LiftedCommitter(as_behavioral(rep.game, prof[1]), "pure-c1-open"),
            2: LiftedGuesser(as_behavioral(rep.game, prof[2]), "pure-g0")}


def build_commitment_game(variant: str = ZERO_SUM):
    rep = CommitmentRepresentation(variant)
    return rep.game, rep.family, rep


def build_variant_prime():
    """The coordination variant plus the low-entropy cheat profile."""
    game, family, rep = build_commitment_game(COORDINATION)
    cheat = {1: LowEntropyCommitter(), 2: KnownKeyMatcher()}
    return game, family, rep, cheat


def cheat_demonstration(rep: "CommitmentRepresentation", n: int, trials: int, seed: int = 0) -> list[dict]:
    """What the cheat achieves next to what ``G'`` allows from player 2's information.

    Whatever player 2 does at its single information set, the guess is
    independent of the sealed bit, so against a uniform seal the match
    probability is exactly 1/2. The cheat keeps the seal uniform and still
    matches.
    """
    from ..compgame.runner import run_game, trial_seeds
    from ..game.analysis import check_epsilon_ne, utility_vector

    game = rep.game
    rows = []
    for name, prof in (("NE both-0", pure_profile(0, 0)), ("NE both-1", pure_profile(1, 1)),
                       ("NE mixed", uniform_open(game))):
        if not check_epsilon_ne(game, prof, 0).passed:
            raise AssertionError(f"{name} is not an equilibrium of {game.name}")
        u = utility_vector(game, prof)
        rows.append({"profile": name, "p1_seal_0": _seal_prob(game, prof), "match": _match_prob(game, prof),
                     "u1": u[0], "u2": u[1], "source": "exact"})
    best = Fraction(0)
    for b in (0, 1):
        prof = {1: uniform_open(game)[1], 2: pure_profile(0, b)[2]}
        best = max(best, _match_prob(game, prof))
    rows.append({"profile": "best p2 reply to a uniform seal", "p1_seal_0": Fraction(1, 2), "match": best,
                 "u1": None, "u2": None, "source": "exact"})
    _, _, _, cheat = build_variant_prime()
    seals = matches = 0
    tot = [Fraction(0), Fraction(0)]
    for s in trial_seeds(seed, "cheat-demo", n, trials):
        res = run_game(rep.family, n, cheat, s, record=False)
        img = rep.history_map(n, res.history, res.perm)
        seals += img[0] == "c0"
        matches += img[0][1] == img[1][1]
        tot = [tot[0] + res.utilities[0], tot[1] + res.utilities[1]]
    rows.append({"profile": "low-entropy cheat", "p1_seal_0": Fraction(seals, trials),
                 "match": Fraction(matches, trials), "u1": tot[0] / trials, "u2": tot[1] / trials,
                 "source": f"empirical n={n} trials={trials}"})
    return rows


def _seal_prob(game, prof) -> Fraction:
    return as_behavioral(game, prof[1]).prob(ROOT, "c0")


def _match_prob(game, prof) -> Fraction:
    from ..game.analysis import outcome_distribution
    rho = outcome_distribution(game, prof)
    return sum((p for z, p in rho.items() if z[0][1] == z[1][1]), Fraction(0))
