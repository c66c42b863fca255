"""Stateless machines cannot form an equilibrium of the envelope game.

Here the first action of ``G_n`` starts with a length field: its first
``⌈log₂ n⌉`` bits give the key length ``L`` of the commitment that follows
(width ``L + 1``). The honest lift uses ``L = n - 1``. Two attacks, each
against a stateless opponent, show that no stateless profile is stable:

* player 2 re-runs player 1's reveal step on its own and opens the
  commitment whenever that step leaks the key;
* player 1 commits with a key short enough to find again by exhaustive
  search, which a player 2 with a smaller budget cannot invert.

Payoffs here are reported as win probabilities ``(u + 1) / 2`` of the
zero-sum game, the scale on which the bounds ``1 - 2/n`` and
``1/2 - 1/n`` are stated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Sequence

from ..compgame.core import Bits, ComputationalGameFamily, MachineStrategy, is_bits, uniform_bits
from ..compgame.representation import Representation, RepresentationError
from ..compgame.runner import map_chunks, run_game, trial_seeds
from ..crypto import commit
from ..game.strategies import Strategy, as_behavioral
from ..reports import ResultRow
from ..rng import uniform_int
from ..stats import hoeffding_radius
from .commitment import (
    ZERO_SUM,
    ExtractKeyAttack,
    LiftedCommitter,
    LiftedGuesser,
    _bit,
    destroy_label,
    envelope_game,
    open_label,
    payoff,
    uniform_open,
)


def prefix_bits(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


@dataclass(frozen=True)
class SeparationConfig:
    """Budget exponent ``a`` of the defenders and the attacker's key length.

    ``kappa(n) = ⌈(a+1)·log₂ n⌉`` keeps a defender with ``n^a`` queries at
    inversion advantage at most ``n^a / 2^(κ-1) <= 2/n``.
    """

    a: int = 2
    sims: Callable[[int], int] | None = None

    def kappa(self, n: int) -> int:
        return math.ceil((self.a + 1) * math.log2(n))

    def defender_budget(self, n: int) -> int:
        return n ** self.a

    def attacker_budget(self, n: int) -> int:
        return (1 << self.kappa(n)) + n

    def simulations(self, n: int) -> int:
        return self.sims(n) if self.sims else n * n

    def check(self, n: int) -> None:
        k = self.kappa(n)
        if not k < n - 1:
            raise ValueError(f"key length {k} is not below n-1 = {n - 1}")
        if k >= 1 << prefix_bits(n):
            raise ValueError(f"key length {k} does not fit the length field at n={n}")
        if self.attacker_budget(n) < (1 << k) + n:
            raise ValueError("attacker budget too small to scan all keys")


def encode_first(n: int, key_length: int, string: int) -> Bits:
    p = prefix_bits(n)
    return Bits((key_length << (key_length + 1)) | string, p + key_length + 1)


def decode_first(n: int, a: Bits) -> tuple[int, int] | None:
    """``(key_length, commitment string)``, or ``None`` when malformed."""
    p = prefix_bits(n)
    body = a.length - p
    if body < 2:
        return None
    L = a.value >> body
    if L != body - 1 or L > n - 1:
        return None
    return L, a.value & ((1 << body) - 1)


class SeparationFamily(ComputationalGameFamily):
    """``G'_n``: length-prefixed commitment, 1-bit guess, key of the announced length."""

    name = "stateless-separation"
    num_players = 2

    def action_length(self, n: int) -> int:
        return n + prefix_bits(n)

    def is_history(self, n: int, h: tuple) -> bool:
        if n < 3 or len(h) > 3:
            return False
        h = tuple(h)
        if h and not (is_bits(h[0]) and decode_first(n, h[0]) is not None):
            return False
        if len(h) > 1 and not is_bits(h[1], 1):
            return False
        if len(h) > 2 and not is_bits(h[2], decode_first(n, h[0])[0]):
            return False
        return True

    def is_legal(self, n, h, a):
        return len(h) < 3 and self.is_history(n, tuple(h) + (a,))

    def is_terminal(self, n, h):
        return len(h) == 3

    def player(self, n, h):
        return (1, 2, 1)[len(h)]

    def utility(self, n, h, perm):
        L, c = decode_first(n, h[0])
        key, a = perm.opening(L + 1, c)
        return payoff(ZERO_SUM, a, h[1].value, key == h[2].value)

    def forfeit_utility(self, n, h, offender):
        return (Fraction(-1), Fraction(1)) if offender == 1 else (Fraction(1), Fraction(-1))

    def legal_actions(self, n, h) -> Iterator[Bits]:
        if not h:
            return (encode_first(n, L, c) for L in range(1, n) for c in range(1 << (L + 1)))
        if len(h) == 1:
            return (Bits(b, 1) for b in (0, 1))
        L = decode_first(n, h[0])[0]
        return (Bits(v, L) for v in range(1 << L))

    def sample_action(self, n, h, tape) -> Bits:
        if not h:
            L = 1 + uniform_int(tape, n - 1)
            return encode_first(n, L, tape.read(L + 1))
        if len(h) == 1:
            return uniform_bits(tape, 1)
        return uniform_bits(tape, decode_first(n, h[0])[0])

    def commitments_in(self, n, history):
        if not history:
            return ()
        L, c = decode_first(n, history[0])
        return ((L + 1, c),)

    def check_opening(self, n, first, key, oracle):
        L, c = decode_first(n, first)
        if not is_bits(key, L):
            return None
        return oracle.reveal(L + 1, c, key.value)


class SeparationCommitter(LiftedCommitter):
    """The honest lift: full-length key, announced in the length field."""

    def act(self, n, view, tape, oracle):
        label, key = self.choose(n, view, tape)
        if key is None:
            return encode_first(n, n - 1, commit(n, _bit(label), tape, oracle).string)
        return Bits(key if label.startswith("open") else key ^ 1, n - 1)


class SeparationRepresentation(Representation):
    def __init__(self):
        self.game = envelope_game(ZERO_SUM)
        self.family = SeparationFamily()
        self.name = self.family.name

    def history_map(self, n, h, perm):
        if not self.family.is_history(n, h):
            raise RepresentationError(f"{h!r} is not a history of G'_{n}")
        out = []
        if h:
            L, c = decode_first(n, h[0])
            key, a = perm.opening(L + 1, c)
            out.append(f"c{a}")
            if len(h) > 1:
                b = h[1].value
                out.append(f"g{b}")
                if len(h) > 2:
                    out.append(open_label(a, b) if h[2].value == key else destroy_label(a, b))
        return tuple(out)

    def lift(self, strategy: Strategy) -> MachineStrategy:
        sigma = as_behavioral(self.game, strategy)
        return SeparationCommitter(sigma) if strategy.player == 1 else LiftedGuesser(sigma)

    def interpreter(self, strategy):
        return self.lift(strategy).predict


def build_separation_family(cfg: SeparationConfig = SeparationConfig()):
    rep = SeparationRepresentation()
    return rep.family, rep


# Stateless candidates

class _Stateless(MachineStrategy):
    stateful = False

    def __init__(self, cfg: SeparationConfig):
        self.cfg = cfg

    def query_budget(self, n):
        return self.cfg.defender_budget(n)


class ZeroKeyCommitter(_Stateless):
    """Commits to a uniform bit under the all-zero key and opens with it."""

    player = 1
    name = "zero-key"

    def act(self, n, view, tape, oracle):
        if not view.history:
            return encode_first(n, n - 1, oracle.forward(n, tape.read(1)))
        return Bits(0, n - 1)


class CoinKeyCommitter(_Stateless):
    """Commits under a fresh key; at reveal sends the zero key or noise, each half the time.

    Its honest key is forgotten, so it opens only when the coin picked the
    zero key and the commitment happened to use it, which is rare. It
    reveals a valid key with probability well below ``1/n``.
    """

    player = 1
    name = "coin-key"

    def act(self, n, view, tape, oracle):
        if not view.history:
            return encode_first(n, n - 1, commit(n, tape.read(1), tape, oracle).string)
        return Bits(0, n - 1) if tape.read(1) else uniform_bits(tape, n - 1)


class NeverReveal(_Stateless):
    player = 1
    name = "never-reveal"

    def act(self, n, view, tape, oracle):
        if not view.history:
            return encode_first(n, n - 1, commit(n, tape.read(1), tape, oracle).string)
        return uniform_bits(tape, n - 1)


class DerivedKeyCommitter(_Stateless):
    """Key recomputed at reveal from the guess-independent part of the view.

    The key is ``Π(1‖0…0)`` truncated, a value any party can compute; the
    bit is the parity of that value. Stateless, and it always opens.
    """

    player = 1
    name = "derived-key"

    def _key_bit(self, n, oracle):
        v = oracle.forward(n, 1 << (n - 1))
        return v >> 1, v & 1

    def act(self, n, view, tape, oracle):
        key, b = self._key_bit(n, oracle)
        if not view.history:
            return encode_first(n, n - 1, oracle.forward(n, (key << 1) | b))
        return Bits(key, n - 1)


class ShortKeyAttack(_Stateless):
    """Commits under a ``κ(n)``-bit key and recovers it at reveal by exhaustive search."""

    player = 1
    name = "short-key"

    def query_budget(self, n):
        return self.cfg.attacker_budget(n)

    def step_budget(self, n):
        return self.query_budget(n) + 16

    def act(self, n, view, tape, oracle):
        k = self.cfg.kappa(n)
        if not view.history:
            return encode_first(n, k, commit(k + 1, tape.read(1), tape, oracle).string)
        L, c = decode_first(n, view.history[0])
        found = oracle.reveal_scan(L + 1, c, range(1 << L))
        return Bits(found[0] if found else 0, L)


class UniformGuess(_Stateless):
    player = 2
    name = "uniform-guess"

    def act(self, n, view, tape, oracle):
        return uniform_bits(tape, 1)


class BoundedInverterGuess(_Stateless):
    """Searches ``n^a`` keys for an opening (bit 0 then bit 1); guesses uniformly on failure."""

    player = 2
    name = "bounded-inverter"

    def act(self, n, view, tape, oracle):
        L, c = decode_first(n, view.history[0])
        q = self.cfg.defender_budget(n) // 2
        for b in (0, 1):
            for key in range(min(q, 1 << L)):
                if oracle.forward(L + 1, (key << 1) | b) == c:
                    return Bits(b, 1)
        return uniform_bits(tape, 1)


class ZeroKeyGuess(_Stateless):
    """Tries the all-zero key for both bits."""

    player = 2
    name = "zero-key-guess"

    def act(self, n, view, tape, oracle):
        L, c = decode_first(n, view.history[0])
        return Bits(0 if oracle.forward(L + 1, 0) == c else 1, 1)


def attack_extract_key(target: MachineStrategy, family: ComputationalGameFamily,
                       cfg: SeparationConfig = SeparationConfig()) -> ExtractKeyAttack:
    """Player 2 attacker against a (stateless) player 1 machine."""
    return ExtractKeyAttack(target, family, cfg.simulations, name="extract-key")


def attack_short_key(cfg: SeparationConfig = SeparationConfig()) -> ShortKeyAttack:
    return ShortKeyAttack(cfg)


def stateless_candidates(cfg: SeparationConfig = SeparationConfig()) -> dict[str, dict[int, MachineStrategy]]:
    """Registered stateless profiles, each a would-be equilibrium."""
    return {
        "zero-key/uniform": {1: ZeroKeyCommitter(cfg), 2: UniformGuess(cfg)},
        "zero-key/zero-key-guess": {1: ZeroKeyCommitter(cfg), 2: ZeroKeyGuess(cfg)},
        "coin-key/bounded-inverter": {1: CoinKeyCommitter(cfg), 2: BoundedInverterGuess(cfg)},
        "never-reveal/uniform": {1: NeverReveal(cfg), 2: UniformGuess(cfg)},
        "derived-key/bounded-inverter": {1: DerivedKeyCommitter(cfg), 2: BoundedInverterGuess(cfg)},
    }


def stateful_control(rep: SeparationRepresentation) -> dict[int, MachineStrategy]:
    return rep.lift_profile(uniform_open(rep.game))


def win_probability(u: Fraction) -> Fraction:
    return (u + 1) / 2


class _WinTask:
    def __init__(self, family, n, profile):
        self.family, self.n, self.profile = family, n, profile

    def __call__(self, seeds):
        tot = [Fraction(0), Fraction(0)]
        for s in seeds:
            u = run_game(self.family, self.n, self.profile, s, record=False).utilities
            tot[0] += win_probability(u[0])
            tot[1] += win_probability(u[1])
        return tot


def mean_win(family, n, profile, trials, seed, experiment, workers=1) -> tuple[float, float]:
    parts = map_chunks(_WinTask(family, n, dict(profile)), trial_seeds(seed, experiment, n, trials), workers)
    s0 = sum((p[0] for p in parts), Fraction(0))
    s1 = sum((p[1] for p in parts), Fraction(0))
    return float(s0 / trials), float(s1 / trials)


def extract_bound(n: int) -> Fraction:
    return 1 - Fraction(2, n)


def short_bound(n: int) -> Fraction:
    return Fraction(1, 2) - Fraction(1, n)


def run_separation_experiment(cfg: SeparationConfig, candidates: Mapping[str, Mapping[int, MachineStrategy]],
                              n_list: Sequence[int], trials: int, seed: int, *, tol: float = 0.05,
                              control_trials: int | None = None, workers: int = 1) -> list[ResultRow]:
    """Attack every candidate at every ``n``; then attack the stateful control.

    Per candidate and ``n``: the payoff of each attack, the equilibrium
    slack both attacks together force on the candidate, and whether at
    least one attack reached its bound. For the control, each attack's gain
    over the control's own payoff must stay below ``tol``.
    """
    family, rep = build_separation_family(cfg)
    exp = "stateless-separation"
    rows: list[ResultRow] = []
    r = hoeffding_radius(trials)
    for n in n_list:
        cfg.check(n)
    for name, prof in candidates.items():
        for m in prof.values():
            if m.stateful:
                raise ValueError(f"candidate {name!r} has a stateful machine {m!r}")
        for n in n_list:
            ex = mean_win(family, n, {**prof, 2: attack_extract_key(prof[1], family, cfg)}, trials, seed,
                          f"{exp}:{name}:extract", workers)[1]
            sk = mean_win(family, n, {**prof, 1: attack_short_key(cfg)}, trials, seed,
                          f"{exp}:{name}:short", workers)[0]
            eb, sb = float(extract_bound(n)) - tol, float(short_bound(n)) - tol
            eps = (ex + sk - 1) / 2
            rows += [
                ResultRow(exp, n, "min:extract-key-payoff", name, ex, r, eb),
                ResultRow(exp, n, "min:short-key-payoff", name, sk, r, sb),
                ResultRow(exp, n, "min:forced-epsilon", name, eps, r,
                          float(Fraction(1, 4) - Fraction(3, 2 * n)) - tol),
                ResultRow(exp, n, "min:defeated", name, float(ex >= eb or sk >= sb), 0.0, 1.0),
            ]
    ct = control_trials or trials
    rc = hoeffding_radius(ct)
    control = stateful_control(rep)
    for n in n_list:
        base = mean_win(family, n, control, ct, seed, f"{exp}:control", workers)
        ex = mean_win(family, n, {**control, 2: attack_extract_key(control[1], family, cfg)}, ct, seed,
                      f"{exp}:control", workers)[1]
        sk = mean_win(family, n, {**control, 1: attack_short_key(cfg)}, ct, seed, f"{exp}:control", workers)[0]
        rows += [
            ResultRow(exp, n, "max:extract-key-gain", "stateful-control", ex - base[1], rc, tol),
            ResultRow(exp, n, "max:short-key-gain", "stateful-control", sk - base[0], rc, tol),
        ]
    return rows


def extraction_identity(n: int) -> bool:
    """``1 - (1 - 1/n)^(n²) > 1 - 2/n``, exactly."""
    return 1 - (1 - Fraction(1, n)) ** (n * n) > 1 - Fraction(2, n)


def forced_epsilon(n: int) -> Fraction:
    """Least ``ε`` with ``3/2 - 3/n - 2ε <= 1``."""
    return (Fraction(3, 2) - Fraction(3, n) - 1) / 2
